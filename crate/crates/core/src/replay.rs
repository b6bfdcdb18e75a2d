//! Offline LLM provider backed by cached correctness and token counts, and a
//! generator for synthetic routing datasets with controllable heterogeneity.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::dataset::{DatasetError, QueryRecord, RoutingDataset};
use crate::money::{Picodollars, Price};
use crate::roster::{ArmSpec, Roster};

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("unknown query_id {0:?}")]
    UnknownQuery(String),
    #[error("arm {arm_id} is not in the roster ({n_arms} arms)")]
    UnknownArm { arm_id: usize, n_arms: usize },
    #[error("invalid synthetic spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplayAnswer {
    pub correct: bool,
    pub tokens: u64,
    pub cost: Picodollars,
}

/// Answers (query, arm) pairs from a dataset and meters the spend.
///
/// The ledger is a set of integer counters, so totals are exact under any
/// interleaving of concurrent callers.
#[derive(Debug)]
pub struct ReplayProvider {
    dataset: Arc<RoutingDataset>,
    index: HashMap<String, usize>,
    spend: Vec<AtomicU64>,
    calls: Vec<AtomicU64>,
}

impl ReplayProvider {
    pub fn new(dataset: Arc<RoutingDataset>) -> Self {
        let index = dataset.records().iter().enumerate().map(|(i, r)| (r.query_id.clone(), i)).collect();
        let k = dataset.n_arms();
        Self {
            dataset,
            index,
            spend: (0..k).map(|_| AtomicU64::new(0)).collect(),
            calls: (0..k).map(|_| AtomicU64::new(0)).collect(),
        }
    }

    pub fn dataset(&self) -> &RoutingDataset {
        &self.dataset
    }

    pub fn record_index(&self, query_id: &str) -> Option<usize> {
        self.index.get(query_id).copied()
    }

    pub fn answer(&self, query_id: &str, arm_id: usize) -> Result<ReplayAnswer, ReplayError> {
        let i = self.record_index(query_id).ok_or_else(|| ReplayError::UnknownQuery(query_id.to_string()))?;
        let k = self.dataset.n_arms();
        if arm_id >= k {
            return Err(ReplayError::UnknownArm { arm_id, n_arms: k });
        }
        let rec = &self.dataset.records()[i];
        let cost = self.dataset.spend(i, arm_id);
        self.spend[arm_id].fetch_add(cost.0, Ordering::Relaxed);
        self.calls[arm_id].fetch_add(1, Ordering::Relaxed);
        Ok(ReplayAnswer { correct: rec.correct[arm_id], tokens: rec.tokens[arm_id], cost })
    }

    /// Spend per arm so far.
    pub fn ledger(&self) -> Vec<Picodollars> {
        self.spend.iter().map(|a| Picodollars(a.load(Ordering::Relaxed))).collect()
    }

    pub fn calls(&self) -> Vec<u64> {
        self.calls.iter().map(|a| a.load(Ordering::Relaxed)).collect()
    }

    pub fn total_spend(&self) -> Picodollars {
        self.ledger().into_iter().sum()
    }
}

/// Parameters for [`gen_synthetic`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_arms: usize,
    pub n_clusters: usize,
    pub dim: usize,
    pub n_records: usize,
    /// Flip probability: chance a capable arm is wrong, or an incapable arm is right.
    pub noise: f64,
    pub prices: Vec<Price>,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), ReplayError> {
        let bad = |m: String| Err(ReplayError::Spec(m));
        if self.n_arms < 2 {
            return bad(format!("n_arms must be >= 2, got {}", self.n_arms));
        }
        if self.n_clusters == 0 {
            return bad("n_clusters must be >= 1".into());
        }
        if self.dim == 0 {
            return bad("dim must be >= 1".into());
        }
        if !(0.0..0.5).contains(&self.noise) {
            return bad(format!("noise must be in [0, 0.5), got {}", self.noise));
        }
        if self.prices.len() != self.n_arms {
            return bad(format!("{} prices for {} arms", self.prices.len(), self.n_arms));
        }
        if self.dim == 1 && self.n_clusters > 2 {
            return bad("at most 2 separable clusters fit in one dimension".into());
        }
        Ok(())
    }

    /// Arm that is capable on `cluster`.
    pub fn capable_arm(&self, cluster: usize) -> usize {
        cluster % self.n_arms
    }
}

/// Min token count drawn per synthetic record.
pub const SYNTH_TOKENS_MIN: u64 = 20;
/// Max token count drawn per synthetic record.
pub const SYNTH_TOKENS_MAX: u64 = 120;
const CENTER_ATTEMPTS: usize = 256;

fn unit_gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn min_pairwise_distance(centers: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for a in 0..centers.len() {
        for b in a + 1..centers.len() {
            let d = centers[a].iter().zip(&centers[b]).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            best = best.min(d);
        }
    }
    best
}

/// Geometry of a synthetic set: unit-norm centers and the ball radius around each.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterLayout {
    pub centers: Vec<Vec<f64>>,
    pub radius: f64,
}

/// Centers on the unit sphere (best of several draws by minimum separation);
/// radius is one sixth of the smallest pairwise center distance.
pub fn cluster_layout(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> ClusterLayout {
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    for _ in 0..CENTER_ATTEMPTS {
        let centers: Vec<Vec<f64>> = (0..spec.n_clusters).map(|_| unit_gaussian(rng, spec.dim)).collect();
        let d = if spec.n_clusters == 1 { 2.0 } else { min_pairwise_distance(&centers) };
        if best.as_ref().is_none_or(|(bd, _)| d > *bd) {
            best = Some((d, centers));
        }
    }
    let (d, centers) = best.expect("at least one attempt");
    ClusterLayout { centers, radius: d / 6.0 }
}

/// Draws a dataset of isotropic clusters, each owned by one arm.
///
/// Records cycle through clusters so cluster sizes differ by at most one.
/// Points are uniform in a ball of `layout.radius` around their center, so
/// clusters never overlap. An arm is correct on its own clusters with
/// probability `1 - noise` and elsewhere with probability `noise`. Each record
/// draws one token count in `[20, 120]`, shared by every arm.
pub fn gen_synthetic(spec: &SynthSpec) -> Result<RoutingDataset, ReplayError> {
    spec.validate()?;
    let roster = Roster::new(
        spec.prices.iter().enumerate().map(|(i, p)| ArmSpec::new(format!("arm{i}"), *p)).collect(),
    )
    .map_err(|e| ReplayError::Spec(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let layout = cluster_layout(spec, &mut rng);
    let width = spec.n_records.saturating_sub(1).to_string().len();

    let records = (0..spec.n_records)
        .map(|r| {
            let cluster = r % spec.n_clusters;
            let dir = unit_gaussian(&mut rng, spec.dim);
            let u: f64 = rng.random();
            let radius = layout.radius * u.powf(1.0 / spec.dim as f64);
            let embedding: Vec<f32> =
                layout.centers[cluster].iter().zip(&dir).map(|(c, d)| (c + radius * d) as f32).collect();
            let owner = spec.capable_arm(cluster);
            let correct = (0..spec.n_arms)
                .map(|j| {
                    let flip = rng.random::<f64>() < spec.noise;
                    (j == owner) != flip
                })
                .collect();
            let tokens = rng.random_range(SYNTH_TOKENS_MIN..=SYNTH_TOKENS_MAX);
            QueryRecord {
                query_id: format!("syn-{r:0width$}"),
                text: None,
                embedding,
                correct,
                tokens: vec![tokens; spec.n_arms],
            }
        })
        .collect();
    Ok(RoutingDataset::with_encoder(roster, spec.dim, Some("synthetic-clusters".into()), records)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::threshold_route;

    fn prices(n: usize) -> Vec<Price> {
        (0..n).map(|i| Price::from_nanodollars(1000 * (i as u64 + 1))).collect()
    }

    fn spec(n_arms: usize, n_clusters: usize, noise: f64, n: usize) -> SynthSpec {
        SynthSpec { n_arms, n_clusters, dim: 8, n_records: n, noise, prices: prices(n_arms), seed: 4 }
    }

    fn fixture() -> RoutingDataset {
        let roster = Roster::from_pairs(&[("cheap", "0.0004"), ("dear", "0.0200")]).unwrap();
        let recs = vec![
            QueryRecord {
                query_id: "a".into(),
                text: None,
                embedding: vec![0.0],
                correct: vec![false, true],
                tokens: vec![40, 50],
            },
            QueryRecord {
                query_id: "b".into(),
                text: None,
                embedding: vec![1.0],
                correct: vec![true, false],
                tokens: vec![10, 10],
            },
        ];
        RoutingDataset::new(roster, 1, recs).unwrap()
    }

    #[test]
    fn answers_from_cache() {
        let p = ReplayProvider::new(Arc::new(fixture()));
        let ans = p.answer("a", 1).unwrap();
        assert!(ans.correct);
        assert_eq!(ans.cost.as_dollars(), 0.001);
        assert!(matches!(p.answer("zzz", 0), Err(ReplayError::UnknownQuery(_))));
        assert!(matches!(p.answer("a", 2), Err(ReplayError::UnknownArm { .. })));
    }

    #[test]
    fn ledger_is_additive() {
        let p = ReplayProvider::new(Arc::new(fixture()));
        let first = p.answer("a", 1).unwrap();
        let second = p.answer("a", 1).unwrap();
        assert_eq!(first, second);
        assert_eq!(p.ledger()[1], Picodollars(first.cost.0 * 2));
        assert_eq!(p.calls(), vec![0, 2]);
    }

    #[test]
    fn concurrent_ledger_is_exact() {
        let p = Arc::new(ReplayProvider::new(Arc::new(fixture())));
        let handles: Vec<_> = (0..8)
            .map(|t| {
                let p = Arc::clone(&p);
                std::thread::spawn(move || {
                    let mut local = Picodollars::ZERO;
                    for n in 0..500 {
                        let q = if (n + t) % 2 == 0 { "a" } else { "b" };
                        local += p.answer(q, n % 2).unwrap().cost;
                    }
                    local
                })
            })
            .collect();
        let total: Picodollars = handles.into_iter().map(|h| h.join().unwrap()).sum();
        assert_eq!(p.total_spend(), total);
    }

    #[test]
    fn noiseless_one_cluster_per_arm_has_one_correct_arm() {
        let ds = gen_synthetic(&spec(3, 3, 0.0, 90)).unwrap();
        assert!(ds.records().iter().all(|r| r.correct.iter().filter(|c| **c).count() == 1));
        // p=0 oracle picks a correct arm on every record
        let costs = ds.roster().normalized_costs();
        for r in ds.records() {
            let a: Vec<f64> = r.correct.iter().map(|c| f64::from(u8::from(*c))).collect();
            assert!(r.correct[threshold_route(&a, &costs, 0.0).unwrap()]);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let s = spec(4, 4, 0.05, 50);
        assert_eq!(gen_synthetic(&s).unwrap(), gen_synthetic(&s).unwrap());
        let other = SynthSpec { seed: 5, ..s.clone() };
        assert_ne!(gen_synthetic(&s).unwrap(), gen_synthetic(&other).unwrap());
    }

    #[test]
    fn marginal_accuracy_matches_expectation() {
        // expected 0.25 * 0.95 + 0.75 * 0.05 = 0.275, 3-sigma band [0.2, 0.35]
        let ds = gen_synthetic(&spec(4, 4, 0.05, 1000)).unwrap();
        for j in 0..4 {
            let acc = ds.correct_count(j) as f64 / ds.len() as f64;
            assert!((0.2..=0.35).contains(&acc), "arm {j}: {acc}");
        }
    }

    #[test]
    fn clusters_are_separated() {
        let s = SynthSpec { dim: 32, ..spec(4, 4, 0.0, 400) };
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
        let layout = cluster_layout(&s, &mut rng);
        assert!(min_pairwise_distance(&layout.centers) >= 6.0 * layout.radius - 1e-12);
        let ds = gen_synthetic(&s).unwrap();
        for (r, rec) in ds.records().iter().enumerate() {
            let c = &layout.centers[r % s.n_clusters];
            let d = rec.embedding.iter().zip(c).map(|(x, y)| (f64::from(*x) - y).powi(2)).sum::<f64>().sqrt();
            assert!(d <= layout.radius + 1e-5, "record {r} is {d} from its center");
        }
        assert!(ds.records().iter().all(|r| r.tokens.iter().all(|t| (20..=120).contains(t))));
    }

    #[test]
    fn invalid_specs() {
        assert!(gen_synthetic(&SynthSpec { n_arms: 1, prices: prices(1), ..spec(2, 2, 0.0, 5) }).is_err());
        assert!(gen_synthetic(&SynthSpec { noise: 0.5, ..spec(2, 2, 0.0, 5) }).is_err());
        assert!(gen_synthetic(&SynthSpec { prices: prices(3), ..spec(2, 2, 0.0, 5) }).is_err());
        assert!(gen_synthetic(&SynthSpec { n_clusters: 0, ..spec(2, 2, 0.0, 5) }).is_err());
    }
}
