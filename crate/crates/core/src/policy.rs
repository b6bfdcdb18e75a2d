//! Linear contextual-bandit router.
//!
//! Each arm j owns a linear estimate `Q_j(x) = w_j . x (+ b_j)` of the reward
//! `correct - p * cost`. Training walks the records in file order for a fixed
//! number of passes; per record it picks the arm with the highest estimate
//! (optionally epsilon-random) and takes one SGD step on the squared error
//! between that arm's estimate and its observed reward. Inference is the same
//! argmax, with ties going to the cheaper arm so an untrained model routes
//! everything to the cheapest LLM.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::RoutingDataset;
use crate::reward::{reward_unchecked, CostTable, RewardConfig, RewardError};
use crate::roster::Roster;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("embedding has length {got}, model expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("empty arm roster")]
    EmptyRoster,
    #[error("q-value vector has {got} entries for {expected} arms")]
    ArmCount { expected: usize, got: usize },
    #[error("cannot train on an empty dataset")]
    EmptyDataset,
    #[error("record {query_id:?} has a non-finite embedding value")]
    NonFinite { query_id: String },
    #[error("invalid training config: {0}")]
    Config(String),
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error("model is incompatible with this roster/dataset: {0}")]
    Incompatible(String),
    #[error("model file {path}: {reason}")]
    Format { path: String, reason: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    /// Update only the selected arm, as in the original bandit loop.
    #[default]
    GreedyArm,
    /// Update every arm toward its own reward (all outcomes are known offline).
    FullInformation,
}

impl std::str::FromStr for UpdateMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greedy_arm" | "greedy-arm" | "greedy" => Ok(UpdateMode::GreedyArm),
            "full_information" | "full-information" | "full" => Ok(UpdateMode::FullInformation),
            other => Err(format!("unknown update mode {other:?} (expected greedy_arm|full_information)")),
        }
    }
}

impl std::fmt::Display for UpdateMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            UpdateMode::GreedyArm => "greedy_arm",
            UpdateMode::FullInformation => "full_information",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Passes over the training records.
    pub steps: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub update_mode: UpdateMode,
    /// Probability of replacing the greedy choice with a uniformly random arm.
    pub epsilon: f64,
    pub reward: RewardConfig,
    pub use_bias: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 20,
            learning_rate: 0.01,
            seed: 0,
            update_mode: UpdateMode::GreedyArm,
            epsilon: 0.0,
            reward: RewardConfig::default(),
            use_bias: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(PolicyError::Config(format!("learning_rate must be > 0, got {}", self.learning_rate)));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(PolicyError::Config(format!("epsilon must be in [0, 1], got {}", self.epsilon)));
        }
        self.reward.validate()?;
        Ok(())
    }
}

/// Per-arm linear reward estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyModel {
    roster: Roster,
    embedding_dim: usize,
    weights: Vec<Vec<f64>>,
    bias: Option<Vec<f64>>,
    train_config: TrainConfig,
}

impl PolicyModel {
    /// All-zero model: predicts 0 for every arm.
    pub fn zeros(roster: Roster, embedding_dim: usize, train_config: TrainConfig) -> Self {
        let k = roster.len();
        let bias = train_config.use_bias.then(|| vec![0.0; k]);
        Self { roster, embedding_dim, weights: vec![vec![0.0; embedding_dim]; k], bias, train_config }
    }

    /// Assembles a model from raw parameters, checking shapes.
    pub fn from_parts(
        roster: Roster,
        embedding_dim: usize,
        weights: Vec<Vec<f64>>,
        bias: Option<Vec<f64>>,
        train_config: TrainConfig,
    ) -> Result<Self, PolicyError> {
        let k = roster.len();
        if k == 0 {
            return Err(PolicyError::EmptyRoster);
        }
        if weights.len() != k {
            return Err(PolicyError::ArmCount { expected: k, got: weights.len() });
        }
        if let Some(w) = weights.iter().find(|w| w.len() != embedding_dim) {
            return Err(PolicyError::Dimension { expected: embedding_dim, got: w.len() });
        }
        if let Some(b) = &bias {
            if b.len() != k {
                return Err(PolicyError::ArmCount { expected: k, got: b.len() });
            }
        }
        Ok(Self { roster, embedding_dim, weights, bias, train_config })
    }

    pub fn roster(&self) -> &Roster {
        &self.roster
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding_dim
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn bias(&self) -> Option<&[f64]> {
        self.bias.as_deref()
    }

    pub fn train_config(&self) -> &TrainConfig {
        &self.train_config
    }

    pub fn predict_q(&self, embedding: &[f32]) -> Result<Vec<f64>, PolicyError> {
        if embedding.len() != self.embedding_dim {
            return Err(PolicyError::Dimension { expected: self.embedding_dim, got: embedding.len() });
        }
        let x: Vec<f64> = embedding.iter().map(|v| f64::from(*v)).collect();
        Ok(self.q_values(&x))
    }

    pub(crate) fn q_values(&self, x: &[f64]) -> Vec<f64> {
        (0..self.weights.len()).map(|j| self.q_arm(j, x)).collect()
    }

    #[inline]
    fn q_arm(&self, j: usize, x: &[f64]) -> f64 {
        let dot: f64 = self.weights[j].iter().zip(x).map(|(w, v)| w * v).sum();
        match &self.bias {
            Some(b) => dot + b[j],
            None => dot,
        }
    }

    /// Routes one embedding: argmax of the predicted rewards.
    pub fn route(&self, embedding: &[f32]) -> Result<usize, PolicyError> {
        let q = self.predict_q(embedding)?;
        select_arm(&q, &self.roster)
    }

    /// Checks that this model can serve `roster` with `embedding_dim`-wide inputs.
    pub fn ensure_compatible(&self, roster: &Roster, embedding_dim: usize) -> Result<(), PolicyError> {
        if roster.len() != self.roster.len() {
            return Err(PolicyError::Incompatible(format!(
                "model has {} arms, target has {}",
                self.roster.len(),
                roster.len()
            )));
        }
        if roster.fingerprint() != self.roster.fingerprint() {
            return Err(PolicyError::Incompatible(format!(
                "roster fingerprint {} != {}",
                self.roster.fingerprint(),
                roster.fingerprint()
            )));
        }
        if embedding_dim != self.embedding_dim {
            return Err(PolicyError::Incompatible(format!(
                "embedding_dim {} != {}",
                self.embedding_dim, embedding_dim
            )));
        }
        Ok(())
    }

    fn sgd_step(&mut self, j: usize, x: &[f64], target: f64, lr: f64) {
        let err = target - self.q_arm(j, x);
        let g = lr * 2.0 * err;
        for (w, v) in self.weights[j].iter_mut().zip(x) {
            *w += g * v;
        }
        if let Some(b) = &mut self.bias {
            b[j] += g;
        }
    }
}

/// Index of the largest q-value; ties go to the lower normalized cost, then lower arm id.
pub fn select_arm(q_values: &[f64], roster: &Roster) -> Result<usize, PolicyError> {
    if roster.is_empty() {
        return Err(PolicyError::EmptyRoster);
    }
    if q_values.len() != roster.len() {
        return Err(PolicyError::ArmCount { expected: roster.len(), got: q_values.len() });
    }
    let costs = roster.arms();
    let key = |q: f64| if q.is_nan() { f64::NEG_INFINITY } else { q };
    let mut best = 0;
    for j in 1..q_values.len() {
        let (qj, qb) = (key(q_values[j]), key(q_values[best]));
        if qj > qb || (qj == qb && costs[j].normalized_cost < costs[best].normalized_cost) {
            best = j;
        }
    }
    Ok(best)
}

/// Fits a [`PolicyModel`] on `dataset`. Deterministic for a given config and seed.
pub fn train(dataset: &RoutingDataset, config: &TrainConfig) -> Result<PolicyModel, PolicyError> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(PolicyError::EmptyDataset);
    }
    if let Some(r) = dataset.records().iter().find(|r| r.embedding.iter().any(|v| !v.is_finite())) {
        return Err(PolicyError::NonFinite { query_id: r.query_id.clone() });
    }
    let dim = dataset.embedding_dim();
    let k = dataset.n_arms();
    let costs = CostTable::build(dataset, config.reward.cost_mode);
    let features: Vec<f64> = dataset.records().iter().flat_map(|r| r.embedding_f64()).collect();
    let p = config.reward.p;
    let lr = config.learning_rate;

    let mut model = PolicyModel::zeros(dataset.roster().clone(), dim, config.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let explore = config.epsilon > 0.0;

    for _ in 0..config.steps {
        for (i, rec) in dataset.records().iter().enumerate() {
            let x = &features[i * dim..(i + 1) * dim];
            match config.update_mode {
                UpdateMode::GreedyArm => {
                    let mut j = select_arm(&model.q_values(x), model.roster())?;
                    if explore && rng.random::<f64>() < config.epsilon {
                        j = rng.random_range(0..k);
                    }
                    let target = reward_unchecked(rec.correct[j], costs.get(i, j), p);
                    model.sgd_step(j, x, target, lr);
                }
                UpdateMode::FullInformation => {
                    for j in 0..k {
                        let target = reward_unchecked(rec.correct[j], costs.get(i, j), p);
                        model.sgd_step(j, x, target, lr);
                    }
                }
            }
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::QueryRecord;
    use crate::reward::CostMode;
    use proptest::prelude::*;

    fn roster(prices: &[&str]) -> Roster {
        let pairs: Vec<(String, String)> =
            prices.iter().enumerate().map(|(i, p)| (format!("arm{i}"), p.to_string())).collect();
        Roster::from_pairs(&pairs).unwrap()
    }

    fn rec(id: usize, emb: &[f32], correct: &[bool]) -> QueryRecord {
        QueryRecord {
            query_id: format!("q{id}"),
            text: None,
            embedding: emb.to_vec(),
            correct: correct.to_vec(),
            tokens: vec![50; correct.len()],
        }
    }

    #[test]
    fn zero_model_predicts_zero() {
        let m = PolicyModel::zeros(roster(&["1", "2"]), 3, TrainConfig::default());
        assert_eq!(m.predict_q(&[1.0, -2.0, 5.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn predict_is_dot_product() {
        let m = PolicyModel::from_parts(
            roster(&["1", "2"]),
            2,
            vec![vec![1.0, 0.0], vec![0.0, 0.0]],
            None,
            TrainConfig::default(),
        )
        .unwrap();
        assert_eq!(m.predict_q(&[2.0, 3.0]).unwrap()[0], 2.0);
        assert!(matches!(m.predict_q(&[1.0]), Err(PolicyError::Dimension { expected: 2, got: 1 })));
    }

    #[test]
    fn select_arm_examples() {
        let r3 = roster(&["1", "1", "1"]);
        assert_eq!(select_arm(&[0.5, 0.9, 0.1], &r3).unwrap(), 1);
        let r2 = roster(&["2", "1"]);
        assert_eq!(select_arm(&[0.7, 0.7], &r2).unwrap(), 1);
        let r4 = roster(&["0.02", "0.0004", "0.002", "0.0005"]);
        assert_eq!(select_arm(&[0.0; 4], &r4).unwrap(), 1);
        assert!(select_arm(&[0.0], &r2).is_err());
    }

    #[test]
    fn one_hand_computed_update() {
        // single arm, x=[1], a=1, p=0, lr=0.5: w <- 0 + 0.5 * 2 * (1 - 0) * 1 = 1
        let ds = RoutingDataset::new(roster(&["1"]), 1, vec![rec(0, &[1.0], &[true])]).unwrap();
        let cfg = TrainConfig { steps: 1, learning_rate: 0.5, use_bias: false, ..TrainConfig::default() };
        let m = train(&ds, &cfg).unwrap();
        assert_eq!(m.weights()[0], vec![1.0]);
        assert_eq!(m.predict_q(&[1.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn zero_steps_returns_initialization() {
        let ds = RoutingDataset::new(roster(&["1", "2"]), 2, vec![rec(0, &[1.0, 2.0], &[true, false])]).unwrap();
        let cfg = TrainConfig { steps: 0, ..TrainConfig::default() };
        let m = train(&ds, &cfg).unwrap();
        assert_eq!(m, PolicyModel::zeros(ds.roster().clone(), 2, cfg));
    }

    #[test]
    fn training_errors() {
        let empty = RoutingDataset::new(roster(&["1"]), 1, vec![]).unwrap();
        assert!(matches!(train(&empty, &TrainConfig::default()), Err(PolicyError::EmptyDataset)));
        let nan = RoutingDataset::new(roster(&["1"]), 1, vec![rec(0, &[f32::NAN], &[true])]).unwrap();
        assert!(matches!(train(&nan, &TrainConfig::default()), Err(PolicyError::NonFinite { .. })));
        let ok = RoutingDataset::new(roster(&["1"]), 1, vec![rec(0, &[1.0], &[true])]).unwrap();
        let bad_lr = TrainConfig { learning_rate: 0.0, ..TrainConfig::default() };
        assert!(matches!(train(&ok, &bad_lr), Err(PolicyError::Config(_))));
        let bad_eps = TrainConfig { epsilon: 1.5, ..TrainConfig::default() };
        assert!(matches!(train(&ok, &bad_eps), Err(PolicyError::Config(_))));
        let bad_p = TrainConfig { reward: RewardConfig { p: -1.0, cost_mode: CostMode::Fixed }, ..TrainConfig::default() };
        assert!(matches!(train(&ok, &bad_p), Err(PolicyError::Reward(_))));
    }

    fn synthetic(n: usize) -> RoutingDataset {
        // arm 0 always right, arm 1 never, arm 2 right on positive first coordinate
        let recs = (0..n)
            .map(|i| {
                let x = ((i * 37) % 11) as f32 / 11.0 - 0.5;
                rec(i, &[x, 1.0 - x], &[true, false, x > 0.0])
            })
            .collect();
        RoutingDataset::new(roster(&["0.002", "0.0004", "0.02"]), 2, recs).unwrap()
    }

    #[test]
    fn greedy_without_exploration_leaves_unselected_arms_untouched() {
        let ds = synthetic(50);
        // arm 1 is cheapest and never right, so its estimate turns negative; arm 0
        // (next cheapest) then takes over with positive reward and arm 2 is never tried.
        let cfg = TrainConfig {
            steps: 30,
            learning_rate: 0.05,
            reward: RewardConfig { p: 0.5, cost_mode: CostMode::Fixed },
            ..TrainConfig::default()
        };
        let m = train(&ds, &cfg).unwrap();
        let selected: std::collections::HashSet<usize> =
            ds.records().iter().map(|r| m.route(&r.embedding).unwrap()).collect();
        assert!(m.weights()[2].iter().all(|w| *w == 0.0), "arm 2 never selected yet updated");
        assert_eq!(m.bias().unwrap()[2], 0.0);
        assert!(!selected.contains(&2));
        assert!(selected.contains(&0));
    }

    #[test]
    fn full_information_ranks_always_correct_arm_first() {
        let ds = synthetic(50);
        let cfg = TrainConfig {
            steps: 100,
            update_mode: UpdateMode::FullInformation,
            learning_rate: 0.05,
            ..TrainConfig::default()
        };
        let m = train(&ds, &cfg).unwrap();
        let mean = |j: usize| {
            ds.records().iter().map(|r| m.predict_q(&r.embedding).unwrap()[j]).sum::<f64>() / ds.len() as f64
        };
        assert!(mean(0) > mean(1));
        assert!(mean(0) > 0.9 && mean(1).abs() < 0.1);
    }

    #[test]
    fn training_is_deterministic() {
        let ds = synthetic(40);
        let cfg = TrainConfig { epsilon: 0.3, seed: 9, steps: 5, ..TrainConfig::default() };
        assert_eq!(train(&ds, &cfg).unwrap(), train(&ds, &cfg).unwrap());
    }

    proptest! {
        #[test]
        fn select_arm_is_shift_invariant(
            q in prop::collection::vec(-5i32..5, 1..6),
            shift in -100i32..100,
        ) {
            // integer-valued q keeps the shift exact
            let prices: Vec<String> = (0..q.len()).map(|i| format!("{}", (i % 3) + 1)).collect();
            let pairs: Vec<(String, String)> = prices.iter().enumerate().map(|(i, p)| (format!("a{i}"), p.clone())).collect();
            let r = Roster::from_pairs(&pairs).unwrap();
            let qf: Vec<f64> = q.iter().map(|v| *v as f64).collect();
            let shifted: Vec<f64> = qf.iter().map(|v| v + shift as f64).collect();
            prop_assert_eq!(select_arm(&qf, &r).unwrap(), select_arm(&shifted, &r).unwrap());
        }
    }
}
