//! Arms (candidate LLM endpoints) and their cost normalization.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::money::Price;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RosterError {
    #[error("invalid roster: {0}")]
    Invalid(String),
    #[error("negative token count {0}")]
    NegativeTokens(i64),
}

/// Divides every price by the roster maximum so the most expensive arm costs 1.
pub fn normalize_costs(prices: &[f64]) -> Result<Vec<f64>, RosterError> {
    if prices.is_empty() {
        return Err(RosterError::Invalid("empty price list".into()));
    }
    if let Some(bad) = prices.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(RosterError::Invalid(format!("price {bad} is not a non-negative number")));
    }
    let max = prices.iter().copied().fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return Err(RosterError::Invalid("all prices are zero".into()));
    }
    Ok(prices.iter().map(|p| p / max).collect())
}

/// Dollar cost of `tokens` tokens at `price_per_1k` dollars per 1K tokens.
///
/// Floating-point convenience; ledgers use [`Price::cost_of`] instead.
pub fn token_cost(price_per_1k: f64, tokens: i64) -> Result<f64, RosterError> {
    if tokens < 0 {
        return Err(RosterError::NegativeTokens(tokens));
    }
    Ok(price_per_1k * tokens as f64 / 1000.0)
}

/// One candidate LLM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arm {
    pub arm_id: usize,
    pub name: String,
    pub price_per_1k: Price,
    pub normalized_cost: f64,
}

/// Ordered set of arms with normalized costs.
#[derive(Debug, Clone, PartialEq)]
pub struct Roster {
    arms: Vec<Arm>,
}

/// Name and price pair as stored in file headers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmSpec {
    pub name: String,
    pub price_per_1k: Price,
}

impl ArmSpec {
    pub fn new(name: impl Into<String>, price_per_1k: Price) -> Self {
        Self { name: name.into(), price_per_1k }
    }
}

impl Roster {
    pub fn new(specs: Vec<ArmSpec>) -> Result<Self, RosterError> {
        let prices: Vec<f64> = specs.iter().map(|s| s.price_per_1k.nanodollars() as f64).collect();
        let normalized = normalize_costs(&prices)?;
        for (i, s) in specs.iter().enumerate() {
            if s.name.trim().is_empty() {
                return Err(RosterError::Invalid(format!("arm {i} has an empty name")));
            }
            if specs[..i].iter().any(|o| o.name == s.name) {
                return Err(RosterError::Invalid(format!("duplicate arm name {:?}", s.name)));
            }
        }
        let arms = specs
            .into_iter()
            .zip(normalized)
            .enumerate()
            .map(|(arm_id, (s, normalized_cost))| Arm {
                arm_id,
                name: s.name,
                price_per_1k: s.price_per_1k,
                normalized_cost,
            })
            .collect();
        Ok(Self { arms })
    }

    /// Convenience constructor from `(name, price string)` pairs.
    pub fn from_pairs<S: AsRef<str>>(pairs: &[(S, S)]) -> Result<Self, RosterError> {
        let specs = pairs
            .iter()
            .map(|(n, p)| {
                let price = p.as_ref().parse().map_err(|e| RosterError::Invalid(format!("{e}")))?;
                Ok(ArmSpec::new(n.as_ref(), price))
            })
            .collect::<Result<Vec<_>, RosterError>>()?;
        Self::new(specs)
    }

    pub fn arms(&self) -> &[Arm] {
        &self.arms
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn get(&self, arm_id: usize) -> Option<&Arm> {
        self.arms.get(arm_id)
    }

    pub fn by_name(&self, name: &str) -> Option<&Arm> {
        self.arms.iter().find(|a| a.name == name)
    }

    pub fn normalized_costs(&self) -> Vec<f64> {
        self.arms.iter().map(|a| a.normalized_cost).collect()
    }

    pub fn specs(&self) -> Vec<ArmSpec> {
        self.arms.iter().map(|a| ArmSpec::new(a.name.clone(), a.price_per_1k)).collect()
    }

    /// Lowest price, ties to the lowest arm id.
    pub fn cheapest(&self) -> &Arm {
        self.arms
            .iter()
            .min_by(|a, b| a.price_per_1k.cmp(&b.price_per_1k).then(a.arm_id.cmp(&b.arm_id)))
            .expect("roster is never empty")
    }

    /// Stable digest of names and prices, in order.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for a in &self.arms {
            h.update(a.name.as_bytes());
            h.update([0x1f]);
            h.update(a.price_per_1k.to_string().as_bytes());
            h.update([0x1e]);
        }
        hex::encode(&h.finalize()[..16])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_close(got: &[f64], want: &[f64]) {
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-12, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn normalizes_openai_prices() {
        let out = normalize_costs(&[0.0004, 0.0005, 0.0020, 0.0200]).unwrap();
        assert_close(&out, &[0.02, 0.025, 0.1, 1.0]);
        assert_eq!(out[3], 1.0);
    }

    #[test]
    fn normalizes_bedrock_prices() {
        let out = normalize_costs(&[0.00015, 0.00030, 0.00075, 0.00080]).unwrap();
        assert_close(&out, &[0.1875, 0.375, 0.9375, 1.0]);
    }

    #[test]
    fn single_arm_is_one() {
        assert_eq!(normalize_costs(&[5.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn ties_at_max_all_map_to_one() {
        assert_eq!(normalize_costs(&[2.0, 1.0, 2.0]).unwrap(), vec![1.0, 0.5, 1.0]);
    }

    #[test]
    fn invalid_price_lists() {
        assert!(normalize_costs(&[]).is_err());
        assert!(normalize_costs(&[0.0, 0.0]).is_err());
        assert!(normalize_costs(&[-1.0, 2.0]).is_err());
    }

    #[test]
    fn token_cost_examples() {
        assert!((token_cost(0.0200, 50).unwrap() - 0.001).abs() < 1e-15);
        assert!((token_cost(0.00015, 1000).unwrap() - 0.00015).abs() < 1e-15);
        assert_eq!(token_cost(123.0, 0).unwrap(), 0.0);
        assert_eq!(token_cost(1.0, -1), Err(RosterError::NegativeTokens(-1)));
    }

    #[test]
    fn roster_uses_exact_prices() {
        let r = Roster::from_pairs(&[("ada", "0.0004"), ("babbage", "0.0005"), ("curie", "0.0020"), ("davinci", "0.0200")])
            .unwrap();
        assert_close(&r.normalized_costs(), &[0.02, 0.025, 0.1, 1.0]);
        assert_eq!(r.cheapest().name, "ada");
        assert!(Roster::from_pairs(&[("a", "1"), ("a", "2")]).is_err());
    }

    #[test]
    fn fingerprint_tracks_names_and_prices() {
        let a = Roster::from_pairs(&[("a", "1"), ("b", "2")]).unwrap();
        let b = Roster::from_pairs(&[("a", "1"), ("b", "2.0")]).unwrap();
        let c = Roster::from_pairs(&[("a", "1"), ("b", "3")]).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    proptest! {
        #[test]
        fn normalization_is_scale_invariant(
            prices in prop::collection::vec(0.0f64..100.0, 1..8),
            k in 1e-3f64..1e3,
        ) {
            prop_assume!(prices.iter().any(|p| *p > 1e-6));
            let base = normalize_costs(&prices).unwrap();
            let scaled: Vec<f64> = prices.iter().map(|p| p * k).collect();
            let out = normalize_costs(&scaled).unwrap();
            for (a, b) in base.iter().zip(&out) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            prop_assert!(out.iter().all(|c| *c <= 1.0));
            prop_assert!(out.contains(&1.0));
        }
    }
}
