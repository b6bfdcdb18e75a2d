//! Reward `correct - p * cost` and the per-query cost tables it is evaluated on.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::RoutingDataset;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RewardError {
    #[error("cost scaling p must be a finite non-negative number, got {0}")]
    InvalidScaling(f64),
}

/// Which cost enters the reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostMode {
    /// Roster-normalized price per arm.
    #[default]
    Fixed,
    /// Per-query token spend, normalized by the largest per-query spend in the data.
    Dynamic,
}

impl std::str::FromStr for CostMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed" => Ok(CostMode::Fixed),
            "dynamic" => Ok(CostMode::Dynamic),
            other => Err(format!("unknown cost mode {other:?} (expected fixed|dynamic)")),
        }
    }
}

impl std::fmt::Display for CostMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CostMode::Fixed => "fixed",
            CostMode::Dynamic => "dynamic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub p: f64,
    #[serde(default)]
    pub cost_mode: CostMode,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self { p: 0.0, cost_mode: CostMode::Fixed }
    }
}

impl RewardConfig {
    pub fn new(p: f64, cost_mode: CostMode) -> Result<Self, RewardError> {
        let cfg = Self { p, cost_mode };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), RewardError> {
        if !self.p.is_finite() || self.p < 0.0 {
            return Err(RewardError::InvalidScaling(self.p));
        }
        Ok(())
    }
}

pub fn compute_reward(correct: bool, cost: f64, config: &RewardConfig) -> Result<f64, RewardError> {
    config.validate()?;
    Ok(reward_unchecked(correct, cost, config.p))
}

#[inline]
pub(crate) fn reward_unchecked(correct: bool, cost: f64, p: f64) -> f64 {
    let a = if correct { 1.0 } else { 0.0 };
    a - p * cost
}

/// Normalized cost of every (record, arm) pair under a cost mode.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTable {
    n_arms: usize,
    mode: CostMode,
    fixed: Vec<f64>,
    // row-major records x arms, only for dynamic mode
    dynamic: Vec<f64>,
}

impl CostTable {
    /// Dynamic costs are normalized by the maximum per-query spend in `dataset`.
    pub fn build(dataset: &RoutingDataset, mode: CostMode) -> Self {
        let n_arms = dataset.roster().len();
        let fixed = dataset.roster().normalized_costs();
        let dynamic = match mode {
            CostMode::Fixed => Vec::new(),
            CostMode::Dynamic => {
                let arms = dataset.roster().arms();
                let raw: Vec<u64> = dataset
                    .records()
                    .iter()
                    .flat_map(|r| r.tokens.iter().zip(arms).map(|(t, a)| a.price_per_1k.cost_of(*t).0))
                    .collect();
                let max = raw.iter().copied().max().unwrap_or(0);
                if max == 0 {
                    vec![0.0; raw.len()]
                } else {
                    raw.into_iter().map(|c| c as f64 / max as f64).collect()
                }
            }
        };
        Self { n_arms, mode, fixed, dynamic }
    }

    pub fn mode(&self) -> CostMode {
        self.mode
    }

    #[inline]
    pub fn get(&self, record: usize, arm: usize) -> f64 {
        match self.mode {
            CostMode::Fixed => self.fixed[arm],
            CostMode::Dynamic => self.dynamic[record * self.n_arms + arm],
        }
    }

    pub fn row(&self, record: usize) -> Vec<f64> {
        (0..self.n_arms).map(|j| self.get(record, j)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(p: f64) -> RewardConfig {
        RewardConfig::new(p, CostMode::Fixed).unwrap()
    }

    #[test]
    fn reward_examples() {
        assert!((compute_reward(true, 1.0, &cfg(0.001)).unwrap() - 0.999).abs() < 1e-15);
        assert_eq!(compute_reward(false, 0.5, &cfg(0.0)).unwrap(), 0.0);
        assert!((compute_reward(true, 0.1, &cfg(0.03)).unwrap() - 0.997).abs() < 1e-15);
    }

    #[test]
    fn negative_scaling_is_rejected() {
        assert!(RewardConfig::new(-0.1, CostMode::Fixed).is_err());
        let bad = RewardConfig { p: -1.0, cost_mode: CostMode::Fixed };
        assert_eq!(compute_reward(true, 0.5, &bad), Err(RewardError::InvalidScaling(-1.0)));
    }

    #[test]
    fn zero_scaling_is_correctness() {
        assert_eq!(compute_reward(true, 0.7, &cfg(0.0)).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn reward_bounds_and_monotonicity(
            correct in any::<bool>(),
            cost in 0.0f64..=1.0,
            p1 in 0.0f64..10.0,
            dp in 0.0f64..10.0,
        ) {
            let r1 = compute_reward(correct, cost, &cfg(p1)).unwrap();
            let r2 = compute_reward(correct, cost, &cfg(p1 + dp)).unwrap();
            prop_assert!(r1 >= -p1 && r1 <= 1.0);
            prop_assert!(r2 <= r1);
            let z1 = compute_reward(correct, 0.0, &cfg(p1)).unwrap();
            let z2 = compute_reward(correct, 0.0, &cfg(p1 + dp)).unwrap();
            prop_assert_eq!(z1, z2);
        }
    }
}
