//! Cost-aware routing of queries across a roster of LLM endpoints.
//!
//! A [`PolicyModel`] keeps one linear reward estimate per arm and routes each
//! query embedding to the arm with the highest predicted `accuracy - p * cost`.
//! The [`oracle`] module solves the same budgeted assignment exactly when the
//! correctness matrix is known, and [`evalkit`] runs the offline protocol
//! (calibration, frontiers, reports) against replayed data.

pub mod dataset;
pub mod dsfile;
pub mod evalkit;
pub mod fsutil;
pub mod modelfile;
pub mod money;
pub mod oracle;
pub mod policy;
pub mod prompt;
pub mod replay;
pub mod reward;
pub mod roster;

pub use dataset::{DatasetError, QueryRecord, RoutingDataset};
pub use dsfile::{load_dataset, save_dataset, save_dataset_with_sidecar};
pub use evalkit::{BudgetSpec, EvalError, EvalReport};
pub use modelfile::{load_model, load_model_for, save_model};
pub use money::{Picodollars, Price};
pub use policy::{select_arm, train, PolicyError, PolicyModel, TrainConfig, UpdateMode};
pub use prompt::{parse_label, render_prompt, Label};
pub use replay::{gen_synthetic, ReplayProvider, SynthSpec};
pub use reward::{compute_reward, CostMode, RewardConfig};
pub use roster::{normalize_costs, token_cost, Arm, ArmSpec, Roster};
