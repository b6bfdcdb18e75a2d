//! Evaluation protocol: cost/accuracy reports, validation-budget calibration of
//! `p`, frontier sweeps, oracle frontiers and the pairwise heterogeneity matrix.
//!
//! All spend is summed in integer picodollars, so every report is independent
//! of routing order and thread scheduling.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dataset::{DatasetError, RoutingDataset};
use crate::money::Picodollars;
use crate::oracle::threshold_route;
use crate::policy::{train, PolicyError, PolicyModel, TrainConfig};
use crate::reward::{CostMode, CostTable, RewardConfig};

/// Models trained per `p` value, with seeds `seed..seed + RUNS`.
pub const RUNS: usize = 5;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("arm {arm_id} is not in the roster ({n_arms} arms)")]
    UnknownArm { arm_id: usize, n_arms: usize },
    #[error("budget ${budget} is infeasible: cheapest achievable validation cost is ${cheapest}")]
    InfeasibleBudget { budget: f64, cheapest: f64 },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ArmCounts {
    pub correct: u64,
    pub incorrect: u64,
}

/// Cost and accuracy of one or more routing runs over the same dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub p: f64,
    pub n_runs: usize,
    pub n_queries: usize,
    /// Mean over runs.
    pub test_cost_per_10k: f64,
    pub cost_std: f64,
    pub test_accuracy: f64,
    pub accuracy_std: f64,
    pub arms: Vec<String>,
    /// Per-arm selections summed over runs.
    pub selections: Vec<ArmCounts>,
    pub run_spend: Vec<Picodollars>,
    pub run_correct: Vec<u64>,
}

impl EvalReport {
    pub fn total_spend(&self) -> Picodollars {
        self.run_spend.iter().copied().sum()
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Builds a report from per-run arm choices (one choice per record).
pub fn report_from_choices(p: f64, dataset: &RoutingDataset, runs: &[Vec<usize>]) -> Result<EvalReport, EvalError> {
    if runs.is_empty() {
        return Err(EvalError::Invalid("at least one run is required".into()));
    }
    let k = dataset.n_arms();
    let n = dataset.len();
    let mut selections = vec![ArmCounts::default(); k];
    let mut run_spend = Vec::with_capacity(runs.len());
    let mut run_correct = Vec::with_capacity(runs.len());
    for choices in runs {
        if choices.len() != n {
            return Err(EvalError::Invalid(format!("{} choices for {n} records", choices.len())));
        }
        let mut spend = Picodollars::ZERO;
        let mut correct = 0u64;
        for (i, &j) in choices.iter().enumerate() {
            if j >= k {
                return Err(EvalError::UnknownArm { arm_id: j, n_arms: k });
            }
            spend += dataset.spend(i, j);
            if dataset.records()[i].correct[j] {
                correct += 1;
                selections[j].correct += 1;
            } else {
                selections[j].incorrect += 1;
            }
        }
        run_spend.push(spend);
        run_correct.push(correct);
    }
    let total: Picodollars = run_spend.iter().copied().sum();
    let costs: Vec<f64> = run_spend.iter().map(|s| s.per_10k(n)).collect();
    let accs: Vec<f64> = run_correct.iter().map(|c| if n == 0 { 0.0 } else { *c as f64 / n as f64 }).collect();
    let (_, cost_std) = mean_std(&costs);
    let (test_accuracy, accuracy_std) = mean_std(&accs);
    Ok(EvalReport {
        p,
        n_runs: runs.len(),
        n_queries: n,
        test_cost_per_10k: total.per_10k(n * runs.len()),
        cost_std,
        test_accuracy,
        accuracy_std,
        arms: dataset.roster().arms().iter().map(|a| a.name.clone()).collect(),
        selections,
        run_spend,
        run_correct,
    })
}

/// Arm chosen by `model` for every record of `dataset`.
pub fn route_dataset(model: &PolicyModel, dataset: &RoutingDataset) -> Result<Vec<usize>, EvalError> {
    model.ensure_compatible(dataset.roster(), dataset.embedding_dim())?;
    dataset.records().iter().map(|r| Ok(model.route(&r.embedding)?)).collect()
}

pub fn evaluate(model: &PolicyModel, dataset: &RoutingDataset) -> Result<EvalReport, EvalError> {
    evaluate_runs(std::slice::from_ref(model), dataset)
}

/// One run per model; `p` is taken from the first model's training config.
pub fn evaluate_runs(models: &[PolicyModel], dataset: &RoutingDataset) -> Result<EvalReport, EvalError> {
    let first = models.first().ok_or_else(|| EvalError::Invalid("no models to evaluate".into()))?;
    let runs = models.iter().map(|m| route_dataset(m, dataset)).collect::<Result<Vec<_>, _>>()?;
    report_from_choices(first.train_config().reward.p, dataset, &runs)
}

/// Report as if every query went to `arm_id`.
pub fn single_arm_baseline(arm_id: usize, dataset: &RoutingDataset) -> Result<EvalReport, EvalError> {
    let k = dataset.n_arms();
    if arm_id >= k {
        return Err(EvalError::UnknownArm { arm_id, n_arms: k });
    }
    report_from_choices(0.0, dataset, &[vec![arm_id; dataset.len()]])
}

/// Spend if every query of `dataset` went to `arm_id`.
pub fn arm_spend(dataset: &RoutingDataset, arm_id: usize) -> Picodollars {
    (0..dataset.len()).map(|i| dataset.spend(i, arm_id)).sum()
}

/// `H[i][j]` counts records that arm i answers correctly and arm j does not.
pub fn heterogeneity_matrix(dataset: &RoutingDataset) -> Vec<Vec<u64>> {
    let k = dataset.n_arms();
    let mut h = vec![vec![0u64; k]; k];
    for rec in dataset.records() {
        for i in 0..k {
            if !rec.correct[i] {
                continue;
            }
            for j in 0..k {
                if !rec.correct[j] {
                    h[i][j] += 1;
                }
            }
        }
    }
    h
}

/// `{0}` plus four points per decade from `1e-4` to `1`.
pub fn default_p_grid() -> Vec<f64> {
    let mut grid = vec![0.0];
    for k in 0..=16i32 {
        let p = if k % 4 == 0 {
            format!("1e{}", -4 + k / 4).parse().expect("literal")
        } else {
            10f64.powf(-4.0 + f64::from(k) / 4.0)
        };
        grid.push(p);
    }
    grid
}

/// A `p` large enough that the reward of a cheaper arm beats any pricier one
/// by more than the full accuracy range. Returns 1 when all costs tie.
pub fn saturating_p(dataset: &RoutingDataset, mode: CostMode) -> f64 {
    let table = CostTable::build(dataset, mode);
    let rows: Vec<Vec<f64>> = match mode {
        CostMode::Fixed => vec![dataset.roster().normalized_costs()],
        CostMode::Dynamic => (0..dataset.len()).map(|i| table.row(i)).collect(),
    };
    let mut gap = f64::INFINITY;
    for row in &rows {
        for a in row {
            for b in row {
                if a > b {
                    gap = gap.min(a - b);
                }
            }
        }
    }
    if gap.is_finite() {
        2.0 / gap + 1.0
    } else {
        1.0
    }
}

/// Default grid plus the saturating `p`, ascending.
pub fn calibration_grid(train: &RoutingDataset, mode: CostMode) -> Vec<f64> {
    let mut grid = default_p_grid();
    let sat = saturating_p(train, mode);
    if sat > 1.0 {
        grid.push(sat);
    }
    grid
}

/// Validation spend ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetSpec {
    pub budget: Picodollars,
    pub slack: f64,
}

impl BudgetSpec {
    pub fn new(budget: Picodollars, slack: f64) -> Result<Self, EvalError> {
        if !(slack.is_finite() && slack >= 0.0) {
            return Err(EvalError::Invalid(format!("slack must be >= 0, got {slack}")));
        }
        Ok(Self { budget, slack })
    }

    pub fn from_dollars(budget: f64, slack: f64) -> Result<Self, EvalError> {
        if !(budget.is_finite() && budget >= 0.0) {
            return Err(EvalError::Invalid(format!("budget must be >= 0, got {budget}")));
        }
        Self::new(Picodollars::from_dollars(budget), slack)
    }

    /// `budget * (1 + slack)`, rounded down to a whole picodollar.
    pub fn allowed(&self) -> Picodollars {
        if self.slack == 0.0 {
            self.budget
        } else {
            Picodollars((self.budget.0 as f64 * (1.0 + self.slack)).floor() as u64)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationStep {
    pub p: f64,
    pub mean_val_spend: f64,
    pub fits: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub p_star: f64,
    pub models: Vec<PolicyModel>,
    /// Validation spend of each model at `p_star`.
    pub val_spend: Vec<Picodollars>,
    pub trace: Vec<CalibrationStep>,
}

impl Calibration {
    pub fn mean_val_spend(&self) -> f64 {
        self.val_spend.iter().map(|s| s.as_dollars()).sum::<f64>() / self.val_spend.len() as f64
    }
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T, EvalError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| EvalError::Invalid(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn config_for(config: &TrainConfig, p: f64, run: usize) -> TrainConfig {
    TrainConfig {
        seed: config.seed.wrapping_add(run as u64),
        reward: RewardConfig { p, ..config.reward },
        ..config.clone()
    }
}

fn train_runs(train_ds: &RoutingDataset, config: &TrainConfig, p: f64) -> Result<Vec<PolicyModel>, EvalError> {
    (0..RUNS).into_par_iter().map(|r| Ok(train(train_ds, &config_for(config, p, r))?)).collect()
}

/// Smallest `p` on `grid` whose 5-run mean validation spend fits the budget.
///
/// `grid` is scanned in ascending order. Fails with
/// [`EvalError::InfeasibleBudget`] when the budget is below every single-arm
/// validation cost or no grid value fits.
pub fn calibrate_p(
    train_ds: &RoutingDataset,
    val: &RoutingDataset,
    budget: &BudgetSpec,
    config: &TrainConfig,
    grid: &[f64],
    jobs: usize,
) -> Result<Calibration, EvalError> {
    train_ds.ensure_compatible(val)?;
    if grid.is_empty() {
        return Err(EvalError::Invalid("empty p grid".into()));
    }
    let allowed = budget.allowed();
    let cheapest = (0..val.n_arms()).map(|j| arm_spend(val, j)).min().unwrap_or(Picodollars::ZERO);
    let infeasible =
        || EvalError::InfeasibleBudget { budget: allowed.as_dollars(), cheapest: cheapest.as_dollars() };
    if allowed < cheapest {
        return Err(infeasible());
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut trace = Vec::new();
    for p in grid {
        let models = with_pool(jobs, || train_runs(train_ds, config, p))??;
        let val_spend = models
            .iter()
            .map(|m| Ok(route_dataset(m, val)?.iter().enumerate().map(|(i, &j)| val.spend(i, j)).sum()))
            .collect::<Result<Vec<Picodollars>, EvalError>>()?;
        let sum: u128 = val_spend.iter().map(|s| u128::from(s.0)).sum();
        let fits = sum <= RUNS as u128 * u128::from(allowed.0);
        trace.push(CalibrationStep { p, mean_val_spend: sum as f64 / RUNS as f64 / 1e12, fits });
        if fits {
            return Ok(Calibration { p_star: p, models, val_spend, trace });
        }
    }
    Err(infeasible())
}

/// One `p` of a frontier sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierRow {
    pub report: EvalReport,
    pub val_cost_per_10k: Option<f64>,
}

/// Trains [`RUNS`] models per grid value and evaluates them on `test` (and
/// `val`, when given). Rows come back sorted by `p` descending.
pub fn frontier_sweep(
    train_ds: &RoutingDataset,
    val: Option<&RoutingDataset>,
    test: &RoutingDataset,
    grid: &[f64],
    config: &TrainConfig,
    jobs: usize,
) -> Result<Vec<FrontierRow>, EvalError> {
    if grid.is_empty() {
        return Err(EvalError::Invalid("empty p grid".into()));
    }
    train_ds.ensure_compatible(test)?;
    if let Some(v) = val {
        train_ds.ensure_compatible(v)?;
    }
    let cells: Vec<(f64, usize)> = grid.iter().flat_map(|&p| (0..RUNS).map(move |r| (p, r))).collect();
    type Cell = (Vec<usize>, Option<Picodollars>);
    let outcomes: Vec<Cell> = with_pool(jobs, || {
        cells
            .par_iter()
            .map(|&(p, r)| -> Result<Cell, EvalError> {
                let model = train(train_ds, &config_for(config, p, r))?;
                let choices = route_dataset(&model, test)?;
                let val_spend = match val {
                    Some(v) => {
                        Some(route_dataset(&model, v)?.iter().enumerate().map(|(i, &j)| v.spend(i, j)).sum())
                    }
                    None => None,
                };
                Ok((choices, val_spend))
            })
            .collect::<Result<Vec<_>, _>>()
    })??;

    let mut rows = Vec::with_capacity(grid.len());
    for (g, &p) in grid.iter().enumerate() {
        let chunk = &outcomes[g * RUNS..(g + 1) * RUNS];
        let runs: Vec<Vec<usize>> = chunk.iter().map(|(c, _)| c.clone()).collect();
        let report = report_from_choices(p, test, &runs)?;
        let val_cost_per_10k = val.map(|v| {
            let total: Picodollars = chunk.iter().filter_map(|(_, s)| *s).sum();
            total.per_10k(v.len() * RUNS)
        });
        rows.push(FrontierRow { report, val_cost_per_10k });
    }
    rows.sort_by(|a, b| b.report.p.total_cmp(&a.report.p));
    Ok(rows)
}

/// Threshold routing with the true correctness bits at a fixed `p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub p: f64,
    pub spend: Picodollars,
    pub cost_per_10k: f64,
    pub accuracy: f64,
    pub selections: Vec<ArmCounts>,
    pub assignment: Vec<usize>,
}

pub fn oracle_route(dataset: &RoutingDataset, p: f64, mode: CostMode) -> Result<OracleRow, EvalError> {
    let table = CostTable::build(dataset, mode);
    let mut assignment = Vec::with_capacity(dataset.len());
    for (i, rec) in dataset.records().iter().enumerate() {
        let acc: Vec<f64> = rec.correct.iter().map(|c| f64::from(u8::from(*c))).collect();
        let j = threshold_route(&acc, &table.row(i), p).map_err(|e| EvalError::Invalid(e.to_string()))?;
        assignment.push(j);
    }
    let report = report_from_choices(p, dataset, std::slice::from_ref(&assignment))?;
    Ok(OracleRow {
        p,
        spend: report.run_spend[0],
        cost_per_10k: report.test_cost_per_10k,
        accuracy: report.test_accuracy,
        selections: report.selections,
        assignment,
    })
}

/// [`oracle_route`] over a grid, sorted by `p` descending.
pub fn oracle_frontier(dataset: &RoutingDataset, grid: &[f64], mode: CostMode) -> Result<Vec<OracleRow>, EvalError> {
    let mut rows = grid.iter().map(|&p| oracle_route(dataset, p, mode)).collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(|a, b| b.p.total_cmp(&a.p));
    Ok(rows)
}

fn push_row(out: &mut String, cells: &[String]) {
    out.push_str(&cells.join("\t"));
    out.push('\n');
}

/// Tab-separated frontier table.
///
/// Columns: `p, cost_per_10k, acc_mean, acc_std`, then `<arm>_correct` and
/// `<arm>_incorrect` per arm in roster order, then `cost_std` and
/// `val_cost_per_10k` (`NA` when no validation set was given).
pub fn frontier_tsv(rows: &[FrontierRow]) -> String {
    let mut out = String::new();
    let arms = rows.first().map(|r| r.report.arms.clone()).unwrap_or_default();
    let mut header: Vec<String> = ["p", "cost_per_10k", "acc_mean", "acc_std"].map(String::from).to_vec();
    for a in &arms {
        header.push(format!("{a}_correct"));
        header.push(format!("{a}_incorrect"));
    }
    header.extend(["cost_std", "val_cost_per_10k"].map(String::from));
    push_row(&mut out, &header);
    for row in rows {
        let r = &row.report;
        let mut cells =
            vec![r.p.to_string(), r.test_cost_per_10k.to_string(), r.test_accuracy.to_string(), r.accuracy_std.to_string()];
        for s in &r.selections {
            cells.push(s.correct.to_string());
            cells.push(s.incorrect.to_string());
        }
        cells.push(r.cost_std.to_string());
        cells.push(row.val_cost_per_10k.map_or_else(|| "NA".to_string(), |v| v.to_string()));
        push_row(&mut out, &cells);
    }
    out
}

/// Columns: `arm, cost_per_10k, accuracy, correct, incorrect`.
pub fn baseline_tsv(dataset: &RoutingDataset) -> Result<String, EvalError> {
    let mut out = String::new();
    push_row(&mut out, &["arm", "cost_per_10k", "accuracy", "correct", "incorrect"].map(String::from));
    for arm in dataset.roster().arms() {
        let r = single_arm_baseline(arm.arm_id, dataset)?;
        let s = r.selections[arm.arm_id];
        push_row(
            &mut out,
            &[
                arm.name.clone(),
                r.test_cost_per_10k.to_string(),
                r.test_accuracy.to_string(),
                s.correct.to_string(),
                s.incorrect.to_string(),
            ],
        );
    }
    Ok(out)
}

/// Columns: `p, cost_per_10k, accuracy`, then per-arm correct/incorrect counts.
pub fn oracle_tsv(rows: &[OracleRow], arm_names: &[String]) -> String {
    let mut out = String::new();
    let mut header: Vec<String> = ["p", "cost_per_10k", "accuracy"].map(String::from).to_vec();
    for a in arm_names {
        header.push(format!("{a}_correct"));
        header.push(format!("{a}_incorrect"));
    }
    push_row(&mut out, &header);
    for r in rows {
        let mut cells = vec![r.p.to_string(), r.cost_per_10k.to_string(), r.accuracy.to_string()];
        for s in &r.selections {
            cells.push(s.correct.to_string());
            cells.push(s.incorrect.to_string());
        }
        push_row(&mut out, &cells);
    }
    out
}

/// Row-per-arm heterogeneity table with arm names as the header row and first column.
pub fn heterogeneity_tsv(matrix: &[Vec<u64>], arm_names: &[String]) -> String {
    let mut out = String::new();
    let mut header = vec!["arm".to_string()];
    header.extend(arm_names.iter().cloned());
    push_row(&mut out, &header);
    for (name, row) in arm_names.iter().zip(matrix) {
        let mut cells = vec![name.clone()];
        cells.extend(row.iter().map(u64::to_string));
        push_row(&mut out, &cells);
    }
    out
}

/// Pretty JSON of any report value, newline-terminated.
pub fn summary_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::QueryRecord;
    use crate::policy::UpdateMode;
    use crate::replay::{gen_synthetic, SynthSpec};
    use crate::roster::Roster;
    use crate::money::Price;

    fn ds_from(correct: &[&[u8]], tokens: u64, prices: &[&str]) -> RoutingDataset {
        let pairs: Vec<(String, String)> =
            prices.iter().enumerate().map(|(i, p)| (format!("a{i}"), p.to_string())).collect();
        let roster = Roster::from_pairs(&pairs).unwrap();
        let recs = correct
            .iter()
            .enumerate()
            .map(|(i, row)| QueryRecord {
                query_id: format!("q{i}"),
                text: None,
                embedding: vec![i as f32, 1.0],
                correct: row.iter().map(|b| *b == 1).collect(),
                tokens: vec![tokens; row.len()],
            })
            .collect();
        RoutingDataset::new(roster, 2, recs).unwrap()
    }

    fn synth(n: usize, seed: u64) -> RoutingDataset {
        gen_synthetic(&SynthSpec {
            n_arms: 4,
            n_clusters: 4,
            dim: 8,
            n_records: n,
            noise: 0.02,
            prices: ["0.0004", "0.0005", "0.002", "0.02"].iter().map(|p| p.parse::<Price>().unwrap()).collect(),
            seed,
        })
        .unwrap()
    }

    #[test]
    fn heterogeneity_examples() {
        let ds = ds_from(&[&[1, 0], &[1, 1], &[0, 1]], 10, &["1", "2"]);
        assert_eq!(heterogeneity_matrix(&ds), vec![vec![0, 1], vec![1, 0]]);
        let same = ds_from(&[&[1, 1], &[0, 0], &[1, 1]], 10, &["1", "2"]);
        assert_eq!(heterogeneity_matrix(&same), vec![vec![0, 0], vec![0, 0]]);
    }

    #[test]
    fn spend_per_10k_example() {
        // 1000 queries x 59 tokens at $0.0008/1K = $0.0472
        let rows: Vec<&[u8]> = vec![&[1]; 1000];
        let ds = ds_from(&rows, 59, &["0.0008"]);
        let r = single_arm_baseline(0, &ds).unwrap();
        assert_eq!(r.total_spend(), Picodollars::from_dollars(0.0472));
        assert_eq!(r.test_cost_per_10k, 0.472);
        assert_eq!(r.test_accuracy, 1.0);
    }

    #[test]
    fn baseline_properties() {
        let ds = ds_from(&[&[1, 1], &[0, 0], &[1, 1], &[1, 1]], 100, &["0.001", "0.004"]);
        let a = single_arm_baseline(0, &ds).unwrap();
        let b = single_arm_baseline(1, &ds).unwrap();
        assert_eq!(a.test_accuracy, 0.75);
        assert_eq!(a.test_accuracy, b.test_accuracy);
        assert_eq!(b.total_spend().0, 4 * a.total_spend().0);
        assert!(matches!(single_arm_baseline(2, &ds), Err(EvalError::UnknownArm { .. })));
    }

    #[test]
    fn zero_model_matches_cheapest_baseline() {
        let ds = synth(200, 1);
        let m = PolicyModel::zeros(ds.roster().clone(), 8, TrainConfig::default());
        let mut r = evaluate(&m, &ds).unwrap();
        let b = single_arm_baseline(0, &ds).unwrap();
        r.p = b.p;
        assert_eq!(r, b);
    }

    #[test]
    fn evaluate_is_permutation_invariant() {
        let ds = synth(300, 2);
        let cfg = TrainConfig { update_mode: UpdateMode::FullInformation, steps: 5, ..TrainConfig::default() };
        let m = train(&ds, &cfg).unwrap();
        let r = evaluate(&m, &ds).unwrap();
        let order: Vec<usize> = (0..ds.len()).rev().collect();
        let r2 = evaluate(&m, &ds.subset(&order)).unwrap();
        assert_eq!(r.total_spend(), r2.total_spend());
        assert_eq!(r.run_correct, r2.run_correct);
        assert_eq!(r.selections, r2.selections);
        let total: u64 = r.selections.iter().map(|s| s.correct + s.incorrect).sum();
        assert_eq!(total, ds.len() as u64);
    }

    #[test]
    fn evaluate_dimension_mismatch() {
        let ds = synth(10, 3);
        let m = PolicyModel::zeros(ds.roster().clone(), 3, TrainConfig::default());
        assert!(evaluate(&m, &ds).is_err());
    }

    #[test]
    fn grid_shape() {
        let g = default_p_grid();
        assert_eq!(g.len(), 18);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[1], 1e-4);
        assert_eq!(g[5], 1e-3);
        assert_eq!(g[17], 1.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!((g[2] - 10f64.powf(-3.75)).abs() < 1e-18);
    }

    #[test]
    fn saturating_p_for_table_prices() {
        let roster_prices = ["0.0004", "0.0005", "0.002", "0.02"];
        let ds = ds_from(&[&[1, 0, 0, 0]], 10, &roster_prices);
        // normalized [0.02, 0.025, 0.1, 1.0]; smallest gap 0.005
        assert!((saturating_p(&ds, CostMode::Fixed) - 401.0).abs() < 1e-9);
        let flat = ds_from(&[&[1, 0]], 10, &["1", "1"]);
        assert_eq!(saturating_p(&flat, CostMode::Fixed), 1.0);
    }

    #[test]
    fn calibration_boundaries() {
        let train_ds = synth(400, 4);
        let val = synth(200, 5);
        let cfg = TrainConfig { update_mode: UpdateMode::FullInformation, steps: 10, ..TrainConfig::default() };
        let grid = calibration_grid(&train_ds, CostMode::Fixed);

        let generous = BudgetSpec::new(Picodollars(u64::MAX / 8), 0.0).unwrap();
        let c = calibrate_p(&train_ds, &val, &generous, &cfg, &grid, 2).unwrap();
        assert_eq!(c.p_star, 0.0);
        assert_eq!(c.models.len(), RUNS);

        let cheapest = BudgetSpec::new(arm_spend(&val, 0), 0.0).unwrap();
        let c = calibrate_p(&train_ds, &val, &cheapest, &cfg, &grid, 2).unwrap();
        assert_eq!(c.p_star, *grid.last().unwrap());
        assert!(c.val_spend.iter().map(|s| s.0 as u128).sum::<u128>() <= RUNS as u128 * cheapest.allowed().0 as u128);

        let below = BudgetSpec::new(Picodollars(arm_spend(&val, 0).0 - 1), 0.0).unwrap();
        match calibrate_p(&train_ds, &val, &below, &cfg, &grid, 2) {
            Err(EvalError::InfeasibleBudget { cheapest, .. }) => assert_eq!(cheapest, arm_spend(&val, 0).as_dollars()),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn calibration_is_deterministic() {
        let train_ds = synth(300, 6);
        let val = synth(150, 7);
        let cfg = TrainConfig { update_mode: UpdateMode::FullInformation, steps: 5, ..TrainConfig::default() };
        let mid = Picodollars((arm_spend(&val, 0).0 + arm_spend(&val, 3).0) / 4);
        let budget = BudgetSpec::new(mid, 0.0).unwrap();
        let grid = calibration_grid(&train_ds, CostMode::Fixed);
        let a = calibrate_p(&train_ds, &val, &budget, &cfg, &grid, 1).unwrap();
        let b = calibrate_p(&train_ds, &val, &budget, &cfg, &grid, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn slack_widens_allowance() {
        let b = BudgetSpec::new(Picodollars(1000), 0.1).unwrap();
        assert_eq!(b.allowed(), Picodollars(1100));
        assert!(BudgetSpec::new(Picodollars(1), -0.1).is_err());
        assert!(BudgetSpec::from_dollars(-1.0, 0.0).is_err());
    }

    #[test]
    fn degenerate_sweep_equals_evaluate() {
        let train_ds = synth(200, 8);
        let test = synth(100, 9);
        let cfg = TrainConfig { update_mode: UpdateMode::FullInformation, steps: 5, ..TrainConfig::default() };
        let rows = frontier_sweep(&train_ds, None, &test, &[0.0], &cfg, 2).unwrap();
        assert_eq!(rows.len(), 1);
        let models: Vec<PolicyModel> = (0..RUNS).map(|r| train(&train_ds, &config_for(&cfg, 0.0, r)).unwrap()).collect();
        assert_eq!(rows[0].report, evaluate_runs(&models, &test).unwrap());
        assert_eq!(rows[0].val_cost_per_10k, None);
    }

    #[test]
    fn sweep_rows_descend_and_schema_is_mode_independent() {
        let train_ds = synth(200, 10);
        let test = synth(100, 11);
        let grid = [0.0, 1.0, 0.1];
        let fixed = TrainConfig { steps: 3, ..TrainConfig::default() };
        let dynamic = TrainConfig { reward: RewardConfig { p: 0.0, cost_mode: CostMode::Dynamic }, ..fixed.clone() };
        let a = frontier_sweep(&train_ds, Some(&test), &test, &grid, &fixed, 1).unwrap();
        let b = frontier_sweep(&train_ds, Some(&test), &test, &grid, &dynamic, 4).unwrap();
        let ps: Vec<f64> = a.iter().map(|r| r.report.p).collect();
        assert_eq!(ps, vec![1.0, 0.1, 0.0]);
        let header = |s: &str| s.lines().next().unwrap().to_string();
        assert_eq!(header(&frontier_tsv(&a)), header(&frontier_tsv(&b)));
        assert_eq!(frontier_tsv(&a), frontier_tsv(&frontier_sweep(&train_ds, Some(&test), &test, &grid, &fixed, 3).unwrap()));
    }

    #[test]
    fn oracle_frontier_is_monotone() {
        let ds = synth(500, 12);
        for mode in [CostMode::Fixed, CostMode::Dynamic] {
            let rows = oracle_frontier(&ds, &[0.0, 0.1, 1.0], mode).unwrap();
            // rows are p-descending, so spend and accuracy must not decrease down the table
            assert!(rows.windows(2).all(|w| w[0].spend <= w[1].spend));
            assert!(rows.windows(2).all(|w| w[0].accuracy <= w[1].accuracy));
        }
    }

    #[test]
    fn tsv_layout() {
        let ds = ds_from(&[&[1, 0], &[0, 1]], 1000, &["0.001", "0.002"]);
        let report = report_from_choices(0.5, &ds, &[vec![0, 1], vec![0, 0]]).unwrap();
        let tsv = frontier_tsv(&[FrontierRow { report, val_cost_per_10k: None }]);
        let mut lines = tsv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "p\tcost_per_10k\tacc_mean\tacc_std\ta0_correct\ta0_incorrect\ta1_correct\ta1_incorrect\tcost_std\tval_cost_per_10k"
        );
        let cells: Vec<&str> = lines.next().unwrap().split('\t').collect();
        assert_eq!(cells[0], "0.5");
        assert_eq!(cells[2], "0.75");
        assert_eq!(&cells[4..8], &["2", "1", "1", "0"]);
        assert_eq!(cells[9], "NA");
    }
}
