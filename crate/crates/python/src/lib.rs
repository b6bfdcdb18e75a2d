//! Python bindings: `import banditroute_py`.

use std::path::PathBuf;

use banditroute::evalkit::{self, EvalError};
use banditroute::oracle::{self, BudgetProblem, CostMatrix, DualCertificate, OracleError};
use banditroute::roster::RosterError;
use banditroute::{CostMode, DatasetError, PolicyError, RewardConfig, RoutingDataset, TrainConfig, UpdateMode};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn dataset_err(e: DatasetError) -> PyErr {
    match e {
        DatasetError::Io { .. } => PyOSError::new_err(e.to_string()),
        other => value_err(other),
    }
}

fn policy_err(e: PolicyError) -> PyErr {
    match e {
        PolicyError::Io { .. } => PyOSError::new_err(e.to_string()),
        other => value_err(other),
    }
}

fn oracle_err(e: OracleError) -> PyErr {
    value_err(e)
}

fn eval_err(e: EvalError) -> PyErr {
    value_err(e)
}

fn roster_err(e: RosterError) -> PyErr {
    value_err(e)
}

fn cost_mode(s: &str) -> PyResult<CostMode> {
    s.parse().map_err(PyValueError::new_err)
}

#[derive(FromPyObject)]
enum Costs {
    PerQuery(Vec<Vec<f64>>),
    PerArm(Vec<f64>),
}

fn problem(accuracy: Vec<Vec<bool>>, costs: Costs, budget: f64) -> PyResult<BudgetProblem> {
    let costs = match costs {
        Costs::PerArm(c) => CostMatrix::PerArm(c),
        Costs::PerQuery(c) => CostMatrix::PerQuery(c),
    };
    BudgetProblem::new(accuracy, costs, budget).map_err(oracle_err)
}

/// Prices divided by their maximum.
#[pyfunction]
fn normalize_costs(prices: Vec<f64>) -> PyResult<Vec<f64>> {
    banditroute::normalize_costs(&prices).map_err(roster_err)
}

#[pyfunction]
#[pyo3(signature = (correct, cost, p, cost_mode = "fixed"))]
fn compute_reward(correct: bool, cost: f64, p: f64, cost_mode: &str) -> PyResult<f64> {
    let cfg = RewardConfig::new(p, self::cost_mode(cost_mode)?).map_err(value_err)?;
    banditroute::compute_reward(correct, cost, &cfg).map_err(value_err)
}

#[pyfunction]
fn token_cost(price_per_1k: f64, tokens: i64) -> PyResult<f64> {
    banditroute::token_cost(price_per_1k, tokens).map_err(roster_err)
}

#[pyfunction]
fn threshold_route(accuracies: Vec<f64>, costs: Vec<f64>, p: f64) -> PyResult<usize> {
    oracle::threshold_route(&accuracies, &costs, p).map_err(oracle_err)
}

/// `costs` is either one cost per arm or an N x k matrix.
#[pyfunction]
fn brute_force_ilp<'py>(
    py: Python<'py>,
    accuracy: Vec<Vec<bool>>,
    costs: Costs,
    budget: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let sol = oracle::brute_force_ilp(&problem(accuracy, costs, budget)?).map_err(oracle_err)?;
    let d = PyDict::new(py);
    d.set_item("assignment", sol.assignment)?;
    d.set_item("total_accuracy", sol.total_accuracy)?;
    d.set_item("total_cost", sol.total_cost)?;
    d.set_item("feasible", sol.feasible)?;
    Ok(d)
}

#[pyfunction]
fn solve_budgeted<'py>(
    py: Python<'py>,
    accuracy: Vec<Vec<bool>>,
    costs: Costs,
    budget: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let sol = oracle::solve_budgeted(&problem(accuracy, costs, budget)?).map_err(oracle_err)?;
    let d = PyDict::new(py);
    d.set_item("p_star", sol.p_star)?;
    d.set_item("assignment", sol.assignment)?;
    d.set_item("total_accuracy", sol.total_accuracy)?;
    d.set_item("total_cost", sol.total_cost)?;
    Ok(d)
}

#[pyfunction]
fn check_dual_feasibility(accuracy: Vec<Vec<bool>>, costs: Costs, p: f64, q: Vec<f64>) -> PyResult<bool> {
    let prob = problem(accuracy, costs, 0.0)?;
    oracle::check_dual_feasibility(&prob, &DualCertificate { p, q }).map_err(oracle_err)
}

#[pyfunction]
fn render_prompt(template_id: &str, sentence: &str) -> PyResult<String> {
    banditroute::render_prompt(template_id, sentence).map_err(value_err)
}

/// "positive", "negative" or "abstain".
#[pyfunction]
fn parse_label(raw: &str) -> &'static str {
    banditroute::parse_label(raw).as_str()
}

#[pyfunction]
fn heterogeneity_matrix(dataset: &Dataset) -> Vec<Vec<u64>> {
    evalkit::heterogeneity_matrix(&dataset.inner)
}

/// A routing dataset loaded from JSONL (inline embeddings or float32 sidecar).
#[pyclass(frozen, module = "banditroute_py")]
struct Dataset {
    inner: RoutingDataset,
}

#[pymethods]
impl Dataset {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: banditroute::load_dataset(path).map_err(dataset_err)? })
    }

    #[pyo3(signature = (path, sidecar = None))]
    fn save(&self, path: PathBuf, sidecar: Option<&str>) -> PyResult<()> {
        match sidecar {
            Some(name) => banditroute::save_dataset_with_sidecar(&self.inner, path, name),
            None => banditroute::save_dataset(&self.inner, path),
        }
        .map_err(dataset_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn n_arms(&self) -> usize {
        self.inner.n_arms()
    }

    #[getter]
    fn embedding_dim(&self) -> usize {
        self.inner.embedding_dim()
    }

    #[getter]
    fn arm_names(&self) -> Vec<String> {
        self.inner.roster().arms().iter().map(|a| a.name.clone()).collect()
    }

    #[getter]
    fn prices(&self) -> Vec<f64> {
        self.inner.roster().arms().iter().map(|a| a.price_per_1k.as_dollars()).collect()
    }

    #[getter]
    fn query_ids(&self) -> Vec<String> {
        self.inner.records().iter().map(|r| r.query_id.clone()).collect()
    }

    fn embedding(&self, index: usize) -> PyResult<Vec<f32>> {
        self.record(index).map(|r| r.embedding.clone())
    }

    fn correct(&self, index: usize) -> PyResult<Vec<bool>> {
        self.record(index).map(|r| r.correct.clone())
    }

    fn correct_count(&self, arm_id: usize) -> PyResult<usize> {
        if arm_id >= self.inner.n_arms() {
            return Err(value_err(format!("arm {arm_id} out of range")));
        }
        Ok(self.inner.correct_count(arm_id))
    }

    fn warnings(&self) -> Vec<String> {
        self.inner.warnings()
    }

    fn __repr__(&self) -> String {
        format!("Dataset(records={}, arms={}, dim={})", self.inner.len(), self.inner.n_arms(), self.inner.embedding_dim())
    }
}

impl Dataset {
    fn record(&self, index: usize) -> PyResult<&banditroute::QueryRecord> {
        self.inner.records().get(index).ok_or_else(|| value_err(format!("record {index} out of range")))
    }
}

/// Per-arm linear reward model.
#[pyclass(frozen, module = "banditroute_py")]
struct PolicyModel {
    inner: banditroute::PolicyModel,
}

#[pymethods]
impl PolicyModel {
    #[staticmethod]
    #[pyo3(signature = (
        dataset, p = 0.0, *, steps = 20, learning_rate = 0.01, seed = 0, epsilon = 0.0,
        update_mode = "greedy_arm", cost_mode = "fixed", use_bias = true
    ))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        py: Python<'_>,
        dataset: &Dataset,
        p: f64,
        steps: usize,
        learning_rate: f64,
        seed: u64,
        epsilon: f64,
        update_mode: &str,
        cost_mode: &str,
        use_bias: bool,
    ) -> PyResult<Self> {
        let config = TrainConfig {
            steps,
            learning_rate,
            seed,
            epsilon,
            update_mode: update_mode.parse::<UpdateMode>().map_err(PyValueError::new_err)?,
            reward: RewardConfig::new(p, self::cost_mode(cost_mode)?).map_err(value_err)?,
            use_bias,
        };
        let inner = py.detach(|| banditroute::train(&dataset.inner, &config)).map_err(policy_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: banditroute::load_model(path).map_err(policy_err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        banditroute::save_model(&self.inner, path).map_err(policy_err)
    }

    fn predict_q(&self, embedding: Vec<f32>) -> PyResult<Vec<f64>> {
        self.inner.predict_q(&embedding).map_err(policy_err)
    }

    fn route(&self, embedding: Vec<f32>) -> PyResult<usize> {
        self.inner.route(&embedding).map_err(policy_err)
    }

    /// Accuracy and spend of greedy routing over `dataset`.
    fn evaluate<'py>(&self, py: Python<'py>, dataset: &Dataset) -> PyResult<Bound<'py, PyDict>> {
        let report = evalkit::evaluate(&self.inner, &dataset.inner).map_err(eval_err)?;
        let d = PyDict::new(py);
        d.set_item("p", report.p)?;
        d.set_item("test_accuracy", report.test_accuracy)?;
        d.set_item("test_cost_per_10k", report.test_cost_per_10k)?;
        let selections: Vec<(u64, u64)> = report.selections.iter().map(|c| (c.correct, c.incorrect)).collect();
        d.set_item("selections", selections)?;
        d.set_item("total_spend_usd", report.total_spend().as_dollars())?;
        Ok(d)
    }

    #[getter]
    fn arm_names(&self) -> Vec<String> {
        self.inner.roster().arms().iter().map(|a| a.name.clone()).collect()
    }

    #[getter]
    fn embedding_dim(&self) -> usize {
        self.inner.embedding_dim()
    }

    fn __repr__(&self) -> String {
        format!("PolicyModel(arms={}, dim={})", self.inner.roster().len(), self.inner.embedding_dim())
    }
}

#[pymodule]
fn banditroute_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(normalize_costs, m)?)?;
    m.add_function(wrap_pyfunction!(compute_reward, m)?)?;
    m.add_function(wrap_pyfunction!(token_cost, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_route, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_ilp, m)?)?;
    m.add_function(wrap_pyfunction!(solve_budgeted, m)?)?;
    m.add_function(wrap_pyfunction!(check_dual_feasibility, m)?)?;
    m.add_function(wrap_pyfunction!(render_prompt, m)?)?;
    m.add_function(wrap_pyfunction!(parse_label, m)?)?;
    m.add_function(wrap_pyfunction!(heterogeneity_matrix, m)?)?;
    m.add_class::<Dataset>()?;
    m.add_class::<PolicyModel>()?;
    Ok(())
}
