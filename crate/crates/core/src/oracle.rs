//! Ground-truth budgeted routing.
//!
//! With the full correctness matrix known, the budgeted assignment problem is a
//! 0/1 program: maximize the number of correct answers subject to total spend
//! at most `b`. [`brute_force_ilp`] solves it exactly by enumeration (test
//! scale only). [`solve_budgeted`] solves the Lagrangian form: route each
//! query independently to `argmax_j a_j - p c_j` and bisect on `p` until the
//! spend fits the budget. [`check_dual_feasibility`] checks a `(p, q)` pair
//! against the dual constraints `p c_j + q_i >= a_j(x_i) + 1`.

use thiserror::Error;

/// Relative slack when comparing floating spend against a budget.
pub const BUDGET_TOLERANCE: f64 = 1e-9;
/// Absolute tolerance of the dual constraint check.
pub const DUAL_TOLERANCE: f64 = 1e-9;
/// Largest search space `brute_force_ilp` will enumerate.
pub const MAX_ENUMERATION: u64 = 10_000_000;
const BISECTION_ITERS: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("instance too large for enumeration: {arms}^{queries} assignments exceeds {MAX_ENUMERATION}")]
    TooLarge { arms: usize, queries: usize },
    #[error("budget {budget} is below the cheapest possible spend {min_cost}")]
    Infeasible { budget: f64, min_cost: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum CostMatrix {
    /// One cost per arm, shared by every query.
    PerArm(Vec<f64>),
    /// Row-per-query costs.
    PerQuery(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetProblem {
    accuracy: Vec<Vec<bool>>,
    costs: CostMatrix,
    budget: f64,
    n_arms: usize,
}

impl BudgetProblem {
    pub fn new(accuracy: Vec<Vec<bool>>, costs: CostMatrix, budget: f64) -> Result<Self, OracleError> {
        if !(budget.is_finite() && budget >= 0.0) {
            return Err(OracleError::Invalid(format!("budget must be finite and >= 0, got {budget}")));
        }
        let n_arms = match &costs {
            CostMatrix::PerArm(c) => c.len(),
            CostMatrix::PerQuery(rows) => rows.first().map_or(0, Vec::len),
        };
        if n_arms == 0 {
            return Err(OracleError::Shape("no arms".into()));
        }
        if let Some((i, row)) = accuracy.iter().enumerate().find(|(_, r)| r.len() != n_arms) {
            return Err(OracleError::Shape(format!("accuracy row {i} has {} entries, expected {n_arms}", row.len())));
        }
        let all_costs: Box<dyn Iterator<Item = &f64>> = match &costs {
            CostMatrix::PerArm(c) => Box::new(c.iter()),
            CostMatrix::PerQuery(rows) => {
                if rows.len() != accuracy.len() {
                    return Err(OracleError::Shape(format!(
                        "{} cost rows for {} queries",
                        rows.len(),
                        accuracy.len()
                    )));
                }
                if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != n_arms) {
                    return Err(OracleError::Shape(format!("cost row {i} has {} entries", row.len())));
                }
                Box::new(rows.iter().flatten())
            }
        };
        for c in all_costs {
            if !(c.is_finite() && *c >= 0.0) {
                return Err(OracleError::Invalid(format!("cost {c} is not finite and non-negative")));
            }
        }
        Ok(Self { accuracy, costs, budget, n_arms })
    }

    pub fn n_queries(&self) -> usize {
        self.accuracy.len()
    }

    pub fn n_arms(&self) -> usize {
        self.n_arms
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn with_budget(&self, budget: f64) -> Result<Self, OracleError> {
        Self::new(self.accuracy.clone(), self.costs.clone(), budget)
    }

    #[inline]
    pub fn cost(&self, i: usize, j: usize) -> f64 {
        match &self.costs {
            CostMatrix::PerArm(c) => c[j],
            CostMatrix::PerQuery(rows) => rows[i][j],
        }
    }

    #[inline]
    pub fn correct(&self, i: usize, j: usize) -> bool {
        self.accuracy[i][j]
    }

    fn accuracy_row(&self, i: usize) -> Vec<f64> {
        self.accuracy[i].iter().map(|b| if *b { 1.0 } else { 0.0 }).collect()
    }

    fn cost_row(&self, i: usize) -> Vec<f64> {
        (0..self.n_arms).map(|j| self.cost(i, j)).collect()
    }

    /// Cheapest arm for query `i`, ties to the lowest index.
    fn cheapest(&self, i: usize) -> usize {
        (1..self.n_arms).fold(0, |best, j| if self.cost(i, j) < self.cost(i, best) { j } else { best })
    }

    pub fn min_total_cost(&self) -> f64 {
        (0..self.n_queries()).map(|i| self.cost(i, self.cheapest(i))).sum()
    }

    pub fn fits(&self, total_cost: f64) -> bool {
        total_cost <= self.budget + BUDGET_TOLERANCE * self.budget.abs().max(1.0)
    }

    pub fn totals(&self, assignment: &[usize]) -> (usize, f64) {
        assignment.iter().enumerate().fold((0, 0.0), |(acc, cost), (i, &j)| {
            (acc + usize::from(self.correct(i, j)), cost + self.cost(i, j))
        })
    }

    /// Threshold routing of every query at scaling `p`.
    pub fn route_all(&self, p: f64) -> Vec<usize> {
        (0..self.n_queries()).map(|i| self.route_one(i, p)).collect()
    }

    fn route_one(&self, i: usize, p: f64) -> usize {
        argmax_score(&self.accuracy_row(i), &self.cost_row(i), p)
    }
}

/// `argmax_i accuracies[i] - p * costs[i]`; ties to lower cost, then lower index.
pub fn threshold_route(accuracies: &[f64], costs: &[f64], p: f64) -> Result<usize, OracleError> {
    if accuracies.is_empty() {
        return Err(OracleError::Shape("no arms".into()));
    }
    if accuracies.len() != costs.len() {
        return Err(OracleError::Shape(format!(
            "{} accuracies but {} costs",
            accuracies.len(),
            costs.len()
        )));
    }
    Ok(argmax_score(accuracies, costs, p))
}

fn argmax_score(accuracies: &[f64], costs: &[f64], p: f64) -> usize {
    let mut best = 0;
    let mut best_score = accuracies[0] - p * costs[0];
    for j in 1..accuracies.len() {
        let s = accuracies[j] - p * costs[j];
        if s > best_score || (s == best_score && costs[j] < costs[best]) {
            best = j;
            best_score = s;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct IlpSolution {
    pub assignment: Vec<usize>,
    pub total_accuracy: usize,
    pub total_cost: f64,
    /// False when even the all-cheapest assignment exceeds the budget.
    pub feasible: bool,
}

/// Exact optimum by depth-first enumeration of all `k^N` assignments.
///
/// Maximizes correct answers within budget, then minimizes spend; remaining
/// ties keep the lexicographically first assignment.
pub fn brute_force_ilp(problem: &BudgetProblem) -> Result<IlpSolution, OracleError> {
    let n = problem.n_queries();
    let k = problem.n_arms();
    let space = (k as u64).checked_pow(n as u32);
    if space.is_none_or(|s| s > MAX_ENUMERATION) {
        return Err(OracleError::TooLarge { arms: k, queries: n });
    }
    let cheapest: Vec<usize> = (0..n).map(|i| problem.cheapest(i)).collect();
    let min_cost = problem.min_total_cost();
    if !problem.fits(min_cost) {
        let (acc, cost) = problem.totals(&cheapest);
        return Ok(IlpSolution { assignment: cheapest, total_accuracy: acc, total_cost: cost, feasible: false });
    }

    struct Search<'a> {
        problem: &'a BudgetProblem,
        // cheapest possible spend of queries i.. (for pruning infeasible branches)
        suffix_min: Vec<f64>,
        current: Vec<usize>,
        best: Option<(usize, f64, Vec<usize>)>,
    }

    impl Search<'_> {
        fn visit(&mut self, i: usize, acc: usize, cost: f64) {
            let p = self.problem;
            if !p.fits(cost + self.suffix_min[i]) {
                return;
            }
            if i == p.n_queries() {
                let better = match &self.best {
                    None => true,
                    Some((ba, bc, _)) => acc > *ba || (acc == *ba && cost < *bc),
                };
                if better {
                    self.best = Some((acc, cost, self.current.clone()));
                }
                return;
            }
            for j in 0..p.n_arms() {
                self.current[i] = j;
                self.visit(i + 1, acc + usize::from(p.correct(i, j)), cost + p.cost(i, j));
            }
        }
    }

    let mut suffix_min = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix_min[i] = suffix_min[i + 1] + problem.cost(i, cheapest[i]);
    }
    let mut search = Search { problem, suffix_min, current: vec![0; n], best: None };
    search.visit(0, 0, 0.0);
    let (_, _, assignment) = search.best.expect("all-cheapest assignment is feasible");
    let (total_accuracy, total_cost) = problem.totals(&assignment);
    Ok(IlpSolution { assignment, total_accuracy, total_cost, feasible: true })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianSolution {
    pub p_star: f64,
    pub assignment: Vec<usize>,
    pub total_accuracy: usize,
    pub total_cost: f64,
}

/// Upper end of the bisection interval: above it every query goes to its cheapest arm.
///
/// With 0/1 accuracies a costlier arm can out-score a cheaper one only while
/// `p * (c_dear - c_cheap) < 1`, so `1 / (smallest positive cost gap) + 1` suffices.
pub fn saturating_scaling(problem: &BudgetProblem) -> f64 {
    let mut min_gap = f64::INFINITY;
    for i in 0..problem.n_queries() {
        let mut row = problem.cost_row(i);
        row.sort_by(f64::total_cmp);
        for w in row.windows(2) {
            let gap = w[1] - w[0];
            if gap > 0.0 && gap < min_gap {
                min_gap = gap;
            }
        }
    }
    if min_gap.is_finite() {
        1.0 / min_gap + 1.0
    } else {
        1.0
    }
}

/// Smallest threshold scaling `p` whose routing fits the budget.
///
/// Bisects `p` over `[0, saturating_scaling]`. At the final breakpoint several
/// queries may be tied between a cheaper and a costlier arm; those ties are
/// resolved toward the costlier (more accurate) arm while the budget allows,
/// which keeps the result a minimizer of the Lagrangian at `p_star`.
pub fn solve_budgeted(problem: &BudgetProblem) -> Result<LagrangianSolution, OracleError> {
    let finish = |p_star: f64, assignment: Vec<usize>| {
        let (total_accuracy, total_cost) = problem.totals(&assignment);
        LagrangianSolution { p_star, assignment, total_accuracy, total_cost }
    };

    let at_zero = problem.route_all(0.0);
    if problem.fits(problem.totals(&at_zero).1) {
        return Ok(finish(0.0, at_zero));
    }
    let min_cost = problem.min_total_cost();
    if !problem.fits(min_cost) {
        return Err(OracleError::Infeasible { budget: problem.budget(), min_cost });
    }

    let mut lo = 0.0;
    let mut hi = saturating_scaling(problem);
    debug_assert!(problem.fits(problem.totals(&problem.route_all(hi)).1));
    for _ in 0..BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if problem.fits(problem.totals(&problem.route_all(mid)).1) {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    let mut assignment = problem.route_all(hi);
    let left = problem.route_all(lo);
    let (_, mut spend) = problem.totals(&assignment);

    let mut upgrades: Vec<(usize, i64, f64)> = (0..problem.n_queries())
        .filter(|&i| left[i] != assignment[i])
        .map(|i| {
            let gain = i64::from(problem.correct(i, left[i])) - i64::from(problem.correct(i, assignment[i]));
            let extra = problem.cost(i, left[i]) - problem.cost(i, assignment[i]);
            (i, gain, extra)
        })
        .filter(|(_, gain, _)| *gain > 0)
        .collect();
    upgrades.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.total_cmp(&b.2)).then(a.0.cmp(&b.0)));
    for (i, _, extra) in upgrades {
        if problem.fits(spend + extra) {
            assignment[i] = left[i];
            spend += extra;
        }
    }
    Ok(finish(hi, assignment))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    pub p: f64,
    pub q: Vec<f64>,
}

/// True iff `p * c_ij + q_i >= a_ij + 1` for every query `i` and arm `j`.
pub fn check_dual_feasibility(problem: &BudgetProblem, cert: &DualCertificate) -> Result<bool, OracleError> {
    if cert.q.len() != problem.n_queries() {
        return Err(OracleError::Shape(format!(
            "certificate has {} q entries for {} queries",
            cert.q.len(),
            problem.n_queries()
        )));
    }
    for i in 0..problem.n_queries() {
        for j in 0..problem.n_arms() {
            let a = if problem.correct(i, j) { 1.0 } else { 0.0 };
            if cert.p * problem.cost(i, j) + cert.q[i] < a + 1.0 - DUAL_TOLERANCE {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Tightest `q` for a given `p`: `q_i = max_j (a_ij + 1 - p c_ij)`.
pub fn certificate_for(problem: &BudgetProblem, p: f64) -> DualCertificate {
    let q = (0..problem.n_queries())
        .map(|i| {
            (0..problem.n_arms())
                .map(|j| f64::from(u8::from(problem.correct(i, j))) + 1.0 - p * problem.cost(i, j))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    DualCertificate { p, q }
}
