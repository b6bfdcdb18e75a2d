use banditroute::evalkit::{
    baseline_tsv, default_p_grid, evaluate_runs, frontier_sweep, frontier_tsv, heterogeneity_matrix, heterogeneity_tsv,
    oracle_frontier, oracle_route, oracle_tsv, single_arm_baseline, summary_json, FrontierRow,
};
use banditroute::oracle::{solve_budgeted, BudgetProblem, CostMatrix};
use banditroute::{load_model_for, RoutingDataset};
use serde_json::json;

use super::{load, summary_path, train_config, write};
use crate::args::{EvaluateArgs, HeteroArgs, OracleArgs, SweepArgs};
use crate::error::CliError;
use crate::manifest::write_manifest;

fn arm_names(ds: &RoutingDataset) -> Vec<String> {
    ds.roster().arms().iter().map(|a| a.name.clone()).collect()
}

pub fn evaluate(a: &EvaluateArgs) -> Result<(), CliError> {
    let ds = load(&a.data)?;
    let summary = summary_path(&a.out);
    if a.baseline {
        write(&a.out, baseline_tsv(&ds)?)?;
        let reports = (0..ds.n_arms()).map(|j| single_arm_baseline(j, &ds)).collect::<Result<Vec<_>, _>>()?;
        write(&summary, summary_json(&reports))?;
    } else {
        let models = a
            .model
            .iter()
            .map(|p| load_model_for(p, ds.roster(), ds.embedding_dim()))
            .collect::<Result<Vec<_>, _>>()?;
        let report = evaluate_runs(&models, &ds)?;
        println!(
            "accuracy {:.4} (std {:.4})  cost per 10k queries ${}",
            report.test_accuracy, report.accuracy_std, report.test_cost_per_10k
        );
        let row = FrontierRow { report, val_cost_per_10k: None };
        write(&a.out, frontier_tsv(std::slice::from_ref(&row)))?;
        write(&summary, summary_json(&row))?;
    }
    write_manifest(&a.out, "evaluate", a, None, &[a.out.clone(), summary])?;
    println!("wrote {}", a.out.display());
    Ok(())
}

pub fn sweep(a: &SweepArgs) -> Result<(), CliError> {
    let train_ds = load(&a.train_data)?;
    let test = load(&a.test_data)?;
    let val = a.val_data.as_deref().map(load).transpose()?;
    let grid = if a.grid.is_empty() { default_p_grid() } else { a.grid.clone() };
    let rows = frontier_sweep(&train_ds, val.as_ref(), &test, &grid, &train_config(&a.train, 0.0), a.jobs)?;
    let summary = summary_path(&a.out);
    write(&a.out, frontier_tsv(&rows))?;
    write(&summary, summary_json(&rows))?;
    write_manifest(&a.out, "sweep", a, Some(a.train.seed), &[a.out.clone(), summary])?;
    println!("wrote {} ({} rows)", a.out.display(), rows.len());
    Ok(())
}

fn assignment_tsv(ds: &RoutingDataset, assignment: &[usize]) -> String {
    let names = arm_names(ds);
    let mut out = String::from("query_id\tarm\tcorrect\tcost_picodollars\n");
    for (i, (rec, &j)) in ds.records().iter().zip(assignment).enumerate() {
        out.push_str(&format!("{}\t{}\t{}\t{}\n", rec.query_id, names[j], u8::from(rec.correct[j]), ds.spend(i, j).0));
    }
    out
}

pub fn oracle(a: &OracleArgs) -> Result<(), CliError> {
    let ds = load(&a.data)?;
    let summary = summary_path(&a.out);
    if let Some(budget) = a.budget {
        let accuracy: Vec<Vec<bool>> = ds.records().iter().map(|r| r.correct.clone()).collect();
        let costs: Vec<Vec<f64>> =
            (0..ds.len()).map(|i| (0..ds.n_arms()).map(|j| ds.spend(i, j).as_dollars()).collect()).collect();
        let problem = BudgetProblem::new(accuracy, CostMatrix::PerQuery(costs), budget)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let sol = solve_budgeted(&problem).map_err(|e| match e {
            banditroute::oracle::OracleError::Infeasible { .. } => CliError::Infeasible(e.to_string()),
            other => CliError::Data(other.to_string()),
        })?;
        write(&a.out, assignment_tsv(&ds, &sol.assignment))?;
        write(
            &summary,
            summary_json(&json!({
                "budget_usd": budget,
                "p_star": sol.p_star,
                "correct": sol.total_accuracy,
                "accuracy": sol.total_accuracy as f64 / ds.len().max(1) as f64,
                "total_cost_usd": sol.total_cost,
            })),
        )?;
        println!("p* = {}  correct {}/{}  spend ${}", sol.p_star, sol.total_accuracy, ds.len(), sol.total_cost);
    } else if !a.grid.is_empty() {
        let rows = oracle_frontier(&ds, &a.grid, a.cost_mode.into())?;
        write(&a.out, oracle_tsv(&rows, &arm_names(&ds)))?;
        let brief: Vec<_> = rows
            .iter()
            .map(|r| json!({ "p": r.p, "cost_per_10k": r.cost_per_10k, "accuracy": r.accuracy, "selections": r.selections }))
            .collect();
        write(&summary, summary_json(&brief))?;
    } else {
        let p = a.p.unwrap_or(0.0);
        let row = oracle_route(&ds, p, a.cost_mode.into())?;
        write(&a.out, assignment_tsv(&ds, &row.assignment))?;
        write(
            &summary,
            summary_json(&json!({
                "p": row.p,
                "cost_per_10k": row.cost_per_10k,
                "accuracy": row.accuracy,
                "spend_picodollars": row.spend,
                "selections": row.selections,
            })),
        )?;
        println!("p = {p}  accuracy {:.4}  cost per 10k queries ${}", row.accuracy, row.cost_per_10k);
    }
    write_manifest(&a.out, "oracle", a, None, &[a.out.clone(), summary])?;
    println!("wrote {}", a.out.display());
    Ok(())
}

pub fn hetero(a: &HeteroArgs) -> Result<(), CliError> {
    let ds = load(&a.data)?;
    let h = heterogeneity_matrix(&ds);
    write(&a.out, heterogeneity_tsv(&h, &arm_names(&ds)))?;
    write_manifest(&a.out, "hetero", a, None, std::slice::from_ref(&a.out))?;
    println!("wrote {}", a.out.display());
    Ok(())
}
