use banditroute::evalkit::{arm_spend, calibrate_p, calibration_grid, BudgetSpec};
use banditroute::{save_model, train as fit};
use serde_json::json;

use super::{load, train_config, write};
use crate::args::{CalibrateArgs, TrainArgs};
use crate::error::CliError;
use crate::manifest::write_manifest;

pub fn train(a: &TrainArgs) -> Result<(), CliError> {
    let ds = load(&a.data)?;
    let model = fit(&ds, &train_config(&a.train, a.p))?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    save_model(&model, &a.out)?;
    write_manifest(&a.out, "train", a, Some(a.train.seed), std::slice::from_ref(&a.out))?;
    println!("wrote {}", a.out.display());
    Ok(())
}

pub fn calibrate(a: &CalibrateArgs) -> Result<(), CliError> {
    let train_ds = load(&a.train_data)?;
    let val = load(&a.val_data)?;
    let budget = match (&a.budget, &a.budget_arm) {
        (Some(b), None) => BudgetSpec::from_dollars(*b, a.slack)?,
        (None, Some(name)) => {
            let arm = val
                .roster()
                .by_name(name)
                .ok_or_else(|| CliError::Usage(format!("--budget-arm: no arm named {name:?}")))?;
            BudgetSpec::new(arm_spend(&val, arm.arm_id), a.slack)?
        }
        _ => return Err(CliError::Usage("give exactly one of --budget or --budget-arm".into())),
    };
    let config = train_config(&a.train, 0.0);
    let grid = if a.grid.is_empty() { calibration_grid(&train_ds, config.reward.cost_mode) } else { a.grid.clone() };
    let cal = calibrate_p(&train_ds, &val, &budget, &config, &grid, a.jobs)?;

    let mut outputs = vec![a.out.clone()];
    if let Some(dir) = &a.models_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for (r, m) in cal.models.iter().enumerate() {
            let path = dir.join(format!("run{r}.model.json"));
            save_model(m, &path)?;
            outputs.push(path);
        }
    }
    let summary = json!({
        "p_star": cal.p_star,
        "budget_usd": budget.budget.as_dollars(),
        "slack": budget.slack,
        "allowed_picodollars": budget.allowed(),
        "mean_val_cost_usd": cal.mean_val_spend(),
        "val_spend_picodollars": cal.val_spend,
        "trace": cal.trace,
    });
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    write(&a.out, text)?;
    write_manifest(&a.out, "calibrate", a, Some(a.train.seed), &outputs)?;
    println!(
        "p* = {}  mean validation cost ${:.6} (budget ${:.6})",
        cal.p_star,
        cal.mean_val_spend(),
        budget.allowed().as_dollars()
    );
    Ok(())
}
