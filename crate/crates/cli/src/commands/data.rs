use banditroute::replay::{gen_synthetic, SynthSpec};
use banditroute::{save_dataset, save_dataset_with_sidecar, Price};
use serde_json::json;

use super::load;
use crate::args::{GenSynthArgs, ValidateArgs};
use crate::error::CliError;
use crate::manifest::write_manifest;

pub fn gen_synth(a: &GenSynthArgs) -> Result<(), CliError> {
    let prices = a
        .prices
        .iter()
        .map(|p| p.trim().parse::<Price>().map_err(|e| CliError::Usage(format!("--prices: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if a.train == 0 || a.test == 0 {
        return Err(CliError::Usage("--train and --test must be > 0".into()));
    }
    let spec = SynthSpec {
        n_arms: a.arms,
        n_clusters: a.clusters,
        dim: a.dim,
        n_records: a.train + a.val + a.test,
        noise: a.noise,
        prices,
        seed: a.seed,
    };
    let ds = gen_synthetic(&spec).map_err(|e| CliError::Usage(e.to_string()))?;
    std::fs::create_dir_all(&a.out).map_err(|e| CliError::io(&a.out, e))?;

    let mut outputs = Vec::new();
    let mut start = 0;
    for (name, n) in [("train", a.train), ("val", a.val), ("test", a.test)] {
        if n == 0 {
            continue;
        }
        let part = ds.subset(&(start..start + n).collect::<Vec<_>>());
        start += n;
        let path = a.out.join(format!("{name}.jsonl"));
        if a.sidecar {
            let sidecar = format!("{name}.f32");
            save_dataset_with_sidecar(&part, &path, &sidecar)?;
            outputs.push(path.clone());
            outputs.push(a.out.join(sidecar));
        } else {
            save_dataset(&part, &path)?;
            outputs.push(path.clone());
        }
        println!("wrote {} ({n} records)", path.display());
    }
    write_manifest(&a.out, "gen-synth", a, Some(a.seed), &outputs)?;
    Ok(())
}

pub fn validate(a: &ValidateArgs) -> Result<(), CliError> {
    let ds = load(&a.data)?;
    let n = ds.len();
    let arms: Vec<_> = ds
        .roster()
        .arms()
        .iter()
        .map(|arm| {
            let correct = ds.correct_count(arm.arm_id);
            let tokens: u64 = ds.records().iter().map(|r| r.tokens[arm.arm_id]).sum();
            json!({
                "name": arm.name,
                "price_per_1k": arm.price_per_1k.to_string(),
                "normalized_cost": arm.normalized_cost,
                "accuracy": if n == 0 { 0.0 } else { correct as f64 / n as f64 },
                "mean_tokens": if n == 0 { 0.0 } else { tokens as f64 / n as f64 },
            })
        })
        .collect();
    let summary = json!({
        "path": a.data.display().to_string(),
        "records": n,
        "embedding_dim": ds.embedding_dim(),
        "encoder": ds.encoder(),
        "roster_fingerprint": ds.roster().fingerprint(),
        "arms": arms,
        "warnings": ds.warnings(),
    });
    if a.json {
        println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    } else {
        println!("{}: ok, {n} records, dim {}", a.data.display(), ds.embedding_dim());
        for arm in summary["arms"].as_array().into_iter().flatten() {
            println!(
                "  {:<24} price {:>10}  accuracy {:.4}  mean tokens {:.1}",
                arm["name"].as_str().unwrap_or_default(),
                arm["price_per_1k"].as_str().unwrap_or_default(),
                arm["accuracy"].as_f64().unwrap_or_default(),
                arm["mean_tokens"].as_f64().unwrap_or_default()
            );
        }
    }
    Ok(())
}
