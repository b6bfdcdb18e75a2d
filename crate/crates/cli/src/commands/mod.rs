mod data;
mod report;
mod serve;
mod training;

use std::path::{Path, PathBuf};

use banditroute::fsutil::atomic_write_bytes;
use banditroute::{load_dataset, RewardConfig, RoutingDataset, TrainConfig};

use crate::args::{Command, TrainFlags};
use crate::error::CliError;

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::GenSynth(a) => data::gen_synth(&a),
        Command::ValidateData(a) => data::validate(&a),
        Command::Train(a) => training::train(&a),
        Command::Calibrate(a) => training::calibrate(&a),
        Command::Evaluate(a) => report::evaluate(&a),
        Command::Sweep(a) => report::sweep(&a),
        Command::Oracle(a) => report::oracle(&a),
        Command::Hetero(a) => report::hetero(&a),
        Command::Plot(a) => crate::plot::plot(&a),
        Command::Serve(a) => serve::serve(&a),
    }
}

pub(crate) fn load(path: &Path) -> Result<RoutingDataset, CliError> {
    let ds = load_dataset(path)?;
    for w in ds.warnings() {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(ds)
}

pub(crate) fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    atomic_write_bytes(path, bytes.as_ref()).map_err(|e| CliError::io(path, e))
}

/// `report.tsv` -> `report.json`.
pub(crate) fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

pub(crate) fn train_config(flags: &TrainFlags, p: f64) -> TrainConfig {
    TrainConfig {
        steps: flags.steps,
        learning_rate: flags.learning_rate,
        seed: flags.seed,
        update_mode: flags.update_mode.into(),
        epsilon: flags.epsilon,
        reward: RewardConfig { p, cost_mode: flags.cost_mode.into() },
        use_bias: !flags.no_bias,
    }
}
