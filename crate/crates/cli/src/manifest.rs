//! Run manifests: `<out>.manifest.json` next to each primary artifact.
//!
//! A manifest records the subcommand and every effective flag, so
//! `banditroute --config <manifest>` replays the run.

use std::path::{Path, PathBuf};

use banditroute::dsfile::DATASET_VERSION;
use banditroute::fsutil::atomic_write_bytes;
use banditroute::modelfile::MODEL_VERSION;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub fn manifest_path(out: &Path) -> PathBuf {
    let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    out.with_file_name(format!("{name}.manifest.json"))
}

/// sha256 of the canonical (sorted-key) JSON of the arguments.
pub fn config_hash(args: &Value) -> String {
    hex::encode(Sha256::digest(serde_json::to_vec(args).expect("json value serializes")))
}

pub fn write_manifest<A: Serialize>(
    out: &Path,
    command: &str,
    args: &A,
    seed: Option<u64>,
    outputs: &[PathBuf],
) -> Result<PathBuf, CliError> {
    let args = serde_json::to_value(args).map_err(|e| CliError::Usage(e.to_string()))?;
    let manifest = json!({
        "command": command,
        "args": args,
        "seed": seed,
        "config_hash": config_hash(&args),
        "versions": {
            "banditroute": env!("CARGO_PKG_VERSION"),
            "dataset_format": DATASET_VERSION,
            "model_format": MODEL_VERSION,
        },
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    let path = manifest_path(out);
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    atomic_write_bytes(&path, &bytes).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_sits_next_to_output() {
        assert_eq!(manifest_path(Path::new("out/m.json")), PathBuf::from("out/m.json.manifest.json"));
        assert_eq!(manifest_path(Path::new("data/")), PathBuf::from("data.manifest.json"));
    }

    #[test]
    fn hash_ignores_key_order() {
        let a: Value = serde_json::from_str(r#"{"x":1,"y":[1,2]}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"y":[1,2],"x":1}"#).unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_ne!(config_hash(&a), config_hash(&json!({"x": 2, "y": [1, 2]})));
    }
}
