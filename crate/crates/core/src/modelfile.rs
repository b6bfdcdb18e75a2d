//! Versioned JSON model container.
//!
//! Holds the format tag and version, embedding width, the roster with its
//! fingerprint, per-arm weights and biases, and an echo of the training config.
//! Output is byte-deterministic for a given model.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::fsutil::atomic_write;
use crate::policy::{PolicyError, PolicyModel, TrainConfig};
use crate::roster::{ArmSpec, Roster};

pub const MODEL_FORMAT: &str = "banditroute.model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    embedding_dim: usize,
    roster_fingerprint: String,
    arms: Vec<ArmSpec>,
    weights: Vec<Vec<f64>>,
    bias: Option<Vec<f64>>,
    train_config: TrainConfig,
}

fn format_err(path: &Path, reason: impl Into<String>) -> PolicyError {
    PolicyError::Format { path: path.display().to_string(), reason: reason.into() }
}

pub fn model_to_bytes(model: &PolicyModel) -> Vec<u8> {
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        embedding_dim: model.embedding_dim(),
        roster_fingerprint: model.roster().fingerprint(),
        arms: model.roster().specs(),
        weights: model.weights().to_vec(),
        bias: model.bias().map(<[f64]>::to_vec),
        train_config: model.train_config().clone(),
    };
    let mut out = serde_json::to_vec(&file).expect("model serializes");
    out.push(b'\n');
    out
}

pub fn save_model(model: &PolicyModel, path: impl AsRef<Path>) -> Result<(), PolicyError> {
    let path = path.as_ref();
    let bytes = model_to_bytes(model);
    atomic_write(path, |w| w.write_all(&bytes))
        .map_err(|source| PolicyError::Io { path: path.display().to_string(), source })
}

pub fn model_from_bytes(bytes: &[u8], path: &Path) -> Result<PolicyModel, PolicyError> {
    let file: ModelFile = serde_json::from_slice(bytes).map_err(|e| format_err(path, e.to_string()))?;
    if file.format != MODEL_FORMAT {
        return Err(format_err(path, format!("unexpected format {:?}", file.format)));
    }
    if file.version != MODEL_VERSION {
        return Err(format_err(path, format!("unsupported version {}", file.version)));
    }
    let roster = Roster::new(file.arms).map_err(|e| format_err(path, e.to_string()))?;
    if roster.fingerprint() != file.roster_fingerprint {
        return Err(format_err(path, "roster fingerprint does not match stored arms"));
    }
    PolicyModel::from_parts(roster, file.embedding_dim, file.weights, file.bias, file.train_config)
        .map_err(|e| format_err(path, e.to_string()))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<PolicyModel, PolicyError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| PolicyError::Io { path: path.display().to_string(), source })?;
    model_from_bytes(&bytes, path)
}

/// Loads a model and checks it against the roster and width it will serve.
pub fn load_model_for(
    path: impl AsRef<Path>,
    roster: &Roster,
    embedding_dim: usize,
) -> Result<PolicyModel, PolicyError> {
    let model = load_model(path)?;
    model.ensure_compatible(roster, embedding_dim)?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{QueryRecord, RoutingDataset};
    use crate::policy::{train, UpdateMode};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dataset(arms: usize) -> RoutingDataset {
        let pairs: Vec<(String, String)> = (0..arms).map(|i| (format!("m{i}"), format!("0.00{}", i + 1))).collect();
        let roster = Roster::from_pairs(&pairs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let recs = (0..30)
            .map(|i| QueryRecord {
                query_id: format!("q{i}"),
                text: None,
                embedding: (0..4).map(|_| rng.random_range(-1.0f32..1.0)).collect(),
                correct: (0..arms).map(|_| rng.random_bool(0.5)).collect(),
                tokens: vec![30; arms],
            })
            .collect();
        RoutingDataset::new(roster, 4, recs).unwrap()
    }

    fn trained() -> PolicyModel {
        let cfg = TrainConfig { update_mode: UpdateMode::FullInformation, steps: 10, ..TrainConfig::default() };
        train(&dataset(3), &cfg).unwrap()
    }

    #[test]
    fn round_trip_preserves_predictions() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        let m = trained();
        save_model(&m, &p).unwrap();
        let back = load_model(&p).unwrap();
        assert_eq!(back, m);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let x: Vec<f32> = (0..4).map(|_| rng.random_range(-3.0f32..3.0)).collect();
            assert_eq!(back.predict_q(&x).unwrap(), m.predict_q(&x).unwrap());
        }
    }

    #[test]
    fn serialization_is_byte_stable() {
        assert_eq!(model_to_bytes(&trained()), model_to_bytes(&trained()));
    }

    #[test]
    fn arm_count_mismatch_is_compatibility_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        save_model(&trained(), &p).unwrap();
        let other = dataset(4);
        let err = load_model_for(&p, other.roster(), other.embedding_dim()).unwrap_err();
        assert!(matches!(err, PolicyError::Incompatible(_)), "{err}");
        let same = dataset(3);
        load_model_for(&p, same.roster(), 4).unwrap();
    }

    #[test]
    fn truncated_file_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        let bytes = model_to_bytes(&trained());
        fs::write(&p, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(load_model(&p), Err(PolicyError::Format { .. })));
        fs::write(&p, b"").unwrap();
        assert!(matches!(load_model(&p), Err(PolicyError::Format { .. })));
    }

    #[test]
    fn tampered_roster_is_rejected() {
        let text = String::from_utf8(model_to_bytes(&trained())).unwrap();
        let tampered = text.replace("\"m0\"", "\"mX\"");
        assert!(model_from_bytes(tampered.as_bytes(), Path::new("x")).is_err());
    }
}
