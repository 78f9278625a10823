//! Model files: a versioned JSON envelope with an integrity checksum.
//!
//! A saved file looks like
//!
//! ```json
//! { "format": "qflow-model", "version": 1, "sha256": "…", "model": { … } }
//! ```
//!
//! where `sha256` is the hex digest of the canonical JSON serialization of
//! the `model` value. Canonical here means "as re-emitted by serde_json from
//! a `Value`": object keys come out in sorted order regardless of struct
//! field order, so the digest is stable across both writers and readers.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::model::TrainedModel;
use crate::{Error, Result};

/// Identifies the file type independent of extension.
pub const MODEL_FORMAT: &str = "qflow-model";
/// Version this build writes and the only one it reads.
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    version: u32,
    sha256: String,
    model: serde_json::Value,
}

/// Hex SHA-256 of the canonical rendering of a JSON value.
fn digest_of(value: &serde_json::Value) -> String {
    let canonical = serde_json::to_string(value).expect("JSON value always serializes");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Renders a model to the versioned envelope format.
pub fn serialize_model(model: &TrainedModel) -> Result<String> {
    let value = serde_json::to_value(model)
        .map_err(|e| Error::ModelFile(format!("cannot serialize model: {e}")))?;
    let envelope = Envelope {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        sha256: digest_of(&value),
        model: value,
    };
    serde_json::to_string_pretty(&envelope)
        .map_err(|e| Error::ModelFile(format!("cannot serialize model file: {e}")))
}

/// Parses a model from envelope text, verifying format, version, and digest.
pub fn deserialize_model(text: &str) -> Result<TrainedModel> {
    let envelope: Envelope = serde_json::from_str(text)
        .map_err(|e| Error::ModelFile(format!("not a model file: {e}")))?;
    if envelope.format != MODEL_FORMAT {
        return Err(Error::ModelFile(format!(
            "unrecognized format {:?}; expected {MODEL_FORMAT:?}",
            envelope.format
        )));
    }
    if envelope.version != MODEL_VERSION {
        return Err(Error::ModelFile(format!(
            "version {} unsupported; this build reads version {MODEL_VERSION}",
            envelope.version
        )));
    }
    let actual = digest_of(&envelope.model);
    if actual != envelope.sha256 {
        return Err(Error::ModelFile(format!(
            "checksum mismatch: file declares {} but content hashes to {actual}",
            envelope.sha256
        )));
    }
    serde_json::from_value(envelope.model)
        .map_err(|e| Error::ModelFile(format!("malformed model payload: {e}")))
}

/// Writes a model file to disk.
pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    let text = serialize_model(model)?;
    fs::write(path, text)
        .map_err(|e| Error::ModelFile(format!("cannot write {}: {e}", path.display())))
}

/// Reads a model file from disk.
pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::ModelFile(format!("cannot read {}: {e}", path.display())))?;
    deserialize_model(&text)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::model::test_fixtures::small_bundle;
    use crate::model::{AlphaMatrix, CostBreakdown, TrainConfig, TrainedModel};
    use crate::qsim::test_oracle as dense;
    use crate::ErrorCategory;

    fn sample_model(seed: u64) -> TrainedModel {
        let data = small_bundle(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = dense::random_params(&data.layout, 1, &mut rng);
        TrainedModel {
            layout: data.layout.clone(),
            params,
            codebook: data.codebook.clone(),
            transitions: data.transitions.clone(),
            initial_states: data.initial_states.clone(),
            origin_means: data.origin_means.clone(),
            port_names: data.port_names.clone(),
            cost_history: vec![CostBreakdown::new(0.25, 0.75), CostBreakdown::new(0.1, 0.2)],
            config: TrainConfig::new(AlphaMatrix::uniform(2, 1.5).unwrap()),
        }
    }

    #[test]
    fn round_trip_preserves_the_model_exactly() {
        let model = sample_model(11);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&model, &path).unwrap();
        let restored = load_model(&path).unwrap();
        assert_eq!(restored, model);
    }

    #[test]
    fn saving_twice_produces_identical_bytes() {
        let model = sample_model(12);
        assert_eq!(serialize_model(&model).unwrap(), serialize_model(&model).unwrap());
    }

    #[test]
    fn envelope_carries_format_version_and_digest() {
        let text = serialize_model(&sample_model(13)).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["format"], "qflow-model");
        assert_eq!(value["version"], 1);
        let digest = value["sha256"].as_str().unwrap();
        assert_eq!(digest.len(), 64);
        assert!(digest.chars().all(|c| c.is_ascii_hexdigit()));
    }

    #[test]
    fn tampering_with_the_payload_fails_the_checksum() {
        let model = sample_model(14);
        let text = serialize_model(&model).unwrap();
        // Flip one angle inside the payload without updating the digest.
        let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
        value["model"]["origin_means"][0] = serde_json::json!(99.5);
        let tampered = serde_json::to_string(&value).unwrap();
        let err = deserialize_model(&tampered).unwrap_err();
        assert_eq!(err.category(), ErrorCategory::Data);
        assert!(err.to_string().contains("checksum"), "{err}");
    }

    #[test]
    fn future_versions_are_rejected_with_guidance() {
        let model = sample_model(15);
        let mut value: serde_json::Value =
            serde_json::from_str(&serialize_model(&model).unwrap()).unwrap();
        value["version"] = serde_json::json!(2);
        let err = deserialize_model(&serde_json::to_string(&value).unwrap()).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("version 2 unsupported"), "{message}");
        assert!(message.contains("reads version 1"), "{message}");
    }

    #[test]
    fn foreign_files_are_rejected() {
        let err = deserialize_model("{\"hello\": 1}").unwrap_err();
        assert_eq!(err.category(), ErrorCategory::Data);
        let err = deserialize_model("not json at all").unwrap_err();
        assert_eq!(err.category(), ErrorCategory::Data);
        let mut value: serde_json::Value =
            serde_json::from_str(&serialize_model(&sample_model(16)).unwrap()).unwrap();
        value["format"] = serde_json::json!("other-format");
        let err = deserialize_model(&serde_json::to_string(&value).unwrap()).unwrap_err();
        assert!(err.to_string().contains("unrecognized format"), "{err}");
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = load_model(Path::new("/nonexistent/model.json")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/model.json"), "{err}");
    }
}
