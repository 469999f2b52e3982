use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::{NetworkArchitecture, NetworkParameters};
use super::train::{Provenance, TrainedModel};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "ksn-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    layer_sizes: Vec<usize>,
    parameters: NetworkParameters,
    provenance: Provenance,
}

/// JSON with shortest round-trip float formatting, so parameters survive
/// save/load bit for bit.
pub fn model_to_json(model: &TrainedModel) -> String {
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        layer_sizes: model.architecture.layer_sizes().to_vec(),
        parameters: model.parameters.clone(),
        provenance: model.provenance.clone(),
    };
    serde_json::to_string(&file).expect("model serializes")
}

pub fn model_from_json(text: &str) -> Result<TrainedModel> {
    let file: ModelFile = serde_json::from_str(text)?;
    if file.format != MODEL_FORMAT {
        return Err(Error::Format(format!("not a model file: format `{}`", file.format)));
    }
    if file.version != MODEL_VERSION {
        return Err(Error::Format(format!(
            "model version {} unsupported (expected {MODEL_VERSION})",
            file.version
        )));
    }
    let architecture = NetworkArchitecture::new(file.layer_sizes)?;
    file.parameters.validate(&architecture)?;
    Ok(TrainedModel {
        architecture,
        parameters: file.parameters,
        provenance: file.provenance,
    })
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, model_to_json(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    model_from_json(&std::fs::read_to_string(path)?)
}
