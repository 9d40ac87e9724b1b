//! Model files are a single JSON document:
//!
//! ```text
//! { "format": "retweet-guard-model", "version": 1, "model": { ... } }
//! ```
//!
//! `model` is the serde form of [`TrainedModel`]. Readers accept any version
//! up to [`MODEL_VERSION`] and reject newer files before touching `model`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelError, TrainedModel};

pub const MODEL_FORMAT: &str = "retweet-guard-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize)]
struct EnvelopeOut<'a> {
    format: &'a str,
    version: u32,
    model: &'a TrainedModel,
}

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
}

#[derive(Deserialize)]
struct EnvelopeIn {
    model: TrainedModel,
}

pub fn write_model(model: &TrainedModel, mut writer: impl Write) -> Result<(), ModelError> {
    let envelope = EnvelopeOut {
        format: MODEL_FORMAT,
        version: MODEL_VERSION,
        model,
    };
    serde_json::to_writer(&mut writer, &envelope).map_err(|e| ModelError::Corrupt(e.to_string()))?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}

pub fn read_model(mut reader: impl Read) -> Result<TrainedModel, ModelError> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| ModelError::Corrupt(e.to_string()))?;
    let header: Header = serde_json::from_str(&text).map_err(|e| ModelError::Corrupt(e.to_string()))?;
    if header.format != MODEL_FORMAT {
        return Err(ModelError::Corrupt(format!("unexpected format {:?}", header.format)));
    }
    if header.version > MODEL_VERSION {
        return Err(ModelError::Version {
            found: header.version,
            supported: MODEL_VERSION,
        });
    }
    let envelope: EnvelopeIn = serde_json::from_str(&text).map_err(|e| ModelError::Corrupt(e.to_string()))?;
    let model = envelope.model;
    if model.scaler.mean.len() != model.scaler.std.len() || model.classes.len() < 2 {
        return Err(ModelError::Corrupt("inconsistent model dimensions".into()));
    }
    Ok(model)
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<(), ModelError> {
    write_model(model, BufWriter::new(File::create(path)?))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel, ModelError> {
    read_model(BufReader::new(File::open(path)?))
}
