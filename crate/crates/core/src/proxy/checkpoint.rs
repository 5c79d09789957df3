use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{DenseLayer, ProxyModel};
use crate::error::{Error, Result};
use crate::types::HeadKind;

pub const CHECKPOINT_FORMAT: &str = "latwalk-proxy/1";

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    input_dim: usize,
    heads: Vec<HeadKind>,
    dropout_rate: f64,
    layers: Vec<DenseLayer>,
}

/// Writes `model` as JSON. Floats use shortest round-trip formatting, so
/// loading the file restores every weight bit-for-bit.
pub fn save_checkpoint<W: Write>(model: &ProxyModel, mut writer: W) -> Result<()> {
    let file = CheckpointFile {
        format: CHECKPOINT_FORMAT.to_string(),
        input_dim: model.input_dim(),
        heads: model.heads().to_vec(),
        dropout_rate: model.dropout_rate(),
        layers: model.layers().to_vec(),
    };
    serde_json::to_writer(&mut writer, &file)?;
    writer.write_all(b"\n")?;
    Ok(())
}

pub fn load_checkpoint<R: Read>(reader: R) -> Result<ProxyModel> {
    let file: CheckpointFile = serde_json::from_reader(reader)?;
    if file.format != CHECKPOINT_FORMAT {
        return Err(Error::Format(format!("unknown checkpoint format {:?}", file.format)));
    }
    let model = ProxyModel::from_layers(file.layers, file.heads, file.dropout_rate)?;
    if model.input_dim() != file.input_dim {
        return Err(Error::Shape {
            expected: file.input_dim,
            actual: model.input_dim(),
        });
    }
    Ok(model)
}
