//! Canonical parameter serialization.
//!
//! Parameters travel and persist as a JSON document: `model_config`, then one
//! entry per layer with a `shape` array `[fan_in, fan_out]`, weights as a flat
//! row-major value array, and the bias vector. JSON floats are emitted with
//! shortest round-trip formatting, so every finite `f64` survives a
//! serialize/deserialize cycle bit-exactly. Non-finite values are rejected on
//! both paths. Field names are part of the protocol (see `docs/PROTOCOL.md`).

use super::{check_shape_chain, Layer, ModelConfig, ModelParams};
use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDto {
    /// `[fan_in, fan_out]`.
    pub shape: [usize; 2],
    /// Row-major weight values, length `fan_in * fan_out`.
    pub weights: Vec<f64>,
    /// Bias values, length `fan_out`.
    pub bias: Vec<f64>,
}

/// Serializable form of [`ModelParams`]; also the in-body params payload of
/// the wire protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsDto {
    pub model_config: ModelConfig,
    pub layers: Vec<LayerDto>,
}

impl From<&ModelParams> for ParamsDto {
    fn from(params: &ModelParams) -> Self {
        let layers = params
            .layers
            .iter()
            .map(|l| LayerDto {
                shape: [l.weights.nrows(), l.weights.ncols()],
                weights: l.weights.iter().copied().collect(),
                bias: l.bias.to_vec(),
            })
            .collect();
        ParamsDto {
            model_config: params.config,
            layers,
        }
    }
}

impl ParamsDto {
    /// Validates shapes and finiteness, then rebuilds [`ModelParams`].
    pub fn into_params(self) -> Result<ModelParams> {
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, dto) in self.layers.into_iter().enumerate() {
            let [rows, cols] = dto.shape;
            if dto.weights.len() != rows * cols {
                return Err(Error::Shape(format!(
                    "layer {i}: shape {rows}x{cols} needs {} weights, payload has {}",
                    rows * cols,
                    dto.weights.len()
                )));
            }
            if dto.bias.len() != cols {
                return Err(Error::Shape(format!(
                    "layer {i}: expected {} bias values, payload has {}",
                    cols,
                    dto.bias.len()
                )));
            }
            let weights = Array2::from_shape_vec((rows, cols), dto.weights)
                .map_err(|e| Error::Shape(e.to_string()))?;
            layers.push(Layer {
                weights,
                bias: Array1::from_vec(dto.bias),
            });
        }
        check_shape_chain(&self.model_config, &layers)?;
        let params = ModelParams {
            config: self.model_config,
            layers,
        };
        params.validate()?;
        Ok(params)
    }
}

/// Serializes parameters to the canonical JSON text form.
pub fn serialize_params(params: &ModelParams) -> Result<String> {
    params.validate()?;
    Ok(serde_json::to_string_pretty(&ParamsDto::from(params))?)
}

/// Parses the canonical text form back into validated parameters.
pub fn deserialize_params(text: &str) -> Result<ModelParams> {
    let dto: ParamsDto =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("params payload: {e}")))?;
    dto.into_params()
}

pub fn save_params(params: &ModelParams, path: &Path) -> Result<()> {
    std::fs::write(path, serialize_params(params)?)?;
    Ok(())
}

pub fn load_params(path: &Path) -> Result<ModelParams> {
    let text = std::fs::read_to_string(path)?;
    deserialize_params(&text)
}
