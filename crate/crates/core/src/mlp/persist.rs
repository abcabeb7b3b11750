//! JSON document for trained networks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::FORMAT_VERSION;

use super::{Architecture, Layer, MlpModel, MlpParams, OptimizerKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDocument {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows × cols`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpDocument {
    pub format_version: u32,
    pub architecture: Architecture,
    pub layers: Vec<LayerDocument>,
    pub optimizer: OptimizerKind,
    pub seed: u64,
}

impl From<&MlpModel> for MlpDocument {
    fn from(model: &MlpModel) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            architecture: model.architecture.clone(),
            layers: model
                .params
                .layers
                .iter()
                .map(|l| LayerDocument {
                    rows: l.weights.rows(),
                    cols: l.weights.cols(),
                    weights: l.weights.as_slice().to_vec(),
                    bias: l.bias.clone(),
                })
                .collect(),
            optimizer: model.optimizer,
            seed: model.seed,
        }
    }
}

impl TryFrom<MlpDocument> for MlpModel {
    type Error = Error;

    fn try_from(doc: MlpDocument) -> Result<Self> {
        if doc.format_version != FORMAT_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported model format_version {}",
                doc.format_version
            )));
        }
        doc.architecture.validate()?;
        let layers = doc
            .layers
            .into_iter()
            .map(|l| {
                Ok(Layer {
                    weights: Matrix::from_vec(l.rows, l.cols, l.weights)?,
                    bias: l.bias,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let params = MlpParams { layers };
        if !params.matches(&doc.architecture) {
            return Err(Error::InvalidParameter(
                "layer shapes do not match the architecture".into(),
            ));
        }
        if !params.is_finite() {
            return Err(Error::NonFinite("model parameters"));
        }
        Ok(MlpModel {
            architecture: doc.architecture,
            params,
            optimizer: doc.optimizer,
            seed: doc.seed,
        })
    }
}
