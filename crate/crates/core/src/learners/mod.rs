//! Base learners: CART decision trees, random forests and the ν one-class
//! SVM.

mod forest;
mod ocsvm;
mod tree;

pub use forest::{forest_votes, predict_forest, train_forest, ForestConfig, ForestModel};
pub use ocsvm::{gamma_scale, rbf, score_ocsvm, train_ocsvm, OcsvmScore, OneClassModel};
pub use tree::{DecisionTree, TreeConfig};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::{Error, Result};

pub const MODEL_FORMAT: &str = "myoselect-model";
pub const MODEL_VERSION: u32 = 1;

/// Versioned JSON envelope for persisted models.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile<T> {
    pub format: String,
    pub version: u32,
    pub kind: String,
    pub model: T,
}

pub fn to_model_json<T: Serialize>(kind: &str, model: &T) -> Result<String> {
    Ok(serde_json::to_string(&ModelFile {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        kind: kind.to_string(),
        model,
    })?)
}

pub fn from_model_json<T: DeserializeOwned>(kind: &str, text: &str) -> Result<T> {
    let file: ModelFile<T> = serde_json::from_str(text)?;
    if file.format != MODEL_FORMAT || file.version != MODEL_VERSION || file.kind != kind {
        return Err(Error::InvalidArgument(format!(
            "expected {MODEL_FORMAT} v{MODEL_VERSION} {kind}, found {} v{} {}",
            file.format, file.version, file.kind
        )));
    }
    Ok(file.model)
}

pub(crate) fn check_matrix(x: &[Vec<f64>]) -> Result<usize> {
    let d = x
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::InvalidArgument("empty training matrix".into()))?;
    for (i, row) in x.iter().enumerate() {
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature row {i}")));
        }
    }
    Ok(d)
}

/// Index of the largest count, lowest index on ties.
pub(crate) fn argmax_lowest<T: PartialOrd + Copy>(counts: &[T]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate().skip(1) {
        if c > counts[best] {
            best = i;
        }
    }
    best
}
