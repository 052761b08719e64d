use std::path::Path;

use earpiece_core::textgen::{read_corpus, NGramModel};
use serde::{Deserialize, Serialize};

use crate::GatewayError;

/// What a trained model was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub name: String,
    pub order: usize,
    pub alpha: f64,
    pub lines: usize,
    /// Word and punctuation tokens, boundary markers excluded.
    pub tokens: usize,
    /// Distinct tokens, boundary marker excluded.
    pub vocab: usize,
}

impl ModelDescriptor {
    pub fn of(model: &NGramModel) -> Self {
        let lines = model.corpus().lines;
        Self {
            name: model.corpus().name.clone(),
            order: model.order(),
            alpha: model.alpha(),
            lines,
            // every line contributes its tokens plus the closing boundary
            tokens: model.token_events() as usize - lines,
            vocab: model.vocabulary().len() - 1,
        }
    }
}

pub fn train_corpus(path: &Path, order: usize, alpha: f64) -> Result<(NGramModel, ModelDescriptor), GatewayError> {
    let lines = read_corpus(path).map_err(|e| GatewayError::Data(e.to_string()))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".into());
    let model = NGramModel::train_named(&name, &lines, order, alpha)
        .map_err(|e| GatewayError::Data(format!("{}: {e}", path.display())))?;
    let descriptor = ModelDescriptor::of(&model);
    Ok((model, descriptor))
}

/// Trains on a corpus file and writes the model to `out`.
pub fn ingest_corpus(path: &Path, order: usize, alpha: f64, out: &Path) -> Result<ModelDescriptor, GatewayError> {
    let (model, descriptor) = train_corpus(path, order, alpha)?;
    model.save(out).map_err(|e| GatewayError::Io(e.to_string()))?;
    Ok(descriptor)
}
