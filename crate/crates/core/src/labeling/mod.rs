//! Weakly-supervised labeling: texture features, similarity retrieval,
//! superpixels, segment classification and NMF pixel annotation.

mod classify;
mod dataset;
mod features;
mod nmf;
mod slic;
mod sparsity;
pub mod textures;

pub use classify::{bounding_patch, label_section, label_volume, KnnClassifier, LabelParams, LabelVolume};
pub use dataset::{read_dataset, write_dataset, AugmentedDataset, PatchSource};
pub use features::{
    extract_features, texture_feature_vector, FeatureConfig, FilterBank, TextureExtractor,
};
pub use nmf::{
    nmf_pixel_annotation, nmf_pixel_annotation_observed, pixel_labels, sonmf_objective, InitKind, NmfModel, NmfParams,
    NmfResult,
};
pub use slic::{oversegment_slic_gray, SlicParams, SuperpixelMap};
pub use sparsity::{hoyer_sparsity, l1_for_sparsity, project_to_sparsity};

use crate::error::{dim, invalid, Error, Result};

/// Nonnegative texture descriptor of one image.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    /// Which extractor (and configuration) produced the values.
    pub extractor_id: String,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, extractor_id: impl Into<String>) -> Result<Self> {
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(invalid("feature values must be finite and nonnegative"));
        }
        Ok(Self {
            values,
            extractor_id: extractor_id.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `1 − ‖v1 − v2‖₁ / ‖v1 + v2‖₁`; two zero vectors count as identical.
pub fn czekanowski_similarity(v1: &[f64], v2: &[f64]) -> Result<f64> {
    if v1.len() != v2.len() {
        return Err(dim(format!("feature lengths {} and {} differ", v1.len(), v2.len())));
    }
    let mut diff = 0.0;
    let mut sum = 0.0;
    for (&a, &b) in v1.iter().zip(v2) {
        if !(a >= 0.0 && b >= 0.0) {
            return Err(invalid("Czekanowski similarity needs nonnegative features"));
        }
        diff += (a - b).abs();
        sum += a + b;
    }
    if sum == 0.0 {
        return Ok(1.0);
    }
    // (s − d)/s is 1 − d/s with one rounding fewer
    Ok(((sum - diff) / sum).clamp(0.0, 1.0))
}

/// The `k` corpus entries most similar to `exemplar`, best first; equal
/// scores keep corpus order.
pub fn retrieve_similar(exemplar: &FeatureVector, corpus: &[FeatureVector], k: usize) -> Result<Vec<(usize, f64)>> {
    if corpus.is_empty() {
        return Err(Error::Empty("retrieval corpus is empty".into()));
    }
    if k > corpus.len() {
        return Err(invalid(format!("cannot retrieve {k} of {} images", corpus.len())));
    }
    let mut scored = corpus
        .iter()
        .enumerate()
        .map(|(i, v)| Ok((i, czekanowski_similarity(&exemplar.values, &v.values)?)))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored)
}
