//! Segment-wise volume labeling with a nearest-neighbour texture classifier.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::slic::{oversegment_slic_gray, SlicParams, SuperpixelMap};
use super::{czekanowski_similarity, FeatureConfig, FeatureVector, FilterBank, TextureExtractor};
use crate::attributes::with_workers;
use crate::error::{dim, invalid, Error, Result};
use crate::volume::{Section2D, SectionAxis, SeismicVolume};

/// k-nearest neighbours under Czekanowski similarity.
#[derive(Clone, Debug)]
pub struct KnnClassifier {
    pub k: usize,
    features: Vec<FeatureVector>,
    labels: Vec<u8>,
}

impl KnnClassifier {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            features: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn train(&mut self, features: Vec<FeatureVector>, labels: Vec<u8>) -> Result<()> {
        if features.len() != labels.len() {
            return Err(dim(format!("{} features but {} labels", features.len(), labels.len())));
        }
        if let Some(first) = features.first() {
            if features.iter().any(|f| f.len() != first.len()) {
                return Err(dim("training features differ in length"));
            }
        }
        self.features = features;
        self.labels = labels;
        Ok(())
    }

    pub fn is_trained(&self) -> bool {
        !self.features.is_empty()
    }

    pub fn training_size(&self) -> usize {
        self.features.len()
    }

    /// Majority class of the `k` most similar training vectors. A tied vote
    /// goes to the tied class holding the single most similar neighbour.
    pub fn classify(&self, v: &FeatureVector) -> Result<u8> {
        if !self.is_trained() {
            return Err(invalid("classifier has not been trained"));
        }
        if self.k == 0 {
            return Err(invalid("k must be at least 1"));
        }
        let mut scored = self
            .features
            .iter()
            .enumerate()
            .map(|(i, f)| Ok((i, czekanowski_similarity(&v.values, &f.values)?)))
            .collect::<Result<Vec<_>>>()?;
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(self.k);
        let mut votes = [0usize; 256];
        for &(i, _) in &scored {
            votes[self.labels[i] as usize] += 1;
        }
        let top = *votes.iter().max().expect("non-empty votes");
        // neighbours are sorted, so the first one from a tied class wins
        let winner = scored
            .iter()
            .map(|&(i, _)| self.labels[i])
            .find(|&l| votes[l as usize] == top)
            .expect("a neighbour of the winning class");
        Ok(winner)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelParams {
    pub axis: SectionAxis,
    pub slic: SlicParams,
    pub features: FeatureConfig,
    pub workers: usize,
}

impl Default for LabelParams {
    fn default() -> Self {
        Self {
            axis: SectionAxis::Inline,
            slic: SlicParams::default(),
            features: FeatureConfig::default(),
            workers: 0,
        }
    }
}

/// Per-voxel class ids in volume order.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelVolume {
    pub dims: (usize, usize, usize),
    pub labels: Vec<u8>,
}

impl LabelVolume {
    pub fn get(&self, il: usize, xl: usize, s: usize) -> u8 {
        self.labels[(il * self.dims.1 + xl) * self.dims.2 + s]
    }

    /// Row-major labels of one section.
    pub fn section(&self, axis: SectionAxis, index: usize) -> Result<Vec<u8>> {
        let (ni, nx, ns) = self.dims;
        let (rows, cols, len) = match axis {
            SectionAxis::Inline => (nx, ns, ni),
            SectionAxis::Crossline => (ni, ns, nx),
            SectionAxis::TimeSlice => (ni, nx, ns),
        };
        if index >= len {
            return Err(Error::OutOfRange(format!("{axis} {index} outside 0..{len}")));
        }
        let mut out = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let (i, j, k) = SeismicVolume::section_to_volume(axis, index, r, c);
                out.push(self.get(i, j, k));
            }
        }
        Ok(out)
    }
}

/// Mirror-pads the bounding box `(r0, r1, c0, c1)` of a section into a
/// square patch of at least `min_side`, box centred.
pub fn bounding_patch(section: &Section2D, bbox: (usize, usize, usize, usize), min_side: usize) -> Section2D {
    let (r0, r1, c0, c1) = bbox;
    let (h, w) = (r1 - r0 + 1, c1 - c0 + 1);
    let side = min_side.max(h).max(w);
    let reflect = |i: isize, n: usize| {
        let period = 2 * n as isize;
        let m = i.rem_euclid(period);
        (if m >= n as isize { period - 1 - m } else { m }) as usize
    };
    let (off_r, off_c) = (((side - h) / 2) as isize, ((side - w) / 2) as isize);
    Section2D::from_fn(side, side, |a, b| {
        let r = r0 + reflect(a as isize - off_r, h);
        let c = c0 + reflect(b as isize - off_c, w);
        section.get(r, c)
    })
}

/// Labels every pixel of a section with the class of its superpixel.
pub fn label_section(
    section: &Section2D,
    classifier: &KnnClassifier,
    extractor: &dyn TextureExtractor,
    slic: &SlicParams,
) -> Result<(SuperpixelMap, Vec<u8>)> {
    if !classifier.is_trained() {
        return Err(invalid("classifier has not been trained"));
    }
    let map = oversegment_slic_gray(section, slic)?;
    let classes = map
        .bounding_boxes()
        .into_iter()
        .map(|bbox| classifier.classify(&extractor.extract(&bounding_patch(section, bbox, extractor.min_side()))?))
        .collect::<Result<Vec<u8>>>()?;
    let labels = map.labels.iter().map(|&s| classes[s]).collect();
    Ok((map, labels))
}

/// Over-segments each section along `params.axis`, classifies every
/// segment from its mirror-padded bounding patch and spreads the class to
/// the segment's voxels.
pub fn label_volume(volume: &SeismicVolume, classifier: &KnnClassifier, params: &LabelParams) -> Result<LabelVolume> {
    if !classifier.is_trained() {
        return Err(invalid("classifier has not been trained"));
    }
    let bank = FilterBank::new(params.features.clone())?;
    let len = volume.axis_len(params.axis);
    let per_section = with_workers(params.workers, || {
        (0..len)
            .into_par_iter()
            .map(|index| {
                let section = volume.extract_section(params.axis, index)?;
                Ok(label_section(&section, classifier, &bank, &params.slic)?.1)
            })
            .collect::<Result<Vec<Vec<u8>>>>()
    })?;
    let (ni, nx, ns) = volume.dims();
    let mut labels = vec![0u8; ni * nx * ns];
    let (_, cols) = volume.section_shape(params.axis);
    for (index, section) in per_section.iter().enumerate() {
        for (p, &l) in section.iter().enumerate() {
            let (i, j, k) = SeismicVolume::section_to_volume(params.axis, index, p / cols, p % cols);
            labels[(i * nx + j) * ns + k] = l;
        }
    }
    Ok(LabelVolume {
        dims: (ni, nx, ns),
        labels,
    })
}
