//! Seismic structural interpretation: attributes, fault and salt-dome
//! workflows, and weakly-supervised labeling.

pub mod error;
pub mod fault;
pub mod attributes;
pub mod labeling;
pub mod linalg;
pub mod multilinear;
pub mod salt;
pub mod volume;

pub use error::{Error, Result};
pub use volume::{Section2D, SectionAxis, SeismicVolume};
