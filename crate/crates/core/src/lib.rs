//! Synthetic 60 GHz radar imaging: array geometry, CIR simulation,
//! background removal, MUSIC spectra and image metrics, plus the tensor
//! container and command-line front-end that hand data to the learning
//! stage.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod array;
pub mod cli;
pub mod container;
pub mod error;
pub mod grid;
pub mod manifest;
pub mod metrics;
pub mod phantom;
pub mod preprocess;
pub mod scene;
pub mod spectrum;
mod textfmt;

pub use error::{Error, Result};
