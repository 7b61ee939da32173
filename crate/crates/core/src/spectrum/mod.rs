//! MUSIC spatial pseudospectra from cleaned CIR frames.
//!
//! Snapshots are 4×4 Rx subarray vectors at one tap. Pooling them over
//! subarray windows, frames and transmitters restores the covariance rank
//! that coherent reflections from one body destroy.

pub mod config;
pub mod covariance;
pub mod music;
pub mod subspace;
pub mod tensor;

pub use config::{MusicConfig, Reduction, Smoothing};
pub use covariance::{covariance, subarray_snapshots, CovarianceMatrix};
pub use music::{music_spectrum, music_spectrum_with, SpectrumImage, SteeringTable, DENOMINATOR_FLOOR};
pub use subspace::{noise_subspace, source_order, HermitianEigen, NoiseSubspace, SourceOrderMode};
pub use tensor::{build_spectrum_tensor, smoothing_subarrays, tap_pseudospectrum, SpectrumTensor};
