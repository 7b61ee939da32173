//! Background and internal-leakage removal by scaled empty-room subtraction.
//!
//! Each Tx/Rx tap vector has the empty-room mean subtracted after scaling by
//! a complex gain fitted on the first `k0` taps, which only see leakage.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scene::CirFrame;

pub const DEFAULT_K0: usize = 4;

/// Empty-room captures with their cached mean.
#[derive(Debug, Clone)]
pub struct EmptyCirSet {
    frames: Vec<CirFrame>,
    mean: CirFrame,
}

impl EmptyCirSet {
    pub fn new(frames: Vec<CirFrame>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::InvalidConfig("empty-room set needs at least one frame".into()))?;
        let mut mean = CirFrame::zeros(first.tx_count, first.rx_count, first.taps, first.tap_spacing);
        for (i, f) in frames.iter().enumerate() {
            if !f.same_shape(first) {
                return Err(Error::DimensionMismatch(format!(
                    "empty frame {i} has shape {:?}, expected {:?}",
                    f.shape(),
                    first.shape()
                )));
            }
            for (m, z) in mean.data.iter_mut().zip(&f.data) {
                *m += z;
            }
        }
        let scale = 1.0 / frames.len() as f64;
        for m in mean.data.iter_mut() {
            *m *= scale;
        }
        Ok(EmptyCirSet { frames, mean })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[CirFrame] {
        &self.frames
    }

    pub fn mean(&self) -> &CirFrame {
        &self.mean
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BackgroundConfig {
    /// Leading taps that see only internal leakage.
    pub k0: usize,
    /// Fit one gain per Tx/Rx pair instead of one for the whole frame.
    pub per_pair_alpha: bool,
}

impl Default for BackgroundConfig {
    fn default() -> Self {
        BackgroundConfig {
            k0: DEFAULT_K0,
            per_pair_alpha: true,
        }
    }
}

/// Least-squares gain `α` minimizing `Σ_{k<k0} |h[k] − α·h_mean[k]|²`.
pub fn estimate_alpha(h: &[Complex64], h_mean: &[Complex64], k0: usize) -> Result<Complex64> {
    if k0 == 0 || h.len() < k0 || h_mean.len() < k0 {
        return Err(Error::DimensionMismatch(format!(
            "k0 = {k0} with tap vectors of length {} and {}",
            h.len(),
            h_mean.len()
        )));
    }
    let (num, den) = window_products(&h[..k0], &h_mean[..k0]);
    alpha_from(num, den)
}

fn window_products(h: &[Complex64], m: &[Complex64]) -> (Complex64, f64) {
    h.iter().zip(m).fold((Complex64::new(0.0, 0.0), 0.0), |(num, den), (x, r)| {
        (num + r.conj() * x, den + r.norm_sqr())
    })
}

fn alpha_from(num: Complex64, den: f64) -> Result<Complex64> {
    if !(den > 0.0) {
        return Err(Error::DegenerateEmptyReference);
    }
    Ok(num / den)
}

/// Subtracts the scaled empty-room mean from every tap vector of `frame`.
pub fn remove_background(frame: &CirFrame, empty: &EmptyCirSet, cfg: &BackgroundConfig) -> Result<CirFrame> {
    let mean = empty.mean();
    if !frame.same_shape(mean) {
        return Err(Error::DimensionMismatch(format!(
            "frame shape {:?} vs empty-room shape {:?}",
            frame.shape(),
            mean.shape()
        )));
    }
    if cfg.k0 == 0 || cfg.k0 > frame.taps {
        return Err(Error::InvalidConfig(format!(
            "k0 = {} must lie in 1..={}",
            cfg.k0, frame.taps
        )));
    }
    let taps = frame.taps;
    let k0 = cfg.k0;
    let global = if cfg.per_pair_alpha {
        None
    } else {
        let (num, den) = frame
            .data
            .chunks_exact(taps)
            .zip(mean.data.chunks_exact(taps))
            .map(|(h, m)| window_products(&h[..k0], &m[..k0]))
            .fold((Complex64::new(0.0, 0.0), 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        Some(alpha_from(num, den)?)
    };
    let mut out = frame.clone();
    out.data
        .par_chunks_mut(taps)
        .zip(mean.data.par_chunks(taps))
        .try_for_each(|(h, m)| -> Result<()> {
            let alpha = match global {
                Some(a) => a,
                None => estimate_alpha(h, m, k0)?,
            };
            for (x, r) in h.iter_mut().zip(m) {
                *x -= alpha * r;
            }
            Ok(())
        })?;
    Ok(out)
}

/// Energy of the first `k0` taps summed over all pairs.
pub fn window_energy(frame: &CirFrame, k0: usize) -> f64 {
    frame
        .data
        .chunks_exact(frame.taps)
        .flat_map(|h| h[..k0.min(frame.taps)].iter())
        .map(|z| z.norm_sqr())
        .sum()
}
