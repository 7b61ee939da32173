use num_complex::Complex64;

use super::subspace::NoiseSubspace;
use crate::array::{steering_from_offsets, ArrayGeometry, SubarraySpec};
use crate::error::{Error, Result};
use crate::grid::AngularGrid;

/// Smallest pseudospectrum denominator; exact source directions of a
/// noiseless covariance are clamped here.
pub const DENOMINATOR_FLOOR: f64 = 1e-18;

/// Steering vectors of one subarray layout over a whole grid, stored
/// direction-major.
#[derive(Debug, Clone)]
pub struct SteeringTable {
    dim: usize,
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl SteeringTable {
    pub fn new(geom: &ArrayGeometry, sub: &SubarraySpec, grid: &AngularGrid) -> Result<Self> {
        if !sub.is_complete() {
            return Err(Error::MissingElementInSubarray);
        }
        if !grid.is_monotone() {
            return Err(Error::InvalidConfig("angular grid must be strictly increasing".into()));
        }
        let mut data = Vec::with_capacity(grid.rows() * grid.cols() * sub.len());
        for i in 0..grid.rows() {
            for j in 0..grid.cols() {
                data.extend(steering_from_offsets(geom, sub, grid.direction(i, j)).iter());
            }
        }
        Ok(SteeringTable {
            dim: sub.len(),
            rows: grid.rows(),
            cols: grid.cols(),
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, row: usize, col: usize) -> &[Complex64] {
        let start = (row * self.cols + col) * self.dim;
        &self.data[start..start + self.dim]
    }
}

/// MUSIC pseudospectrum on an angular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumImage {
    /// Row-major `theta_grid.len() × phi_grid.len()`.
    pub values: Vec<f64>,
    pub theta_grid: Vec<f64>,
    pub phi_grid: Vec<f64>,
    pub tx_index: usize,
    /// Directions whose denominator hit [`DENOMINATOR_FLOOR`].
    pub clamped: usize,
}

impl SpectrumImage {
    pub fn rows(&self) -> usize {
        self.theta_grid.len()
    }

    pub fn cols(&self) -> usize {
        self.phi_grid.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols() + col]
    }

    pub fn argmax(&self) -> (usize, usize) {
        let i = crate::scene::argmax(&self.values);
        (i / self.cols(), i % self.cols())
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Strict local maxima over the 8-neighbourhood, strongest first.
    pub fn local_maxima(&self) -> Vec<(usize, usize, f64)> {
        let (rows, cols) = (self.rows(), self.cols());
        let mut peaks = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let v = self.get(r, c);
                let mut is_peak = true;
                'nb: for dr in -1i64..=1 {
                    for dc in -1i64..=1 {
                        if dr == 0 && dc == 0 {
                            continue;
                        }
                        let (rr, cc) = (r as i64 + dr, c as i64 + dc);
                        if rr < 0 || cc < 0 || rr >= rows as i64 || cc >= cols as i64 {
                            continue;
                        }
                        let n = self.get(rr as usize, cc as usize);
                        // Ties resolve towards the lower index.
                        let earlier = (dr, dc) < (0, 0);
                        if n > v || (n == v && earlier) {
                            is_peak = false;
                            break 'nb;
                        }
                    }
                }
                if is_peak {
                    peaks.push((r, c, v));
                }
            }
        }
        peaks.sort_by(|a, b| b.2.total_cmp(&a.2));
        peaks
    }

    pub fn normalize_max(&mut self) {
        let m = self.max();
        if m > 0.0 && m.is_finite() {
            for v in &mut self.values {
                *v /= m;
            }
        }
    }
}

#[inline]
fn projection_energy(basis: &[Complex64], dim: usize, a: &[Complex64]) -> f64 {
    basis
        .chunks_exact(dim)
        .map(|u| {
            u.iter()
                .zip(a)
                .fold(Complex64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
                .norm_sqr()
        })
        .sum()
}

/// Evaluates `1 / (aᴴ V Vᴴ a)` over a precomputed steering table.
///
/// When the signal basis is known and smaller than the noise basis, the
/// denominator is taken as `‖a‖² − ‖Uᴴa‖²`, which is the same quantity for
/// an orthonormal eigenbasis.
pub fn music_spectrum_with(noise: &NoiseSubspace, table: &SteeringTable, grid: &AngularGrid) -> Result<SpectrumImage> {
    let dim = table.dim();
    if noise.dim() != dim {
        return Err(Error::DimensionMismatch(format!(
            "noise subspace of dimension {} for {dim}-element steering vectors",
            noise.dim()
        )));
    }
    if grid.rows() != table.rows || grid.cols() != table.cols {
        return Err(Error::DimensionMismatch("steering table does not match the grid".into()));
    }
    // Column-contiguous copies of the bases.
    let noise_cols: Vec<Complex64> = noise.basis.iter().copied().collect();
    let signal_cols: Option<Vec<Complex64>> = noise
        .signal
        .as_ref()
        .filter(|s| s.ncols() < noise.basis.ncols())
        .map(|s| s.iter().copied().collect());

    let mut values = Vec::with_capacity(table.rows * table.cols);
    let mut clamped = 0;
    for i in 0..table.rows {
        for j in 0..table.cols {
            let a = table.vector(i, j);
            let denom = match &signal_cols {
                Some(sig) => {
                    let norm: f64 = a.iter().map(|z| z.norm_sqr()).sum();
                    norm - projection_energy(sig, dim, a)
                }
                None => projection_energy(&noise_cols, dim, a),
            };
            let denom = if denom < DENOMINATOR_FLOOR {
                clamped += 1;
                DENOMINATOR_FLOOR
            } else {
                denom
            };
            values.push(1.0 / denom);
        }
    }
    Ok(SpectrumImage {
        values,
        theta_grid: grid.theta.clone(),
        phi_grid: grid.phi.clone(),
        tx_index: 0,
        clamped,
    })
}

/// MUSIC pseudospectrum of `noise` for steering vectors of `sub_ref`.
pub fn music_spectrum(
    noise: &NoiseSubspace,
    geom: &ArrayGeometry,
    sub_ref: &SubarraySpec,
    grid: &AngularGrid,
) -> Result<SpectrumImage> {
    let table = SteeringTable::new(geom, sub_ref, grid)?;
    music_spectrum_with(noise, &table, grid)
}
