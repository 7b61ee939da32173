use crate::array::Direction;
use crate::error::{Error, Result};

/// Side length of a spectrum image.
pub const SPECTRUM_SIZE: usize = 128;
/// Side length of a ground-truth depth image.
pub const DEPTH_SIZE: usize = 256;
/// Default half-extent of both angular axes.
pub const DEFAULT_EXTENT_DEG: f64 = 60.0;

/// Uniform elevation × azimuth sampling grid. Row `i` of an image on this
/// grid corresponds to `theta[i]`, column `j` to `phi[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularGrid {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
}

impl AngularGrid {
    /// `rows × cols` points spanning `[-extent, extent]` (radians) inclusive
    /// on both axes.
    pub fn uniform(rows: usize, cols: usize, extent: f64) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::InvalidConfig("angular grid needs at least 2 points per axis".into()));
        }
        if !(extent > 0.0 && extent < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidConfig(format!(
                "grid extent must lie in (0, 90) degrees, got {}",
                extent.to_degrees()
            )));
        }
        Ok(AngularGrid {
            theta: linspace(-extent, extent, rows),
            phi: linspace(-extent, extent, cols),
        })
    }

    pub fn spectrum_default() -> Self {
        Self::uniform(SPECTRUM_SIZE, SPECTRUM_SIZE, DEFAULT_EXTENT_DEG.to_radians()).unwrap()
    }

    pub fn depth_default() -> Self {
        Self::uniform(DEPTH_SIZE, DEPTH_SIZE, DEFAULT_EXTENT_DEG.to_radians()).unwrap()
    }

    pub fn rows(&self) -> usize {
        self.theta.len()
    }

    pub fn cols(&self) -> usize {
        self.phi.len()
    }

    pub fn direction(&self, row: usize, col: usize) -> Direction {
        Direction {
            elevation: self.theta[row],
            azimuth: self.phi[col],
        }
    }

    pub fn theta_step(&self) -> f64 {
        self.theta[1] - self.theta[0]
    }

    pub fn phi_step(&self) -> f64 {
        self.phi[1] - self.phi[0]
    }

    /// Grid cell nearest to `dir`.
    pub fn nearest_cell(&self, dir: Direction) -> (usize, usize) {
        (nearest(&self.theta, dir.elevation), nearest(&self.phi, dir.azimuth))
    }

    pub fn is_monotone(&self) -> bool {
        self.theta.windows(2).all(|w| w[1] > w[0]) && self.phi.windows(2).all(|w| w[1] > w[0])
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(|i| a + step * i as f64).collect()
}

fn nearest(axis: &[f64], x: f64) -> usize {
    let step = axis[1] - axis[0];
    ((x - axis[0]) / step).round().clamp(0.0, (axis.len() - 1) as f64) as usize
}
