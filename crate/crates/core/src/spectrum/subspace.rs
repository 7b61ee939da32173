use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::covariance::CovarianceMatrix;
use crate::error::{Error, Result};

/// Tolerance on `|R − Rᴴ|` accepted before decomposition.
const HERMITIAN_TOL: f64 = 1e-10;

/// How the number of sources (signal-subspace dimension) is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceOrderMode {
    Fixed(usize),
    /// Largest ratio between consecutive sorted eigenvalues.
    EigenGap,
    /// Smallest order holding `1 − ε` of the signal energy above the noise
    /// floor.
    EnergyThreshold(f64),
}

impl Default for SourceOrderMode {
    fn default() -> Self {
        SourceOrderMode::EnergyThreshold(0.1)
    }
}

impl std::str::FromStr for SourceOrderMode {
    type Err = Error;

    /// `fixed:M`, `eigengap`, or `energy:ε`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unknown order mode `{s}` (fixed:M | eigengap | energy:EPS)"));
        match s.split_once(':') {
            None if s == "eigengap" => Ok(SourceOrderMode::EigenGap),
            Some(("fixed", m)) => Ok(SourceOrderMode::Fixed(m.parse().map_err(|_| bad())?)),
            Some(("energy", e)) => {
                let eps: f64 = e.parse().map_err(|_| bad())?;
                if !(eps > 0.0 && eps < 1.0) {
                    return Err(Error::InvalidConfig(format!("energy threshold must lie in (0,1), got {eps}")));
                }
                Ok(SourceOrderMode::EnergyThreshold(eps))
            }
            _ => Err(bad()),
        }
    }
}

impl std::fmt::Display for SourceOrderMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SourceOrderMode::Fixed(m) => write!(f, "fixed:{m}"),
            SourceOrderMode::EigenGap => write!(f, "eigengap"),
            SourceOrderMode::EnergyThreshold(e) => write!(f, "energy:{e}"),
        }
    }
}

/// Eigenpairs of a Hermitian matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `i` pairs with `values[i]`.
    pub vectors: DMatrix<Complex64>,
}

impl HermitianEigen {
    pub fn new(matrix: &DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix is not square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let eig = SymmetricEigen::new(matrix.clone());
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_columns(
            &order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>(),
        );
        Ok(HermitianEigen { values, vectors })
    }

    /// `Σ λᵢ vᵢ vᵢᴴ`.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &l) in self.values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(l);
        }
        let out = &scaled * self.vectors.adjoint();
        debug_assert_eq!(out.nrows(), n);
        out
    }
}

/// Orthonormal basis of the noise subspace, and of the signal subspace when
/// it came from an eigendecomposition.
#[derive(Debug, Clone)]
pub struct NoiseSubspace {
    /// `n × (n − M)`.
    pub basis: DMatrix<Complex64>,
    /// `n × M`, empty when unknown.
    pub signal: Option<DMatrix<Complex64>>,
    pub order: usize,
    pub eigenvalues: Vec<f64>,
}

impl NoiseSubspace {
    /// Wraps an arbitrary orthonormal noise basis.
    pub fn from_basis(basis: DMatrix<Complex64>) -> Self {
        let order = basis.nrows() - basis.ncols();
        NoiseSubspace {
            basis,
            signal: None,
            order,
            eigenvalues: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn projector(&self) -> DMatrix<Complex64> {
        &self.basis * self.basis.adjoint()
    }
}

/// Picks the source order from descending eigenvalues.
///
/// For the energy threshold, the noise floor is the mean of the smallest
/// quarter of eigenvalues; only the excess above `floor_factor` times that
/// floor counts as signal energy. A covariance with no eigenvalue above the
/// scaled floor has order 0.
pub fn source_order(values: &[f64], mode: SourceOrderMode, floor_factor: f64) -> Result<usize> {
    let n = values.len();
    let order = match mode {
        SourceOrderMode::Fixed(m) => m,
        SourceOrderMode::EigenGap => {
            let top = values[0].max(0.0);
            let floor = (top * 1e-12).max(f64::MIN_POSITIVE);
            let clamped: Vec<f64> = values.iter().map(|&l| l.max(floor)).collect();
            (1..n)
                .map(|m| (m, (clamped[m - 1] / clamped[m]).ln()))
                .fold((0, f64::NEG_INFINITY), |best, (m, g)| if g > best.1 { (m, g) } else { best })
                .0
        }
        SourceOrderMode::EnergyThreshold(eps) => {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::InvalidConfig(format!("energy threshold must lie in (0,1), got {eps}")));
            }
            let tail = n.div_ceil(4);
            let floor = values[n - tail..].iter().map(|l| l.max(0.0)).sum::<f64>() / tail as f64;
            let excess: Vec<f64> = values.iter().map(|&l| (l - floor_factor * floor).max(0.0)).collect();
            let total: f64 = excess.iter().sum();
            if total <= 0.0 {
                0
            } else {
                let mut acc = 0.0;
                let mut m = 0;
                while m < n && acc < (1.0 - eps) * total {
                    acc += excess[m];
                    m += 1;
                }
                m.min(n - 1)
            }
        }
    };
    if order >= n {
        return Err(Error::InvalidSourceOrder { order, dim: n });
    }
    Ok(order)
}

/// Noise subspace of `r`: eigenvectors of the `n − M` smallest eigenvalues.
pub fn noise_subspace(r: &CovarianceMatrix, mode: SourceOrderMode, floor_factor: f64) -> Result<NoiseSubspace> {
    if r.hermitian_error() > HERMITIAN_TOL {
        return Err(Error::InvalidConfig("covariance is not Hermitian".into()));
    }
    let eig = HermitianEigen::new(&r.matrix)?;
    let n = eig.values.len();
    let order = source_order(&eig.values, mode, floor_factor)?;
    Ok(NoiseSubspace {
        basis: eig.vectors.columns(order, n - order).into_owned(),
        signal: Some(eig.vectors.columns(0, order).into_owned()),
        order,
        eigenvalues: eig.values,
    })
}
