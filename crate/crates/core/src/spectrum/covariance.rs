use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::array::SubarraySpec;
use crate::error::{Error, Result};
use crate::scene::CirFrame;

/// Sample covariance of subarray snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    pub matrix: DMatrix<Complex64>,
    pub snapshot_count: usize,
}

impl CovarianceMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Largest `|R − Rᴴ|` entry.
    pub fn hermitian_error(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }
}

/// One length-16 Rx snapshot per subarray, read from `frame` at
/// `(tx, tap)`. Entry order follows the subarray's row-major cells.
pub fn subarray_snapshots(
    frame: &CirFrame,
    tx: usize,
    tap: usize,
    subs: &[SubarraySpec],
) -> Result<Vec<DVector<Complex64>>> {
    if tx >= frame.tx_count {
        return Err(Error::IndexOutOfRange(format!("tx {tx} of {}", frame.tx_count)));
    }
    if tap >= frame.taps {
        return Err(Error::IndexOutOfRange(format!("tap {tap} of {}", frame.taps)));
    }
    subs.iter()
        .map(|sub| {
            let idx = sub.complete_indices()?;
            if let Some(&bad) = idx.iter().find(|&&i| i >= frame.rx_count) {
                return Err(Error::IndexOutOfRange(format!("rx {bad} of {}", frame.rx_count)));
            }
            Ok(DVector::from_iterator(idx.len(), idx.iter().map(|&rx| frame.get(tx, rx, tap))))
        })
        .collect()
}

/// `R = (1/L) Σ hᵢ hᵢᴴ` over all snapshots.
pub fn covariance(snapshots: &[DVector<Complex64>]) -> Result<CovarianceMatrix> {
    let first = snapshots.first().ok_or(Error::EmptySnapshots)?;
    let n = first.len();
    if let Some(bad) = snapshots.iter().find(|s| s.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "snapshot lengths {n} and {}",
            bad.len()
        )));
    }
    let stacked = DMatrix::from_columns(snapshots);
    let mut r = &stacked * stacked.adjoint();
    r /= Complex64::new(snapshots.len() as f64, 0.0);
    // Exact Hermitian symmetry; the product leaves rounding-level asymmetry.
    for i in 0..n {
        r[(i, i)].im = 0.0;
        for j in (i + 1)..n {
            let avg = (r[(i, j)] + r[(j, i)].conj()) * 0.5;
            r[(i, j)] = avg;
            r[(j, i)] = avg.conj();
        }
    }
    Ok(CovarianceMatrix {
        matrix: r,
        snapshot_count: snapshots.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{enumerate_subarrays, ArrayGeometry};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn full_frame(value: impl Fn(usize, usize, usize) -> Complex64) -> CirFrame {
        let mut f = CirFrame::zeros(36, 36, 8, 0.28e-9);
        for tx in 0..36 {
            for rx in 0..36 {
                for k in 0..8 {
                    let i = f.index(tx, rx, k);
                    f.data[i] = value(tx, rx, k);
                }
            }
        }
        f
    }

    #[test]
    fn ones_cube_gives_ones_snapshots() {
        let g = ArrayGeometry::full(6, 6);
        let subs = enumerate_subarrays(&g);
        let f = full_frame(|_, _, _| c(1.0, 0.0));
        let snaps = subarray_snapshots(&f, 3, 5, &subs).unwrap();
        assert_eq!(snaps.len(), 9);
        assert!(snaps.iter().all(|s| s.len() == 16 && s.iter().all(|z| *z == c(1.0, 0.0))));
    }

    #[test]
    fn single_element_touches_only_its_windows() {
        let g = ArrayGeometry::full(6, 6);
        let subs = enumerate_subarrays(&g);
        let f = full_frame(|_, rx, _| if rx == 0 { c(2.0, 0.0) } else { c(0.0, 0.0) });
        let snaps = subarray_snapshots(&f, 0, 0, &subs).unwrap();
        for (s, sub) in snaps.iter().zip(&subs) {
            let nonzero = s.iter().any(|z| z.norm() > 0.0);
            assert_eq!(nonzero, sub.contains_cell(0, 0));
        }
        assert_eq!(snaps.iter().filter(|s| s.iter().any(|z| z.norm() > 0.0)).count(), 1);
    }

    #[test]
    fn snapshot_count_follows_enumeration() {
        let g = ArrayGeometry::default();
        let subs = enumerate_subarrays(&g);
        let f = CirFrame::zeros(32, 32, 4, 0.28e-9);
        assert_eq!(subarray_snapshots(&f, 0, 0, &subs).unwrap().len(), subs.len());
    }

    #[test]
    fn out_of_range_indices() {
        let g = ArrayGeometry::full(6, 6);
        let subs = enumerate_subarrays(&g);
        let f = full_frame(|_, _, _| c(1.0, 0.0));
        assert!(subarray_snapshots(&f, 36, 0, &subs).is_err());
        assert!(subarray_snapshots(&f, 0, 8, &subs).is_err());
    }

    #[test]
    fn single_snapshot_is_outer_product() {
        let h = DVector::from_vec((0..16).map(|i| c(i as f64, 1.0 - i as f64)).collect());
        let r = covariance(std::slice::from_ref(&h)).unwrap();
        let outer = &h * h.adjoint();
        assert!((&r.matrix - &outer).norm() < 1e-12);
        let eig = nalgebra::SymmetricEigen::new(r.matrix.clone());
        let big = eig.eigenvalues.iter().filter(|&&l| l.abs() > 1e-8 * h.norm_squared()).count();
        assert_eq!(big, 1);
    }

    #[test]
    fn orthonormal_basis_gives_scaled_identity() {
        let snaps: Vec<_> = (0..16)
            .map(|i| {
                let mut v = DVector::from_element(16, c(0.0, 0.0));
                v[i] = c(0.0, 1.0);
                v
            })
            .collect();
        let r = covariance(&snaps).unwrap();
        let expected = DMatrix::<Complex64>::identity(16, 16) / c(16.0, 0.0);
        assert!((&r.matrix - &expected).norm() < 1e-15);
    }

    #[test]
    fn random_covariance_is_hermitian_psd_with_matching_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let snaps: Vec<_> = (0..23)
            .map(|_| DVector::from_iterator(16, (0..16).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))))
            .collect();
        let r = covariance(&snaps).unwrap();
        assert_eq!(r.hermitian_error(), 0.0);
        let eig = nalgebra::SymmetricEigen::new(r.matrix.clone());
        assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-12));
        // Direct recomputation of trace = mean squared norm.
        let msn: f64 = snaps.iter().map(|s| s.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum::<f64>() / 23.0;
        assert!((r.trace() - msn).abs() < 1e-12 * msn);
        // Entry-wise recomputation.
        for i in 0..16 {
            for j in 0..16 {
                let direct: Complex64 = snaps.iter().map(|s| s[i] * s[j].conj()).sum::<Complex64>() / 23.0;
                assert!((direct - r.matrix[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn empty_snapshot_list_errors() {
        assert!(matches!(covariance(&[]), Err(Error::EmptySnapshots)));
    }
}
