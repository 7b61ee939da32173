//! Silhouette difference and SSIM.

use crate::error::{Error, Result};

/// Row-major real image. Depth images use 0 for background.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DepthImage {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DepthImage {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} image",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("image contains non-finite values".into()));
        }
        Ok(DepthImage { rows, cols, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.values[row * self.cols + col] = v;
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(usize, usize) -> f64) -> DepthImage {
        let mut out = DepthImage::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(r, c, f(r, c));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SilhouetteMask {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl SilhouetteMask {
    pub fn new(rows: usize, cols: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} bits for a {rows}x{cols} mask",
                bits.len()
            )));
        }
        Ok(SilhouetteMask { rows, cols, bits })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.cols + col]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn not(&self) -> SilhouetteMask {
        SilhouetteMask {
            rows: self.rows,
            cols: self.cols,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// Pools `factor × factor` blocks; a block is set when at least
    /// `min_count` of its pixels are.
    pub fn downsample(&self, factor: usize, min_count: usize) -> Result<SilhouetteMask> {
        if factor == 0 || !self.rows.is_multiple_of(factor) || !self.cols.is_multiple_of(factor) {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} mask is not divisible by {factor}",
                self.rows, self.cols
            )));
        }
        let (rows, cols) = (self.rows / factor, self.cols / factor);
        let mut bits = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let n = (0..factor)
                    .flat_map(|dr| (0..factor).map(move |dc| (dr, dc)))
                    .filter(|&(dr, dc)| self.get(r * factor + dr, c * factor + dc))
                    .count();
                bits.push(n >= min_count);
            }
        }
        Ok(SilhouetteMask { rows, cols, bits })
    }
}

/// Binarizes an image: a pixel is foreground when its value exceeds
/// `threshold`.
pub fn to_mask(img: &DepthImage, threshold: f64) -> SilhouetteMask {
    SilhouetteMask {
        rows: img.rows,
        cols: img.cols,
        bits: img.values.iter().map(|&v| v > threshold).collect(),
    }
}

/// Percentage of pixels where the two masks disagree.
pub fn silhouette_difference(a: &SilhouetteMask, b: &SilhouetteMask) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "mask shapes {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let diff = a.bits.iter().zip(&b.bits).filter(|(x, y)| x != y).count();
    Ok(100.0 * diff as f64 / a.bits.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    /// Gaussian window size in pixels (odd).
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    /// Dynamic range L. When `None`, taken as the value span of both images
    /// together (1 if both are the same constant).
    pub dynamic_range: Option<f64>,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: None,
        }
    }
}

fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let half = (size as f64 - 1.0) / 2.0;
    let w: Vec<f64> = (0..size)
        .map(|i| (-((i as f64 - half).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Separable "valid" filtering; output is `(rows−w+1) × (cols−w+1)`.
fn filter_valid(src: &[f64], rows: usize, cols: usize, kernel: &[f64]) -> Vec<f64> {
    let w = kernel.len();
    let oc = cols - w + 1;
    let or = rows - w + 1;
    let mut horiz = vec![0.0; rows * oc];
    for r in 0..rows {
        let row = &src[r * cols..(r + 1) * cols];
        for c in 0..oc {
            horiz[r * oc + c] = kernel.iter().zip(&row[c..c + w]).map(|(k, v)| k * v).sum();
        }
    }
    let mut out = vec![0.0; or * oc];
    for r in 0..or {
        for c in 0..oc {
            out[r * oc + c] = (0..w).map(|i| kernel[i] * horiz[(r + i) * oc + c]).sum();
        }
    }
    out
}

/// Mean structural similarity over all full Gaussian windows.
pub fn ssim(x: &DepthImage, y: &DepthImage, params: &SsimParams) -> Result<f64> {
    if x.shape() != y.shape() {
        return Err(Error::DimensionMismatch(format!(
            "image shapes {:?} and {:?}",
            x.shape(),
            y.shape()
        )));
    }
    let (rows, cols) = x.shape();
    if params.window == 0 || params.window > rows || params.window > cols {
        return Err(Error::InvalidConfig(format!(
            "SSIM window {} does not fit a {rows}x{cols} image",
            params.window
        )));
    }
    let range = match params.dynamic_range {
        Some(l) => l,
        None => {
            let span = x.max().max(y.max()) - x.min().min(y.min());
            if span > 0.0 {
                span
            } else {
                1.0
            }
        }
    };
    if !(range > 0.0 && range.is_finite()) {
        return Err(Error::InvalidConfig(format!("SSIM dynamic range must be positive, got {range}")));
    }
    let c1 = (params.k1 * range).powi(2);
    let c2 = (params.k2 * range).powi(2);
    let kernel = gaussian_kernel(params.window, params.sigma);

    let xx: Vec<f64> = x.values.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.values.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.values.iter().zip(&y.values).map(|(a, b)| a * b).collect();
    let mu_x = filter_valid(&x.values, rows, cols, &kernel);
    let mu_y = filter_valid(&y.values, rows, cols, &kernel);
    let e_xx = filter_valid(&xx, rows, cols, &kernel);
    let e_yy = filter_valid(&yy, rows, cols, &kernel);
    let e_xy = filter_valid(&xy, rows, cols, &kernel);

    let n = mu_x.len();
    let mut total = 0.0;
    for i in 0..n {
        let mxy = mu_x[i] * mu_y[i];
        let mxx = mu_x[i] * mu_x[i];
        let myy = mu_y[i] * mu_y[i];
        let var_x = e_xx[i] - mxx;
        let var_y = e_yy[i] - myy;
        let cov = e_xy[i] - mxy;
        let num = (2.0 * mxy + c1) * (2.0 * cov + c2);
        let den = (mxx + myy + c1) * (var_x + var_y + c2);
        total += num / den;
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(rng: &mut ChaCha8Rng, n: usize) -> DepthImage {
        DepthImage::new(n, n, (0..n * n).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    fn random_mask(rng: &mut ChaCha8Rng, n: usize) -> SilhouetteMask {
        SilhouetteMask::new(n, n, (0..n * n).map(|_| rng.random::<bool>()).collect()).unwrap()
    }

    #[test]
    fn zero_image_gives_empty_mask() {
        let m = to_mask(&DepthImage::zeros(256, 256), 0.0);
        assert_eq!(m.count(), 0);
    }

    #[test]
    fn low_threshold_gives_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let img = DepthImage::new(
            16,
            16,
            (0..256).map(|i| if i % 3 == 0 { 0.0 } else { 0.5 + rng.random::<f64>() }).collect(),
        )
        .unwrap();
        let m = to_mask(&img, 0.25);
        for (b, v) in m.bits().iter().zip(img.values()) {
            assert_eq!(*b, *v > 0.0);
        }
    }

    #[test]
    fn raising_threshold_never_adds_bits() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let img = random_image(&mut rng, 32);
            let ts: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
            for w in ts.windows(2) {
                let lo = to_mask(&img, w[0]);
                let hi = to_mask(&img, w[1]);
                assert!(hi.bits().iter().zip(lo.bits()).all(|(h, l)| !*h || *l));
            }
        }
    }

    #[test]
    fn sd_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_mask(&mut rng, 256);
        assert_eq!(silhouette_difference(&a, &a).unwrap(), 0.0);
        assert_eq!(silhouette_difference(&a, &a.not()).unwrap(), 100.0);
    }

    #[test]
    fn sd_of_3277_pixels_is_five_percent() {
        let a = SilhouetteMask::new(256, 256, vec![false; 65536]).unwrap();
        let b = SilhouetteMask::new(256, 256, (0..65536).map(|i| i < 3277).collect()).unwrap();
        let sd = silhouette_difference(&a, &b).unwrap();
        assert!((sd - 5.0).abs() < 0.01, "{sd}");
    }

    #[test]
    fn sd_shape_mismatch() {
        let a = SilhouetteMask::new(4, 4, vec![false; 16]).unwrap();
        let b = SilhouetteMask::new(2, 8, vec![false; 16]).unwrap();
        assert!(silhouette_difference(&a, &b).is_err());
    }

    #[test]
    fn downsample_majority() {
        let m = SilhouetteMask::new(2, 4, vec![true, true, true, false, false, false, false, false]).unwrap();
        let d = m.downsample(2, 2).unwrap();
        assert_eq!(d.bits(), &[true, false]);
        let d = m.downsample(2, 1).unwrap();
        assert_eq!(d.bits(), &[true, true]);
    }

    #[test]
    fn ssim_identity_is_exactly_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_image(&mut rng, 64);
        assert_eq!(ssim(&x, &x, &SsimParams::default()).unwrap(), 1.0);
    }

    #[test]
    fn ssim_constant_images_closed_form() {
        let (c, l) = (0.3, 2.0);
        let x = DepthImage::new(32, 32, vec![c; 1024]).unwrap();
        let y = DepthImage::new(32, 32, vec![c + l; 1024]).unwrap();
        let p = SsimParams { dynamic_range: Some(l), ..Default::default() };
        let c1 = (0.01 * l).powi(2);
        let expected = (2.0 * c * (c + l) + c1) / (c * c + (c + l) * (c + l) + c1);
        let got = ssim(&x, &y, &p).unwrap();
        assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
    }

    #[test]
    fn ssim_symmetric_for_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x = random_image(&mut rng, 24);
            let y = random_image(&mut rng, 24);
            let a = ssim(&x, &y, &SsimParams::default()).unwrap();
            let b = ssim(&y, &x, &SsimParams::default()).unwrap();
            assert!((a - b).abs() <= 1e-12);
            assert!((-1.0..=1.0).contains(&a));
            assert!(a < 1.0);
        }
    }

    #[test]
    fn ssim_rejects_bad_inputs() {
        let x = DepthImage::zeros(16, 16);
        let y = DepthImage::zeros(8, 32);
        assert!(ssim(&x, &y, &SsimParams::default()).is_err());
        let p = SsimParams { dynamic_range: Some(0.0), ..Default::default() };
        assert!(ssim(&x, &x, &p).is_err());
    }

    #[test]
    fn gaussian_kernel_is_normalized_and_symmetric() {
        let k = gaussian_kernel(11, 1.5);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for i in 0..5 {
            assert_eq!(k[i], k[10 - i]);
        }
    }

    proptest! {
        #[test]
        fn sd_is_permutation_invariant(bits_a in proptest::collection::vec(any::<bool>(), 64),
                                       bits_b in proptest::collection::vec(any::<bool>(), 64),
                                       seed in any::<u64>()) {
            let a = SilhouetteMask::new(8, 8, bits_a.clone()).unwrap();
            let b = SilhouetteMask::new(8, 8, bits_b.clone()).unwrap();
            let mut perm: Vec<usize> = (0..64).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..64).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            let pa = SilhouetteMask::new(8, 8, perm.iter().map(|&i| bits_a[i]).collect()).unwrap();
            let pb = SilhouetteMask::new(8, 8, perm.iter().map(|&i| bits_b[i]).collect()).unwrap();
            prop_assert_eq!(silhouette_difference(&a, &b).unwrap(), silhouette_difference(&pa, &pb).unwrap());
        }
    }
}
