use std::fmt;
use std::path::Path;

use super::MetricsArgs;
use crate::container::{TensorContainer, TensorData};
use crate::error::{Error, Result};
use crate::metrics::{silhouette_difference, ssim, to_mask, DepthImage, SsimParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub sd_percent: f64,
    pub ssim: f64,
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sd_percent={:.4}", self.sd_percent)?;
        writeln!(f, "ssim={:.6}", self.ssim)
    }
}

/// Reads a 2-D `f32` image, or the Tx-mean of a 3-D spectrum tensor.
pub fn load_image(path: &Path) -> Result<DepthImage> {
    let c = TensorContainer::read(path)?;
    let TensorData::F32(v) = &c.data else {
        return Err(Error::Container(format!("{}: images must be f32", path.display())));
    };
    match c.shape[..] {
        [_, _] => c.to_depth(),
        [rows, cols, txs] => {
            let mean = v.chunks_exact(txs).map(|px| px.iter().map(|&x| x as f64).sum::<f64>() / txs as f64);
            DepthImage::new(rows, cols, mean.collect())
        }
        _ => Err(Error::Container(format!(
            "{}: expected a 2-D image or 3-D tensor, got shape {:?}",
            path.display(),
            c.shape
        ))),
    }
}

fn block_mean(img: &DepthImage, f: usize) -> Result<DepthImage> {
    let (rows, cols) = (img.rows() / f, img.cols() / f);
    let scale = 1.0 / (f * f) as f64;
    let mut values = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let s: f64 = (0..f)
                .flat_map(|dr| (0..f).map(move |dc| (dr, dc)))
                .map(|(dr, dc)| img.get(r * f + dr, c * f + dc))
                .sum();
            values.push(s * scale);
        }
    }
    DepthImage::new(rows, cols, values)
}

/// Integer factor by which `big` must shrink to match `small`, if any.
fn common_factor(big: (usize, usize), small: (usize, usize)) -> Option<usize> {
    let f = big.0 / small.0.max(1);
    (f >= 1 && big.0 == small.0 * f && big.1 == small.1 * f).then_some(f)
}

pub fn cmd_metrics(args: &MetricsArgs) -> Result<MetricsReport> {
    let a = load_image(&args.a)?;
    let b = load_image(&args.b)?;
    let (mut ma, mut mb) = (to_mask(&a, args.threshold), to_mask(&b, args.threshold));
    let (mut ia, mut ib) = (a.clone(), b.clone());
    if a.shape() != b.shape() {
        // Bring the finer image down to the coarser grid: majority vote for
        // masks, block mean for SSIM.
        let mismatch = || {
            Error::DimensionMismatch(format!(
                "{} is {:?} and {} is {:?}; neither is an integer multiple of the other",
                args.a.display(),
                a.shape(),
                args.b.display(),
                b.shape()
            ))
        };
        if let Some(f) = common_factor(a.shape(), b.shape()) {
            ma = ma.downsample(f, (f * f).div_ceil(2))?;
            ia = block_mean(&a, f)?;
        } else if let Some(f) = common_factor(b.shape(), a.shape()) {
            mb = mb.downsample(f, (f * f).div_ceil(2))?;
            ib = block_mean(&b, f)?;
        } else {
            return Err(mismatch());
        }
    }
    let params = SsimParams {
        dynamic_range: args.ssim_range,
        ..SsimParams::default()
    };
    Ok(MetricsReport {
        sd_percent: silhouette_difference(&ma, &mb)?,
        ssim: ssim(&ia, &ib, &params)?,
    })
}
