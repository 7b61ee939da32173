use rayon::prelude::*;

use super::config::{MusicConfig, Reduction};
use super::covariance::{covariance, subarray_snapshots};
use super::music::{music_spectrum_with, SpectrumImage, SteeringTable};
use super::subspace::noise_subspace;
use crate::array::{enumerate_subarrays, ArrayGeometry, SubarraySpec};
use crate::error::{Error, Result};
use crate::grid::AngularGrid;
use crate::preprocess::{remove_background, EmptyCirSet};
use crate::scene::CirFrame;

/// Stack of per-Tx spectrum images, each scaled to a maximum of 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTensor {
    pub images: Vec<SpectrumImage>,
    pub reduction: Reduction,
}

impl SpectrumTensor {
    /// `[theta, phi, tx]`.
    pub fn shape(&self) -> [usize; 3] {
        let first = &self.images[0];
        [first.rows(), first.cols(), self.images.len()]
    }

    /// Pixelwise mean over all Tx images.
    pub fn mean_image(&self) -> SpectrumImage {
        let mut out = self.images[0].clone();
        let n = self.images.len() as f64;
        for (k, v) in out.values.iter_mut().enumerate() {
            *v = self.images.iter().map(|img| img.values[k]).sum::<f64>() / n;
        }
        out.clamped = self.images.iter().map(|img| img.clamped).sum();
        out
    }

    /// Values in `[theta][phi][tx]` row-major order.
    pub fn to_f32(&self) -> Vec<f32> {
        let [rows, cols, txs] = self.shape();
        let mut out = Vec::with_capacity(rows * cols * txs);
        for k in 0..rows * cols {
            out.extend(self.images.iter().map(|img| img.values[k] as f32));
        }
        out
    }

    /// Inverse of [`SpectrumTensor::to_f32`] on the given grid.
    pub fn from_f32(values: &[f32], grid: &AngularGrid, txs: usize, reduction: Reduction) -> Result<Self> {
        let pixels = grid.rows() * grid.cols();
        if txs == 0 || values.len() != pixels * txs {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {}x{}x{txs} tensor",
                values.len(),
                grid.rows(),
                grid.cols()
            )));
        }
        let images = (0..txs)
            .map(|t| SpectrumImage {
                values: (0..pixels).map(|k| values[k * txs + t] as f64).collect(),
                theta_grid: grid.theta.clone(),
                phi_grid: grid.phi.clone(),
                tx_index: t,
                clamped: 0,
            })
            .collect();
        Ok(SpectrumTensor { images, reduction })
    }
}

fn check_frames(frames: &[CirFrame], empty: &EmptyCirSet, geom: &ArrayGeometry) -> Result<()> {
    let first = frames
        .first()
        .ok_or_else(|| Error::InvalidConfig("at least one frame is required".into()))?;
    for (i, f) in frames.iter().enumerate() {
        if !f.same_shape(first) {
            return Err(Error::DimensionMismatch(format!(
                "frame {i} has shape {:?}, frame 0 has {:?}",
                f.shape(),
                first.shape()
            )));
        }
    }
    if !empty.mean().same_shape(first) {
        return Err(Error::DimensionMismatch(format!(
            "empty-room frames have shape {:?}, target frames {:?}",
            empty.mean().shape(),
            first.shape()
        )));
    }
    if first.rx_count != geom.active_count() {
        return Err(Error::DimensionMismatch(format!(
            "frames carry {} Rx elements, geometry has {}",
            first.rx_count,
            geom.active_count()
        )));
    }
    Ok(())
}

/// Subarrays used for snapshots: every complete window, or just the first.
pub fn smoothing_subarrays(geom: &ArrayGeometry, spatial: bool) -> Result<Vec<SubarraySpec>> {
    let mut subs = enumerate_subarrays(geom);
    if subs.is_empty() {
        return Err(Error::MissingElementInSubarray);
    }
    if !spatial {
        subs.truncate(1);
    }
    Ok(subs)
}

/// Raw pseudospectrum values at one tap, snapshots pooled over `frames`,
/// the transmitters in `txs` and `subs`.
pub fn tap_pseudospectrum(
    frames: &[CirFrame],
    txs: &[usize],
    tap: usize,
    subs: &[SubarraySpec],
    table: &SteeringTable,
    grid: &AngularGrid,
    cfg: &MusicConfig,
) -> Result<SpectrumImage> {
    let mut snaps = Vec::with_capacity(frames.len() * txs.len() * subs.len());
    for f in frames {
        for &tx in txs {
            snaps.extend(subarray_snapshots(f, tx, tap, subs)?);
        }
    }
    let r = covariance(&snaps)?;
    let noise = noise_subspace(&r, cfg.order, cfg.noise_floor_factor)?;
    music_spectrum_with(&noise, table, grid)
}

/// Background removal, smoothed MUSIC over the range gate and per-Tx
/// reduction into one image per transmitter.
///
/// With joint transmitter smoothing every Tx shares one covariance per tap,
/// so all images are equal.
pub fn build_spectrum_tensor(
    frames: &[CirFrame],
    empty: &EmptyCirSet,
    geom: &ArrayGeometry,
    cfg: &MusicConfig,
) -> Result<SpectrumTensor> {
    geom.validate()?;
    check_frames(frames, empty, geom)?;
    let first = &frames[0];
    cfg.validate(first.taps)?;
    let grid = cfg.grid()?;

    let used = if cfg.smoothing.temporal {
        frames.len().min(cfg.temporal_frames)
    } else {
        1
    };
    let cleaned: Vec<CirFrame> = frames[..used]
        .iter()
        .map(|f| remove_background(f, empty, &cfg.background))
        .collect::<Result<_>>()?;

    let subs = smoothing_subarrays(geom, cfg.smoothing.spatial)?;
    let table = SteeringTable::new(geom, &subs[0], &grid)?;
    let taps: Vec<usize> = (cfg.range_gate.0..=cfg.range_gate.1).collect();
    let per_tap = first.tap_spacing * crate::array::SPEED_OF_LIGHT / 2.0;
    let far = cfg.range_gate.1 as f64 * per_tap;

    let groups: Vec<Vec<usize>> = if cfg.smoothing.jts {
        vec![(0..first.tx_count).collect()]
    } else {
        (0..first.tx_count).map(|t| vec![t]).collect()
    };

    let mut reduced = Vec::with_capacity(groups.len());
    for txs in &groups {
        let spectra: Vec<SpectrumImage> = taps
            .par_iter()
            .map(|&tap| tap_pseudospectrum(&cleaned, txs, tap, &subs, &table, &grid, cfg))
            .collect::<Result<_>>()?;
        let mut img = spectra[0].clone();
        img.clamped = spectra.iter().map(|s| s.clamped).sum();
        for k in 0..img.values.len() {
            let (mut best, mut best_tap) = (f64::NEG_INFINITY, taps[0]);
            for (s, &tap) in spectra.iter().zip(&taps) {
                if s.values[k] > best {
                    best = s.values[k];
                    best_tap = tap;
                }
            }
            img.values[k] = match cfg.reduction {
                Reduction::MaxPower => best,
                // Scaled by the far edge of the gate so the image stays in [0,1].
                Reduction::DepthOfPeak => best_tap as f64 * per_tap / far,
            };
        }
        if cfg.reduction == Reduction::MaxPower {
            img.normalize_max();
        }
        reduced.push(img);
    }

    let images = (0..first.tx_count)
        .map(|t| {
            let mut img = reduced[if cfg.smoothing.jts { 0 } else { t }].clone();
            img.tx_index = t;
            img
        })
        .collect();
    Ok(SpectrumTensor {
        images,
        reduction: cfg.reduction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{synthesize_cir, CirParams, Deposition, Scatterer, Scene};
    use num_complex::Complex64;

    fn small_cfg() -> MusicConfig {
        MusicConfig {
            grid_size: 32,
            temporal_frames: 2,
            ..MusicConfig::default()
        }
    }

    fn frames(scene: &Scene, geom: &ArrayGeometry, n: u64, seed: u64) -> Vec<CirFrame> {
        let p = CirParams {
            deposition: Deposition::Sinc,
            ..CirParams::default()
        };
        (0..n).map(|i| synthesize_cir(scene, geom, &p, seed + i).unwrap()).collect()
    }

    fn backdrop() -> Scene {
        Scene {
            clutter: vec![Scatterer::new([2.2, 0.4, 0.1], Complex64::new(0.5, 0.2))],
            leakage_profile: vec![Complex64::new(2.0, 0.0), Complex64::new(0.7, -0.3), Complex64::new(0.1, 0.1)],
            noise_power: 1e-4,
            ..Scene::default()
        }
    }

    #[test]
    fn tensor_shape_range_and_peak() {
        let geom = ArrayGeometry::default();
        let empty = EmptyCirSet::new(frames(&backdrop(), &geom, 2, 100)).unwrap();
        let mut scene = backdrop();
        scene.targets.push(Scatterer::new([1.5, 0.0, 0.0], Complex64::new(1.0, 0.0)));
        let cfg = small_cfg();
        let t = build_spectrum_tensor(&frames(&scene, &geom, 2, 7), &empty, &geom, &cfg).unwrap();
        assert_eq!(t.shape(), [32, 32, 32]);
        assert!(t.to_f32().iter().all(|&v| (0.0..=1.0).contains(&v)));
        let grid = cfg.grid().unwrap();
        let truth = grid.nearest_cell(crate::array::Direction::boresight());
        let (r, c) = t.mean_image().argmax();
        assert!(r.abs_diff(truth.0) <= 1 && c.abs_diff(truth.1) <= 1, "{:?} vs {truth:?}", (r, c));
    }

    #[test]
    fn f32_layout_round_trips() {
        let geom = ArrayGeometry::default();
        let empty = EmptyCirSet::new(frames(&backdrop(), &geom, 1, 1)).unwrap();
        let mut scene = backdrop();
        scene.targets.push(Scatterer::new([1.6, 0.3, -0.2], Complex64::new(1.0, 0.0)));
        let cfg = MusicConfig {
            smoothing: super::super::config::Smoothing {
                jts: false,
                ..Default::default()
            },
            grid_size: 16,
            range_gate: (36, 40),
            ..small_cfg()
        };
        let t = build_spectrum_tensor(&frames(&scene, &geom, 1, 3), &empty, &geom, &cfg).unwrap();
        let back = SpectrumTensor::from_f32(&t.to_f32(), &cfg.grid().unwrap(), 32, cfg.reduction).unwrap();
        for (a, b) in t.images.iter().zip(&back.images) {
            assert_eq!(a.tx_index, b.tx_index);
            for (x, y) in a.values.iter().zip(&b.values) {
                assert_eq!(*x as f32, *y as f32);
            }
        }
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let geom = ArrayGeometry::default();
        let empty = EmptyCirSet::new(frames(&backdrop(), &geom, 1, 1)).unwrap();
        let full = ArrayGeometry::full(6, 6);
        let other = frames(&backdrop(), &full, 1, 1);
        assert!(matches!(
            build_spectrum_tensor(&other, &empty, &geom, &small_cfg()),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(build_spectrum_tensor(&[], &empty, &geom, &small_cfg()).is_err());
    }
}
