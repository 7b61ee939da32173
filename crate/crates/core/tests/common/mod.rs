#![allow(dead_code)]

use mmid_core::array::{ArrayGeometry, Direction};
use mmid_core::grid::AngularGrid;
use mmid_core::scene::{synthesize_cir, CirFrame, CirParams, Deposition, Scatterer, Scene};
use num_complex::Complex64;
use rand::Rng;

pub fn sinc_params() -> CirParams {
    CirParams {
        deposition: Deposition::Sinc,
        ..CirParams::default()
    }
}

/// Point at `range` meters along `dir`.
pub fn place(dir: Direction, range: f64) -> [f64; 3] {
    let u = dir.unit_vector();
    [range * u[0], range * u[1], range * u[2]]
}

pub fn random_direction(rng: &mut impl Rng, max_deg: f64) -> Direction {
    Direction::from_degrees(rng.random_range(-max_deg..max_deg), rng.random_range(-max_deg..max_deg)).unwrap()
}

/// Chebyshev distance between grid cells.
pub fn cell_error(a: (usize, usize), b: (usize, usize)) -> usize {
    a.0.abs_diff(b.0).max(a.1.abs_diff(b.1))
}

pub fn frame_of(targets: Vec<Scatterer>, geom: &ArrayGeometry, noise_power: f64, seed: u64) -> CirFrame {
    let scene = Scene {
        targets,
        noise_power,
        ..Scene::default()
    };
    synthesize_cir(&scene, geom, &sinc_params(), seed).unwrap()
}

/// Noise power giving `snr_db` against the mean per-entry signal power at
/// the strongest tap of a noiseless rendering.
pub fn noise_for_snr(targets: &[Scatterer], geom: &ArrayGeometry, snr_db: f64) -> (f64, usize) {
    let clean = frame_of(targets.to_vec(), geom, 0.0, 0);
    let tap = clean.dominant_tap();
    let pairs = (clean.tx_count * clean.rx_count) as f64;
    let power = clean.tap_energy()[tap] / pairs;
    (power / 10f64.powf(snr_db / 10.0), tap)
}

pub fn unit(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

pub fn default_grid() -> AngularGrid {
    AngularGrid::spectrum_default()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}
