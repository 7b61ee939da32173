//! Ellipsoid-union human phantoms: surface sampling for the CIR simulator and
//! ground-truth depth rendering.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::AngularGrid;
use crate::metrics::DepthImage;
use crate::scene::Scatterer;

pub const DEFAULT_DENSITY: f64 = 800.0;
/// Phantom placements accepted by the simulator, in meters.
pub const DISTANCE_RANGE: std::ops::RangeInclusive<f64> = 0.3..=5.0;

const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

/// Axis-aligned ellipsoid; `center` is an offset from the phantom origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipsoid {
    pub center: [f64; 3],
    pub semi_axes: [f64; 3],
}

impl Ellipsoid {
    pub fn sphere(center: [f64; 3], radius: f64) -> Self {
        Ellipsoid {
            center,
            semi_axes: [radius; 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.semi_axes.iter().any(|a| !(a.is_finite() && *a > 0.0))
            || self.center.iter().any(|c| !c.is_finite())
        {
            return Err(Error::InvalidScene(format!(
                "degenerate ellipsoid {:?} / {:?}",
                self.center, self.semi_axes
            )));
        }
        Ok(())
    }

    /// Surface area scale `abc·|D⁻¹u|` of the sphere→ellipsoid map at unit
    /// vector `u`.
    fn area_factor(&self, u: [f64; 3]) -> f64 {
        let [a, b, c] = self.semi_axes;
        a * b * c * ((u[0] / a).powi(2) + (u[1] / b).powi(2) + (u[2] / c).powi(2)).sqrt()
    }

    /// Surface area by Fibonacci quadrature of the area factor over the unit
    /// sphere.
    pub fn surface_area(&self) -> f64 {
        const N: usize = 20_000;
        let sum: f64 = (0..N).map(|i| self.area_factor(fibonacci_point(i, N, 0.0, false))).sum();
        4.0 * PI * sum / N as f64
    }

    /// Nearest positive ray parameter `t` where `t·dir` meets the surface of
    /// this ellipsoid centered at `world_center`.
    fn ray_hit(&self, world_center: [f64; 3], dir: [f64; 3]) -> Option<f64> {
        let mut qa = 0.0;
        let mut qb = 0.0;
        let mut qc = -1.0;
        for i in 0..3 {
            let inv = 1.0 / self.semi_axes[i];
            let d = dir[i] * inv;
            let o = -world_center[i] * inv;
            qa += d * d;
            qb += 2.0 * d * o;
            qc += o * o;
        }
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        let t0 = (-qb - sq) / (2.0 * qa);
        let t1 = (-qb + sq) / (2.0 * qa);
        [t0, t1].into_iter().find(|&t| t > 0.0)
    }
}

/// Point `i` of an `n`-point Fibonacci lattice. With `front_only` the lattice
/// covers the `u_x < 0` hemisphere (the side facing the array).
fn fibonacci_point(i: usize, n: usize, rotation: f64, front_only: bool) -> [f64; 3] {
    let h = (i as f64 + 0.5) / n as f64;
    let x = if front_only { -h } else { 1.0 - 2.0 * h };
    let rho = (1.0 - x * x).max(0.0).sqrt();
    let ang = GOLDEN_ANGLE * i as f64 + rotation;
    [x, rho * ang.cos(), rho * ang.sin()]
}

#[derive(Debug, Clone, PartialEq)]
pub struct HumanPhantom {
    pub ellipsoids: Vec<Ellipsoid>,
    /// Surface samples per m² of facing surface.
    pub sample_density: f64,
    /// Placement of the phantom origin along the range axis, meters.
    pub distance: f64,
    /// Reflectivity scale applied to every sample.
    pub reflectivity: f64,
}

impl HumanPhantom {
    /// Standing figure of height ≈ 1.65 m: torso, head, two legs, two arms.
    /// The origin sits at chest height.
    pub fn standing(distance: f64) -> Self {
        Self::with_build(distance, 1.0, 1.0)
    }

    /// Standing figure with scaled height and width, for distinguishable
    /// identities.
    pub fn with_build(distance: f64, height: f64, width: f64) -> Self {
        let e = |c: [f64; 3], s: [f64; 3]| Ellipsoid {
            center: [c[0], c[1] * width, c[2] * height],
            semi_axes: [s[0] * width, s[1] * width, s[2] * height],
        };
        HumanPhantom {
            ellipsoids: vec![
                e([0.0, 0.0, 0.0], [0.11, 0.18, 0.30]),
                e([0.0, 0.0, 0.42], [0.09, 0.08, 0.11]),
                e([0.0, -0.09, -0.62], [0.07, 0.07, 0.40]),
                e([0.0, 0.09, -0.62], [0.07, 0.07, 0.40]),
                e([0.0, -0.24, -0.02], [0.05, 0.05, 0.30]),
                e([0.0, 0.24, -0.02], [0.05, 0.05, 0.30]),
            ],
            sample_density: DEFAULT_DENSITY,
            distance,
            reflectivity: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_density > 0.0 && self.sample_density.is_finite()) {
            return Err(Error::InvalidScene(format!(
                "sample density must be positive, got {}",
                self.sample_density
            )));
        }
        if !DISTANCE_RANGE.contains(&self.distance) {
            return Err(Error::InvalidScene(format!(
                "phantom distance {} m outside {:?}",
                self.distance, DISTANCE_RANGE
            )));
        }
        for el in &self.ellipsoids {
            el.validate()?;
            if self.world_center(el)[0] - el.semi_axes[0] <= 0.0 {
                return Err(Error::InvalidScene("phantom must lie in front of the array".into()));
            }
        }
        Ok(())
    }

    pub fn world_center(&self, el: &Ellipsoid) -> [f64; 3] {
        [self.distance + el.center[0], el.center[1], el.center[2]]
    }

    pub fn translated(&self, dy: f64, dz: f64) -> Self {
        let mut out = self.clone();
        for el in &mut out.ellipsoids {
            el.center[1] += dy;
            el.center[2] += dz;
        }
        out
    }
}

/// Deterministic quasi-uniform samples on the array-facing half of each
/// ellipsoid. The sample count per ellipsoid is `round(density · area / 2)`;
/// `seed` rotates each lattice and draws the speckle phase. Amplitude is
/// `reflectivity · cosine · sqrt(patch area)` where cosine is taken between
/// the outward normal and the direction back to the array.
pub fn sample_phantom(ph: &HumanPhantom, seed: u64) -> Result<Vec<Scatterer>> {
    ph.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for el in &ph.ellipsoids {
        let half_area = el.surface_area() / 2.0;
        let n = (ph.sample_density * half_area).round() as usize;
        let rotation = rng.random_range(0.0..2.0 * PI);
        let center = ph.world_center(el);
        let [a, b, c] = el.semi_axes;
        for i in 0..n {
            let u = fibonacci_point(i, n, rotation, true);
            let p = [center[0] + a * u[0], center[1] + b * u[1], center[2] + c * u[2]];
            let normal = [u[0] / a, u[1] / b, u[2] / c];
            let nn = norm(normal);
            let pn = norm(p);
            let cosine = -(normal[0] * p[0] + normal[1] * p[1] + normal[2] * p[2]) / (nn * pn);
            // Fibonacci cells have equal sphere area 2π/n on the hemisphere.
            let patch = 2.0 * PI / n as f64 * el.area_factor(u);
            let phase = rng.random_range(0.0..2.0 * PI);
            let magnitude = ph.reflectivity * cosine.max(0.0) * patch.sqrt();
            out.push(Scatterer::new(p, Complex64::from_polar(magnitude, phase)));
        }
    }
    Ok(out)
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Central projection of the phantom from the array center onto an angular
/// grid: pixel `(i, j)` looks along `(theta[i], phi[j])` and holds the depth
/// (x coordinate) of the nearest surface hit, or 0 for background.
pub fn render_ground_truth(ph: &HumanPhantom, grid: &AngularGrid) -> Result<DepthImage> {
    let mut img = DepthImage::zeros(grid.rows(), grid.cols());
    if ph.ellipsoids.is_empty() {
        return Ok(img);
    }
    for el in &ph.ellipsoids {
        el.validate()?;
        if ph.world_center(el)[0] - el.semi_axes[0] <= 0.0 {
            return Err(Error::InvalidScene("phantom must lie in front of the array".into()));
        }
    }
    let centers: Vec<[f64; 3]> = ph.ellipsoids.iter().map(|e| ph.world_center(e)).collect();
    let mut hits = 0usize;
    for i in 0..grid.rows() {
        for j in 0..grid.cols() {
            let u = grid.direction(i, j).unit_vector();
            let t = ph
                .ellipsoids
                .iter()
                .zip(&centers)
                .filter_map(|(el, c)| el.ray_hit(*c, u))
                .fold(f64::INFINITY, f64::min);
            if t.is_finite() {
                img.set(i, j, t * u[0]);
                hits += 1;
            }
        }
    }
    if hits == 0 {
        return Err(Error::InvalidScene("phantom lies outside the field of view".into()));
    }
    Ok(img)
}
