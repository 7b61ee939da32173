//! Point-scatterer scenes and channel impulse response synthesis.
//!
//! Every Tx/Rx pair sees each scatterer at its round-trip delay
//! `τ = (|p − p_tx| + |p − p_rx|) / c` with baseband phase `exp(−j 2π f_c τ)`.
//! Energy lands on the nearest tap, or is spread by a band-limited sinc over
//! ±3 taps. Internal leakage is a pair-independent profile on the first taps,
//! and receiver noise is circular complex Gaussian.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::array::{ArrayGeometry, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::phantom::{Ellipsoid, HumanPhantom};
use crate::textfmt::Document;

/// Tap spacing of the 3.52 GHz-bandwidth radar, in seconds.
pub const DEFAULT_TAP_SPACING: f64 = 0.28e-9;
pub const DEFAULT_TAPS: usize = 64;
/// Half-width of the sinc deposition kernel, in taps.
pub const SINC_HALF_WIDTH: i64 = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    /// Meters; x is range away from the array.
    pub position: [f64; 3],
    pub reflectivity: Complex64,
}

impl Scatterer {
    pub fn new(position: [f64; 3], reflectivity: Complex64) -> Self {
        Scatterer {
            position,
            reflectivity,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.position[0] > 0.0) || self.position.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidScene(format!(
                "scatterer at {:?} must have finite coordinates and x > 0",
                self.position
            )));
        }
        if !(self.reflectivity.re.is_finite() && self.reflectivity.im.is_finite()) {
            return Err(Error::InvalidScene("non-finite reflectivity".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scene {
    pub targets: Vec<Scatterer>,
    pub clutter: Vec<Scatterer>,
    /// Added to taps `0..len` of every Tx/Rx pair.
    pub leakage_profile: Vec<Complex64>,
    /// Per-entry complex noise power (linear).
    pub noise_power: f64,
}

impl Scene {
    pub fn scatterers(&self) -> impl Iterator<Item = &Scatterer> {
        self.targets.iter().chain(self.clutter.iter())
    }

    /// The same scene with the targets removed, as seen by an empty-room
    /// capture.
    pub fn without_targets(&self) -> Scene {
        Scene {
            targets: Vec::new(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Deposition {
    #[default]
    NearestTap,
    /// Band-limited sinc kernel over ±3 taps.
    Sinc,
}

impl std::str::FromStr for Deposition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(Deposition::NearestTap),
            "sinc" => Ok(Deposition::Sinc),
            other => Err(Error::InvalidConfig(format!("unknown deposition `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirParams {
    pub taps: usize,
    pub tap_spacing: f64,
    pub deposition: Deposition,
}

impl Default for CirParams {
    fn default() -> Self {
        CirParams {
            taps: DEFAULT_TAPS,
            tap_spacing: DEFAULT_TAP_SPACING,
            deposition: Deposition::NearestTap,
        }
    }
}

impl CirParams {
    /// One-way range covered by one tap.
    pub fn range_per_tap(&self) -> f64 {
        SPEED_OF_LIGHT * self.tap_spacing / 2.0
    }

    pub fn tap_of_range(&self, range: f64) -> usize {
        (range / self.range_per_tap()).round().max(0.0) as usize
    }
}

/// Complex CIR cube indexed `[tx][rx][tap]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CirFrame {
    pub tx_count: usize,
    pub rx_count: usize,
    pub taps: usize,
    pub data: Vec<Complex64>,
    pub tap_spacing: f64,
    pub timestamp: f64,
}

impl CirFrame {
    pub fn zeros(tx_count: usize, rx_count: usize, taps: usize, tap_spacing: f64) -> Self {
        CirFrame {
            tx_count,
            rx_count,
            taps,
            data: vec![Complex64::new(0.0, 0.0); tx_count * rx_count * taps],
            tap_spacing,
            timestamp: 0.0,
        }
    }

    pub fn from_data(
        tx_count: usize,
        rx_count: usize,
        taps: usize,
        tap_spacing: f64,
        data: Vec<Complex64>,
    ) -> Result<Self> {
        if data.len() != tx_count * rx_count * taps {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {tx_count}x{rx_count}x{taps} cube",
                data.len()
            )));
        }
        if !(tap_spacing > 0.0) {
            return Err(Error::InvalidScene("tap spacing must be positive".into()));
        }
        Ok(CirFrame {
            tx_count,
            rx_count,
            taps,
            data,
            tap_spacing,
            timestamp: 0.0,
        })
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.tx_count, self.rx_count, self.taps]
    }

    #[inline]
    pub fn index(&self, tx: usize, rx: usize, tap: usize) -> usize {
        (tx * self.rx_count + rx) * self.taps + tap
    }

    #[inline]
    pub fn get(&self, tx: usize, rx: usize, tap: usize) -> Complex64 {
        self.data[self.index(tx, rx, tap)]
    }

    pub fn tap_vector(&self, tx: usize, rx: usize) -> &[Complex64] {
        let start = self.index(tx, rx, 0);
        &self.data[start..start + self.taps]
    }

    pub fn tap_vector_mut(&mut self, tx: usize, rx: usize) -> &mut [Complex64] {
        let start = self.index(tx, rx, 0);
        &mut self.data[start..start + self.taps]
    }

    /// Energy per tap summed over all Tx/Rx pairs.
    pub fn tap_energy(&self) -> Vec<f64> {
        let mut energy = vec![0.0; self.taps];
        for pair in self.data.chunks_exact(self.taps) {
            for (e, z) in energy.iter_mut().zip(pair) {
                *e += z.norm_sqr();
            }
        }
        energy
    }

    pub fn dominant_tap(&self) -> usize {
        argmax(&self.tap_energy())
    }

    pub fn same_shape(&self, other: &CirFrame) -> bool {
        self.shape() == other.shape()
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best })
        .0
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Synthesizes one CIR frame of `scene` as seen by the co-located Tx/Rx
/// arrays of `geom`. Noise draws come from a ChaCha stream seeded by `seed`.
pub fn synthesize_cir(
    scene: &Scene,
    geom: &ArrayGeometry,
    params: &CirParams,
    seed: u64,
) -> Result<CirFrame> {
    geom.validate()?;
    if params.taps == 0 || !(params.tap_spacing > 0.0) {
        return Err(Error::InvalidConfig("tap count and spacing must be positive".into()));
    }
    if scene.leakage_profile.len() > params.taps {
        return Err(Error::InvalidScene(format!(
            "leakage profile has {} taps but the frame only {}",
            scene.leakage_profile.len(),
            params.taps
        )));
    }
    if !(scene.noise_power >= 0.0) {
        return Err(Error::InvalidScene("noise power must be non-negative".into()));
    }
    let scatterers: Vec<&Scatterer> = scene.scatterers().collect();
    for s in &scatterers {
        s.validate()?;
    }

    let elements = geom.element_positions();
    let n_el = elements.len();
    let k = 2.0 * PI * geom.carrier_freq / SPEED_OF_LIGHT;
    // One-way distance and phasor from each element to each scatterer.
    let mut dist = vec![0.0; n_el * scatterers.len()];
    let mut phasor = vec![Complex64::new(0.0, 0.0); n_el * scatterers.len()];
    for (e, pe) in elements.iter().enumerate() {
        for (s, sc) in scatterers.iter().enumerate() {
            let d = distance(sc.position, *pe);
            dist[e * scatterers.len() + s] = d;
            phasor[e * scatterers.len() + s] = Complex64::from_polar(1.0, -k * d);
        }
    }
    let tap_delay = params.tap_spacing * SPEED_OF_LIGHT;
    let max_path = dist.iter().copied().fold(0.0, f64::max) * 2.0;
    if !scatterers.is_empty() && (max_path / tap_delay).round() as usize >= params.taps {
        return Err(Error::SceneExceedsTapWindow);
    }

    let mut frame = CirFrame::zeros(n_el, n_el, params.taps, params.tap_spacing);
    let taps = params.taps;
    let ns = scatterers.len();
    frame
        .data
        .par_chunks_mut(n_el * taps)
        .enumerate()
        .for_each(|(tx, block)| {
            for rx in 0..n_el {
                let out = &mut block[rx * taps..(rx + 1) * taps];
                for (s, sc) in scatterers.iter().enumerate() {
                    let path = dist[tx * ns + s] + dist[rx * ns + s];
                    let frac_tap = path / tap_delay;
                    let amp = sc.reflectivity * (phasor[tx * ns + s] * phasor[rx * ns + s]);
                    match params.deposition {
                        Deposition::NearestTap => out[frac_tap.round() as usize] += amp,
                        Deposition::Sinc => {
                            let center = frac_tap.round() as i64;
                            for t in (center - SINC_HALF_WIDTH)..=(center + SINC_HALF_WIDTH) {
                                if (0..taps as i64).contains(&t) {
                                    out[t as usize] += amp * sinc(t as f64 - frac_tap);
                                }
                            }
                        }
                    }
                }
                for (o, l) in out.iter_mut().zip(&scene.leakage_profile) {
                    *o += l;
                }
            }
        });

    if scene.noise_power > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, (scene.noise_power / 2.0).sqrt())
            .map_err(|e| Error::InvalidScene(e.to_string()))?;
        for z in frame.data.iter_mut() {
            let re = normal.sample(&mut rng);
            let im = normal.sample(&mut rng);
            *z += Complex64::new(re, im);
        }
    }
    Ok(frame)
}

/// A scene file: a point-scatterer scene plus an optional phantom and the
/// simulation parameters.
///
/// ```text
/// taps = 64
/// tap_spacing = 0.28e-9
/// noise_power = 1e-6
/// k0 = 4
/// leakage = 0.8,0.1 0.3,-0.2     # re,im per tap from tap 0
/// deposition = nearest           # or sinc
/// label = 0
/// distance = 1.5                 # phantom placement along x
/// density = 800                  # phantom samples per m²
/// phantom_reflectivity = 1.0
///
/// [target]
/// position = 1.5, 0.0, 0.1
/// reflectivity = 1.0, 0.0
///
/// [clutter]
/// position = 2.4, -0.5, 0.0
/// reflectivity = 0.5, 0.5
///
/// [ellipsoid]
/// center = 0.0, 0.0, 0.15        # offset from the phantom origin
/// semi_axes = 0.12, 0.18, 0.30
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct SceneDescription {
    pub scene: Scene,
    pub phantom: Option<HumanPhantom>,
    pub params: CirParams,
    pub k0: usize,
    pub label: Option<usize>,
}

impl SceneDescription {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let doc = Document::parse(text, source)?;
        doc.check_keys(
            &doc.top,
            &[
                "taps",
                "tap_spacing",
                "noise_power",
                "k0",
                "leakage",
                "deposition",
                "label",
                "distance",
                "density",
                "phantom_reflectivity",
            ],
        )?;
        let mut params = CirParams::default();
        let mut scene = Scene::default();
        let mut k0 = crate::preprocess::DEFAULT_K0;
        let mut label = None;
        let mut distance = 1.5;
        let mut density = crate::phantom::DEFAULT_DENSITY;
        let mut phantom_reflectivity = 1.0;
        let mut leakage_line = 0;
        for e in &doc.top {
            match e.key.as_str() {
                "taps" => params.taps = doc.scalar(e)?,
                "tap_spacing" => params.tap_spacing = doc.scalar(e)?,
                "noise_power" => scene.noise_power = doc.scalar(e)?,
                "k0" => k0 = doc.scalar(e)?,
                "leakage" => {
                    leakage_line = e.line;
                    scene.leakage_profile = doc
                        .pairs::<f64>(e)?
                        .into_iter()
                        .map(|(re, im)| Complex64::new(re, im))
                        .collect();
                }
                "deposition" => {
                    params.deposition = e.value.parse().map_err(|err: Error| doc.error(e.line, err.to_string()))?
                }
                "label" => label = Some(doc.scalar(e)?),
                "distance" => distance = doc.scalar(e)?,
                "density" => density = doc.scalar(e)?,
                "phantom_reflectivity" => phantom_reflectivity = doc.scalar(e)?,
                _ => unreachable!(),
            }
        }
        if scene.leakage_profile.len() > k0 {
            return Err(doc.error(
                leakage_line,
                format!("leakage profile longer than k0 = {k0}"),
            ));
        }
        if !(scene.noise_power >= 0.0) {
            return Err(doc.error(1, "noise_power must be non-negative"));
        }
        let mut ellipsoids = Vec::new();
        for block in &doc.blocks {
            match block.name.as_str() {
                "target" | "clutter" => {
                    doc.check_keys(&block.entries, &["position", "reflectivity"])?;
                    let mut position = None;
                    let mut refl = Complex64::new(1.0, 0.0);
                    for e in &block.entries {
                        match e.key.as_str() {
                            "position" => position = Some(doc.fixed::<f64, 3>(e)?),
                            "reflectivity" => {
                                let [re, im] = doc.fixed::<f64, 2>(e)?;
                                refl = Complex64::new(re, im);
                            }
                            _ => unreachable!(),
                        }
                    }
                    let position = position
                        .ok_or_else(|| doc.error(block.line, "scatterer block needs `position`"))?;
                    let s = Scatterer::new(position, refl);
                    s.validate().map_err(|err| doc.error(block.line, err.to_string()))?;
                    if block.name == "target" {
                        scene.targets.push(s);
                    } else {
                        scene.clutter.push(s);
                    }
                }
                "ellipsoid" => {
                    doc.check_keys(&block.entries, &["center", "semi_axes"])?;
                    let mut center = [0.0; 3];
                    let mut semi_axes = None;
                    for e in &block.entries {
                        match e.key.as_str() {
                            "center" => center = doc.fixed(e)?,
                            "semi_axes" => semi_axes = Some(doc.fixed(e)?),
                            _ => unreachable!(),
                        }
                    }
                    let semi_axes = semi_axes
                        .ok_or_else(|| doc.error(block.line, "ellipsoid block needs `semi_axes`"))?;
                    let el = Ellipsoid { center, semi_axes };
                    el.validate().map_err(|err| doc.error(block.line, err.to_string()))?;
                    ellipsoids.push(el);
                }
                other => return Err(doc.error(block.line, format!("unknown block `[{other}]`"))),
            }
        }
        let phantom = if ellipsoids.is_empty() {
            None
        } else {
            let ph = HumanPhantom {
                ellipsoids,
                sample_density: density,
                distance,
                reflectivity: phantom_reflectivity,
            };
            ph.validate().map_err(|err| doc.error(1, err.to_string()))?;
            Some(ph)
        };
        Ok(SceneDescription {
            scene,
            phantom,
            params,
            k0,
            label,
        })
    }

    /// The full scatterer scene, with phantom samples appended to the targets.
    pub fn realize(&self, seed: u64) -> Result<Scene> {
        let mut scene = self.scene.clone();
        if let Some(ph) = &self.phantom {
            scene.targets.extend(crate::phantom::sample_phantom(ph, seed)?);
        }
        Ok(scene)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn one(x: f64, y: f64, z: f64) -> Scatterer {
        Scatterer::new([x, y, z], Complex64::new(1.0, 0.0))
    }

    fn geom() -> ArrayGeometry {
        ArrayGeometry::default()
    }

    #[test]
    fn empty_scene_is_all_zero() {
        let f = synthesize_cir(&Scene::default(), &geom(), &CirParams::default(), 3).unwrap();
        assert_eq!(f.shape(), [32, 32, 64]);
        assert!(f.data.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn broadside_scatterer_lands_on_tap_36() {
        // Delay oracle: 2d / (c Δτ) = 3.0 / (2.998e8 * 0.28e-9) = 35.74.
        let oracle = (2.0f64 * 1.5 / (2.998e8 * 0.28e-9)).round() as usize;
        assert_eq!(oracle, 36);
        let scene = Scene {
            targets: vec![one(1.5, 0.0, 0.0)],
            ..Default::default()
        };
        let f = synthesize_cir(&scene, &geom(), &CirParams::default(), 0).unwrap();
        assert_eq!(f.dominant_tap(), 36);
        // Nearest-tap deposition puts all energy on the one tap.
        let e = f.tap_energy();
        assert!((e[36] - 32.0 * 32.0).abs() < 1e-9);
    }

    #[test]
    fn ten_cm_separation_resolves() {
        let p = CirParams::default();
        assert!((p.range_per_tap() - 0.041972).abs() < 1e-6);
        let a = Scene { targets: vec![one(1.5, 0.0, 0.0)], ..Default::default() };
        let b = Scene { targets: vec![one(1.6, 0.0, 0.0)], ..Default::default() };
        let ta = synthesize_cir(&a, &geom(), &p, 0).unwrap().dominant_tap();
        let tb = synthesize_cir(&b, &geom(), &p, 0).unwrap().dominant_tap();
        assert_ne!(ta, tb);
    }

    #[test]
    fn out_of_window_scatterer_is_rejected() {
        let scene = Scene { targets: vec![one(5.0, 0.0, 0.0)], ..Default::default() };
        let err = synthesize_cir(&scene, &geom(), &CirParams::default(), 0).unwrap_err();
        assert_eq!(err.to_string(), "scene exceeds tap window");
    }

    #[test]
    fn leakage_and_noise() {
        let leak = vec![Complex64::new(2.0, 1.0), Complex64::new(-1.0, 0.5)];
        let scene = Scene { leakage_profile: leak.clone(), ..Default::default() };
        let f = synthesize_cir(&scene, &geom(), &CirParams::default(), 0).unwrap();
        for tx in 0..32 {
            for rx in 0..32 {
                let v = f.tap_vector(tx, rx);
                assert_eq!(&v[..2], &leak[..]);
                assert!(v[2..].iter().all(|z| z.norm() == 0.0));
            }
        }
        let noisy = Scene { noise_power: 0.5, ..Default::default() };
        let f = synthesize_cir(&noisy, &geom(), &CirParams::default(), 9).unwrap();
        let p: f64 = f.data.iter().map(|z| z.norm_sqr()).sum::<f64>() / f.data.len() as f64;
        assert!((p - 0.5).abs() < 0.01, "noise power {p}");
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let scene = Scene {
            targets: vec![one(1.7, 0.2, -0.1)],
            noise_power: 0.01,
            ..Default::default()
        };
        let a = synthesize_cir(&scene, &geom(), &CirParams::default(), 42).unwrap();
        let b = synthesize_cir(&scene, &geom(), &CirParams::default(), 42).unwrap();
        let c = synthesize_cir(&scene, &geom(), &CirParams::default(), 43).unwrap();
        assert!(a.data.iter().zip(&b.data).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
        assert_ne!(a, c);
    }

    #[test]
    fn linear_in_reflectivity_exactly() {
        for dep in [Deposition::NearestTap, Deposition::Sinc] {
            let p = CirParams { deposition: dep, ..Default::default() };
            let a = Complex64::new(0.3, -0.7);
            let s1 = Scene { targets: vec![Scatterer::new([1.3, 0.1, 0.2], a)], ..Default::default() };
            let s2 = Scene { targets: vec![Scatterer::new([1.3, 0.1, 0.2], a * 2.0)], ..Default::default() };
            let f1 = synthesize_cir(&s1, &geom(), &p, 0).unwrap();
            let f2 = synthesize_cir(&s2, &geom(), &p, 0).unwrap();
            assert!(f1.data.iter().zip(&f2.data).all(|(x, y)| *x * 2.0 == *y));
        }
    }

    #[test]
    fn superposition() {
        let p = CirParams { deposition: Deposition::Sinc, ..Default::default() };
        let a = vec![one(1.2, 0.1, 0.0), one(2.0, -0.3, 0.2)];
        let b = vec![Scatterer::new([1.6, 0.0, -0.4], Complex64::new(0.0, 2.0))];
        let fa = synthesize_cir(&Scene { targets: a.clone(), ..Default::default() }, &geom(), &p, 0).unwrap();
        let fb = synthesize_cir(&Scene { clutter: b.clone(), ..Default::default() }, &geom(), &p, 0).unwrap();
        let fab = synthesize_cir(&Scene { targets: a, clutter: b, ..Default::default() }, &geom(), &p, 0).unwrap();
        for i in 0..fab.data.len() {
            assert!((fab.data[i] - fa.data[i] - fb.data[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn sinc_peaks_at_nearest_tap() {
        let p = CirParams { deposition: Deposition::Sinc, ..Default::default() };
        let scene = Scene { targets: vec![one(1.5, 0.0, 0.0)], ..Default::default() };
        let f = synthesize_cir(&scene, &geom(), &p, 0).unwrap();
        assert_eq!(f.dominant_tap(), 36);
        let e = f.tap_energy();
        assert!(e[33] > 0.0 && e[39] > 0.0 && e[32] == 0.0 && e[40] == 0.0);
    }

    #[test]
    fn parses_scene_file() {
        let text = "taps = 64\nnoise_power = 1e-4\nleakage = 1,0 0.5,0.5\nlabel = 2\n\
                    [target]\nposition = 1.5, 0, 0\n\
                    [clutter]\nposition = 2.2 0.4 0\nreflectivity = 0.3, -0.1\n\
                    [ellipsoid]\ncenter = 0,0,0\nsemi_axes = 0.1,0.1,0.1\n";
        let d = SceneDescription::parse(text, "s.txt").unwrap();
        assert_eq!(d.scene.targets.len(), 1);
        assert_eq!(d.scene.clutter[0].reflectivity, Complex64::new(0.3, -0.1));
        assert_eq!(d.scene.leakage_profile.len(), 2);
        assert_eq!(d.label, Some(2));
        assert!(d.phantom.is_some());
        let realized = d.realize(1).unwrap();
        assert!(realized.targets.len() > 1);
    }

    #[test]
    fn scene_parse_errors_carry_lines() {
        let err = SceneDescription::parse("taps = 64\n[target]\nreflectivity = 1,0\n", "s.txt").unwrap_err();
        assert_eq!(err.to_string(), "s.txt:2: scatterer block needs `position`");
        let err = SceneDescription::parse("k0 = 2\nleakage = 1,0 1,0 1,0\n", "s.txt").unwrap_err();
        assert!(err.to_string().starts_with("s.txt:2:"));
        let err = SceneDescription::parse("[target]\nposition = -1,0,0\n", "s.txt").unwrap_err();
        assert!(err.to_string().starts_with("s.txt:1:"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn every_pair_hits_its_delay_oracle(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = geom();
            let p = CirParams::default();
            let elements = g.element_positions();
            // 1000 positions split over the proptest cases.
            for _ in 0..63 {
                let pos = [rng.random_range(0.3..2.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)];
                let scene = Scene { targets: vec![one(pos[0], pos[1], pos[2])], ..Default::default() };
                let f = synthesize_cir(&scene, &g, &p, 0).unwrap();
                for &(tx, rx) in &[(0usize, 0usize), (5, 17), (31, 2), (12, 12)] {
                    let tau = (distance(pos, elements[tx]) + distance(pos, elements[rx])) / 2.998e8;
                    let oracle = (tau / 0.28e-9).round() as usize;
                    let v = f.tap_vector(tx, rx);
                    let hit = argmax(&v.iter().map(|z| z.norm()).collect::<Vec<_>>());
                    prop_assert_eq!(hit, oracle);
                }
                let center = (2.0 * distance(pos, [0.0; 3]) / (2.998e8 * 0.28e-9)).round() as i64;
                prop_assert!((f.dominant_tap() as i64 - center).abs() <= 1);
            }
        }
    }
}
