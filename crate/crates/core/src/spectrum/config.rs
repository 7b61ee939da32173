use super::subspace::SourceOrderMode;
use crate::error::{Error, Result};
use crate::grid::{AngularGrid, DEFAULT_EXTENT_DEG, SPECTRUM_SIZE};
use crate::preprocess::BackgroundConfig;
use crate::scene::{CirParams, DEFAULT_TAP_SPACING};
use crate::textfmt::Document;

/// Which snapshot pools feed each covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Smoothing {
    /// All complete 4×4 windows of the Rx array; otherwise the first only.
    pub spatial: bool,
    /// All (up to `temporal_frames`) frames; otherwise the first only.
    pub temporal: bool,
    /// All transmitters jointly; otherwise each Tx on its own.
    pub jts: bool,
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing {
            spatial: true,
            temporal: true,
            jts: true,
        }
    }
}

/// Per-direction reduction over the range gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    /// Largest pseudospectrum value over gated taps.
    #[default]
    MaxPower,
    /// Range in meters of the tap holding that largest value.
    DepthOfPeak,
}

impl std::str::FromStr for Reduction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Reduction::MaxPower),
            "depth" => Ok(Reduction::DepthOfPeak),
            other => Err(Error::InvalidConfig(format!("unknown reduction `{other}` (max | depth)"))),
        }
    }
}

impl std::fmt::Display for Reduction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Reduction::MaxPower => "max",
            Reduction::DepthOfPeak => "depth",
        })
    }
}

pub const DEFAULT_RANGE_GATE_M: (f64, f64) = (1.0, 2.5);
pub const DEFAULT_TEMPORAL_FRAMES: usize = 10;
/// Eigenvalues within this factor of the estimated noise floor carry no
/// signal energy.
pub const DEFAULT_NOISE_FLOOR_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MusicConfig {
    pub order: SourceOrderMode,
    pub noise_floor_factor: f64,
    /// Inclusive tap interval.
    pub range_gate: (usize, usize),
    pub smoothing: Smoothing,
    pub temporal_frames: usize,
    pub reduction: Reduction,
    pub grid_size: usize,
    /// Half-extent of both angular axes, degrees.
    pub grid_extent_deg: f64,
    pub background: BackgroundConfig,
}

impl Default for MusicConfig {
    fn default() -> Self {
        let params = CirParams::default();
        MusicConfig {
            order: SourceOrderMode::default(),
            noise_floor_factor: DEFAULT_NOISE_FLOOR_FACTOR,
            range_gate: (
                params.tap_of_range(DEFAULT_RANGE_GATE_M.0),
                params.tap_of_range(DEFAULT_RANGE_GATE_M.1),
            ),
            smoothing: Smoothing::default(),
            temporal_frames: DEFAULT_TEMPORAL_FRAMES,
            reduction: Reduction::default(),
            grid_size: SPECTRUM_SIZE,
            grid_extent_deg: DEFAULT_EXTENT_DEG,
            background: BackgroundConfig::default(),
        }
    }
}

impl MusicConfig {
    pub fn grid(&self) -> Result<AngularGrid> {
        AngularGrid::uniform(self.grid_size, self.grid_size, self.grid_extent_deg.to_radians())
    }

    /// Sets the range gate from one-way ranges in meters.
    pub fn set_range_gate_m(&mut self, near: f64, far: f64, tap_spacing: f64) -> Result<()> {
        if !(near >= 0.0 && far >= near) {
            return Err(Error::InvalidConfig(format!("range gate {near}..{far} m is not an interval")));
        }
        let p = CirParams {
            tap_spacing,
            ..CirParams::default()
        };
        self.range_gate = (p.tap_of_range(near), p.tap_of_range(far));
        Ok(())
    }

    pub fn validate(&self, taps: usize) -> Result<()> {
        let (lo, hi) = self.range_gate;
        if lo > hi || hi >= taps {
            return Err(Error::InvalidConfig(format!(
                "range gate taps {lo}..={hi} outside 0..{taps}"
            )));
        }
        if let SourceOrderMode::EnergyThreshold(e) = self.order {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::InvalidConfig(format!("energy threshold must lie in (0,1), got {e}")));
            }
        }
        if self.temporal_frames == 0 {
            return Err(Error::InvalidConfig("temporal_frames must be at least 1".into()));
        }
        if !(self.noise_floor_factor >= 1.0) {
            return Err(Error::InvalidConfig("noise_floor_factor must be at least 1".into()));
        }
        self.grid()?;
        Ok(())
    }

    /// Parses the spectrum configuration file:
    ///
    /// ```text
    /// grid_size = 128
    /// grid_extent_deg = 60
    /// range_gate_m = 1.0, 2.5
    /// order_mode = energy:0.1       # fixed:M | eigengap | energy:EPS
    /// noise_floor_factor = 2
    /// spatial = true
    /// temporal = true
    /// jts = true
    /// temporal_frames = 10
    /// reduction = max               # or depth
    /// k0 = 4
    /// per_pair_alpha = true
    /// ```
    ///
    /// The range gate is converted to taps with `tap_spacing`.
    pub fn from_config_str(text: &str, source: &str, tap_spacing: f64) -> Result<Self> {
        let doc = Document::parse(text, source)?;
        if let Some(b) = doc.blocks.first() {
            return Err(doc.error(b.line, "spectrum configuration takes no blocks"));
        }
        doc.check_keys(
            &doc.top,
            &[
                "grid_size",
                "grid_extent_deg",
                "range_gate_m",
                "order_mode",
                "noise_floor_factor",
                "spatial",
                "temporal",
                "jts",
                "temporal_frames",
                "reduction",
                "k0",
                "per_pair_alpha",
            ],
        )?;
        let mut cfg = MusicConfig::default();
        cfg.set_range_gate_m(DEFAULT_RANGE_GATE_M.0, DEFAULT_RANGE_GATE_M.1, tap_spacing)?;
        for e in &doc.top {
            let wrap = |err: Error| doc.error(e.line, err.to_string());
            match e.key.as_str() {
                "grid_size" => cfg.grid_size = doc.scalar(e)?,
                "grid_extent_deg" => cfg.grid_extent_deg = doc.scalar(e)?,
                "range_gate_m" => {
                    let [a, b] = doc.fixed::<f64, 2>(e)?;
                    cfg.set_range_gate_m(a, b, tap_spacing).map_err(wrap)?;
                }
                "order_mode" => cfg.order = e.value.parse().map_err(wrap)?,
                "noise_floor_factor" => cfg.noise_floor_factor = doc.scalar(e)?,
                "spatial" => cfg.smoothing.spatial = doc.scalar(e)?,
                "temporal" => cfg.smoothing.temporal = doc.scalar(e)?,
                "jts" => cfg.smoothing.jts = doc.scalar(e)?,
                "temporal_frames" => cfg.temporal_frames = doc.scalar(e)?,
                "reduction" => cfg.reduction = e.value.parse().map_err(wrap)?,
                "k0" => cfg.background.k0 = doc.scalar(e)?,
                "per_pair_alpha" => cfg.background.per_pair_alpha = doc.scalar(e)?,
                _ => unreachable!(),
            }
        }
        Ok(cfg)
    }

    /// Inverse of [`MusicConfig::from_config_str`] for the given tap spacing.
    pub fn to_config_string(&self, tap_spacing: f64) -> String {
        let per_tap = crate::array::SPEED_OF_LIGHT * tap_spacing / 2.0;
        format!(
            "grid_size = {}\ngrid_extent_deg = {}\nrange_gate_m = {}, {}\norder_mode = {}\n\
             noise_floor_factor = {}\nspatial = {}\ntemporal = {}\njts = {}\ntemporal_frames = {}\n\
             reduction = {}\nk0 = {}\nper_pair_alpha = {}\n",
            self.grid_size,
            self.grid_extent_deg,
            self.range_gate.0 as f64 * per_tap,
            self.range_gate.1 as f64 * per_tap,
            self.order,
            self.noise_floor_factor,
            self.smoothing.spatial,
            self.smoothing.temporal,
            self.smoothing.jts,
            self.temporal_frames,
            self.reduction,
            self.background.k0,
            self.background.per_pair_alpha,
        )
    }
}

/// Default tap spacing, for configuration files read before any frame.
pub fn default_tap_spacing() -> f64 {
    DEFAULT_TAP_SPACING
}
