//! Planar antenna array geometry and steering vectors.
//!
//! The array lies in the y–z plane and faces the +x (range) axis. Grid cell
//! `(row, col)` sits at `y = (col - (cols-1)/2) * pitch` and
//! `z = (row - (rows-1)/2) * pitch`. Transmit and receive arrays are
//! co-located and share one geometry.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::textfmt::Document;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 2.998e8;

/// Side length of the square steering subarrays.
pub const SUBARRAY_SIDE: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    pub rows: usize,
    pub cols: usize,
    /// Element separation in meters.
    pub pitch: f64,
    pub missing: BTreeSet<(usize, usize)>,
    /// Carrier frequency in hertz.
    pub carrier_freq: f64,
}

impl Default for ArrayGeometry {
    /// 6×6 grid at 3 mm pitch, 60 GHz, with the four corner cells unpopulated
    /// (32 active elements).
    fn default() -> Self {
        ArrayGeometry {
            rows: 6,
            cols: 6,
            pitch: 0.003,
            missing: [(0, 0), (0, 5), (5, 0), (5, 5)].into_iter().collect(),
            carrier_freq: 60e9,
        }
    }
}

impl ArrayGeometry {
    pub fn new(
        rows: usize,
        cols: usize,
        pitch: f64,
        missing: impl IntoIterator<Item = (usize, usize)>,
        carrier_freq: f64,
    ) -> Result<Self> {
        let geom = ArrayGeometry {
            rows,
            cols,
            pitch,
            missing: missing.into_iter().collect(),
            carrier_freq,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Fully populated grid with the default pitch and carrier.
    pub fn full(rows: usize, cols: usize) -> Self {
        ArrayGeometry {
            rows,
            cols,
            missing: BTreeSet::new(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidGeometry("grid must be non-empty".into()));
        }
        if !(self.pitch > 0.0 && self.pitch.is_finite()) {
            return Err(Error::InvalidGeometry(format!("pitch must be positive, got {}", self.pitch)));
        }
        if !(self.carrier_freq > 0.0 && self.carrier_freq.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "carrier frequency must be positive, got {}",
                self.carrier_freq
            )));
        }
        if let Some(&(r, c)) = self.missing.iter().find(|&&(r, c)| r >= self.rows || c >= self.cols) {
            return Err(Error::InvalidGeometry(format!("missing cell ({r},{c}) outside the grid")));
        }
        if self.active_count() == 0 {
            return Err(Error::InvalidGeometry("no active elements".into()));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength()
    }

    pub fn active_count(&self) -> usize {
        self.rows * self.cols - self.missing.len()
    }

    pub fn is_active(&self, row: usize, col: usize) -> bool {
        row < self.rows && col < self.cols && !self.missing.contains(&(row, col))
    }

    /// Active-element index of a grid cell, counting active cells in
    /// row-major order.
    pub fn element_index(&self, row: usize, col: usize) -> Option<usize> {
        if !self.is_active(row, col) {
            return None;
        }
        let before = row * self.cols + col;
        let skipped = self.missing.range(..(row, col)).count();
        Some(before - skipped)
    }

    /// Grid cells of the active elements, in element-index order.
    pub fn active_cells(&self) -> Vec<(usize, usize)> {
        (0..self.rows)
            .flat_map(|r| (0..self.cols).map(move |c| (r, c)))
            .filter(|&(r, c)| self.is_active(r, c))
            .collect()
    }

    /// Position of a grid cell in meters, array centered at the origin.
    pub fn cell_position(&self, row: usize, col: usize) -> [f64; 3] {
        let y = (col as f64 - (self.cols as f64 - 1.0) / 2.0) * self.pitch;
        let z = (row as f64 - (self.rows as f64 - 1.0) / 2.0) * self.pitch;
        [0.0, y, z]
    }

    /// Positions of the active elements in element-index order.
    pub fn element_positions(&self) -> Vec<[f64; 3]> {
        self.active_cells()
            .into_iter()
            .map(|(r, c)| self.cell_position(r, c))
            .collect()
    }

    /// Parses the plain-text geometry format:
    ///
    /// ```text
    /// rows = 6
    /// cols = 6
    /// pitch = 0.003
    /// carrier_freq = 60e9
    /// missing = 0,0 0,5 5,0 5,5
    /// ```
    ///
    /// Omitted keys keep their default; `missing` may repeat and accumulates.
    /// `missing = none` declares a fully populated grid.
    pub fn from_config_str(text: &str, source: &str) -> Result<Self> {
        let doc = Document::parse(text, source)?;
        if let Some(b) = doc.blocks.first() {
            return Err(doc.error(b.line, "geometry files take no blocks"));
        }
        doc.check_keys(&doc.top, &["rows", "cols", "pitch", "carrier_freq", "missing"])?;
        let mut geom = ArrayGeometry::default();
        let mut missing: Option<BTreeSet<(usize, usize)>> = None;
        for e in &doc.top {
            match e.key.as_str() {
                "rows" => geom.rows = doc.scalar(e)?,
                "cols" => geom.cols = doc.scalar(e)?,
                "pitch" => geom.pitch = doc.scalar(e)?,
                "carrier_freq" => geom.carrier_freq = doc.scalar(e)?,
                "missing" => {
                    let set = missing.get_or_insert_with(BTreeSet::new);
                    if e.value != "none" {
                        set.extend(doc.pairs::<usize>(e)?);
                    }
                }
                _ => unreachable!(),
            }
        }
        if let Some(m) = missing {
            geom.missing = m;
        }
        geom.validate().map_err(|err| {
            doc.error(doc.top.last().map_or(1, |e| e.line), err.to_string())
        })?;
        Ok(geom)
    }

    pub fn to_config_string(&self) -> String {
        let missing = if self.missing.is_empty() {
            "none".to_string()
        } else {
            self.missing
                .iter()
                .map(|(r, c)| format!("{r},{c}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        format!(
            "rows = {}\ncols = {}\npitch = {}\ncarrier_freq = {}\nmissing = {}\n",
            self.rows, self.cols, self.pitch, self.carrier_freq, missing
        )
    }
}

/// Look direction: elevation θ and azimuth φ, both in radians within
/// [−π/2, π/2].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub elevation: f64,
    pub azimuth: f64,
}

impl Direction {
    pub fn new(elevation: f64, azimuth: f64) -> Result<Self> {
        let ok = |a: f64| a.is_finite() && (-FRAC_PI_2..=FRAC_PI_2).contains(&a);
        if ok(elevation) && ok(azimuth) {
            Ok(Direction { elevation, azimuth })
        } else {
            Err(Error::DirectionOutOfRange { elevation, azimuth })
        }
    }

    pub fn from_degrees(elevation: f64, azimuth: f64) -> Result<Self> {
        Self::new(elevation.to_radians(), azimuth.to_radians())
    }

    pub fn boresight() -> Self {
        Direction {
            elevation: 0.0,
            azimuth: 0.0,
        }
    }

    /// Unit vector `(cosθ cosφ, cosθ sinφ, sinθ)`.
    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.elevation.sin_cos();
        let (sp, cp) = self.azimuth.sin_cos();
        [ct * cp, ct * sp, st]
    }

    /// Direction of a point seen from the origin. The point must lie in
    /// front of the array (x > 0).
    pub fn towards(p: [f64; 3]) -> Result<Self> {
        let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        if !(p[0] > 0.0) || r == 0.0 {
            return Err(Error::InvalidScene(format!("point {p:?} is not in front of the array")));
        }
        let elevation = (p[2] / r).asin();
        let azimuth = p[1].atan2(p[0]);
        Direction::new(elevation, azimuth)
    }
}

/// A rectangular window of the element grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubarraySpec {
    pub anchor: (usize, usize),
    pub size: (usize, usize),
    /// Active-element index per window cell (row-major); `None` where the
    /// cell is unpopulated.
    pub element_indices: Vec<Option<usize>>,
}

impl SubarraySpec {
    pub fn new(geom: &ArrayGeometry, anchor: (usize, usize), size: (usize, usize)) -> Result<Self> {
        if size.0 == 0
            || size.1 == 0
            || anchor.0 + size.0 > geom.rows
            || anchor.1 + size.1 > geom.cols
        {
            return Err(Error::InvalidGeometry(format!(
                "{}x{} window at {:?} does not fit a {}x{} grid",
                size.0, size.1, anchor, geom.rows, geom.cols
            )));
        }
        let element_indices = (0..size.0)
            .flat_map(|dr| (0..size.1).map(move |dc| (anchor.0 + dr, anchor.1 + dc)))
            .map(|(r, c)| geom.element_index(r, c))
            .collect();
        Ok(SubarraySpec {
            anchor,
            size,
            element_indices,
        })
    }

    pub fn len(&self) -> usize {
        self.size.0 * self.size.1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_complete(&self) -> bool {
        self.element_indices.iter().all(Option::is_some)
    }

    /// Window offsets `(d_row, d_col)` in row-major order.
    pub fn offsets(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.size.0).flat_map(move |dr| (0..self.size.1).map(move |dc| (dr, dc)))
    }

    pub fn contains_cell(&self, row: usize, col: usize) -> bool {
        (self.anchor.0..self.anchor.0 + self.size.0).contains(&row)
            && (self.anchor.1..self.anchor.1 + self.size.1).contains(&col)
    }

    /// Element indices of a complete subarray.
    pub fn complete_indices(&self) -> Result<Vec<usize>> {
        self.element_indices
            .iter()
            .map(|i| i.ok_or(Error::MissingElementInSubarray))
            .collect()
    }
}

impl fmt::Display for SubarraySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}x{}@({},{})",
            self.size.0, self.size.1, self.anchor.0, self.anchor.1
        )
    }
}

/// Array response of a subarray to a plane wave from `dir`.
///
/// Element `i` has phase `+k (y_i cosθ sinφ + z_i sinθ)` with `(y_i, z_i)`
/// measured from the subarray anchor. The sign matches CIR taps carrying
/// `exp(−j 2π f_c τ)`: elements nearer the source see a shorter delay.
pub fn steering_vector(
    geom: &ArrayGeometry,
    sub: &SubarraySpec,
    dir: Direction,
) -> Result<DVector<Complex64>> {
    if !sub.is_complete() {
        return Err(Error::MissingElementInSubarray);
    }
    let dir = Direction::new(dir.elevation, dir.azimuth)?;
    Ok(steering_from_offsets(geom, sub, dir))
}

pub(crate) fn steering_from_offsets(
    geom: &ArrayGeometry,
    sub: &SubarraySpec,
    dir: Direction,
) -> DVector<Complex64> {
    let k = geom.wavenumber();
    let u = dir.unit_vector();
    DVector::from_iterator(
        sub.len(),
        sub.offsets().map(|(dr, dc)| {
            let y = dc as f64 * geom.pitch;
            let z = dr as f64 * geom.pitch;
            Complex64::from_polar(1.0, k * (y * u[1] + z * u[2]))
        }),
    )
}

/// All complete windows of the given size, anchors in row-major order.
pub fn enumerate_subarrays_sized(geom: &ArrayGeometry, size: (usize, usize)) -> Vec<SubarraySpec> {
    if size.0 > geom.rows || size.1 > geom.cols {
        return Vec::new();
    }
    (0..=geom.rows - size.0)
        .flat_map(|r| (0..=geom.cols - size.1).map(move |c| (r, c)))
        .filter_map(|anchor| SubarraySpec::new(geom, anchor, size).ok())
        .filter(SubarraySpec::is_complete)
        .collect()
}

/// All complete 4×4 subarrays of the geometry.
pub fn enumerate_subarrays(geom: &ArrayGeometry) -> Vec<SubarraySpec> {
    enumerate_subarrays_sized(geom, (SUBARRAY_SIDE, SUBARRAY_SIDE))
}
