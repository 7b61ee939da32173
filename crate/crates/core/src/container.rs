//! Portable tensor file shared with the learning stage.
//!
//! ```text
//! "MMID" | version: u16 LE | header_len: u32 LE | header (UTF-8) | payload
//! ```
//!
//! The header holds one `key=value` per line: `dtype` (`c64` or `f32`),
//! `shape` and `axis_names` as comma lists, and free `meta.<key>` entries.
//! The payload is row-major little-endian; `c64` is an interleaved pair of
//! `f32` (re, im), the layout of numpy's `complex64`.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::{Complex32, Complex64};

use crate::error::{Error, Result};
use crate::metrics::DepthImage;
use crate::scene::CirFrame;

pub const MAGIC: &[u8; 4] = b"MMID";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    C64,
    F32,
}

impl Dtype {
    pub fn element_size(self) -> usize {
        match self {
            Dtype::C64 => 8,
            Dtype::F32 => 4,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Dtype::C64 => "c64",
            Dtype::F32 => "f32",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    C64(Vec<Complex32>),
    F32(Vec<f32>),
}

impl TensorData {
    pub fn dtype(&self) -> Dtype {
        match self {
            TensorData::C64(_) => Dtype::C64,
            TensorData::F32(_) => Dtype::F32,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            TensorData::C64(v) => v.len(),
            TensorData::F32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorContainer {
    pub shape: Vec<usize>,
    pub axis_names: Vec<String>,
    pub meta: BTreeMap<String, String>,
    pub data: TensorData,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Container(msg.into())
}

fn check_token(s: &str, what: &str) -> Result<()> {
    if s.contains(['\n', '\r']) || (what != "meta value" && s.contains([',', '='])) {
        return Err(bad(format!("{what} `{s}` contains a reserved character")));
    }
    Ok(())
}

impl TensorContainer {
    pub fn new(shape: Vec<usize>, axis_names: Vec<String>, data: TensorData) -> Result<Self> {
        let c = TensorContainer {
            shape,
            axis_names,
            meta: BTreeMap::new(),
            data,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    pub fn dtype(&self) -> Dtype {
        self.data.dtype()
    }

    pub fn validate(&self) -> Result<()> {
        let count: usize = self.shape.iter().product();
        if self.shape.is_empty() || count != self.data.len() {
            return Err(bad(format!(
                "shape {:?} does not hold {} values",
                self.shape,
                self.data.len()
            )));
        }
        if self.axis_names.len() != self.shape.len() {
            return Err(bad(format!(
                "{} axis names for {} axes",
                self.axis_names.len(),
                self.shape.len()
            )));
        }
        for a in &self.axis_names {
            check_token(a, "axis name")?;
        }
        for (k, v) in &self.meta {
            check_token(k, "meta key")?;
            check_token(v, "meta value")?;
        }
        Ok(())
    }

    pub fn meta_value<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self
            .meta
            .get(key)
            .ok_or_else(|| bad(format!("missing meta entry `{key}`")))?;
        raw.parse()
            .map_err(|_| bad(format!("meta entry `{key}` has unparsable value `{raw}`")))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let join = |v: Vec<String>| v.join(",");
        let mut header = format!(
            "dtype={}\nshape={}\naxis_names={}\n",
            self.dtype().name(),
            join(self.shape.iter().map(|d| d.to_string()).collect()),
            join(self.axis_names.clone()),
        );
        for (k, v) in &self.meta {
            header.push_str(&format!("meta.{k}={v}\n"));
        }
        let mut out = Vec::with_capacity(10 + header.len() + self.data.len() * self.dtype().element_size());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(header.as_bytes());
        match &self.data {
            TensorData::C64(v) => {
                for z in v {
                    out.extend_from_slice(&z.re.to_le_bytes());
                    out.extend_from_slice(&z.im.to_le_bytes());
                }
            }
            TensorData::F32(v) => {
                for x in v {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 10 || &bytes[..4] != MAGIC {
            return Err(bad("missing MMID magic"));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let header_len = u32::from_le_bytes([bytes[6], bytes[7], bytes[8], bytes[9]]) as usize;
        let header_end = 10usize
            .checked_add(header_len)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| bad("header runs past end of file"))?;
        let header = std::str::from_utf8(&bytes[10..header_end]).map_err(|_| bad("header is not UTF-8"))?;

        let (mut dtype, mut shape, mut axis_names) = (None, None, None);
        let mut meta = BTreeMap::new();
        for line in header.lines().filter(|l| !l.is_empty()) {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("header line `{line}` lacks `=`")))?;
            let list = || value.split(',').filter(|s| !s.is_empty());
            match key {
                "dtype" => {
                    dtype = Some(match value {
                        "c64" => Dtype::C64,
                        "f32" => Dtype::F32,
                        other => return Err(bad(format!("unknown dtype `{other}`"))),
                    })
                }
                "shape" => {
                    shape = Some(
                        list()
                            .map(|s| s.parse::<usize>().map_err(|_| bad(format!("bad shape entry `{s}`"))))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                "axis_names" => axis_names = Some(list().map(String::from).collect::<Vec<_>>()),
                k => match k.strip_prefix("meta.") {
                    Some(m) => {
                        meta.insert(m.to_string(), value.to_string());
                    }
                    None => return Err(bad(format!("unknown header key `{k}`"))),
                },
            }
        }
        let dtype = dtype.ok_or_else(|| bad("header lacks dtype"))?;
        let shape = shape.ok_or_else(|| bad("header lacks shape"))?;
        let axis_names = axis_names.unwrap_or_default();
        let count = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| bad("shape overflows"))?;
        let payload = &bytes[header_end..];
        if Some(payload.len()) != count.checked_mul(dtype.element_size()) {
            return Err(bad(format!(
                "payload has {} bytes, shape {:?} of {} needs {}",
                payload.len(),
                shape,
                dtype.name(),
                count * dtype.element_size()
            )));
        }
        let f32s = payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]));
        let data = match dtype {
            Dtype::F32 => TensorData::F32(f32s.collect()),
            Dtype::C64 => {
                let flat: Vec<f32> = f32s.collect();
                TensorData::C64(flat.chunks_exact(2).map(|p| Complex32::new(p[0], p[1])).collect())
            }
        };
        let c = TensorContainer {
            shape,
            axis_names,
            meta,
            data,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            Error::Container(m) => Error::Container(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// `[tx, rx, tap]` complex cube; values are rounded to single precision.
    pub fn from_cir(frame: &CirFrame) -> Self {
        let data = frame
            .data
            .iter()
            .map(|z| Complex32::new(z.re as f32, z.im as f32))
            .collect();
        TensorContainer {
            shape: frame.shape().to_vec(),
            axis_names: vec!["tx".into(), "rx".into(), "tap".into()],
            meta: BTreeMap::new(),
            data: TensorData::C64(data),
        }
        .with_meta("tap_spacing", frame.tap_spacing)
        .with_meta("timestamp", frame.timestamp)
    }

    pub fn to_cir(&self) -> Result<CirFrame> {
        let TensorData::C64(v) = &self.data else {
            return Err(bad("CIR frames must be c64"));
        };
        let [tx, rx, taps] = self.shape[..] else {
            return Err(bad(format!("CIR frames are 3-D, got shape {:?}", self.shape)));
        };
        let data = v.iter().map(|z| Complex64::new(z.re as f64, z.im as f64)).collect();
        let mut frame = CirFrame::from_data(tx, rx, taps, self.meta_value("tap_spacing")?, data)?;
        frame.timestamp = self.meta_value("timestamp").unwrap_or(0.0);
        Ok(frame)
    }

    pub fn from_depth(img: &DepthImage) -> Self {
        TensorContainer {
            shape: vec![img.rows(), img.cols()],
            axis_names: vec!["theta".into(), "phi".into()],
            meta: BTreeMap::new(),
            data: TensorData::F32(img.values().iter().map(|&v| v as f32).collect()),
        }
    }

    pub fn to_depth(&self) -> Result<DepthImage> {
        let TensorData::F32(v) = &self.data else {
            return Err(bad("depth images must be f32"));
        };
        let [rows, cols] = self.shape[..] else {
            return Err(bad(format!("depth images are 2-D, got shape {:?}", self.shape)));
        };
        DepthImage::new(rows, cols, v.iter().map(|&x| x as f64).collect())
    }
}
