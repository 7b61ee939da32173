//! `mmid` command-line front-end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::array::ArrayGeometry;
use crate::container::TensorContainer;
use crate::error::{Error, Result};
use crate::manifest::RunManifest;
use crate::scene::CirFrame;
use crate::spectrum::{MusicConfig, Reduction, SourceOrderMode};

mod dataset;
mod metrics;
mod simulate;
mod spectrum;

pub use dataset::{cmd_dataset, flip_cols, rotate_quarter, shift_cols, LABELS_FILE};
pub use metrics::{cmd_metrics, load_image, MetricsReport};
pub use simulate::{cmd_simulate, frame_file_name, FRAME_INTERVAL};
pub use spectrum::{cmd_spectrum, SPECTRUM_FILE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "mmid", version, about = "Synthetic 60 GHz radar imaging pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize CIR frames of a scene file.
    Simulate(SimulateArgs),
    /// Background removal and MUSIC spectra for a directory of frames.
    Spectrum(SpectrumArgs),
    /// Silhouette difference and SSIM between two images.
    Metrics(MetricsArgs),
    /// Paired spectrum / ground-truth / label samples from scene templates.
    Dataset(DatasetArgs),
    /// Re-hash the outputs listed in a run manifest.
    Verify {
        /// Directory holding manifest.json.
        dir: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    pub scene: PathBuf,
    /// Array geometry file; the 6×6 corner-less device when omitted.
    #[arg(long)]
    pub geometry: Option<PathBuf>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub frames: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Drop targets and phantom, leaving clutter and leakage.
    #[arg(long)]
    pub empty: bool,
}

/// Spectrum settings shared by `spectrum` and `dataset`. Flags override the
/// configuration file.
#[derive(Debug, Clone, Default, Args)]
pub struct SpectrumOptions {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub geometry: Option<PathBuf>,
    /// Half-extent of the angular grid, degrees.
    #[arg(long)]
    pub grid_extent: Option<f64>,
    #[arg(long)]
    pub grid_size: Option<usize>,
    /// Range gate `near,far` in meters.
    #[arg(long, value_parser = parse_range_gate)]
    pub range_gate: Option<(f64, f64)>,
    /// `fixed:M`, `eigengap` or `energy:EPS`.
    #[arg(long)]
    pub order_mode: Option<SourceOrderMode>,
    /// Joint transmitter smoothing, `on` or `off`.
    #[arg(long, value_parser = parse_switch)]
    pub jts: Option<bool>,
    /// `max` or `depth`.
    #[arg(long)]
    pub reduction: Option<Reduction>,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    pub frames_dir: PathBuf,
    pub empty_dir: PathBuf,
    #[command(flatten)]
    pub options: SpectrumOptions,
    #[arg(long)]
    pub out: PathBuf,
    /// Skip the per-Tx PNG previews.
    #[arg(long)]
    pub no_preview: bool,
}

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    /// Pixels above this value are foreground.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// SSIM dynamic range; the joint value span when omitted.
    #[arg(long)]
    pub ssim_range: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    /// Directory of `*.scene` templates; each must define a phantom.
    #[arg(long)]
    pub scenes: PathBuf,
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub options: SpectrumOptions,
    /// Target frames per sample.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub frames: u64,
    /// Empty-room frames per sample.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    pub empty_frames: u64,
    /// Maximum random lateral offset of the phantom, meters.
    #[arg(long, default_value_t = 0.1)]
    pub jitter: f64,
    /// Also emit an azimuth-mirrored copy of every sample.
    #[arg(long)]
    pub flip: bool,
    /// Also emit an azimuth-shifted copy of every sample.
    #[arg(long)]
    pub shift: bool,
    /// Also emit a copy rotated by a random quarter turn.
    #[arg(long)]
    pub rotate: bool,
}

fn parse_switch(s: &str) -> std::result::Result<bool, String> {
    match s {
        "on" | "true" => Ok(true),
        "off" | "false" => Ok(false),
        other => Err(format!("expected on or off, got `{other}`")),
    }
}

fn parse_range_gate(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected NEAR,FAR")?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok((parse(a)?, parse(b)?))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn load_geometry(path: Option<&Path>, manifest: &mut RunManifest) -> Result<ArrayGeometry> {
    let geom = match path {
        Some(p) => {
            manifest.add_input(p)?;
            ArrayGeometry::from_config_str(&read_text(p)?, &p.display().to_string())?
        }
        None => ArrayGeometry::default(),
    };
    manifest.set_config("geometry", geom.to_config_string());
    Ok(geom)
}

impl SpectrumOptions {
    /// Builds the spectrum configuration for frames with `tap_spacing`.
    pub fn resolve(&self, tap_spacing: f64, manifest: &mut RunManifest) -> Result<MusicConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                manifest.add_input(p)?;
                MusicConfig::from_config_str(&read_text(p)?, &p.display().to_string(), tap_spacing)?
            }
            None => {
                let mut c = MusicConfig::default();
                let (near, far) = crate::spectrum::config::DEFAULT_RANGE_GATE_M;
                c.set_range_gate_m(near, far, tap_spacing)?;
                c
            }
        };
        if let Some(e) = self.grid_extent {
            cfg.grid_extent_deg = e;
        }
        if let Some(n) = self.grid_size {
            cfg.grid_size = n;
        }
        if let Some((near, far)) = self.range_gate {
            cfg.set_range_gate_m(near, far, tap_spacing)?;
        }
        if let Some(m) = self.order_mode {
            cfg.order = m;
        }
        if let Some(j) = self.jts {
            cfg.smoothing.jts = j;
        }
        if let Some(r) = self.reduction {
            cfg.reduction = r;
        }
        manifest.set_config("spectrum", cfg.to_config_string(tap_spacing));
        Ok(cfg)
    }
}

/// Reads every `*.mmid` frame in `dir` in file-name order. All frames must
/// share one shape.
pub fn read_frame_dir(dir: &Path) -> Result<Vec<(PathBuf, CirFrame)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "mmid"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidConfig(format!("no .mmid frames in {}", dir.display())));
    }
    let mut frames: Vec<(PathBuf, CirFrame)> = Vec::with_capacity(paths.len());
    for p in paths {
        let f = TensorContainer::read(&p)?
            .to_cir()
            .map_err(|e| Error::Container(format!("{}: {e}", p.display())))?;
        if let Some((p0, f0)) = frames.first() {
            if !f.same_shape(f0) {
                return Err(Error::DimensionMismatch(format!(
                    "{} has shape {:?} but {} has {:?}",
                    p.display(),
                    f.shape(),
                    p0.display(),
                    f0.shape()
                )));
            }
        }
        frames.push((p, f));
    }
    Ok(frames)
}

/// Parses `args` and runs the command, writing reports to `out` and
/// diagnostics to stderr. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a).map(|m| format!("wrote {} frames to {}\n", m.outputs.len(), a.out.display())),
        Command::Spectrum(a) => cmd_spectrum(a).map(|_| format!("wrote {}\n", a.out.join(SPECTRUM_FILE).display())),
        Command::Metrics(a) => cmd_metrics(a).map(|r| r.to_string()),
        Command::Dataset(a) => cmd_dataset(a).map(|m| {
            format!("wrote {} files to {}\n", m.outputs.len(), a.out.display())
        }),
        Command::Verify { dir } => RunManifest::read(dir)
            .and_then(|m| m.verify(dir).map(|_| m))
            .map(|m| format!("ok: {} outputs verified\n", m.outputs.len())),
    };
    match result {
        Ok(report) => {
            let _ = out.write_all(report.as_bytes());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}
