use std::path::Path;

use image::{GrayImage, ImageFormat};

use super::{create_dir, load_geometry, read_frame_dir, SpectrumArgs};
use crate::container::{TensorContainer, TensorData};
use crate::error::{Error, Result};
use crate::manifest::RunManifest;
use crate::preprocess::EmptyCirSet;
use crate::spectrum::{build_spectrum_tensor, MusicConfig, SpectrumImage, SpectrumTensor};

pub const SPECTRUM_FILE: &str = "spectrum.mmid";

pub(crate) fn tensor_container(t: &SpectrumTensor, cfg: &MusicConfig) -> Result<TensorContainer> {
    Ok(TensorContainer::new(
        t.shape().to_vec(),
        vec!["theta".into(), "phi".into(), "tx".into()],
        TensorData::F32(t.to_f32()),
    )?
    .with_meta("grid_extent_deg", cfg.grid_extent_deg)
    .with_meta("reduction", cfg.reduction)
    .with_meta("range_gate_first_tap", cfg.range_gate.0)
    .with_meta("range_gate_last_tap", cfg.range_gate.1))
}

/// 8-bit grayscale rendering with elevation increasing upwards.
pub(crate) fn write_preview(img: &SpectrumImage, path: &Path) -> Result<()> {
    let (rows, cols) = (img.rows(), img.cols());
    let mut bytes = Vec::with_capacity(rows * cols);
    for r in (0..rows).rev() {
        bytes.extend((0..cols).map(|c| (img.get(r, c).clamp(0.0, 1.0) * 255.0).round() as u8));
    }
    let gray = GrayImage::from_raw(cols as u32, rows as u32, bytes).expect("buffer matches size");
    gray.save_with_format(path, ImageFormat::Png)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))
}

pub fn cmd_spectrum(args: &SpectrumArgs) -> Result<RunManifest> {
    let mut manifest = RunManifest::new("spectrum", None);
    let frames = read_frame_dir(&args.frames_dir)?;
    let empties = read_frame_dir(&args.empty_dir)?;
    let (p0, f0) = &frames[0];
    let (e0, ef) = &empties[0];
    if !ef.same_shape(f0) {
        return Err(Error::DimensionMismatch(format!(
            "{} has shape {:?} but {} has {:?}",
            e0.display(),
            ef.shape(),
            p0.display(),
            f0.shape()
        )));
    }
    for (p, _) in frames.iter().chain(&empties) {
        manifest.add_input(p)?;
    }
    let geom = load_geometry(args.options.geometry.as_deref(), &mut manifest)?;
    if f0.rx_count != geom.active_count() || f0.tx_count != geom.active_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} carries {}x{} Tx/Rx elements, geometry has {}",
            p0.display(),
            f0.tx_count,
            f0.rx_count,
            geom.active_count()
        )));
    }
    let cfg = args.options.resolve(f0.tap_spacing, &mut manifest)?;
    cfg.validate(f0.taps)?;

    let frames: Vec<_> = frames.into_iter().map(|(_, f)| f).collect();
    let empty = EmptyCirSet::new(empties.into_iter().map(|(_, f)| f).collect())?;
    let tensor = build_spectrum_tensor(&frames, &empty, &geom, &cfg)?;

    create_dir(&args.out)?;
    tensor_container(&tensor, &cfg)?.write(&args.out.join(SPECTRUM_FILE))?;
    manifest.add_output(&args.out, SPECTRUM_FILE)?;
    if !args.no_preview {
        create_dir(&args.out.join("preview"))?;
        for img in &tensor.images {
            let name = format!("preview/tx_{:02}.png", img.tx_index);
            write_preview(img, &args.out.join(&name))?;
            manifest.add_output(&args.out, &name)?;
        }
    }
    manifest.write(&args.out)?;
    Ok(manifest)
}
