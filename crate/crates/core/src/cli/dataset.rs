use std::fmt::Write as _;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::simulate::frame_seeds;
use super::spectrum::tensor_container;
use super::{create_dir, load_geometry, read_text, DatasetArgs};
use crate::container::TensorContainer;
use crate::error::{Error, Result};
use crate::grid::{AngularGrid, DEPTH_SIZE};
use crate::manifest::RunManifest;
use crate::metrics::DepthImage;
use crate::phantom::{render_ground_truth, sample_phantom};
use crate::preprocess::EmptyCirSet;
use crate::scene::{synthesize_cir, SceneDescription};
use crate::spectrum::build_spectrum_tensor;

pub const LABELS_FILE: &str = "labels.csv";
/// Largest azimuth shift of the shift augmentation, in spectrum cells.
const MAX_SHIFT: i64 = 8;

/// Mirrors a row-major image left to right (azimuth `φ → −φ`).
pub fn flip_cols(v: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    (0..rows)
        .flat_map(|r| (0..cols).rev().map(move |c| v[r * cols + c]))
        .collect()
}

/// Moves every column `k` places to the right, filling with zeros.
pub fn shift_cols(v: &[f64], rows: usize, cols: usize, k: i64) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let src = c as i64 - k;
            if (0..cols as i64).contains(&src) {
                out[r * cols + c] = v[r * cols + src as usize];
            }
        }
    }
    out
}

/// Rotates a square image by `q` quarter turns; one turn sends pixel
/// `(r, c)` to `(c, n−1−r)`.
pub fn rotate_quarter(v: &[f64], n: usize, q: u32) -> Vec<f64> {
    let mut cur = v.to_vec();
    for _ in 0..q % 4 {
        let mut next = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                next[c * n + (n - 1 - r)] = cur[r * n + c];
            }
        }
        cur = next;
    }
    cur
}

#[derive(Debug, Clone, Copy)]
enum Augment {
    Identity,
    Flip,
    /// Shift in spectrum cells.
    Shift(i64),
    Rotate(u32),
}

impl Augment {
    fn suffix(self) -> &'static str {
        match self {
            Augment::Identity => "",
            Augment::Flip => "_flip",
            Augment::Shift(_) => "_shift",
            Augment::Rotate(_) => "_rot",
        }
    }

    fn name(self) -> String {
        match self {
            Augment::Identity => "none".into(),
            Augment::Flip => "flip".into(),
            Augment::Shift(k) => format!("shift:{k}"),
            Augment::Rotate(q) => format!("rotate:{q}"),
        }
    }

    /// `scale` converts spectrum cells to cells of this image.
    fn apply(self, v: &[f64], rows: usize, cols: usize, scale: i64) -> Vec<f64> {
        match self {
            Augment::Identity => v.to_vec(),
            Augment::Flip => flip_cols(v, rows, cols),
            Augment::Shift(k) => shift_cols(v, rows, cols, k * scale),
            Augment::Rotate(q) => rotate_quarter(v, rows, q),
        }
    }
}

fn load_templates(args: &DatasetArgs, manifest: &mut RunManifest) -> Result<Vec<(PathBuf, SceneDescription)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&args.scenes)
        .map_err(|e| Error::io(&args.scenes, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "scene"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no .scene templates in {}",
            args.scenes.display()
        )));
    }
    let mut out = Vec::with_capacity(paths.len());
    for p in paths {
        manifest.add_input(&p)?;
        let desc = SceneDescription::parse(&read_text(&p)?, &p.display().to_string())?;
        if desc.phantom.is_none() {
            return Err(Error::InvalidScene(format!("{} defines no phantom", p.display())));
        }
        if let Some((p0, d0)) = out.first() {
            let d0: &SceneDescription = d0;
            if d0.params.tap_spacing != desc.params.tap_spacing || d0.params.taps != desc.params.taps {
                return Err(Error::DimensionMismatch(format!(
                    "{} and {} use different tap settings",
                    p.display(),
                    PathBuf::from(p0).display()
                )));
            }
        }
        out.push((p, desc));
    }
    Ok(out)
}

/// Emits `count` samples, cycling through the templates in file-name
/// order. Each sample gets a randomly offset phantom, fresh speckle and
/// noise, its spectrum tensor, the rendered ground truth and the template's
/// label (its index when the file sets none).
pub fn cmd_dataset(args: &DatasetArgs) -> Result<RunManifest> {
    if args.count == 0 {
        return Err(Error::InvalidConfig("--count must be positive".into()));
    }
    if !(args.jitter >= 0.0) {
        return Err(Error::InvalidConfig("--jitter must be non-negative".into()));
    }
    let mut manifest = RunManifest::new("dataset", Some(args.seed));
    let templates = load_templates(args, &mut manifest)?;
    let geom = load_geometry(args.options.geometry.as_deref(), &mut manifest)?;
    let params = templates[0].1.params;
    let cfg = args.options.resolve(params.tap_spacing, &mut manifest)?;
    cfg.validate(params.taps)?;
    for (key, on) in [("flip", args.flip), ("shift", args.shift), ("rotate", args.rotate)] {
        manifest.set_config(key, on);
    }
    manifest.set_config("frames", args.frames);
    manifest.set_config("empty_frames", args.empty_frames);
    manifest.set_config("jitter", args.jitter);

    let gt_grid = AngularGrid::uniform(DEPTH_SIZE, DEPTH_SIZE, cfg.grid_extent_deg.to_radians())?;
    let scale = DEPTH_SIZE / cfg.grid_size;
    if args.shift && scale * cfg.grid_size != DEPTH_SIZE {
        return Err(Error::InvalidConfig(format!(
            "shift augmentation needs a grid size dividing {DEPTH_SIZE}, got {}",
            cfg.grid_size
        )));
    }

    create_dir(&args.out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut labels = String::from("id,label,template,augmentation\n");
    for i in 0..args.count {
        let t = i % templates.len();
        let (path, desc) = &templates[t];
        let label = desc.label.unwrap_or(t);
        // Draw every parameter regardless of flags so samples do not depend
        // on which augmentations are enabled.
        let sample_seed: u64 = rng.random();
        let dy = if args.jitter > 0.0 {
            rng.random_range(-args.jitter..=args.jitter)
        } else {
            0.0
        };
        let mut k = rng.random_range(1..=MAX_SHIFT);
        if rng.random::<bool>() {
            k = -k;
        }
        let q = rng.random_range(1..=3u32);

        let phantom = desc.phantom.as_ref().expect("checked on load").translated(dy, 0.0);
        let mut scene = desc.scene.clone();
        scene.targets.extend(sample_phantom(&phantom, sample_seed)?);
        let frames = frame_seeds(sample_seed, false, args.frames)
            .into_iter()
            .map(|s| synthesize_cir(&scene, &geom, &desc.params, s))
            .collect::<Result<Vec<_>>>()?;
        let background = scene.without_targets();
        let empty = EmptyCirSet::new(
            frame_seeds(sample_seed, true, args.empty_frames)
                .into_iter()
                .map(|s| synthesize_cir(&background, &geom, &desc.params, s))
                .collect::<Result<Vec<_>>>()?,
        )?;
        let tensor = build_spectrum_tensor(&frames, &empty, &geom, &cfg)?;
        let gt = render_ground_truth(&phantom, &gt_grid)?;

        let mut variants = vec![Augment::Identity];
        if args.flip {
            variants.push(Augment::Flip);
        }
        if args.shift {
            variants.push(Augment::Shift(k));
        }
        if args.rotate {
            variants.push(Augment::Rotate(q));
        }
        let template_name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        for aug in variants {
            let id = format!("{i:05}{}", aug.suffix());
            let mut t_aug = tensor.clone();
            for img in &mut t_aug.images {
                img.values = aug.apply(&img.values, img.rows(), img.cols(), 1);
            }
            let gt_aug = DepthImage::new(
                gt.rows(),
                gt.cols(),
                aug.apply(gt.values(), gt.rows(), gt.cols(), scale as i64),
            )?;
            let spec_name = format!("{id}.spectrum.mmid");
            let depth_name = format!("{id}.depth.mmid");
            tensor_container(&t_aug, &cfg)?
                .with_meta("sample_id", &id)
                .with_meta("label", label)
                .write(&args.out.join(&spec_name))?;
            TensorContainer::from_depth(&gt_aug)
                .with_meta("sample_id", &id)
                .with_meta("label", label)
                .write(&args.out.join(&depth_name))?;
            manifest.add_output(&args.out, &spec_name)?;
            manifest.add_output(&args.out, &depth_name)?;
            writeln!(labels, "{id},{label},{template_name},{}", aug.name()).expect("string write");
        }
    }
    let labels_path = args.out.join(LABELS_FILE);
    std::fs::write(&labels_path, labels).map_err(|e| Error::io(&labels_path, e))?;
    manifest.add_output(&args.out, LABELS_FILE)?;
    manifest.write(&args.out)?;
    Ok(manifest)
}
