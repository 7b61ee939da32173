use std::path::{Path, PathBuf};
use std::process::Command;

use mmid_core::cli::{
    cmd_dataset, cmd_metrics, cmd_simulate, cmd_spectrum, flip_cols, load_image, DatasetArgs, MetricsArgs, SimulateArgs,
    SpectrumArgs, SpectrumOptions, LABELS_FILE, SPECTRUM_FILE,
};
use mmid_core::container::{TensorContainer, TensorData};
use mmid_core::manifest::RunManifest;
use mmid_core::metrics::DepthImage;
use mmid_core::Error;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn simulate(out: &Path, frames: u64, seed: u64, empty: bool) -> RunManifest {
    cmd_simulate(&SimulateArgs {
        scene: configs().join("scenes/person_a.scene"),
        geometry: Some(configs().join("geometry.cfg")),
        frames,
        seed,
        out: out.to_path_buf(),
        empty,
    })
    .unwrap()
}

fn small_options() -> SpectrumOptions {
    SpectrumOptions {
        grid_size: Some(32),
        ..SpectrumOptions::default()
    }
}

fn write_image(path: &Path, rows: usize, cols: usize, values: Vec<f32>) {
    TensorContainer::new(vec![rows, cols], vec!["theta".into(), "phi".into()], TensorData::F32(values))
        .unwrap()
        .write(path)
        .unwrap();
}

fn mmid() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mmid"))
}

#[test]
fn simulate_records_every_frame() {
    let dir = tempfile::tempdir().unwrap();
    let m = simulate(dir.path(), 10, 1, false);
    assert_eq!(m.outputs.len(), 10);
    let back = RunManifest::read(dir.path()).unwrap();
    assert_eq!(back, m);
    back.verify(dir.path()).unwrap();
    assert_eq!(back.seed, Some(1));
    assert!(back.config.contains_key("geometry"));
}

#[test]
fn empty_scene_frames_round_trip_as_zero_cubes() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("void.scene");
    std::fs::write(&scene, "taps = 16\n").unwrap();
    cmd_simulate(&SimulateArgs {
        scene,
        geometry: None,
        frames: 2,
        seed: 0,
        out: dir.path().join("out"),
        empty: false,
    })
    .unwrap();
    let f = TensorContainer::read(&dir.path().join("out/frame_0001.mmid")).unwrap().to_cir().unwrap();
    assert_eq!(f.shape(), [32, 32, 16]);
    assert!(f.data.iter().all(|z| z.norm() == 0.0));
    assert!((f.timestamp - 0.1).abs() < 1e-12);
}

#[test]
fn manifest_detects_payload_mutation() {
    let dir = tempfile::tempdir().unwrap();
    let m = simulate(dir.path(), 2, 5, true);
    let path = dir.path().join("frame_0000.mmid");
    let mut bytes = std::fs::read(&path).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    std::fs::write(&path, bytes).unwrap();
    assert!(matches!(m.verify(dir.path()), Err(Error::ManifestMismatch(_))));
}

#[test]
fn spectrum_output_contract() {
    let dir = tempfile::tempdir().unwrap();
    simulate(&dir.path().join("f"), 3, 1, false);
    simulate(&dir.path().join("e"), 2, 2, true);
    let args = SpectrumArgs {
        frames_dir: dir.path().join("f"),
        empty_dir: dir.path().join("e"),
        options: small_options(),
        out: dir.path().join("s"),
        no_preview: false,
    };
    cmd_spectrum(&args).unwrap();
    let c = TensorContainer::read(&dir.path().join("s").join(SPECTRUM_FILE)).unwrap();
    assert_eq!(c.shape, [32, 32, 32]);
    assert_eq!(c.axis_names, ["theta", "phi", "tx"]);
    let TensorData::F32(v) = &c.data else { panic!("dtype") };
    assert!(v.iter().all(|x| (0.0..=1.0).contains(x)));
    assert!(dir.path().join("s/preview/tx_31.png").exists());
    let first = std::fs::read(dir.path().join("s").join(SPECTRUM_FILE)).unwrap();
    cmd_spectrum(&SpectrumArgs {
        out: dir.path().join("s2"),
        ..args
    })
    .unwrap();
    assert_eq!(first, std::fs::read(dir.path().join("s2").join(SPECTRUM_FILE)).unwrap());
}

#[test]
fn spectrum_names_the_mismatched_file() {
    let dir = tempfile::tempdir().unwrap();
    simulate(&dir.path().join("f"), 2, 1, false);
    simulate(&dir.path().join("e"), 1, 2, true);
    let odd = mmid_core::scene::CirFrame::zeros(32, 32, 48, 0.28e-9);
    let odd_path = dir.path().join("f/frame_0009.mmid");
    TensorContainer::from_cir(&odd).write(&odd_path).unwrap();
    let err = cmd_spectrum(&SpectrumArgs {
        frames_dir: dir.path().join("f"),
        empty_dir: dir.path().join("e"),
        options: small_options(),
        out: dir.path().join("s"),
        no_preview: true,
    })
    .unwrap_err();
    assert!(matches!(err, Error::DimensionMismatch(_)));
    assert!(err.to_string().contains("frame_0009.mmid"), "{err}");
}

#[test]
fn metrics_report_contract() {
    let dir = tempfile::tempdir().unwrap();
    let a: Vec<f32> = (0..32 * 32).map(|i| if (i / 7) % 3 == 0 { 1.5 } else { 0.0 }).collect();
    let not_a: Vec<f32> = a.iter().map(|&v| if v > 0.0 { 0.0 } else { 1.5 }).collect();
    write_image(&dir.path().join("a.mmid"), 32, 32, a);
    write_image(&dir.path().join("na.mmid"), 32, 32, not_a);
    let args = |b: &str| MetricsArgs {
        a: dir.path().join("a.mmid"),
        b: dir.path().join(b),
        threshold: 0.5,
        ssim_range: None,
    };
    let same = cmd_metrics(&args("a.mmid")).unwrap();
    assert_eq!(same.sd_percent, 0.0);
    assert_eq!(same.ssim, 1.0);
    assert_eq!(cmd_metrics(&args("na.mmid")).unwrap().sd_percent, 100.0);

    let out = mmid()
        .args(["metrics", "--threshold", "0.5"])
        .arg(dir.path().join("a.mmid"))
        .arg(dir.path().join("a.mmid"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let pairs: Vec<(&str, f64)> = text
        .lines()
        .map(|l| {
            let (k, v) = l.split_once('=').unwrap();
            (k, v.parse().unwrap())
        })
        .collect();
    assert_eq!(pairs, [("sd_percent", 0.0), ("ssim", 1.0)]);
}

#[test]
fn metrics_downsamples_the_finer_image() {
    let dir = tempfile::tempdir().unwrap();
    let coarse: Vec<f32> = (0..16 * 16).map(|i| if i % 16 < 8 { 1.0 } else { 0.0 }).collect();
    let fine: Vec<f32> = (0..32 * 32).map(|i| if i % 32 < 16 { 1.0 } else { 0.0 }).collect();
    write_image(&dir.path().join("c.mmid"), 16, 16, coarse);
    write_image(&dir.path().join("f.mmid"), 32, 32, fine);
    let r = cmd_metrics(&MetricsArgs {
        a: dir.path().join("f.mmid"),
        b: dir.path().join("c.mmid"),
        threshold: 0.5,
        ssim_range: None,
    })
    .unwrap();
    assert_eq!(r.sd_percent, 0.0);
}

#[test]
fn exit_codes() {
    assert_eq!(mmid().arg("spectrum").output().unwrap().status.code(), Some(1));
    assert_eq!(mmid().args(["simulate", "x.scene", "--frames", "0", "--out", "o"]).output().unwrap().status.code(), Some(1));
    assert_eq!(mmid().arg("--help").output().unwrap().status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.scene");
    std::fs::write(&bad, "taps = 64\n[target]\nposition = 1, 0\n").unwrap();
    let out = mmid()
        .arg("simulate")
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.scene:3:"));
}

fn dataset_args(scenes: PathBuf, out: PathBuf, count: usize) -> DatasetArgs {
    DatasetArgs {
        scenes,
        count,
        seed: 4,
        out,
        options: SpectrumOptions {
            grid_size: Some(32),
            ..SpectrumOptions::default()
        },
        frames: 2,
        empty_frames: 1,
        jitter: 0.1,
        flip: false,
        shift: false,
        rotate: false,
    }
}

#[test]
fn dataset_pairs_labels_and_flips() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = dataset_args(configs().join("scenes"), dir.path().join("plain"), 5);
    cmd_dataset(&args).unwrap();
    args.out = dir.path().join("aug");
    args.flip = true;
    args.rotate = true;
    args.shift = true;
    let m = cmd_dataset(&args).unwrap();
    m.verify(&args.out).unwrap();

    let labels = std::fs::read_to_string(dir.path().join("plain").join(LABELS_FILE)).unwrap();
    let rows: Vec<Vec<String>> = labels.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 5);
    // Two templates in round robin: labels 0,1,0,1,0.
    let count = |l: &str| rows.iter().filter(|r| r[1] == l).count();
    assert_eq!((count("0"), count("1")), (3, 2));
    for r in &rows {
        let id = &r[0];
        for kind in ["spectrum", "depth"] {
            let c = TensorContainer::read(&dir.path().join("plain").join(format!("{id}.{kind}.mmid"))).unwrap();
            assert_eq!(c.meta["sample_id"], *id);
            assert_eq!(c.meta["label"], r[1]);
        }
    }

    // Augmentation does not disturb the unaugmented samples.
    for id in ["00000", "00003"] {
        for kind in ["spectrum", "depth"] {
            let name = format!("{id}.{kind}.mmid");
            assert_eq!(
                std::fs::read(dir.path().join("plain").join(&name)).unwrap(),
                std::fs::read(dir.path().join("aug").join(&name)).unwrap()
            );
        }
    }
    let gt = load_image(&dir.path().join("aug/00002.depth.mmid")).unwrap();
    let flipped = load_image(&dir.path().join("aug/00002_flip.depth.mmid")).unwrap();
    let expect = DepthImage::new(gt.rows(), gt.cols(), flip_cols(gt.values(), gt.rows(), gt.cols())).unwrap();
    assert_eq!(flipped, expect);
    let spec = TensorContainer::read(&dir.path().join("aug/00002.spectrum.mmid")).unwrap();
    let spec_flip = TensorContainer::read(&dir.path().join("aug/00002_flip.spectrum.mmid")).unwrap();
    let (TensorData::F32(a), TensorData::F32(b)) = (&spec.data, &spec_flip.data) else { panic!("dtype") };
    let (rows, cols, txs) = (32, 32, 32);
    for r in 0..rows {
        for c in 0..cols {
            for t in 0..txs {
                assert_eq!(a[(r * cols + c) * txs + t], b[(r * cols + (cols - 1 - c)) * txs + t]);
            }
        }
    }
    let aug_rows = std::fs::read_to_string(args.out.join(LABELS_FILE)).unwrap().lines().count() - 1;
    assert_eq!(aug_rows, 20);
}

#[test]
fn dataset_without_templates_fails() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("none")).unwrap();
    let err = cmd_dataset(&dataset_args(dir.path().join("none"), dir.path().join("o"), 3)).unwrap_err();
    assert!(err.to_string().contains("no .scene templates"), "{err}");
    let err = cmd_dataset(&dataset_args(configs().join("scenes"), dir.path().join("o"), 0)).unwrap_err();
    assert!(matches!(err, Error::InvalidConfig(_)));
}
