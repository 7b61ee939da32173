use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{create_dir, load_geometry, read_text, SimulateArgs};
use crate::container::TensorContainer;
use crate::error::Result;
use crate::manifest::RunManifest;
use crate::scene::{synthesize_cir, SceneDescription};

/// Seconds between consecutive simulated frames.
pub const FRAME_INTERVAL: f64 = 0.1;

pub fn frame_file_name(index: u64) -> String {
    format!("frame_{index:04}.mmid")
}

/// Noise seeds for successive frames. Empty-room runs draw from a separate
/// stream so they never share noise with a target run of the same seed.
pub(crate) fn frame_seeds(seed: u64, empty: bool, count: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(empty));
    (0..count).map(|_| rng.random()).collect()
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<RunManifest> {
    let mut manifest = RunManifest::new("simulate", Some(args.seed));
    manifest.add_input(&args.scene)?;
    let desc = SceneDescription::parse(&read_text(&args.scene)?, &args.scene.display().to_string())?;
    let geom = load_geometry(args.geometry.as_deref(), &mut manifest)?;
    manifest.set_config("frames", args.frames);
    manifest.set_config("empty", args.empty);
    manifest.set_config("taps", desc.params.taps);
    manifest.set_config("tap_spacing", desc.params.tap_spacing);
    manifest.set_config("deposition", format!("{:?}", desc.params.deposition));

    let mut scene = desc.realize(args.seed)?;
    if args.empty {
        scene = scene.without_targets();
    }
    create_dir(&args.out)?;
    for (i, s) in frame_seeds(args.seed, args.empty, args.frames).into_iter().enumerate() {
        let mut frame = synthesize_cir(&scene, &geom, &desc.params, s)?;
        frame.timestamp = i as f64 * FRAME_INTERVAL;
        let name = frame_file_name(i as u64);
        TensorContainer::from_cir(&frame).write(&args.out.join(&name))?;
        manifest.add_output(&args.out, &name)?;
    }
    manifest.write(&args.out)?;
    Ok(manifest)
}
