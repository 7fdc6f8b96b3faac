use std::fmt::Write as _;
use std::path::Path;

use cxr_core::eval::{make_synthetic_dataset, SyntheticImage};
use cxr_core::net::imageio::save_image;

use super::{run_config, synthetic_seeds};
use crate::args::{GlobalArgs, SynthArgs};
use crate::error::Result;
use crate::manifest::{ensure_dir, RunManifest};
use crate::write_file;

/// `<id>.pgm` plus sidecar per image and a `labels.csv` of `study_id,label`.
pub fn write_split(dir: &Path, images: &[SyntheticImage]) -> Result<()> {
    ensure_dir(dir)?;
    let mut labels = String::from("study_id,label\n");
    for img in images {
        save_image(
            &dir.join(format!("{}.pgm", img.study_id)),
            &img.study_id,
            img.height,
            img.width,
            &img.pixels,
        )?;
        let _ = writeln!(labels, "{},{}", img.study_id, img.label);
    }
    write_file(&dir.join("labels.csv"), labels.as_bytes())
}

pub fn run(global: &GlobalArgs, args: &SynthArgs) -> Result<()> {
    let rc = run_config(global)?;
    let seed = rc.graph.seed;
    let size = match args.size {
        Some(s) => (s, s),
        None => (rc.graph.input_height, rc.graph.input_width),
    };
    let (train_seed, holdout_seed) = synthetic_seeds(seed);
    let mut manifest = RunManifest::start("synth", seed);
    manifest.config.insert("n_per_class".into(), args.n_per_class.to_string());
    manifest.config.insert("holdout_per_class".into(), args.holdout_per_class.to_string());
    manifest.config.insert("size".into(), format!("{}x{}", size.0, size.1));

    ensure_dir(&args.out)?;
    let train_dir = args.out.join("train");
    let holdout_dir = args.out.join("holdout");
    write_split(&train_dir, &make_synthetic_dataset(args.n_per_class, size, train_seed))?;
    write_split(&holdout_dir, &make_synthetic_dataset(args.holdout_per_class, size, holdout_seed))?;
    manifest.output("train", &train_dir);
    manifest.output("holdout", &holdout_dir);
    manifest.finish(&args.out)?;
    Ok(())
}
