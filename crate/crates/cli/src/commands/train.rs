use cxr_core::eval::{make_synthetic_dataset, Label};
use cxr_core::net::train::train_toy_observed;
use cxr_core::net::{build_pyramid_graph, save_checkpoint, Dataset, Example, NadamHyper, TrainOptions};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::data::load_labeled_dir;
use super::{run_config, synthetic_seeds};
use crate::args::{GlobalArgs, TrainArgs};
use crate::error::{CliError, Result};
use crate::manifest::{ensure_dir, RunManifest};
use crate::write_file;

/// Permutes labels across the training and held-out sets together.
pub fn shuffle_labels(data: &mut Dataset<f64>, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(4);
    let mut labels: Vec<Label> = data.train.iter().chain(&data.holdout).map(|e| e.label).collect();
    labels.shuffle(&mut rng);
    for (e, l) in data.train.iter_mut().chain(data.holdout.iter_mut()).zip(labels) {
        e.label = l;
    }
}

fn synthetic_dataset(args: &TrainArgs, size: (usize, usize), seed: u64) -> Result<Dataset<f64>> {
    let (train_seed, holdout_seed) = synthetic_seeds(seed);
    let convert = |n, s| {
        make_synthetic_dataset(n, size, s)
            .iter()
            .map(|img| {
                Ok(Example {
                    image: img.to_tensor()?,
                    label: img.label,
                })
            })
            .collect::<Result<Vec<_>>>()
    };
    Ok(Dataset {
        train: convert(args.n_per_class, train_seed)?,
        holdout: convert(args.holdout_per_class, holdout_seed)?,
    })
}

fn directory_dataset(dir: &std::path::Path, size: (usize, usize)) -> Result<Dataset<f64>> {
    let split = |name: &str| -> Result<Vec<Example<f64>>> {
        Ok(load_labeled_dir(&dir.join(name), None, size, true)?
            .into_iter()
            .map(|li| Example {
                image: li.image,
                label: li.label.expect("labels required"),
            })
            .collect())
    };
    Ok(Dataset {
        train: split("train")?,
        holdout: split("holdout")?,
    })
}

pub fn run(global: &GlobalArgs, args: &TrainArgs) -> Result<()> {
    let mut rc = run_config(global)?;
    if let Some(e) = args.epochs {
        rc.train.epochs = e;
    }
    let seed = rc.graph.seed;
    let size = (rc.graph.input_height, rc.graph.input_width);
    let mut manifest = RunManifest::start("train", seed);
    manifest.config_text(&rc.to_text());
    if let Some(c) = &global.config {
        manifest.input("config", c);
    }

    let mut data = match &args.data_dir {
        Some(dir) => {
            manifest.input("data_dir", dir);
            directory_dataset(dir, size)?
        }
        None => {
            manifest.config.insert("n_per_class".into(), args.n_per_class.to_string());
            manifest.config.insert("holdout_per_class".into(), args.holdout_per_class.to_string());
            synthetic_dataset(args, size, seed)?
        }
    };
    if args.shuffle_labels {
        shuffle_labels(&mut data, seed);
    }
    manifest.config.insert("shuffle_labels".into(), args.shuffle_labels.to_string());

    let graph = build_pyramid_graph::<f64>(&rc.graph)?;
    let options = TrainOptions {
        epochs: rc.train.epochs,
        batch_size: rc.train.batch_size,
        seed,
    };
    eprintln!(
        "training {} parameters on {} images, {} held out",
        graph.plan().parameter_count(),
        data.train.len(),
        data.holdout.len()
    );
    let (log, graph) = train_toy_observed(
        graph,
        &data,
        &rc.augment,
        NadamHyper::from(&rc.train),
        options,
        |r| eprintln!("epoch {:>3}  loss {:.4}  holdout auc {:.4}", r.epoch, r.mean_loss, r.holdout_auc),
    )
    .map_err(|e| match e {
        cxr_core::CoreError::NonFinite { .. } => CliError::Internal(format!("training diverged: {}", e)),
        other => other.into(),
    })?;

    ensure_dir(&args.out)?;
    let model_path = args.out.join("model.cxrt");
    save_checkpoint(&model_path, &rc.graph, graph.params()).map_err(|e| match e {
        cxr_core::CoreError::Io(source) => CliError::io(&model_path, source),
        other => other.into(),
    })?;
    let log_path = args.out.join("training_log.csv");
    write_file(&log_path, log.to_csv().as_bytes())?;
    manifest.output("checkpoint", &model_path);
    manifest.output("training_log", &log_path);
    manifest.finish(&args.out)?;
    Ok(())
}
