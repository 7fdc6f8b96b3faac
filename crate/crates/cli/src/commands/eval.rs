use std::path::Path;

use cxr_core::eval::artifacts::{operating_point_json, pr_csv};
use cxr_core::eval::consensus::{read_consensus_csv, relabel};
use cxr_core::eval::{
    consensus_partition, emit_roc_artifacts, pr_curve, roc_curve, zero_miss_operating_point, ScoreRow,
    ScoreTable,
};
use cxr_core::net::train::score_examples;
use cxr_core::net::{load_checkpoint, plan_pyramid, Example, TensorGraph};
use cxr_core::CoreError;

use super::data::load_labeled_dir;
use crate::args::{ConsensusArg, EvalArgs, GlobalArgs};
use crate::error::{CliError, Result};
use crate::manifest::{ensure_dir, RunManifest};
use crate::{read_file, write_file};

fn input_err(path: &Path) -> impl Fn(CoreError) -> CliError + '_ {
    move |e| match e {
        CoreError::Io(source) => CliError::io(path, source),
        CoreError::Degenerate(_) => e.into(),
        other => CliError::Input(format!("{}: {}", path.display(), other)),
    }
}

fn score_images(checkpoint: &Path, images: &Path, labels: Option<&Path>) -> Result<ScoreTable<f64>> {
    let (config, params) = load_checkpoint::<f64>(checkpoint).map_err(input_err(checkpoint))?;
    let mut graph = TensorGraph::with_params(plan_pyramid(&config)?, params, config.seed)?;
    let size = (config.input_height, config.input_width);
    let loaded = load_labeled_dir(images, labels, size, true)?;
    let examples: Vec<Example<f64>> = loaded
        .iter()
        .map(|li| Example {
            image: li.image.clone(),
            label: li.label.expect("labels required"),
        })
        .collect();
    let scores = score_examples(&mut graph, &examples, 32)?;
    let rows = loaded
        .into_iter()
        .zip(scores)
        .map(|(li, score)| ScoreRow {
            study_id: li.study_id,
            score,
            label: li.label.expect("labels required"),
        })
        .collect();
    ScoreTable::new(rows).map_err(input_err(images))
}

pub fn run(global: &GlobalArgs, args: &EvalArgs) -> Result<()> {
    let mut manifest = RunManifest::start("eval", global.seed.unwrap_or(0));
    let mut scored_here = false;
    let mut table = match (&args.scores, &args.checkpoint, &args.images) {
        (Some(scores), _, _) => {
            manifest.input("scores", scores);
            let text = read_file(scores)?;
            ScoreTable::<f64>::read_csv(text.as_bytes()).map_err(input_err(scores))?
        }
        (None, Some(ckpt), Some(images)) => {
            manifest.input("checkpoint", ckpt);
            manifest.input("images", images);
            if let Some(l) = &args.labels {
                manifest.input("labels", l);
            }
            scored_here = true;
            score_images(ckpt, images, args.labels.as_deref())?
        }
        _ => {
            return Err(CliError::Input(
                "give either --scores or both --checkpoint and --images".into(),
            ))
        }
    };

    if let (Some(path), Some(mode)) = (&args.consensus_file, args.consensus) {
        manifest.input("consensus", path);
        let text = read_file(path)?;
        let records = read_consensus_csv(text.as_bytes()).map_err(input_err(path))?;
        let partition = consensus_partition(&records);
        let (name, labels) = match mode {
            ConsensusArg::Triple => ("triple", &partition.triple),
            ConsensusArg::Majority => ("majority", &partition.majority),
        };
        manifest.config.insert("consensus".into(), name.into());
        table = relabel(&table, labels).map_err(input_err(path))?;
    }
    manifest.config.insert("rows".into(), table.len().to_string());

    let roc = roc_curve(&table)?;
    let pr = pr_curve(&table)?;
    let op = zero_miss_operating_point(&table)?;

    ensure_dir(&args.out)?;
    let paths = emit_roc_artifacts(&roc, &args.out).map_err(|e| match e {
        CoreError::Io(source) => CliError::io(&args.out, source),
        other => other.into(),
    })?;
    let pr_path = args.out.join("pr.csv");
    write_file(&pr_path, pr_csv(&pr).as_bytes())?;
    let op_path = args.out.join("operating_point.json");
    write_file(&op_path, operating_point_json(&op).as_bytes())?;
    if scored_here {
        let scores_path = args.out.join("scores.csv");
        let mut buf = Vec::new();
        table.write_csv(&mut buf)?;
        write_file(&scores_path, &buf)?;
        manifest.output("scores", &scores_path);
    }
    manifest.output("roc_csv", &paths.roc_csv);
    manifest.output("roc_svg", &paths.roc_svg);
    manifest.output("pr_csv", &pr_path);
    manifest.output("operating_point", &op_path);
    manifest.finish(&args.out)?;
    eprintln!(
        "roc auc {:.4}  pr area {:.4}  zero-miss yield {}/{}",
        roc.auc, pr.area, op.normals_filtered, op.normals_total
    );
    Ok(())
}
