use std::path::Path;

use cxr_labeler::io::{evidence_json, write_labels_csv, ReportRecord};
use cxr_labeler::{default_ontology, label_report, load_ontology, Ontology, StudyLabel};
use rayon::prelude::*;

use crate::args::{GlobalArgs, LabelArgs};
use crate::error::{CliError, Result};
use crate::manifest::{ensure_dir, RunManifest};
use crate::{read_file, write_file};

/// Parses one record per non-blank line. Lines that fail to parse are
/// reported on stderr and skipped.
pub fn parse_corpus(text: &str, source: &Path) -> (Vec<ReportRecord>, usize) {
    let mut records = Vec::new();
    let mut skipped = 0;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ReportRecord>(line) {
            Ok(r) => records.push(r),
            Err(e) => {
                skipped += 1;
                eprintln!("warning: {}:{}: skipped record: {}", source.display(), i + 1, e);
            }
        }
    }
    (records, skipped)
}

pub fn label_all(records: &[ReportRecord], ont: &Ontology) -> Vec<StudyLabel> {
    records
        .par_iter()
        .map(|r| label_report(&r.study_id, &r.text, ont))
        .collect()
}

pub fn run(global: &GlobalArgs, args: &LabelArgs) -> Result<()> {
    let mut manifest = RunManifest::start("label", global.seed.unwrap_or(0));
    let ont = match &args.ontology {
        Some(p) => {
            manifest.input("ontology", p);
            load_ontology(p).map_err(|e| match e {
                cxr_labeler::LabelerError::Io(source) => {
                    CliError::Config(format!("{}: {}", p.display(), source))
                }
                other => CliError::from(other),
            })?
        }
        None => default_ontology(),
    };
    let text = read_file(&args.reports)?;
    manifest.input("reports", &args.reports);
    let (records, skipped) = parse_corpus(&text, &args.reports);
    let labels = label_all(&records, &ont);

    ensure_dir(&args.out)?;
    let csv_path = args.out.join("labels.csv");
    let mut csv = Vec::new();
    write_labels_csv(&mut csv, &labels).map_err(|e| CliError::io(&csv_path, e))?;
    write_file(&csv_path, &csv)?;
    let evidence_path = args.out.join("evidence.json");
    write_file(&evidence_path, evidence_json(&labels).as_bytes())?;

    manifest.config.insert("records".into(), labels.len().to_string());
    manifest.config.insert("skipped".into(), skipped.to_string());
    manifest.output("labels", &csv_path);
    manifest.output("evidence", &evidence_path);
    manifest.finish(&args.out)?;
    eprintln!("labeled {} reports ({} skipped)", labels.len(), skipped);
    Ok(())
}
