//! Report corpora in, label tables out.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{LabelerError, Result};
use crate::label::{Evidence, StudyLabel};

/// One line of a JSONL report corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportRecord {
    pub study_id: String,
    pub text: String,
}

/// Reads `{"study_id": ..., "text": ...}` lines, skipping blank ones.
pub fn read_reports<R: BufRead>(reader: R) -> Result<Vec<ReportRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ReportRecord = serde_json::from_str(&line).map_err(|e| LabelerError::Corpus {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub const LABELS_HEADER: &str = "study_id,verdict,nondiagnostic,device_misplaced,positive_findings";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn label_row(l: &StudyLabel) -> String {
    format!(
        "{},{},{},{},{}",
        csv_field(&l.study_id),
        l.verdict.as_str(),
        l.nondiagnostic,
        l.device_misplaced,
        l.positive_findings.join("|")
    )
}

pub fn write_labels_csv<W: Write>(mut w: W, labels: &[StudyLabel]) -> std::io::Result<()> {
    writeln!(w, "{}", LABELS_HEADER)?;
    for l in labels {
        writeln!(w, "{}", label_row(l))?;
    }
    Ok(())
}

/// `study_id -> concept -> {sentence, polarity}` as pretty JSON.
pub fn evidence_json(labels: &[StudyLabel]) -> String {
    let map: BTreeMap<&str, &BTreeMap<String, Evidence>> =
        labels.iter().map(|l| (l.study_id.as_str(), &l.evidence)).collect();
    serde_json::to_string_pretty(&map).expect("evidence serializes") + "\n"
}
