//! Three-reader ground truth: unanimous subset and 2-of-3 majority.

use std::collections::HashMap;
use std::io::BufRead;

use super::table::{Label, ScoreRow, ScoreTable};
use crate::error::{CoreError, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsensusRecord {
    pub study_id: String,
    pub readers: [Label; 3],
}

impl ConsensusRecord {
    pub fn majority(&self) -> Label {
        let normals = self.readers.iter().filter(|l| l.is_normal()).count();
        if normals >= 2 {
            Label::Normal
        } else {
            Label::Abnormal
        }
    }

    pub fn unanimous(&self) -> Option<Label> {
        let [a, b, c] = self.readers;
        (a == b && b == c).then_some(a)
    }
}

/// Ground-truth labels keyed by study, in input order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConsensusPartition {
    pub triple: Vec<(String, Label)>,
    pub majority: Vec<(String, Label)>,
}

pub fn consensus_partition(records: &[ConsensusRecord]) -> ConsensusPartition {
    let mut out = ConsensusPartition::default();
    for r in records {
        if let Some(l) = r.unanimous() {
            out.triple.push((r.study_id.clone(), l));
        }
        out.majority.push((r.study_id.clone(), r.majority()));
    }
    out
}

/// Parses `study_id,r1,r2,r3` with an optional header row.
pub fn read_consensus_csv<R: BufRead>(reader: R) -> Result<Vec<ConsensusRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("study_id")) {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 4 {
            return Err(CoreError::Format(format!(
                "line {}: expected study_id,r1,r2,r3",
                i + 1
            )));
        }
        out.push(ConsensusRecord {
            study_id: f[0].to_string(),
            readers: [f[1].parse()?, f[2].parse()?, f[3].parse()?],
        });
    }
    Ok(out)
}

/// Keeps the scored rows present in `labels`, relabelled with the consensus value.
pub fn relabel<T: Real>(table: &ScoreTable<T>, labels: &[(String, Label)]) -> Result<ScoreTable<T>> {
    let lookup: HashMap<&str, Label> = labels.iter().map(|(id, l)| (id.as_str(), *l)).collect();
    let rows = table
        .rows()
        .iter()
        .filter_map(|r| {
            lookup.get(r.study_id.as_str()).map(|&label| ScoreRow {
                study_id: r.study_id.clone(),
                score: r.score,
                label,
            })
        })
        .collect();
    ScoreTable::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Abnormal as A, Normal as N};

    fn rec(id: &str, r: [Label; 3]) -> ConsensusRecord {
        ConsensusRecord { study_id: id.into(), readers: r }
    }

    #[test]
    fn unanimous_and_majority() {
        let p = consensus_partition(&[rec("a", [N, N, N]), rec("b", [N, N, A]), rec("c", [A, N, A])]);
        assert_eq!(p.triple, vec![("a".to_string(), N)]);
        assert_eq!(
            p.majority,
            vec![("a".to_string(), N), ("b".to_string(), N), ("c".to_string(), A)]
        );
    }

    #[test]
    fn parses_csv() {
        let text = "study_id,r1,r2,r3\nx,normal,abnormal,normal\n";
        let r = read_consensus_csv(text.as_bytes()).unwrap();
        assert_eq!(r, vec![rec("x", [N, A, N])]);
        assert!(read_consensus_csv("x,normal\n".as_bytes()).is_err());
    }
}
