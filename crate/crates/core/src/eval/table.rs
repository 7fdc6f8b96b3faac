use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{CoreError, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Normal,
    Abnormal,
}

impl Label {
    pub fn is_normal(self) -> bool {
        self == Label::Normal
    }

    /// Training target: 1 for normal, 0 for abnormal.
    pub fn target<T: Real>(self) -> T {
        if self.is_normal() {
            T::one()
        } else {
            T::zero()
        }
    }
}

impl FromStr for Label {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" | "1" => Ok(Label::Normal),
            "abnormal" | "0" => Ok(Label::Abnormal),
            other => Err(CoreError::Format(format!("unknown label `{}`", other))),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Normal => "normal",
            Label::Abnormal => "abnormal",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow<T> {
    pub study_id: String,
    pub score: T,
    pub label: Label,
}

/// Per-study normalcy scores with ground truth. Study ids are unique and
/// scores finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable<T> {
    rows: Vec<ScoreRow<T>>,
}

impl<T: Real> ScoreTable<T> {
    pub fn new(rows: Vec<ScoreRow<T>>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &rows {
            if !r.score.is_finite() {
                return Err(CoreError::Argument(format!(
                    "non-finite score for study `{}`",
                    r.study_id
                )));
            }
            if !seen.insert(r.study_id.as_str()) {
                return Err(CoreError::Argument(format!(
                    "duplicate study id `{}`",
                    r.study_id
                )));
            }
        }
        Ok(ScoreTable { rows })
    }

    /// Rows with generated ids `s0, s1, ...`; handy for tests and sweeps.
    pub fn from_pairs(pairs: &[(T, Label)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .enumerate()
                .map(|(i, &(score, label))| ScoreRow {
                    study_id: format!("s{i}"),
                    score,
                    label,
                })
                .collect(),
        )
    }

    pub fn rows(&self) -> &[ScoreRow<T>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.rows.iter().filter(|r| r.label == label).count()
    }

    pub fn scores(&self, label: Label) -> impl Iterator<Item = T> + '_ {
        self.rows.iter().filter(move |r| r.label == label).map(|r| r.score)
    }

    pub(crate) fn require_both_classes(&self) -> Result<(usize, usize)> {
        let p = self.count(Label::Normal);
        let n = self.count(Label::Abnormal);
        if p == 0 || n == 0 {
            return Err(CoreError::Degenerate(format!(
                "need both classes, got {} normal and {} abnormal",
                p, n
            )));
        }
        Ok((p, n))
    }

    /// Distinct scores in descending order, each with its (normal, abnormal) counts.
    pub(crate) fn score_groups(&self) -> Vec<(T, usize, usize)> {
        let mut sorted: Vec<&ScoreRow<T>> = self.rows.iter().collect();
        sorted.sort_by(|a, b| b.score.partial_cmp(&a.score).expect("finite scores"));
        let mut groups: Vec<(T, usize, usize)> = Vec::new();
        for r in sorted {
            let (pos, neg) = if r.label.is_normal() { (1, 0) } else { (0, 1) };
            match groups.last_mut() {
                Some(g) if g.0 == r.score => {
                    g.1 += pos;
                    g.2 += neg;
                }
                _ => groups.push((r.score, pos, neg)),
            }
        }
        groups
    }

    /// Parses `study_id,score,label` with a header row.
    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.starts_with("study_id")) {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 3 {
                return Err(CoreError::Format(format!(
                    "line {}: expected study_id,score,label",
                    i + 1
                )));
            }
            let score: f64 = f[1].parse().map_err(|_| {
                CoreError::Format(format!("line {}: bad score `{}`", i + 1, f[1]))
            })?;
            rows.push(ScoreRow {
                study_id: f[0].to_string(),
                score: T::lit(score),
                label: f[2].parse()?,
            });
        }
        Self::new(rows)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "study_id,score,label")?;
        for r in &self.rows {
            writeln!(w, "{},{},{}", r.study_id, r.score, r.label)?;
        }
        Ok(())
    }
}
