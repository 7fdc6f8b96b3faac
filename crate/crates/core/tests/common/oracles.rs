//! Brute-force reference computations for score tables, written without the
//! library's sorting and grouping.

#![allow(dead_code)]

use cxr_core::eval::{Label, ScoreTable};

pub fn split(table: &ScoreTable<f64>) -> (Vec<f64>, Vec<f64>) {
    let normals = table.scores(Label::Normal).collect();
    let abnormals = table.scores(Label::Abnormal).collect();
    (normals, abnormals)
}

/// P(normal > abnormal) + P(tie) / 2 over all pairs.
pub fn mann_whitney(table: &ScoreTable<f64>) -> f64 {
    let (pos, neg) = split(table);
    let mut wins = 0.0;
    for &p in &pos {
        for &n in &neg {
            wins += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

/// Precision-recall area from an exhaustive threshold enumeration: for each
/// distinct score `s`, cases with `score >= s` are predicted normal; the
/// zero-recall end takes the precision at the top score.
pub fn pr_area_exhaustive(table: &ScoreTable<f64>) -> f64 {
    let (pos, neg) = split(table);
    let mut distinct: Vec<f64> = pos.iter().chain(&neg).copied().collect();
    distinct.sort_by(|a, b| b.total_cmp(a));
    distinct.dedup();
    let at = |s: f64| {
        let tp = pos.iter().filter(|&&x| x >= s).count() as f64;
        let fp = neg.iter().filter(|&&x| x >= s).count() as f64;
        (tp / pos.len() as f64, tp / (tp + fp))
    };
    let mut pts = vec![(0.0, at(distinct[0]).1)];
    pts.extend(distinct.iter().map(|&s| at(s)));
    pts.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum()
}

/// Abnormal cases filtered at threshold `t` (strictly above).
pub fn abnormals_above(table: &ScoreTable<f64>, t: f64) -> usize {
    table.scores(Label::Abnormal).filter(|&s| s > t).count()
}

/// Largest normal yield over every candidate threshold that filters no
/// abnormal case, found by sweeping all distinct scores and minus infinity.
pub fn best_safe_yield(table: &ScoreTable<f64>) -> f64 {
    let (pos, _) = split(table);
    let mut candidates: Vec<f64> = table.rows().iter().map(|r| r.score).collect();
    candidates.push(f64::NEG_INFINITY);
    candidates
        .into_iter()
        .filter(|&t| abnormals_above(table, t) == 0)
        .map(|t| pos.iter().filter(|&&s| s > t).count() as f64 / pos.len() as f64)
        .fold(0.0, f64::max)
}
