//! Precision-recall curve for the normal class.

use super::table::ScoreTable;
use crate::error::Result;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint<T> {
    pub threshold: T,
    pub recall: T,
    pub precision: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve<T> {
    pub points: Vec<PrPoint<T>>,
    pub area: T,
}

/// Same threshold sweep as the ROC curve. At zero recall, where nothing is
/// predicted normal, precision is taken from the highest-scored group. The
/// area is the trapezoidal integral over recall.
pub fn pr_curve<T: Real>(table: &ScoreTable<T>) -> Result<PrCurve<T>> {
    let (pos, _) = table.require_both_classes()?;
    let groups = table.score_groups();
    let p = T::from_count(pos);
    let mut points = Vec::with_capacity(groups.len() + 1);
    let (mut tp, mut fp) = (0usize, 0usize);
    for (i, &(score, gp, gn)) in groups.iter().enumerate() {
        if i == 0 {
            points.push(PrPoint {
                threshold: score,
                recall: T::zero(),
                precision: T::from_count(gp) / T::from_count(gp + gn),
            });
        }
        tp += gp;
        fp += gn;
        let threshold = groups.get(i + 1).map_or(T::neg_infinity(), |g| g.0);
        points.push(PrPoint {
            threshold,
            recall: T::from_count(tp) / p,
            precision: T::from_count(tp) / T::from_count(tp + fp),
        });
    }
    let area = points
        .windows(2)
        .map(|w| (w[1].recall - w[0].recall) * (w[1].precision + w[0].precision) / T::lit(2.0))
        .sum();
    Ok(PrCurve { points, area })
}
