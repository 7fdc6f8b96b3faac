//! ROC curve over a threshold sweep, normal as the positive class.

use super::table::ScoreTable;
use crate::error::Result;
use crate::scalar::Real;

/// One operating point: cases with `score > threshold` are predicted normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint<T> {
    pub threshold: T,
    pub fpr: T,
    pub tpr: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve<T> {
    /// From `(0, 0)` at the maximum score to `(1, 1)` at `-inf`.
    pub points: Vec<RocPoint<T>>,
    pub auc: T,
}

impl<T: Real> RocCurve<T> {
    /// Trapezoidal area under the stored points.
    pub fn trapezoid_area(points: &[RocPoint<T>]) -> T {
        points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / T::lit(2.0))
            .sum()
    }
}

/// Sweeps every distinct score as a threshold. Tied scores move the curve
/// diagonally in one step, which credits a tie with one half.
pub fn roc_curve<T: Real>(table: &ScoreTable<T>) -> Result<RocCurve<T>> {
    let (pos, neg) = table.require_both_classes()?;
    let groups = table.score_groups();
    let (p, n) = (T::from_count(pos), T::from_count(neg));
    let mut points = Vec::with_capacity(groups.len() + 1);
    let (mut tp, mut fp) = (0usize, 0usize);
    // Integer trapezoid numerator: sum of fp_g * (2 * tp_before + tp_g).
    let mut area2: u128 = 0;
    for &(score, gp, gn) in &groups {
        points.push(RocPoint {
            threshold: score,
            fpr: T::from_count(fp) / n,
            tpr: T::from_count(tp) / p,
        });
        area2 += gn as u128 * (2 * tp as u128 + gp as u128);
        tp += gp;
        fp += gn;
    }
    points.push(RocPoint {
        threshold: T::neg_infinity(),
        fpr: T::one(),
        tpr: T::one(),
    });
    let auc = T::lit(area2 as f64 / (2.0 * pos as f64 * neg as f64));
    Ok(RocCurve { points, auc })
}

pub fn roc_auc<T: Real>(table: &ScoreTable<T>) -> Result<T> {
    roc_curve(table).map(|c| c.auc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::table::Label::{Abnormal as A, Normal as N};

    #[test]
    fn perfect_and_uninformative() {
        let t = ScoreTable::<f64>::from_pairs(&[(1.0, N), (1.0, N), (0.0, A)]).unwrap();
        assert_eq!(roc_auc(&t).unwrap(), 1.0);
        let t = ScoreTable::<f64>::from_pairs(&[(0.4, N), (0.4, A), (0.4, A)]).unwrap();
        let c = roc_curve(&t).unwrap();
        assert_eq!(c.auc, 0.5);
        assert_eq!(c.points.len(), 2);
    }

    #[test]
    fn four_point_example() {
        let t = ScoreTable::<f64>::from_pairs(&[(0.9, N), (0.6, N), (0.7, A), (0.2, A)]).unwrap();
        let c = roc_curve(&t).unwrap();
        assert!((c.auc - 0.75).abs() < 1e-15);
        assert!((RocCurve::trapezoid_area(&c.points) - 0.75).abs() < 1e-15);
        let first = c.points[0];
        let last = *c.points.last().unwrap();
        assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
    }

    #[test]
    fn single_class_is_degenerate() {
        let t = ScoreTable::<f64>::from_pairs(&[(0.9, N), (0.6, N)]).unwrap();
        assert!(matches!(roc_curve(&t), Err(crate::CoreError::Degenerate(_))));
    }
}
