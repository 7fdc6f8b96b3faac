//! The zero-miss triage operating point.

use super::table::{Label, ScoreTable};
use crate::error::{CoreError, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint<T> {
    /// Studies scoring strictly above this are filtered as normal.
    pub threshold: T,
    /// Fraction of normal studies filtered.
    pub normal_yield: T,
    /// Abnormal studies filtered; zero by construction.
    pub abnormal_miss: usize,
    pub normals_filtered: usize,
    pub normals_total: usize,
}

/// The threshold is the highest abnormal score. A normal study tying it is
/// kept on the worklist, so no abnormal case is ever filtered.
pub fn zero_miss_operating_point<T: Real>(table: &ScoreTable<T>) -> Result<OperatingPoint<T>> {
    let threshold = table
        .scores(Label::Abnormal)
        .fold(None, |m: Option<T>, s| Some(m.map_or(s, |m| m.max(s))))
        .ok_or_else(|| CoreError::Degenerate("no abnormal rows to protect".into()))?;
    let normals_total = table.count(Label::Normal);
    let normals_filtered = table.scores(Label::Normal).filter(|&s| s > threshold).count();
    let abnormal_miss = table.scores(Label::Abnormal).filter(|&s| s > threshold).count();
    let normal_yield = if normals_total == 0 {
        T::zero()
    } else {
        T::from_count(normals_filtered) / T::from_count(normals_total)
    };
    Ok(OperatingPoint {
        threshold,
        normal_yield,
        abnormal_miss,
        normals_filtered,
        normals_total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::table::Label::{Abnormal as A, Normal as N};

    #[test]
    fn documented_example() {
        let t = ScoreTable::<f64>::from_pairs(&[(0.9, N), (0.8, N), (0.3, N), (0.5, A), (0.2, A)]).unwrap();
        let op = zero_miss_operating_point(&t).unwrap();
        assert_eq!(op.threshold, 0.5);
        assert!((op.normal_yield - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(op.abnormal_miss, 0);
    }

    #[test]
    fn abnormal_on_top_gives_zero_yield() {
        let t = ScoreTable::<f64>::from_pairs(&[(0.9, A), (0.8, N), (0.1, A)]).unwrap();
        assert_eq!(zero_miss_operating_point(&t).unwrap().normal_yield, 0.0);
    }

    #[test]
    fn tie_with_threshold_is_not_filtered() {
        let t = ScoreTable::<f64>::from_pairs(&[(0.7, N), (0.7, A), (0.9, N)]).unwrap();
        let op = zero_miss_operating_point(&t).unwrap();
        assert_eq!(op.normals_filtered, 1);
        assert_eq!(op.normal_yield, 0.5);
    }

    #[test]
    fn needs_an_abnormal_row() {
        let t = ScoreTable::<f64>::from_pairs(&[(0.7, N)]).unwrap();
        assert!(matches!(zero_miss_operating_point(&t), Err(CoreError::Degenerate(_))));
    }
}
