mod common;

use common::oracles::{abnormals_above, best_safe_yield, mann_whitney, pr_area_exhaustive};
use cxr_core::eval::{
    consensus_partition, emit_roc_artifacts, pr_curve, read_roc_csv, roc_curve, zero_miss_operating_point,
    ConsensusRecord, Label, RocCurve, ScoreTable,
};
use proptest::prelude::*;

/// Scores from a coarse grid so that roughly a fifth of them tie.
fn table(max: usize) -> impl Strategy<Value = ScoreTable<f64>> {
    prop::collection::vec((0u32..40, any::<bool>()), 2..=max)
        .prop_filter("both classes", |v| v.iter().any(|x| x.1) && v.iter().any(|x| !x.1))
        .prop_map(|v| {
            let pairs: Vec<(f64, Label)> = v
                .into_iter()
                .map(|(s, n)| (s as f64 / 40.0, if n { Label::Normal } else { Label::Abnormal }))
                .collect();
            ScoreTable::from_pairs(&pairs).unwrap()
        })
}

fn labels() -> impl Strategy<Value = Label> {
    prop_oneof![Just(Label::Normal), Just(Label::Abnormal)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn auc_is_the_mann_whitney_statistic(t in table(50)) {
        let c = roc_curve(&t).unwrap();
        prop_assert!((c.auc - mann_whitney(&t)).abs() < 1e-12);
        prop_assert!((RocCurve::trapezoid_area(&c.points) - c.auc).abs() < 1e-12);
        for w in c.points.windows(2) {
            prop_assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
        }
        prop_assert_eq!((c.points[0].fpr, c.points[0].tpr), (0.0, 0.0));
        let last = c.points.last().unwrap();
        prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
    }

    #[test]
    fn pr_area_matches_exhaustive_sweep(t in table(50)) {
        let c = pr_curve(&t).unwrap();
        prop_assert!((c.area - pr_area_exhaustive(&t)).abs() < 1e-12);
    }

    #[test]
    fn operating_point_is_safe_and_maximal(t in table(50)) {
        let op = zero_miss_operating_point(&t).unwrap();
        prop_assert_eq!(op.abnormal_miss, 0);
        prop_assert_eq!(abnormals_above(&t, op.threshold), 0);
        prop_assert!((op.normal_yield - best_safe_yield(&t)).abs() < 1e-15);
        let next_lower = t
            .rows()
            .iter()
            .map(|r| r.score)
            .filter(|&s| s < op.threshold)
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(abnormals_above(&t, next_lower) >= 1);
    }

    #[test]
    fn strictly_increasing_transforms_change_nothing(t in table(50), a in 0.1f64..5.0, b in -2.0f64..2.0) {
        let f = |s: f64| (a * s + b).exp();
        let pairs: Vec<(f64, Label)> = t.rows().iter().map(|r| (f(r.score), r.label)).collect();
        let u = ScoreTable::from_pairs(&pairs).unwrap();
        prop_assert_eq!(roc_curve(&t).unwrap().auc, roc_curve(&u).unwrap().auc);
        let (o1, o2) = (zero_miss_operating_point(&t).unwrap(), zero_miss_operating_point(&u).unwrap());
        prop_assert_eq!(o1.normal_yield, o2.normal_yield);
        prop_assert_eq!(f(o1.threshold), o2.threshold);
    }

    #[test]
    fn consensus_partition_is_consistent(readers in prop::collection::vec([labels(), labels(), labels()], 0..80)) {
        let records: Vec<ConsensusRecord> = readers
            .iter()
            .enumerate()
            .map(|(i, r)| ConsensusRecord { study_id: format!("s{i}"), readers: *r })
            .collect();
        let p = consensus_partition(&records);
        prop_assert_eq!(p.majority.len(), records.len());
        let majority: std::collections::HashMap<_, _> = p.majority.iter().cloned().collect();
        for (id, l) in &p.triple {
            prop_assert_eq!(majority.get(id), Some(l));
        }
        let unanimous = readers.iter().filter(|r| r[0] == r[1] && r[1] == r[2]).count();
        prop_assert_eq!(p.triple.len(), unanimous);
    }

    #[test]
    fn roc_csv_round_trip_keeps_the_auc(t in table(50)) {
        let c = roc_curve(&t).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let paths = emit_roc_artifacts(&c, dir.path()).unwrap();
        let back = read_roc_csv(std::io::BufReader::new(std::fs::File::open(&paths.roc_csv).unwrap())).unwrap();
        prop_assert!((RocCurve::trapezoid_area(&back) - c.auc).abs() < 1e-9);
        let svg = std::fs::read_to_string(&paths.roc_svg).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        prop_assert_eq!(doc.root_element().tag_name().name(), "svg");
    }
}

#[test]
fn two_point_curve_csv() {
    let t = ScoreTable::<f64>::from_pairs(&[(0.5, Label::Normal), (0.5, Label::Abnormal)]).unwrap();
    let c = roc_curve(&t).unwrap();
    let csv = cxr_core::eval::artifacts::roc_csv(&c);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "threshold,fpr,tpr");
    assert!((c.auc - 0.5).abs() < 1e-15);
}

#[test]
fn svg_annotates_the_auc() {
    let t = ScoreTable::<f64>::from_pairs(&[(0.9, Label::Normal), (0.1, Label::Abnormal)]).unwrap();
    let svg = cxr_core::eval::artifacts::roc_svg(&roc_curve(&t).unwrap());
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert!(doc.descendants().any(|n| n.text().is_some_and(|s| s.contains("AUC = 1.0000"))));
}
