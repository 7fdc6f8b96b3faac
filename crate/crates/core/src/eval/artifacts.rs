//! File outputs of an evaluation: `roc.csv`, `roc.svg`, `pr.csv` and
//! `operating_point.json`.

use std::fmt::Write as _;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::operating::OperatingPoint;
use super::pr::PrCurve;
use super::roc::{RocCurve, RocPoint};
use crate::error::{CoreError, Result};
use crate::io::write_atomic;
use crate::scalar::Real;

pub fn roc_csv<T: Real>(curve: &RocCurve<T>) -> String {
    let mut s = String::from("threshold,fpr,tpr\n");
    for p in &curve.points {
        let _ = writeln!(s, "{},{},{}", p.threshold, p.fpr, p.tpr);
    }
    s
}

pub fn pr_csv<T: Real>(curve: &PrCurve<T>) -> String {
    let mut s = String::from("threshold,recall,precision\n");
    for p in &curve.points {
        let _ = writeln!(s, "{},{},{}", p.threshold, p.recall, p.precision);
    }
    s
}

/// Reads back the points of a `roc.csv`.
pub fn read_roc_csv<R: BufRead>(reader: R) -> Result<Vec<RocPoint<f64>>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CoreError::Format(format!("line {}: bad number `{}`", i + 1, s)))
        };
        if f.len() != 3 {
            return Err(CoreError::Format(format!("line {}: expected 3 fields", i + 1)));
        }
        out.push(RocPoint {
            threshold: num(f[0])?,
            fpr: num(f[1])?,
            tpr: num(f[2])?,
        });
    }
    Ok(out)
}

const PLOT: f64 = 400.0;
const MARGIN: f64 = 50.0;

/// A standalone SVG of the curve on the unit square with the AUC annotated.
pub fn roc_svg<T: Real>(curve: &RocCurve<T>) -> String {
    let px = |v: f64| MARGIN + v * PLOT;
    let py = |v: f64| MARGIN + (1.0 - v) * PLOT;
    let size = PLOT + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r##"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">
<rect x="{m}" y="{m}" width="{p}" height="{p}" fill="white" stroke="black"/>
<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y1}" stroke="#bbbbbb" stroke-dasharray="4 4"/>"##,
        m = MARGIN,
        p = PLOT,
        x0 = px(0.0),
        y0 = py(0.0),
        x1 = px(1.0),
        y1 = py(1.0),
    );
    for t in 0..=4 {
        let v = t as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">{:.2}</text>
<text x="{}" y="{}" font-size="11" text-anchor="end">{:.2}</text>"#,
            px(v),
            py(0.0) + 16.0,
            v,
            px(0.0) - 6.0,
            py(v) + 4.0,
            v
        );
    }
    let pts: Vec<String> = curve
        .points
        .iter()
        .map(|p| format!("{:.3},{:.3}", px(p.fpr.as_f64()), py(p.tpr.as_f64())))
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline points="{}" fill="none" stroke="#1f5fbf" stroke-width="2"/>
<text x="{}" y="{}" font-size="12" text-anchor="middle">false positive rate (abnormal called normal)</text>
<text x="{}" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 {} {})">sensitivity for normalcy</text>
<text x="{}" y="{}" font-size="14">AUC = {:.4}</text>
</svg>"##,
        pts.join(" "),
        px(0.5),
        size - 12.0,
        18.0,
        py(0.5),
        18.0,
        py(0.5),
        px(0.55),
        py(0.1),
        curve.auc.as_f64()
    );
    s
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtifactPaths {
    pub roc_csv: PathBuf,
    pub roc_svg: PathBuf,
}

/// Writes `roc.csv` and `roc.svg` into `dir`.
pub fn emit_roc_artifacts<T: Real>(curve: &RocCurve<T>, dir: &Path) -> Result<ArtifactPaths> {
    let paths = ArtifactPaths {
        roc_csv: dir.join("roc.csv"),
        roc_svg: dir.join("roc.svg"),
    };
    write_atomic(&paths.roc_csv, roc_csv(curve).as_bytes())?;
    write_atomic(&paths.roc_svg, roc_svg(curve).as_bytes())?;
    Ok(paths)
}

#[derive(Serialize)]
struct OperatingPointJson {
    threshold: f64,
    normal_yield: f64,
    abnormal_miss: usize,
    normals_filtered: usize,
    normals_total: usize,
}

pub fn operating_point_json<T: Real>(op: &OperatingPoint<T>) -> String {
    let j = OperatingPointJson {
        threshold: op.threshold.as_f64(),
        normal_yield: op.normal_yield.as_f64(),
        abnormal_miss: op.abnormal_miss,
        normals_filtered: op.normals_filtered,
        normals_total: op.normals_total,
    };
    serde_json::to_string_pretty(&j).expect("plain struct serializes") + "\n"
}
