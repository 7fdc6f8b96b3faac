use std::collections::HashMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use cxr_core::eval::Label;
use cxr_core::net::imageio::load_image;
use cxr_core::Tensor;

use crate::error::{CliError, Result};
use crate::read_file;

/// A loaded image keyed by study, with its label when one is known.
pub struct LabeledImage {
    pub study_id: String,
    pub image: Tensor<f64>,
    pub label: Option<Label>,
}

/// Parses `study_id,label` with an optional header row.
pub fn read_labels<R: BufRead>(reader: R, source: &Path) -> Result<HashMap<String, Label>> {
    let mut out = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CliError::io(source, e))?;
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("study_id")) {
            continue;
        }
        let bad = |m: String| CliError::Input(format!("{}:{}: {}", source.display(), i + 1, m));
        let (id, label) = line
            .split_once(',')
            .ok_or_else(|| bad("expected study_id,label".into()))?;
        let label: Label = label.parse().map_err(|e: cxr_core::CoreError| bad(e.to_string()))?;
        if out.insert(id.trim().to_string(), label).is_some() {
            return Err(bad(format!("duplicate study id `{}`", id.trim())));
        }
    }
    Ok(out)
}

pub fn load_labels(path: &Path) -> Result<HashMap<String, Label>> {
    read_labels(read_file(path)?.as_bytes(), path)
}

/// Every `*.pgm` in `dir`, sorted by file name and resized to `size`.
pub fn load_image_dir(dir: &Path, size: (usize, usize)) -> Result<Vec<(String, Tensor<f64>)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let img = load_image::<f64>(p, Some(size)).map_err(|e| match e {
                cxr_core::CoreError::Io(source) => CliError::io(p, source),
                other => CliError::Input(format!("{}: {}", p.display(), other)),
            })?;
            Ok((img.study_id, img.tensor))
        })
        .collect()
}

/// Images of `dir` joined with labels from `labels` (or `dir/labels.csv`).
/// With `require_labels`, an image without a label is an input error.
pub fn load_labeled_dir(
    dir: &Path,
    labels: Option<&Path>,
    size: (usize, usize),
    require_labels: bool,
) -> Result<Vec<LabeledImage>> {
    let labels_path = labels.map(Path::to_path_buf).unwrap_or_else(|| dir.join("labels.csv"));
    let table = if labels.is_some() || labels_path.exists() || require_labels {
        load_labels(&labels_path)?
    } else {
        HashMap::new()
    };
    let images = load_image_dir(dir, size)?;
    if images.is_empty() {
        return Err(CliError::Input(format!("{}: no .pgm images", dir.display())));
    }
    images
        .into_iter()
        .map(|(study_id, image)| {
            let label = table.get(&study_id).copied();
            if require_labels && label.is_none() {
                return Err(CliError::Input(format!(
                    "{}: no label for study `{}`",
                    labels_path.display(),
                    study_id
                )));
            }
            Ok(LabeledImage {
                study_id,
                image,
                label,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_parse_with_header_and_reject_duplicates() {
        let p = Path::new("labels.csv");
        let m = read_labels("study_id,label\na,normal\nb, abnormal\n\n".as_bytes(), p).unwrap();
        assert_eq!(m["a"], Label::Normal);
        assert_eq!(m["b"], Label::Abnormal);
        assert!(matches!(read_labels("a,normal\na,abnormal\n".as_bytes(), p), Err(CliError::Input(_))));
        assert!(matches!(read_labels("a,maybe\n".as_bytes(), p), Err(CliError::Input(_))));
        assert!(matches!(read_labels("a\n".as_bytes(), p), Err(CliError::Input(_))));
    }
}
