//! Binary PGM (`P5`) images with an optional JSON sidecar carrying the study id
//! and display window.
//!
//! ```text
//! image.pgm   P5 <width> <height> <maxval> then big-endian samples
//! image.json  {"study_id": "s1", "window_center": 2048, "window_width": 4096}
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::intensity::{normalize_intensity, normalize_min_max};
use crate::error::{CoreError, Result};
use crate::io::write_atomic;
use crate::scalar::Real;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<u16>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub study_id: String,
    pub window_center: f64,
    pub window_width: f64,
}

fn format_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(CoreError::Format(msg.into()))
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Pgm> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return format_err("truncated PGM header");
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if fields[0] != "P5" {
        return format_err(format!("expected P5 magic, found `{}`", fields[0]));
    }
    let num = |s: &str, what: &str| -> Result<usize> {
        s.parse().map_err(|_| CoreError::Format(format!("bad PGM {}: `{}`", what, s)))
    };
    let width = num(&fields[1], "width")?;
    let height = num(&fields[2], "height")?;
    let maxval = num(&fields[3], "maxval")?;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return format_err(format!("unsupported PGM geometry {}x{} maxval {}", width, height, maxval));
    }
    // exactly one whitespace byte separates the header from the samples
    pos += 1;
    let n = width * height;
    let wide = maxval > 255;
    let need = if wide { 2 * n } else { n };
    let body = bytes.get(pos..pos + need).ok_or_else(|| {
        CoreError::Format(format!("PGM body holds {} bytes, expected {}", bytes.len().saturating_sub(pos), need))
    })?;
    let pixels = if wide {
        body.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    } else {
        body.iter().map(|&b| b as u16).collect()
    };
    Ok(Pgm {
        width,
        height,
        maxval: maxval as u16,
        pixels,
    })
}

pub fn encode_pgm(img: &Pgm) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", img.width, img.height, img.maxval).into_bytes();
    if img.maxval > 255 {
        for p in &img.pixels {
            out.extend_from_slice(&p.to_be_bytes());
        }
    } else {
        out.extend(img.pixels.iter().map(|&p| p as u8));
    }
    out
}

pub fn sidecar_path(image: &Path) -> PathBuf {
    image.with_extension("json")
}

/// A loaded image normalized to `[0, 1]` with shape `(1, H, W)`.
#[derive(Debug, Clone)]
pub struct LoadedImage<T> {
    pub study_id: String,
    pub tensor: Tensor<T>,
}

/// Reads a PGM and its sidecar, applies the window (or min/max when no
/// sidecar exists) and resizes bilinearly to `size` when given.
pub fn load_image<T: Real>(path: &Path, size: Option<(usize, usize)>) -> Result<LoadedImage<T>> {
    let pgm = decode_pgm(&fs::read(path)?)?;
    let side = sidecar_path(path);
    let (study_id, values) = if side.exists() {
        let sc: Sidecar = serde_json::from_slice(&fs::read(&side)?)
            .map_err(|e| CoreError::Format(format!("{}: {}", side.display(), e)))?;
        let v = normalize_intensity(&pgm.pixels, sc.window_center, sc.window_width)?;
        (sc.study_id, v)
    } else {
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        (stem, normalize_min_max(&pgm.pixels))
    };
    let mut tensor = Tensor::from_vec(&[1, pgm.height, pgm.width], values)?;
    if let Some((h, w)) = size {
        if (h, w) != (pgm.height, pgm.width) {
            tensor = resize_bilinear(&tensor, h, w)?;
        }
    }
    Ok(LoadedImage { study_id, tensor })
}

/// Writes `values` in `[0, 1]` as a 16-bit PGM plus a sidecar whose window
/// maps the stored integers back onto the same range.
pub fn save_image(path: &Path, study_id: &str, height: usize, width: usize, values: &[f64]) -> Result<()> {
    if values.len() != height * width {
        return Err(CoreError::Shape(format!(
            "{} values for a {}x{} image",
            values.len(),
            height,
            width
        )));
    }
    let pgm = Pgm {
        width,
        height,
        maxval: 65535,
        pixels: values.iter().map(|v| (v.clamp(0.0, 1.0) * 65535.0).round() as u16).collect(),
    };
    write_atomic(path, &encode_pgm(&pgm))?;
    let sc = Sidecar {
        study_id: study_id.to_string(),
        window_center: 32767.5,
        window_width: 65535.0,
    };
    let json = serde_json::to_string_pretty(&sc).expect("plain struct serializes");
    write_atomic(&sidecar_path(path), json.as_bytes())?;
    Ok(())
}

/// Bilinear resampling of a `(C, H, W)` tensor with pixel-centre alignment.
pub fn resize_bilinear<T: Real>(input: &Tensor<T>, height: usize, width: usize) -> Result<Tensor<T>> {
    let (c, h, w) = input.chw()?;
    if height == 0 || width == 0 {
        return Err(CoreError::Shape("resize target must be non-empty".into()));
    }
    let src = input.data();
    let mut out = Vec::with_capacity(c * height * width);
    let coord = |o: usize, n_out: usize, n_in: usize| {
        let s = (o as f64 + 0.5) * n_in as f64 / n_out as f64 - 0.5;
        let s = s.clamp(0.0, (n_in - 1) as f64);
        let i0 = s.floor() as usize;
        let i1 = (i0 + 1).min(n_in - 1);
        (i0, i1, s - i0 as f64)
    };
    for ch in 0..c {
        let plane = &src[ch * h * w..(ch + 1) * h * w];
        for oy in 0..height {
            let (y0, y1, fy) = coord(oy, height, h);
            for ox in 0..width {
                let (x0, x1, fx) = coord(ox, width, w);
                let v = plane[y0 * w + x0].as_f64() * (1.0 - fx) * (1.0 - fy)
                    + plane[y0 * w + x1].as_f64() * fx * (1.0 - fy)
                    + plane[y1 * w + x0].as_f64() * (1.0 - fx) * fy
                    + plane[y1 * w + x1].as_f64() * fx * fy;
                out.push(T::lit(v));
            }
        }
    }
    Tensor::from_vec(&[c, height, width], out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip_both_depths() {
        for maxval in [255u16, 4095, 65535] {
            let img = Pgm {
                width: 3,
                height: 2,
                maxval,
                pixels: vec![0, 1, 2, maxval / 2, maxval - 1, maxval],
            };
            assert_eq!(decode_pgm(&encode_pgm(&img)).unwrap(), img);
        }
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut bytes = b"P5\n# scanner\n2 1\n255\n".to_vec();
        bytes.extend([7, 9]);
        assert_eq!(decode_pgm(&bytes).unwrap().pixels, vec![7, 9]);
    }

    #[test]
    fn truncated_body_is_rejected() {
        assert!(decode_pgm(b"P5 4 4 255\n\x01\x02").is_err());
        assert!(decode_pgm(b"P2 1 1 255\n0").is_err());
    }

    #[test]
    fn save_then_load_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.pgm");
        let values = [0.0, 0.25, 0.5, 1.0];
        save_image(&p, "study-a", 2, 2, &values).unwrap();
        let img: LoadedImage<f64> = load_image(&p, None).unwrap();
        assert_eq!(img.study_id, "study-a");
        for (a, b) in img.tensor.data().iter().zip(values) {
            assert!((a - b).abs() < 1e-4);
        }
        std::fs::remove_file(sidecar_path(&p)).unwrap();
        let img: LoadedImage<f64> = load_image(&p, Some((4, 4))).unwrap();
        assert_eq!(img.study_id, "a");
        assert_eq!(img.tensor.shape(), &[1, 4, 4]);
    }

    #[test]
    fn resize_preserves_constant() {
        let t = Tensor::full(&[1, 5, 7], 0.3f64);
        let r = resize_bilinear(&t, 8, 3).unwrap();
        assert!(r.data().iter().all(|v| (v - 0.3).abs() < 1e-12));
    }
}
