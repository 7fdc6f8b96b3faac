//! Synthetic blob dataset: "abnormal" images carry 1 to 3 Gaussian opacities on
//! a textured background, "normal" images are background only.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::table::Label;
use crate::error::Result;
use crate::scalar::Real;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blob {
    pub cx: f64,
    pub cy: f64,
    pub sigma: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticImage {
    pub study_id: String,
    pub height: usize,
    pub width: usize,
    /// Row-major intensities in `[0, 1]`.
    pub pixels: Vec<f64>,
    pub label: Label,
    pub blobs: Vec<Blob>,
    /// Seed of the background this image was drawn on; see [`render_background`].
    pub background_seed: u64,
}

impl SyntheticImage {
    pub fn to_tensor<T: Real>(&self) -> Result<Tensor<T>> {
        Tensor::from_vec(
            &[1, self.height, self.width],
            self.pixels.iter().map(|&v| T::lit(v)).collect(),
        )
    }

    /// Pixels within one sigma of some blob centre.
    pub fn blob_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.pixels.len()];
        for y in 0..self.height {
            for x in 0..self.width {
                mask[y * self.width + x] = self.blobs.iter().any(|b| {
                    let (dx, dy) = (x as f64 - b.cx, y as f64 - b.cy);
                    dx * dx + dy * dy <= b.sigma * b.sigma
                });
            }
        }
        mask
    }
}

/// Low-frequency texture, a gradient, pixel noise and 2 to 5 elongated bright
/// bands standing in for ribs and clavicles. Every image gets a background,
/// whatever its label.
pub fn render_background(height: usize, width: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = width.min(height) as f64 / 64.0;
    let base = rng.random_range(0.25..0.55);
    let slope = rng.random_range(-0.15..0.15);
    let waves: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.random_range(0.01..0.05),
                rng.random_range(0.5..3.0),
                rng.random_range(0.5..3.0),
                rng.random_range(0.0..2.0 * PI),
            )
        })
        .collect();
    let band_count = rng.random_range(2..=5);
    // (normal x, normal y, offset, half-width, amplitude)
    let bands: Vec<(f64, f64, f64, f64, f64)> = (0..band_count)
        .map(|_| {
            let theta: f64 = rng.random_range(0.0..PI);
            let (s, c) = theta.sin_cos();
            let cx = rng.random_range(0.15..0.85) * width as f64;
            let cy = rng.random_range(0.15..0.85) * height as f64;
            (
                c,
                s,
                c * cx + s * cy,
                rng.random_range(0.8..1.5) * scale,
                rng.random_range(0.05..0.2),
            )
        })
        .collect();
    let noise = Normal::new(0.0, 0.02).expect("valid std");
    let mut px = Vec::with_capacity(height * width);
    for y in 0..height {
        for x in 0..width {
            let (u, v) = (x as f64 / width as f64, y as f64 / height as f64);
            let mut val = base + slope * (v - 0.5);
            for &(a, fx, fy, ph) in &waves {
                val += a * (2.0 * PI * (fx * u + fy * v) + ph).sin();
            }
            for &(nx, ny, off, hw, a) in &bands {
                let d = nx * x as f64 + ny * y as f64 - off;
                val += a * (-(d * d) / (2.0 * hw * hw)).exp();
            }
            val += noise.sample(&mut rng);
            px.push(val.clamp(0.0, 1.0));
        }
    }
    px
}

fn add_blobs(px: &mut [f64], height: usize, width: usize, rng: &mut ChaCha8Rng) -> Vec<Blob> {
    let scale = width.min(height) as f64 / 64.0;
    let count = rng.random_range(1..=3);
    let blobs: Vec<Blob> = (0..count)
        .map(|_| Blob {
            cx: rng.random_range(0.2..0.8) * width as f64,
            cy: rng.random_range(0.2..0.8) * height as f64,
            sigma: rng.random_range(2.5..5.0) * scale,
            amplitude: rng.random_range(0.2..0.4),
        })
        .collect();
    for y in 0..height {
        for x in 0..width {
            let mut add = 0.0;
            for b in &blobs {
                let (dx, dy) = (x as f64 - b.cx, y as f64 - b.cy);
                add += b.amplitude * (-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma)).exp();
            }
            let p = &mut px[y * width + x];
            *p = (*p + add).min(1.0);
        }
    }
    blobs
}

/// `2 * n_per_class` images alternating normal, abnormal; deterministic in `seed`.
pub fn make_synthetic_dataset(
    n_per_class: usize,
    size: (usize, usize),
    seed: u64,
) -> Vec<SyntheticImage> {
    let (height, width) = size;
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    (0..2 * n_per_class)
        .map(|i| {
            let label = if i % 2 == 0 { Label::Normal } else { Label::Abnormal };
            let background_seed: u64 = master.random();
            let blob_seed: u64 = master.random();
            let mut pixels = render_background(height, width, background_seed);
            let blobs = if label == Label::Abnormal {
                add_blobs(&mut pixels, height, width, &mut ChaCha8Rng::seed_from_u64(blob_seed))
            } else {
                Vec::new()
            };
            SyntheticImage {
                study_id: format!("synth{:05}", i),
                height,
                width,
                pixels,
                label,
                blobs,
                background_seed,
            }
        })
        .collect()
}
