//! Central finite-difference checks of the analytic parameter gradients.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::graph::TensorGraph;
use super::ops::Mode;
use crate::error::Result;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckOptions {
    pub step: f64,
    /// Coordinates sampled per parameter tensor; smaller tensors are checked in full.
    pub per_tensor: usize,
    /// Denominator floor. Below it the comparison is effectively absolute, which
    /// keeps structurally zero gradients (a bias feeding a one-channel group
    /// norm) from being judged against rounding noise.
    pub floor: f64,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            step: 1e-5,
            per_tensor: 8,
            floor: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckEntry {
    pub param: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GradCheckReport {
    pub entries: Vec<GradCheckEntry>,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.entries.iter().map(|e| e.rel_error).fold(0.0, f64::max)
    }

    pub fn worst(&self) -> Option<&GradCheckEntry> {
        self.entries.iter().max_by(|a, b| a.rel_error.total_cmp(&b.rel_error))
    }
}

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compares `loss_and_gradients` with `(L(p + h) - L(p - h)) / 2h` on sampled
/// coordinates of every parameter. Dropout masks are pinned by `seeds`.
pub fn check_gradients(
    graph: &mut TensorGraph<f64>,
    batch: &Tensor<f64>,
    labels: &[f64],
    mode: Mode,
    seeds: &[u64],
    opts: &GradCheckOptions,
) -> Result<GradCheckReport> {
    let (_, grads) = graph.loss_and_gradients(batch, labels, mode, seeds)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = GradCheckReport::default();
    for pi in 0..graph.params().len() {
        let n = graph.params().tensors()[pi].len();
        let picks: Vec<usize> = if n <= opts.per_tensor {
            (0..n).collect()
        } else {
            let mut v = sample(&mut rng, n, opts.per_tensor).into_vec();
            v.sort_unstable();
            v
        };
        for idx in picks {
            let orig = graph.params().tensors()[pi].data()[idx];
            graph.params_mut().tensors_mut()[pi].data_mut()[idx] = orig + opts.step;
            let up = graph.loss(batch, labels, mode, seeds)?;
            graph.params_mut().tensors_mut()[pi].data_mut()[idx] = orig - opts.step;
            let down = graph.loss(batch, labels, mode, seeds)?;
            graph.params_mut().tensors_mut()[pi].data_mut()[idx] = orig;
            let numeric = (up - down) / (2.0 * opts.step);
            let analytic = grads.tensors()[pi].data()[idx];
            report.entries.push(GradCheckEntry {
                param: graph.params().names()[pi].clone(),
                index: idx,
                analytic,
                numeric,
                rel_error: relative_error(analytic, numeric, opts.floor),
            });
        }
    }
    Ok(report)
}

/// Replaces every parameter with random values of a similar scale: weights
/// keep their spread or get `N(0, 0.5)` if they were zero, scales become
/// `U(0.5, 1.5)` and offsets `U(-0.5, 0.5)`. Used so gradient checks do not
/// run at the symmetric initial point.
pub fn jitter_parameters(graph: &mut TensorGraph<f64>, seed: u64) {
    use rand::Rng;
    use rand_distr::{Distribution, Normal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = graph.params().names().to_vec();
    for (name, t) in names.iter().zip(graph.params_mut().tensors_mut()) {
        let spread = {
            let d = t.data();
            (d.iter().map(|v| v * v).sum::<f64>() / d.len() as f64).sqrt()
        };
        if name.ends_with(".gamma") {
            t.data_mut().iter_mut().for_each(|v| *v = rng.random_range(0.5..1.5));
        } else if name.ends_with(".beta") || name.ends_with(".bias") {
            t.data_mut().iter_mut().for_each(|v| *v = rng.random_range(-0.5..0.5));
        } else {
            let std = if name.starts_with("head.") { 0.5 } else { spread.max(1e-3) };
            let dist = Normal::new(0.0, std).expect("finite std");
            t.data_mut().iter_mut().for_each(|v| *v = dist.sample(&mut rng));
        }
    }
}
