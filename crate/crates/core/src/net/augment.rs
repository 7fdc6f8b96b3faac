//! Random rotation and shift augmentation for single-channel images.

use rand::Rng;

use crate::error::{shape_err, CoreError, Result};
use crate::scalar::Real;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentPolicy {
    pub max_rotation_deg: f64,
    /// Maximum shift as a fraction of each image dimension.
    pub max_shift_frac: f64,
    pub apply_probability: f64,
    pub seed: u64,
}

impl Default for AugmentPolicy {
    fn default() -> Self {
        AugmentPolicy {
            max_rotation_deg: 10.0,
            max_shift_frac: 0.10,
            apply_probability: 0.80,
            seed: 0,
        }
    }
}

impl AugmentPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.apply_probability)
            || self.max_rotation_deg < 0.0
            || !(0.0..1.0).contains(&self.max_shift_frac)
        {
            return Err(CoreError::Config(format!("invalid augmentation policy {:?}", self)));
        }
        Ok(())
    }
}

/// A sampled rigid transform: rotation about the image centre, then shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    pub angle_deg: f64,
    /// Shift as fractions of width and height.
    pub shift_x: f64,
    pub shift_y: f64,
}

/// `None` means the image passes through untouched.
pub fn sample_transform<R: Rng + ?Sized>(policy: &AugmentPolicy, rng: &mut R) -> Option<Transform> {
    if rng.random::<f64>() >= policy.apply_probability {
        return None;
    }
    let r = policy.max_rotation_deg;
    let s = policy.max_shift_frac;
    let uniform = |rng: &mut R, m: f64| if m > 0.0 { rng.random_range(-m..=m) } else { 0.0 };
    Some(Transform {
        angle_deg: uniform(rng, r),
        shift_x: uniform(rng, s),
        shift_y: uniform(rng, s),
    })
}

/// Resamples a `(1, H, W)` image under `t` with bilinear interpolation and
/// zero fill outside the source.
pub fn apply_transform<T: Real>(image: &Tensor<T>, t: &Transform) -> Result<Tensor<T>> {
    let (c, h, w) = image.chw()?;
    if c != 1 {
        return shape_err(format!("augmentation expects one channel, got {:?}", image.shape()));
    }
    let src = image.data();
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let (dx, dy) = (t.shift_x * w as f64, t.shift_y * h as f64);
    let (sin, cos) = t.angle_deg.to_radians().sin_cos();
    let at = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            src[y as usize * w + x as usize].as_f64()
        }
    };
    let mut out = Vec::with_capacity(h * w);
    for oy in 0..h {
        for ox in 0..w {
            // undo the shift, then the rotation
            let ux = ox as f64 - dx - cx;
            let uy = oy as f64 - dy - cy;
            let sx = cos * ux + sin * uy + cx;
            let sy = -sin * ux + cos * uy + cy;
            let (x0, y0) = (sx.floor(), sy.floor());
            let (fx, fy) = (sx - x0, sy - y0);
            let (x0, y0) = (x0 as isize, y0 as isize);
            let v = at(x0, y0) * (1.0 - fx) * (1.0 - fy)
                + at(x0 + 1, y0) * fx * (1.0 - fy)
                + at(x0, y0 + 1) * (1.0 - fx) * fy
                + at(x0 + 1, y0 + 1) * fx * fy;
            out.push(T::lit(v));
        }
    }
    Tensor::from_vec(image.shape(), out)
}

/// With probability `apply_probability`, rotate by U(-max, max) degrees and
/// shift by U(-max, max) of each dimension; otherwise return the image as is.
pub fn augment<T: Real, R: Rng + ?Sized>(
    image: &Tensor<T>,
    policy: &AugmentPolicy,
    rng: &mut R,
) -> Result<Tensor<T>> {
    match sample_transform(policy, rng) {
        Some(t) => apply_transform(image, &t),
        None => Ok(image.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gradient_image() -> Tensor<f64> {
        Tensor::from_vec(&[1, 16, 16], (0..256).map(|i| (i % 16) as f64 / 15.0).collect()).unwrap()
    }

    #[test]
    fn zero_probability_is_identity() {
        let policy = AugmentPolicy {
            apply_probability: 0.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let img = gradient_image();
        for _ in 0..20 {
            assert_eq!(augment(&img, &policy, &mut rng).unwrap(), img);
        }
    }

    #[test]
    fn identity_transform_reproduces_input() {
        let img = gradient_image();
        let t = Transform {
            angle_deg: 0.0,
            shift_x: 0.0,
            shift_y: 0.0,
        };
        let out = apply_transform(&img, &t).unwrap();
        for (a, b) in out.data().iter().zip(img.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn integer_shift_moves_pixels() {
        let img = gradient_image();
        let t = Transform {
            angle_deg: 0.0,
            shift_x: 2.0 / 16.0,
            shift_y: 0.0,
        };
        let out = apply_transform(&img, &t).unwrap();
        assert_eq!(out.data()[0], 0.0);
        assert!((out.data()[5] - img.data()[3]).abs() < 1e-12);
    }

    #[test]
    fn seeded_stream_is_reproducible() {
        let policy = AugmentPolicy::default();
        let img = gradient_image();
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            (0..5).map(|_| augment(&img, &policy, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn sampler_statistics() {
        let policy = AugmentPolicy::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut applied = 0;
        for _ in 0..10_000 {
            if let Some(t) = sample_transform(&policy, &mut rng) {
                applied += 1;
                assert!(t.angle_deg.abs() <= 10.0);
                assert!(t.shift_x.abs() <= 0.10 && t.shift_y.abs() <= 0.10);
            }
        }
        let rate = applied as f64 / 10_000.0;
        assert!((rate - 0.80).abs() < 0.02, "{rate}");
    }
}
