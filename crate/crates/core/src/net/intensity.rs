//! Display windowing of raw pixel values into `[0, 1]`.

use crate::error::{CoreError, Result};
use crate::scalar::Real;

/// `clamp((p - (center - width / 2)) / width, 0, 1)` for every pixel.
pub fn normalize_intensity<P, T>(pixels: &[P], window_center: f64, window_width: f64) -> Result<Vec<T>>
where
    P: Copy + Into<f64>,
    T: Real,
{
    if !(window_width > 0.0) || !window_center.is_finite() || !window_width.is_finite() {
        return Err(CoreError::Argument(format!(
            "window width must be positive and finite, got center {} width {}",
            window_center, window_width
        )));
    }
    let low = window_center - window_width / 2.0;
    Ok(pixels
        .iter()
        .map(|&p| T::lit(((p.into() - low) / window_width).clamp(0.0, 1.0)))
        .collect())
}

/// Maps the darkest pixel to 0 and the brightest to 1; a flat image maps to 0.
pub fn normalize_min_max<P, T>(pixels: &[P]) -> Vec<T>
where
    P: Copy + Into<f64>,
    T: Real,
{
    let (lo, hi) = pixels.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| {
        let v = p.into();
        (lo.min(v), hi.max(v))
    });
    let span = hi - lo;
    pixels
        .iter()
        .map(|&p| if span > 0.0 { T::lit((p.into() - lo) / span) } else { T::zero() })
        .collect()
}
