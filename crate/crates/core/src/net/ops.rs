//! Stateless forward and backward kernels on single feature maps `(C, H, W)`.
//!
//! Every kernel here is a pure function. The graph executor in
//! [`super::graph`] strings them together and keeps the caches needed for the
//! reverse pass.

use rand::Rng;

use crate::error::{shape_err, CoreError, Result};
use crate::scalar::Real;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// Output size `ceil(H / stride)`, zero padding split evenly (extra at the end).
    Same,
    /// No padding.
    Valid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub stride: usize,
    pub dilation: usize,
    pub padding: Padding,
}

impl ConvSpec {
    pub const fn same(stride: usize, dilation: usize) -> Self {
        ConvSpec {
            stride,
            dilation,
            padding: Padding::Same,
        }
    }
}

impl Default for ConvSpec {
    fn default() -> Self {
        ConvSpec::same(1, 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Output length and leading pad of one spatial axis.
pub fn conv_axis(input: usize, kernel: usize, spec: &ConvSpec) -> Result<(usize, usize)> {
    if spec.stride == 0 || spec.dilation == 0 {
        return Err(CoreError::Argument(
            "stride and dilation must be at least 1".into(),
        ));
    }
    let span = spec.dilation * (kernel - 1) + 1;
    match spec.padding {
        Padding::Same => {
            let out = input.div_ceil(spec.stride);
            let total = ((out - 1) * spec.stride + span).saturating_sub(input);
            Ok((out, total / 2))
        }
        Padding::Valid => {
            if span > input {
                return shape_err(format!(
                    "kernel span {} exceeds input extent {}",
                    span, input
                ));
            }
            Ok(((input - span) / spec.stride + 1, 0))
        }
    }
}

/// Output positions `lo..hi` whose tap `o * stride + offset` lands inside `0..n_in`.
#[inline]
fn tap_range(n_out: usize, n_in: usize, offset: isize, stride: usize) -> (usize, usize) {
    let s = stride as isize;
    let lo = if offset < 0 { (-offset + s - 1) / s } else { 0 };
    let last = n_in as isize - 1 - offset;
    let hi = if last < 0 { 0 } else { (last / s + 1).min(n_out as isize) };
    let lo = lo.min(n_out as isize);
    (lo as usize, hi.max(lo) as usize)
}

#[derive(Debug, Clone, Copy)]
struct ConvGeom {
    cin: usize,
    h: usize,
    w: usize,
    cout: usize,
    kh: usize,
    kw: usize,
    oh: usize,
    ow: usize,
    pad_t: usize,
    pad_l: usize,
    stride: usize,
    dil: usize,
}

fn conv_geom<T: Real>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    spec: &ConvSpec,
) -> Result<ConvGeom> {
    let (cin, h, w) = input.chw()?;
    let (cout, wcin, kh, kw) = match weights.shape()[..] {
        [a, b, c, d] => (a, b, c, d),
        _ => {
            return shape_err(format!(
                "conv weights must be (C_out, C_in, kH, kW), got {:?}",
                weights.shape()
            ))
        }
    };
    if wcin != cin {
        return shape_err(format!(
            "conv channel mismatch: input {:?} vs weights {:?}",
            input.shape(),
            weights.shape()
        ));
    }
    let (oh, pad_t) = conv_axis(h, kh, spec)?;
    let (ow, pad_l) = conv_axis(w, kw, spec)?;
    Ok(ConvGeom {
        cin,
        h,
        w,
        cout,
        kh,
        kw,
        oh,
        ow,
        pad_t,
        pad_l,
        stride: spec.stride,
        dil: spec.dilation,
    })
}

/// Direct 2-D cross-correlation with zero padding.
pub fn conv2d<T: Real>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: Option<&Tensor<T>>,
    spec: &ConvSpec,
) -> Result<Tensor<T>> {
    let g = conv_geom(input, weights, spec)?;
    if let Some(b) = bias {
        if b.len() != g.cout {
            return shape_err(format!(
                "conv bias {:?} does not match {} output channels",
                b.shape(),
                g.cout
            ));
        }
    }
    let x = input.data();
    let wt = weights.data();
    let plane = g.oh * g.ow;
    let mut out = vec![T::zero(); g.cout * plane];
    for co in 0..g.cout {
        let o = &mut out[co * plane..(co + 1) * plane];
        if let Some(b) = bias {
            o.fill(b.data()[co]);
        }
        for ci in 0..g.cin {
            let xp = &x[ci * g.h * g.w..(ci + 1) * g.h * g.w];
            for ky in 0..g.kh {
                let dy = (ky * g.dil) as isize - g.pad_t as isize;
                let (oy_lo, oy_hi) = tap_range(g.oh, g.h, dy, g.stride);
                for kx in 0..g.kw {
                    let wv = wt[((co * g.cin + ci) * g.kh + ky) * g.kw + kx];
                    let dx = (kx * g.dil) as isize - g.pad_l as isize;
                    let (ox_lo, ox_hi) = tap_range(g.ow, g.w, dx, g.stride);
                    if ox_lo >= ox_hi {
                        continue;
                    }
                    for oy in oy_lo..oy_hi {
                        let iy = (oy * g.stride) as isize + dy;
                        let xrow = &xp[iy as usize * g.w..(iy as usize + 1) * g.w];
                        let orow = &mut o[oy * g.ow..(oy + 1) * g.ow];
                        if g.stride == 1 {
                            let ix0 = (ox_lo as isize + dx) as usize;
                            let n = ox_hi - ox_lo;
                            for (ov, &xv) in orow[ox_lo..ox_hi].iter_mut().zip(&xrow[ix0..ix0 + n])
                            {
                                *ov += wv * xv;
                            }
                        } else {
                            for ox in ox_lo..ox_hi {
                                let ix = ((ox * g.stride) as isize + dx) as usize;
                                orow[ox] += wv * xrow[ix];
                            }
                        }
                    }
                }
            }
        }
    }
    Tensor::from_vec(&[g.cout, g.oh, g.ow], out)
}

/// Gradients of [`conv2d`]: `(d input, d weights, d bias)`.
pub fn conv2d_backward<T: Real>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    grad_out: &Tensor<T>,
    spec: &ConvSpec,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let g = conv_geom(input, weights, spec)?;
    if grad_out.shape() != [g.cout, g.oh, g.ow] {
        return shape_err(format!(
            "conv output gradient {:?} does not match output ({}, {}, {})",
            grad_out.shape(),
            g.cout,
            g.oh,
            g.ow
        ));
    }
    let x = input.data();
    let wt = weights.data();
    let go = grad_out.data();
    let plane = g.oh * g.ow;
    let mut gx = vec![T::zero(); x.len()];
    let mut gw = vec![T::zero(); wt.len()];
    let mut gb = vec![T::zero(); g.cout];
    for co in 0..g.cout {
        let gop = &go[co * plane..(co + 1) * plane];
        gb[co] = gop.iter().copied().sum();
        for ci in 0..g.cin {
            let base = ci * g.h * g.w;
            for ky in 0..g.kh {
                let dy = (ky * g.dil) as isize - g.pad_t as isize;
                let (oy_lo, oy_hi) = tap_range(g.oh, g.h, dy, g.stride);
                for kx in 0..g.kw {
                    let widx = ((co * g.cin + ci) * g.kh + ky) * g.kw + kx;
                    let wv = wt[widx];
                    let dx = (kx * g.dil) as isize - g.pad_l as isize;
                    let (ox_lo, ox_hi) = tap_range(g.ow, g.w, dx, g.stride);
                    if ox_lo >= ox_hi {
                        continue;
                    }
                    let mut acc = T::zero();
                    for oy in oy_lo..oy_hi {
                        let iy = ((oy * g.stride) as isize + dy) as usize;
                        let grow = &gop[oy * g.ow..(oy + 1) * g.ow];
                        let roff = base + iy * g.w;
                        if g.stride == 1 {
                            let ix0 = (ox_lo as isize + dx) as usize;
                            let n = ox_hi - ox_lo;
                            let xrow = &x[roff + ix0..roff + ix0 + n];
                            let gxrow = &mut gx[roff + ix0..roff + ix0 + n];
                            for ((&gv, &xv), gxv) in
                                grow[ox_lo..ox_hi].iter().zip(xrow).zip(gxrow.iter_mut())
                            {
                                acc += gv * xv;
                                *gxv += wv * gv;
                            }
                        } else {
                            for ox in ox_lo..ox_hi {
                                let ix = ((ox * g.stride) as isize + dx) as usize;
                                let gv = grow[ox];
                                acc += gv * x[roff + ix];
                                gx[roff + ix] += wv * gv;
                            }
                        }
                    }
                    gw[widx] = acc;
                }
            }
        }
    }
    Ok((
        Tensor::from_vec(input.shape(), gx)?,
        Tensor::from_vec(weights.shape(), gw)?,
        Tensor::vector(gb),
    ))
}

/// Per-group normalized activations and inverse standard deviations, kept for
/// the reverse pass.
#[derive(Debug, Clone)]
pub struct GroupNormCache<T> {
    pub normalized: Tensor<T>,
    pub inv_std: Vec<T>,
}

fn check_groups(channels: usize, groups: usize) -> Result<usize> {
    if groups == 0 || channels % groups != 0 {
        return shape_err(format!(
            "{} channels are not divisible into {} groups",
            channels, groups
        ));
    }
    Ok(channels / groups)
}

/// Group normalization of one sample; statistics over `(channels in group) x H x W`.
pub fn group_norm<T: Real>(
    input: &Tensor<T>,
    groups: usize,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    eps: T,
) -> Result<Tensor<T>> {
    group_norm_cached(input, groups, gamma, beta, eps).map(|(y, _)| y)
}

pub fn group_norm_cached<T: Real>(
    input: &Tensor<T>,
    groups: usize,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    eps: T,
) -> Result<(Tensor<T>, GroupNormCache<T>)> {
    let (c, h, w) = input.chw()?;
    let per = check_groups(c, groups)?;
    if gamma.len() != c || beta.len() != c {
        return shape_err(format!(
            "group norm affine {:?}/{:?} does not match {} channels",
            gamma.shape(),
            beta.shape(),
            c
        ));
    }
    let plane = h * w;
    let count = T::from_count(per * plane);
    let x = input.data();
    let mut xhat = vec![T::zero(); x.len()];
    let mut y = vec![T::zero(); x.len()];
    let mut inv_std = Vec::with_capacity(groups);
    for gi in 0..groups {
        let span = gi * per * plane..(gi + 1) * per * plane;
        let xs = &x[span.clone()];
        let mean = xs.iter().copied().sum::<T>() / count;
        let var = xs.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / count;
        let inv = T::one() / (var + eps).sqrt();
        inv_std.push(inv);
        for (xh, &v) in xhat[span].iter_mut().zip(xs) {
            *xh = (v - mean) * inv;
        }
    }
    for ch in 0..c {
        let (gm, bt) = (gamma.data()[ch], beta.data()[ch]);
        for i in ch * plane..(ch + 1) * plane {
            y[i] = gm * xhat[i] + bt;
        }
    }
    Ok((
        Tensor::from_vec(input.shape(), y)?,
        GroupNormCache {
            normalized: Tensor::from_vec(input.shape(), xhat)?,
            inv_std,
        },
    ))
}

/// Gradients of group normalization: `(d input, d gamma, d beta)`.
pub fn group_norm_backward<T: Real>(
    cache: &GroupNormCache<T>,
    gamma: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (c, h, w) = cache.normalized.chw()?;
    if grad_out.shape() != cache.normalized.shape() {
        return shape_err("group norm gradient shape mismatch");
    }
    let groups = cache.inv_std.len();
    let per = c / groups;
    let plane = h * w;
    let m = T::from_count(per * plane);
    let xhat = cache.normalized.data();
    let gy = grad_out.data();
    let mut gg = vec![T::zero(); c];
    let mut gbt = vec![T::zero(); c];
    let mut dxhat = vec![T::zero(); gy.len()];
    for ch in 0..c {
        let gm = gamma.data()[ch];
        let mut sg = T::zero();
        let mut sb = T::zero();
        for i in ch * plane..(ch + 1) * plane {
            sg += gy[i] * xhat[i];
            sb += gy[i];
            dxhat[i] = gy[i] * gm;
        }
        gg[ch] = sg;
        gbt[ch] = sb;
    }
    let mut gx = vec![T::zero(); gy.len()];
    for gi in 0..groups {
        let span = gi * per * plane..(gi + 1) * per * plane;
        let mut s1 = T::zero();
        let mut s2 = T::zero();
        for i in span.clone() {
            s1 += dxhat[i];
            s2 += dxhat[i] * xhat[i];
        }
        let k = cache.inv_std[gi] / m;
        for i in span {
            gx[i] = k * (m * dxhat[i] - s1 - xhat[i] * s2);
        }
    }
    Ok((
        Tensor::from_vec(cache.normalized.shape(), gx)?,
        Tensor::vector(gg),
        Tensor::vector(gbt),
    ))
}

/// Per-channel multipliers for spatial dropout: `0` for a dropped channel,
/// `1 / (1 - rate)` for a kept one.
pub fn dropout_mask<T: Real, R: Rng + ?Sized>(channels: usize, rate: f64, rng: &mut R) -> Vec<T> {
    let keep = T::lit(1.0 / (1.0 - rate));
    (0..channels)
        .map(|_| {
            if rng.random::<f64>() < rate {
                T::zero()
            } else {
                keep
            }
        })
        .collect()
}

pub fn apply_channel_mask<T: Real>(input: &Tensor<T>, mask: &[T]) -> Result<Tensor<T>> {
    let (c, h, w) = input.chw()?;
    if mask.len() != c {
        return shape_err("dropout mask length differs from channel count");
    }
    let plane = h * w;
    let mut out = input.clone();
    for (ch, &m) in mask.iter().enumerate() {
        for v in &mut out.data_mut()[ch * plane..(ch + 1) * plane] {
            *v *= m;
        }
    }
    Ok(out)
}

/// Spatial dropout: whole channels are zeroed with probability `rate` in
/// training mode; inference is the identity.
pub fn spatial_dropout<T: Real, R: Rng + ?Sized>(
    input: &Tensor<T>,
    rate: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<Tensor<T>> {
    if !(0.0..1.0).contains(&rate) {
        return Err(CoreError::Argument(format!(
            "dropout rate {} outside [0, 1)",
            rate
        )));
    }
    if mode == Mode::Infer || rate == 0.0 {
        return Ok(input.clone());
    }
    let (c, _, _) = input.chw()?;
    let mask = dropout_mask(c, rate, rng);
    apply_channel_mask(input, &mask)
}

pub fn relu<T: Real>(input: &Tensor<T>) -> Tensor<T> {
    input.map(|v| if v > T::zero() { v } else { T::zero() })
}

pub fn relu_backward<T: Real>(input: &Tensor<T>, grad_out: &Tensor<T>) -> Tensor<T> {
    let data = input
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&x, &g)| if x > T::zero() { g } else { T::zero() })
        .collect();
    Tensor::from_vec(input.shape(), data).expect("relu gradient keeps shape")
}

/// 2x2 max pooling with stride 2. Returns the pooled map and, per output cell,
/// the flat input index that won.
pub fn max_pool2<T: Real>(input: &Tensor<T>) -> Result<(Tensor<T>, Vec<usize>)> {
    let (c, h, w) = input.chw()?;
    if h % 2 != 0 || w % 2 != 0 {
        return shape_err(format!("2x2 max pool needs even extents, got {:?}", input.shape()));
    }
    let (oh, ow) = (h / 2, w / 2);
    let x = input.data();
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut arg = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        let base = ch * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let i0 = base + 2 * oy * w + 2 * ox;
                let mut best = i0;
                for &i in &[i0 + 1, i0 + w, i0 + w + 1] {
                    if x[i] > x[best] {
                        best = i;
                    }
                }
                out.push(x[best]);
                arg.push(best);
            }
        }
    }
    Ok((Tensor::from_vec(&[c, oh, ow], out)?, arg))
}

pub fn max_pool2_backward<T: Real>(
    input_shape: &[usize],
    argmax: &[usize],
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>> {
    let mut gx = Tensor::zeros(input_shape);
    for (&i, &g) in argmax.iter().zip(grad_out.data()) {
        gx.data_mut()[i] += g;
    }
    Ok(gx)
}

/// Nearest-neighbour x2 upsampling.
pub fn upsample2<T: Real>(input: &Tensor<T>) -> Result<Tensor<T>> {
    let (c, h, w) = input.chw()?;
    let (oh, ow) = (2 * h, 2 * w);
    let x = input.data();
    let mut out = vec![T::zero(); c * oh * ow];
    for ch in 0..c {
        for oy in 0..oh {
            let src = &x[ch * h * w + (oy / 2) * w..ch * h * w + (oy / 2 + 1) * w];
            let dst = &mut out[ch * oh * ow + oy * ow..ch * oh * ow + (oy + 1) * ow];
            for (ox, d) in dst.iter_mut().enumerate() {
                *d = src[ox / 2];
            }
        }
    }
    Tensor::from_vec(&[c, oh, ow], out)
}

pub fn upsample2_backward<T: Real>(grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    let (c, oh, ow) = grad_out.chw()?;
    let (h, w) = (oh / 2, ow / 2);
    let g = grad_out.data();
    let mut gx = vec![T::zero(); c * h * w];
    for ch in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                gx[ch * h * w + (oy / 2) * w + ox / 2] += g[ch * oh * ow + oy * ow + ox];
            }
        }
    }
    Tensor::from_vec(&[c, h, w], gx)
}

/// Channel-wise concatenation of two maps with equal spatial extent.
pub fn concat_channels<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (ca, ha, wa) = a.chw()?;
    let (cb, hb, wb) = b.chw()?;
    if (ha, wa) != (hb, wb) {
        return shape_err(format!(
            "concat of maps with different spatial size {:?} and {:?}",
            a.shape(),
            b.shape()
        ));
    }
    let mut data = Vec::with_capacity(a.len() + b.len());
    data.extend_from_slice(a.data());
    data.extend_from_slice(b.data());
    Tensor::from_vec(&[ca + cb, ha, wa], data)
}

/// Global square pooling: `out[k] = mean over positions of x[k]^2`.
pub fn square_mean_pool<T: Real>(input: &Tensor<T>) -> Result<Tensor<T>> {
    let (c, h, w) = input.chw()?;
    let plane = h * w;
    let n = T::from_count(plane);
    let x = input.data();
    let out = (0..c)
        .map(|ch| x[ch * plane..(ch + 1) * plane].iter().map(|&v| v * v).sum::<T>() / n)
        .collect();
    Ok(Tensor::vector(out))
}

pub fn square_mean_pool_backward<T: Real>(
    input: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>> {
    let (c, h, w) = input.chw()?;
    if grad_out.len() != c {
        return shape_err("square pooling gradient length mismatch");
    }
    let plane = h * w;
    let k = T::lit(2.0) / T::from_count(plane);
    let mut gx = input.clone();
    for ch in 0..c {
        let g = grad_out.data()[ch] * k;
        for v in &mut gx.data_mut()[ch * plane..(ch + 1) * plane] {
            *v *= g;
        }
    }
    Ok(gx)
}

/// Second-order pooling: a bias-free 1x1 projection `C_in -> K` followed by
/// global square pooling. Returns a length-`K` vector.
pub fn second_order_pool<T: Real>(input: &Tensor<T>, proj: &Tensor<T>) -> Result<Tensor<T>> {
    match proj.shape()[..] {
        [_, _, 1, 1] => {}
        _ => {
            return shape_err(format!(
                "second-order projection must be 1x1, got {:?}",
                proj.shape()
            ))
        }
    }
    let y = conv2d(input, proj, None, &ConvSpec::same(1, 1))?;
    square_mean_pool(&y)
}

/// Fully connected layer on the flattened input. `weights` is `(out, in)`.
pub fn dense<T: Real>(input: &Tensor<T>, weights: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>> {
    let (o, i) = match weights.shape()[..] {
        [o, i] => (o, i),
        _ => return shape_err(format!("dense weights must be (out, in), got {:?}", weights.shape())),
    };
    if input.len() != i || bias.len() != o {
        return shape_err(format!(
            "dense layer {:?} cannot take input {:?} with bias {:?}",
            weights.shape(),
            input.shape(),
            bias.shape()
        ));
    }
    let x = input.data();
    let w = weights.data();
    let out = (0..o)
        .map(|r| {
            bias.data()[r]
                + w[r * i..(r + 1) * i]
                    .iter()
                    .zip(x)
                    .map(|(&a, &b)| a * b)
                    .sum::<T>()
        })
        .collect();
    Ok(Tensor::vector(out))
}

/// `(d input, d weights, d bias)` of [`dense`].
pub fn dense_backward<T: Real>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (o, i) = match weights.shape()[..] {
        [o, i] => (o, i),
        _ => return shape_err("dense weights must be rank 2"),
    };
    let x = input.data();
    let w = weights.data();
    let g = grad_out.data();
    let mut gx = vec![T::zero(); i];
    let mut gw = vec![T::zero(); o * i];
    for r in 0..o {
        for c in 0..i {
            gw[r * i + c] = g[r] * x[c];
            gx[c] += g[r] * w[r * i + c];
        }
    }
    Ok((
        Tensor::from_vec(input.shape(), gx)?,
        Tensor::from_vec(weights.shape(), gw)?,
        Tensor::vector(g.to_vec()),
    ))
}

pub fn sigmoid<T: Real>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Binary cross-entropy of a sigmoid score, computed from the logit.
pub fn bce_with_logit<T: Real>(logit: T, label: T) -> T {
    let zero = T::zero();
    let relu = if logit > zero { logit } else { zero };
    relu - logit * label + (T::one() + (-logit.abs()).exp()).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(shape: &[usize], seed: u64) -> Tensor<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = shape.iter().product();
        Tensor::from_vec(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    /// Straight nested-loop convolution with explicit bounds checks.
    fn conv_oracle(
        x: &Tensor<f64>,
        w: &Tensor<f64>,
        stride: usize,
        dil: usize,
        pad: usize,
        out_hw: (usize, usize),
    ) -> Tensor<f64> {
        let (cin, h, wd) = x.chw().unwrap();
        let s = w.shape();
        let (cout, kh, kw) = (s[0], s[2], s[3]);
        let mut out = Tensor::zeros(&[cout, out_hw.0, out_hw.1]);
        for co in 0..cout {
            for oy in 0..out_hw.0 {
                for ox in 0..out_hw.1 {
                    let mut acc = 0.0;
                    for ci in 0..cin {
                        for ky in 0..kh {
                            for kx in 0..kw {
                                let iy = (oy * stride + ky * dil) as isize - pad as isize;
                                let ix = (ox * stride + kx * dil) as isize - pad as isize;
                                if iy < 0 || ix < 0 || iy >= h as isize || ix >= wd as isize {
                                    continue;
                                }
                                acc += w.data()[((co * cin + ci) * kh + ky) * kw + kx]
                                    * x.data()[(ci * h + iy as usize) * wd + ix as usize];
                            }
                        }
                    }
                    out.data_mut()[(co * out_hw.0 + oy) * out_hw.1 + ox] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn identity_1x1_kernel() {
        let x = random(&[3, 5, 5], 1);
        let mut w = Tensor::zeros(&[3, 3, 1, 1]);
        for c in 0..3 {
            w.data_mut()[c * 3 + c] = 1.0;
        }
        let b = Tensor::zeros(&[3]);
        let y = conv2d(&x, &w, Some(&b), &ConvSpec::default()).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn dilated_impulse_response() {
        let mut x = Tensor::zeros(&[1, 9, 9]);
        x.data_mut()[4 * 9 + 4] = 1.0;
        let w = Tensor::full(&[1, 1, 3, 3], 1.0);
        let y = conv2d(&x, &w, None, &ConvSpec::same(1, 2)).unwrap();
        let expect = conv_oracle(&x, &w, 1, 2, 2, (9, 9));
        assert_eq!(y, expect);
        for oy in 0..9 {
            for ox in 0..9 {
                let on = [2, 4, 6].contains(&oy) && [2, 4, 6].contains(&ox);
                assert_eq!(y.data()[oy * 9 + ox] != 0.0, on, "({oy},{ox})");
            }
        }
    }

    #[test]
    fn same_padding_shape() {
        let x = random(&[3, 8, 8], 2);
        let w = random(&[5, 3, 3, 3], 3);
        let y = conv2d(&x, &w, None, &ConvSpec::default()).unwrap();
        assert_eq!(y.shape(), &[5, 8, 8]);
    }

    #[test]
    fn matches_nested_loop_oracle() {
        let x = random(&[2, 7, 7], 4);
        let w = random(&[3, 2, 3, 3], 5);
        for (stride, dil) in [(1, 1), (1, 2), (2, 1), (1, 3)] {
            let y = conv2d(&x, &w, None, &ConvSpec::same(stride, dil)).unwrap();
            let (_, pad) = conv_axis(7, 3, &ConvSpec::same(stride, dil)).unwrap();
            let o = conv_oracle(&x, &w, stride, dil, pad, (y.shape()[1], y.shape()[2]));
            for (a, b) in y.data().iter().zip(o.data()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let y = conv2d(&x, &w, None, &ConvSpec { stride: 1, dilation: 1, padding: Padding::Valid }).unwrap();
        assert_eq!(y.shape(), &[3, 5, 5]);
        assert_eq!(y, conv_oracle(&x, &w, 1, 1, 0, (5, 5)));
    }

    #[test]
    fn channel_mismatch_names_both_shapes() {
        let x = random(&[4, 6, 6], 6);
        let w = random(&[2, 3, 3, 3], 7);
        let err = conv2d(&x, &w, None, &ConvSpec::default()).unwrap_err().to_string();
        assert!(err.contains("[4, 6, 6]") && err.contains("[2, 3, 3, 3]"), "{err}");
    }

    #[test]
    fn group_norm_constant_and_affine_collapse() {
        let x = Tensor::full(&[4, 3, 3], 2.5);
        let y = group_norm(&x, 2, &Tensor::full(&[4], 1.0), &Tensor::zeros(&[4]), 1e-5).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));

        let x = random(&[4, 3, 3], 8);
        let y = group_norm(&x, 2, &Tensor::zeros(&[4]), &Tensor::full(&[4], 0.7), 1e-5).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.7));
    }

    #[test]
    fn group_norm_matches_brute_force_statistics() {
        let x = random(&[32, 4, 4], 9);
        let gamma = random(&[32], 10);
        let beta = random(&[32], 11);
        let eps = 1e-5;
        let y = group_norm(&x, 16, &gamma, &beta, eps).unwrap();
        for g in 0..16 {
            let vals: Vec<f64> = (2 * g..2 * g + 2)
                .flat_map(|c| x.data()[c * 16..(c + 1) * 16].to_vec())
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
            for c in 2 * g..2 * g + 2 {
                for i in 0..16 {
                    let want = gamma.data()[c] * (x.data()[c * 16 + i] - mean) / (var + eps).sqrt()
                        + beta.data()[c];
                    assert!((y.data()[c * 16 + i] - want).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn group_norm_rejects_indivisible_channels() {
        let x = random(&[6, 2, 2], 12);
        let e = group_norm(&x, 4, &Tensor::full(&[6], 1.0), &Tensor::zeros(&[6]), 1e-5);
        assert!(matches!(e, Err(CoreError::Shape(_))));
    }

    #[test]
    fn dropout_identities() {
        let x = random(&[8, 3, 3], 13);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(spatial_dropout(&x, 0.5, Mode::Infer, &mut rng).unwrap(), x);
        assert_eq!(spatial_dropout(&x, 0.0, Mode::Train, &mut rng).unwrap(), x);
        assert!(spatial_dropout(&x, 1.0, Mode::Train, &mut rng).is_err());
    }

    #[test]
    fn dropout_rate_statistics() {
        let x = Tensor::full(&[10_000, 1, 2], 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let y = spatial_dropout(&x, 0.5, Mode::Train, &mut rng).unwrap();
        let mut dropped = 0;
        for ch in 0..10_000 {
            let v = &y.data()[ch * 2..ch * 2 + 2];
            assert_eq!(v[0], v[1]);
            if v[0] == 0.0 {
                dropped += 1;
            } else {
                assert_eq!(v[0], 2.0);
            }
        }
        let frac = dropped as f64 / 10_000.0;
        assert!((frac - 0.5).abs() < 0.02, "{frac}");
    }

    #[test]
    fn second_order_pool_cases() {
        let z = Tensor::zeros(&[3, 4, 4]);
        let p = random(&[5, 3, 1, 1], 14);
        assert!(second_order_pool(&z, &p).unwrap().data().iter().all(|&v| v == 0.0));

        let x = Tensor::from_vec(&[1, 2, 2], vec![1.0, -1.0, -1.0, 1.0]).unwrap();
        let id = Tensor::full(&[1, 1, 1, 1], 1.0);
        assert_eq!(second_order_pool(&x, &id).unwrap().data(), &[1.0]);

        let x = random(&[8, 4, 4], 15);
        let p = random(&[6, 8, 1, 1], 16);
        let out = second_order_pool(&x, &p).unwrap();
        for k in 0..6 {
            let mut acc = 0.0;
            for pos in 0..16 {
                let y: f64 = (0..8).map(|c| p.data()[k * 8 + c] * x.data()[c * 16 + pos]).sum();
                acc += y * y;
            }
            assert!((out.data()[k] - acc / 16.0).abs() < 1e-10);
        }
        let bad = random(&[6, 7, 1, 1], 17);
        assert!(second_order_pool(&x, &bad).is_err());
    }

    #[test]
    fn pool_and_upsample_shapes() {
        let x = random(&[2, 4, 6], 18);
        let (y, arg) = max_pool2(&x).unwrap();
        assert_eq!(y.shape(), &[2, 2, 3]);
        assert_eq!(arg.len(), 12);
        let u = upsample2(&y).unwrap();
        assert_eq!(u.shape(), &[2, 4, 6]);
        assert_eq!(u.data()[0], u.data()[7]);
    }

    #[test]
    fn bce_is_stable() {
        assert!((bce_with_logit(0.0f64, 1.0) - 2f64.ln()).abs() < 1e-15);
        assert!(bce_with_logit(800.0f64, 1.0).is_finite());
        assert!((bce_with_logit(-800.0f64, 0.0)).abs() < 1e-12);
        assert!((sigmoid(-800.0f64)).is_finite());
    }
}
