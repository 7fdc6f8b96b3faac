//! The dual-extractor feature-pyramid classifier.
//!
//! Wiring, per sample:
//!
//! ```text
//! image ─┬─ plain-conv extractor ──► A4 A8 A16   (c_A, 2c_A, 4c_A)
//!        └─ residual extractor ────► B4 B8 B16   (c_B, 2c_B, 4c_B)
//! concat per stride ─► 1x1 lateral to d ─► top-down x2 nearest merge
//! P8 + maxpool(P4) ─► [dilated block ─► 2x2 maxpool] x n ─► 1x1 proj ─► square pool ─► dense ─► logit
//! ```

use super::config::GraphConfig;
use super::graph::{GraphBuilder, GraphPlan, NodeId, TensorGraph};
use super::ops::{self, ConvSpec, Mode};
use crate::error::{shape_err, Result};
use crate::scalar::Real;
use crate::tensor::Tensor;
use rand::Rng;

const HEAD_INIT_STD: f64 = 1e-4;

/// Node ids of the three tapped maps (strides 4, 8, 16) of one extractor.
#[derive(Debug, Clone, Copy)]
pub struct Taps(pub [NodeId; 3]);

/// VGG-like plain stack: one 3x3 conv + ReLU + 2x2 maxpool per stage.
pub fn add_plain_extractor(
    b: &mut GraphBuilder,
    x: NodeId,
    base: usize,
) -> Result<Taps> {
    let widths = [base / 2, base, 2 * base, 4 * base];
    let mut cur = x;
    let mut taps = [0; 3];
    for (i, &w) in widths.iter().enumerate() {
        let s = i + 1;
        let c = b.conv(&format!("a.conv{s}"), cur, w, 3, ConvSpec::same(1, 1), true)?;
        let r = b.relu(&format!("a.relu{s}"), c);
        cur = b.max_pool(&format!("a.pool{s}"), r)?;
        if i > 0 {
            taps[i - 1] = cur;
        }
    }
    Ok(Taps(taps))
}

/// One residual unit: conv-GN-ReLU-conv-GN plus an identity or projected skip,
/// followed by ReLU.
fn add_residual_unit(
    b: &mut GraphBuilder,
    name: &str,
    x: NodeId,
    width: usize,
    stride: usize,
    groups: usize,
) -> Result<NodeId> {
    let c1 = b.conv(&format!("{name}.conv1"), x, width, 3, ConvSpec::same(stride, 1), false)?;
    let n1 = b.group_norm(&format!("{name}.gn1"), c1, groups)?;
    let r1 = b.relu(&format!("{name}.relu1"), n1);
    let c2 = b.conv(&format!("{name}.conv2"), r1, width, 3, ConvSpec::same(1, 1), false)?;
    let n2 = b.group_norm(&format!("{name}.gn2"), c2, groups)?;
    let skip = if b.channels(x) == width && stride == 1 {
        x
    } else {
        b.conv(&format!("{name}.proj"), x, width, 1, ConvSpec::same(stride, 1), false)?
    };
    let sum = b.add(&format!("{name}.add"), n2, skip)?;
    Ok(b.relu(&format!("{name}.out"), sum))
}

/// ResNet-like stack: strided stem and pool to stride 4, then one residual unit
/// per tapped stride.
pub fn add_residual_extractor(
    b: &mut GraphBuilder,
    x: NodeId,
    base: usize,
    groups: usize,
) -> Result<Taps> {
    let stem = b.conv("b.stem", x, base / 4, 3, ConvSpec::same(2, 1), true)?;
    let stem = b.relu("b.stem_relu", stem);
    let mut cur = b.max_pool("b.stem_pool", stem)?;
    let mut taps = [0; 3];
    for (i, mult) in [1usize, 2, 4].into_iter().enumerate() {
        let stride = if i == 0 { 1 } else { 2 };
        cur = add_residual_unit(b, &format!("b.res{}", i + 1), cur, base * mult, stride, groups)?;
        taps[i] = cur;
    }
    Ok(Taps(taps))
}

/// Residual dilated block:
/// `conv3x3(d=1) → GN → ReLU → conv3x3(d=2) → GN → ReLU → spatial dropout`, plus
/// an identity skip when widths match and a 1x1 projection otherwise.
pub fn add_dilated_block(
    b: &mut GraphBuilder,
    name: &str,
    x: NodeId,
    width: usize,
    groups: usize,
    dropout: f64,
) -> Result<NodeId> {
    let c1 = b.conv(&format!("{name}.conv1"), x, width, 3, ConvSpec::same(1, 1), true)?;
    let n1 = b.group_norm(&format!("{name}.gn1"), c1, groups)?;
    let r1 = b.relu(&format!("{name}.relu1"), n1);
    let c2 = b.conv(&format!("{name}.conv2"), r1, width, 3, ConvSpec::same(1, 2), true)?;
    let n2 = b.group_norm(&format!("{name}.gn2"), c2, groups)?;
    let r2 = b.relu(&format!("{name}.relu2"), n2);
    let dr = b.dropout(&format!("{name}.drop"), r2, dropout)?;
    let skip = if b.channels(x) == width {
        x
    } else {
        b.conv(&format!("{name}.skip"), x, width, 1, ConvSpec::same(1, 1), true)?
    };
    b.add(&format!("{name}.add"), dr, skip)
}

/// Parameters of a standalone dilated block.
#[derive(Debug, Clone)]
pub struct DilatedBlockParams<T> {
    pub conv1: (Tensor<T>, Tensor<T>),
    pub gn1: (Tensor<T>, Tensor<T>),
    pub conv2: (Tensor<T>, Tensor<T>),
    pub gn2: (Tensor<T>, Tensor<T>),
    pub skip: Option<(Tensor<T>, Tensor<T>)>,
}

impl<T: Real> DilatedBlockParams<T> {
    /// Pulls the block named `name` out of a graph's parameter registry.
    pub fn from_graph(graph: &TensorGraph<T>, name: &str) -> Option<Self> {
        let p = graph.params();
        let pair = |a: &str, b: &str| -> Option<(Tensor<T>, Tensor<T>)> {
            Some((
                p.get(&format!("{name}.{a}"))?.clone(),
                p.get(&format!("{name}.{b}"))?.clone(),
            ))
        };
        Some(DilatedBlockParams {
            conv1: pair("conv1.weight", "conv1.bias")?,
            gn1: pair("gn1.gamma", "gn1.beta")?,
            conv2: pair("conv2.weight", "conv2.bias")?,
            gn2: pair("gn2.gamma", "gn2.beta")?,
            skip: pair("skip.weight", "skip.bias"),
        })
    }

    pub fn width(&self) -> usize {
        self.conv1.0.shape()[0]
    }
}

/// Forward pass of one dilated block on a single `(C, H, W)` map.
pub fn dilated_block<T: Real, R: Rng + ?Sized>(
    input: &Tensor<T>,
    params: &DilatedBlockParams<T>,
    groups: usize,
    dropout: f64,
    rng: &mut R,
    mode: Mode,
) -> Result<Tensor<T>> {
    let (c, _, _) = input.chw()?;
    let eps = T::lit(super::graph::GROUP_NORM_EPS);
    let y = ops::conv2d(input, &params.conv1.0, Some(&params.conv1.1), &ConvSpec::same(1, 1))?;
    let y = ops::relu(&ops::group_norm(&y, groups, &params.gn1.0, &params.gn1.1, eps)?);
    let y = ops::conv2d(&y, &params.conv2.0, Some(&params.conv2.1), &ConvSpec::same(1, 2))?;
    let y = ops::relu(&ops::group_norm(&y, groups, &params.gn2.0, &params.gn2.1, eps)?);
    let mut y = ops::spatial_dropout(&y, dropout, mode, rng)?;
    let skip = match (&params.skip, c == params.width()) {
        (None, true) => input.clone(),
        (Some((w, b)), _) => ops::conv2d(input, w, Some(b), &ConvSpec::same(1, 1))?,
        (None, false) => {
            return shape_err(format!(
                "block of width {} needs a projection for {:?} input",
                params.width(),
                input.shape()
            ))
        }
    };
    y.add_assign(&skip)?;
    Ok(y)
}

/// Shapes-only plans for the two extractors, each ending at its stride-16 tap.
pub struct ExtractorPlan {
    pub plan: GraphPlan,
    pub taps: Taps,
}

impl ExtractorPlan {
    pub fn tap_shapes(&self) -> [Vec<usize>; 3] {
        self.taps.0.map(|id| self.plan.nodes[id].shape.clone())
    }
}

pub fn plan_backbones(config: &GraphConfig) -> Result<(ExtractorPlan, ExtractorPlan)> {
    config.validate()?;
    let shape = [1, config.input_height, config.input_width];
    let mut ba = GraphBuilder::new();
    let xa = ba.input("image", &shape);
    let ta = add_plain_extractor(&mut ba, xa, config.base_channels_a)?;
    let mut bb = GraphBuilder::new();
    let xb = bb.input("image", &shape);
    let tb = add_residual_extractor(&mut bb, xb, config.base_channels_b, config.groups)?;
    Ok((
        ExtractorPlan {
            plan: ba.finish(ta.0[2])?,
            taps: ta,
        },
        ExtractorPlan {
            plan: bb.finish(tb.0[2])?,
            taps: tb,
        },
    ))
}

/// A randomly initialized extractor.
pub struct Extractor<T> {
    pub graph: TensorGraph<T>,
    pub taps: Taps,
}

impl<T: Real> Extractor<T> {
    /// The three tapped maps for one `(1, H, W)` image.
    pub fn extract(&self, image: &Tensor<T>) -> Result<[Tensor<T>; 3]> {
        let trace = self.graph.run_sample(image, Mode::Infer, 0)?;
        Ok(self.taps.0.map(|id| trace.value(id).clone()))
    }
}

/// Both extractors, initialized from `config.seed` (the residual one on a
/// derived seed so the two stacks do not share weights).
pub fn build_backbones<T: Real>(config: &GraphConfig) -> Result<(Extractor<T>, Extractor<T>)> {
    let (a, b) = plan_backbones(config)?;
    Ok((
        Extractor {
            graph: TensorGraph::initialize(a.plan, config.seed),
            taps: a.taps,
        },
        Extractor {
            graph: TensorGraph::initialize(b.plan, config.seed.wrapping_add(1)),
            taps: b.taps,
        },
    ))
}

/// Names of the per-stride concatenation nodes, finest first.
pub const CONCAT_NODES: [&str; 3] = ["fpn.concat4", "fpn.concat8", "fpn.concat16"];

/// The whole classifier as a shapes-only plan.
pub fn plan_pyramid(config: &GraphConfig) -> Result<GraphPlan> {
    config.validate()?;
    let mut b = GraphBuilder::new();
    let x = b.input("image", &[1, config.input_height, config.input_width]);
    let ta = add_plain_extractor(&mut b, x, config.base_channels_a)?;
    let tb = add_residual_extractor(&mut b, x, config.base_channels_b, config.groups)?;

    let d = config.pyramid_channels;
    let mut laterals = [0; 3];
    for s in 0..3 {
        let stride = 4 << s;
        let cat = b.concat(CONCAT_NODES[s], ta.0[s], tb.0[s])?;
        laterals[s] = b.conv(&format!("fpn.lateral{stride}"), cat, d, 1, ConvSpec::default(), true)?;
    }
    let up16 = b.upsample("fpn.up16", laterals[2])?;
    let p8 = b.add("fpn.merge8", laterals[1], up16)?;
    let up8 = b.upsample("fpn.up8", p8)?;
    let p4 = b.add("fpn.merge4", laterals[0], up8)?;
    let down4 = b.max_pool("fpn.down4", p4)?;
    let mut cur = b.add("fpn.fuse8", p8, down4)?;

    for (i, &w) in config.dilated_block_channels.iter().enumerate() {
        let name = format!("block{}", i + 1);
        cur = add_dilated_block(&mut b, &name, cur, w, config.groups, config.dropout_rate)?;
        cur = b.max_pool(&format!("{name}.pool"), cur)?;
    }
    let proj = b.conv("sop.proj", cur, config.sop_channels, 1, ConvSpec::default(), false)?;
    let pooled = b.square_mean("sop.pool", proj)?;
    let logit = b.dense("head.dense", pooled, 1, HEAD_INIT_STD)?;
    b.finish(logit)
}

pub fn build_pyramid_graph<T: Real>(config: &GraphConfig) -> Result<TensorGraph<T>> {
    Ok(TensorGraph::initialize(plan_pyramid(config)?, config.seed))
}

/// Channel counts of the concatenated maps at strides 4, 8 and 16.
pub fn concat_channels(plan: &GraphPlan) -> Option<[usize; 3]> {
    let mut out = [0; 3];
    for (o, name) in out.iter_mut().zip(CONCAT_NODES) {
        *o = plan.node(name)?.shape[0];
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn full_scale_tap_shapes() {
        let (a, b) = plan_backbones(&GraphConfig::full()).unwrap();
        assert_eq!(
            a.tap_shapes(),
            [vec![128, 128, 128], vec![256, 64, 64], vec![512, 32, 32]]
        );
        assert_eq!(
            b.tap_shapes(),
            [vec![256, 128, 128], vec![512, 64, 64], vec![1024, 32, 32]]
        );
    }

    #[test]
    fn desk_tap_shapes() {
        let (a, b) = plan_backbones(&GraphConfig::desk()).unwrap();
        assert_eq!(a.tap_shapes(), [vec![8, 16, 16], vec![16, 8, 8], vec![32, 4, 4]]);
        assert_eq!(b.tap_shapes(), [vec![16, 16, 16], vec![32, 8, 8], vec![64, 4, 4]]);
    }

    #[test]
    fn backbones_are_seed_deterministic() {
        let cfg = GraphConfig::desk();
        let (a1, b1) = build_backbones::<f64>(&cfg).unwrap();
        let (a2, b2) = build_backbones::<f64>(&cfg).unwrap();
        assert_eq!(a1.graph.params(), a2.graph.params());
        assert_eq!(b1.graph.params(), b2.graph.params());
        let img = Tensor::full(&[1, 64, 64], 0.5);
        let f = a1.extract(&img).unwrap();
        assert_eq!(f[2].shape(), &[32, 4, 4]);
    }

    #[test]
    fn full_scale_concat_channels() {
        let plan = plan_pyramid(&GraphConfig::full()).unwrap();
        assert_eq!(concat_channels(&plan), Some([384, 768, 1536]));
    }

    #[test]
    fn desk_forward_gives_one_score() {
        let mut g = build_pyramid_graph::<f64>(&GraphConfig::desk()).unwrap();
        let batch = Tensor::full(&[1, 1, 64, 64], 0.3);
        let s = g.forward(&batch, Mode::Infer).unwrap();
        assert_eq!(s.len(), 1);
        assert!(s[0] > 0.0 && s[0] < 1.0);
    }

    #[test]
    fn standalone_block_matches_graph_block() {
        let mut b = GraphBuilder::new();
        let x = b.input("x", &[4, 8, 8]);
        let y = add_dilated_block(&mut b, "blk", x, 8, 4, 0.0).unwrap();
        let g = TensorGraph::<f64>::initialize(b.finish(y).unwrap(), 3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let input = Tensor::from_vec(
            &[4, 8, 8],
            (0..256).map(|i| ((i * 37 % 17) as f64 - 8.0) / 8.0).collect(),
        )
        .unwrap();
        let params = DilatedBlockParams::from_graph(&g, "blk").unwrap();
        let direct = dilated_block(&input, &params, 4, 0.0, &mut rng, Mode::Infer).unwrap();
        let via_graph = g.run_sample(&input, Mode::Infer, 0).unwrap();
        assert_eq!(&direct, via_graph.output());
        assert_eq!(direct.shape(), &[8, 8, 8]);
    }

    #[test]
    fn zero_branch_block_is_identity() {
        let mut b = GraphBuilder::new();
        let x = b.input("x", &[16, 6, 6]);
        let y = add_dilated_block(&mut b, "blk", x, 16, 16, 0.3).unwrap();
        let mut g = TensorGraph::<f64>::initialize(b.finish(y).unwrap(), 5);
        for name in ["blk.conv1.weight", "blk.conv2.weight"] {
            g.params_mut().get_mut(name).unwrap().scale(0.0);
        }
        let input = Tensor::from_vec(&[16, 6, 6], (0..576).map(|i| (i as f64).sin()).collect()).unwrap();
        for mode in [Mode::Infer, Mode::Train] {
            let out = g.run_sample(&input, mode, 11).unwrap();
            assert_eq!(out.output(), &input);
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        let mut cfg = GraphConfig::desk();
        cfg.groups = 5;
        assert!(plan_pyramid(&cfg).is_err());
    }
}
