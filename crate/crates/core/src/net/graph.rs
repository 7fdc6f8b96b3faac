//! A static dataflow graph over feature maps with reverse-mode gradients.
//!
//! A [`GraphPlan`] is the topologically ordered list of nodes plus the shapes of
//! every parameter; it carries no numbers and can be built for any input size.
//! A [`TensorGraph`] pairs a plan with initialized parameters and the dropout
//! generator. Execution is per sample: group normalization never mixes samples,
//! so a batch is a set of independent traces whose gradients are summed in
//! sample order.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::ops::{self, ConvSpec, GroupNormCache, Mode};
use crate::error::{shape_err, CoreError, Result};
use crate::scalar::Real;
use crate::tensor::Tensor;

pub type NodeId = usize;
pub type ParamId = usize;

pub const GROUP_NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    Input,
    Conv {
        x: NodeId,
        weight: ParamId,
        bias: Option<ParamId>,
        spec: ConvSpec,
    },
    GroupNorm {
        x: NodeId,
        gamma: ParamId,
        beta: ParamId,
        groups: usize,
    },
    Relu {
        x: NodeId,
    },
    Dropout {
        x: NodeId,
        rate: f64,
    },
    MaxPool {
        x: NodeId,
    },
    Upsample {
        x: NodeId,
    },
    Add {
        a: NodeId,
        b: NodeId,
    },
    Concat {
        a: NodeId,
        b: NodeId,
    },
    SquareMean {
        x: NodeId,
    },
    Dense {
        x: NodeId,
        weight: ParamId,
        bias: ParamId,
    },
}

impl Op {
    pub fn inputs(&self) -> Vec<NodeId> {
        match *self {
            Op::Input => vec![],
            Op::Conv { x, .. }
            | Op::GroupNorm { x, .. }
            | Op::Relu { x }
            | Op::Dropout { x, .. }
            | Op::MaxPool { x }
            | Op::Upsample { x }
            | Op::SquareMean { x }
            | Op::Dense { x, .. } => vec![x],
            Op::Add { a, b } | Op::Concat { a, b } => vec![a, b],
        }
    }

    pub fn params(&self) -> Vec<ParamId> {
        match *self {
            Op::Conv { weight, bias, .. } => {
                let mut p = vec![weight];
                p.extend(bias);
                p
            }
            Op::GroupNorm { gamma, beta, .. } => vec![gamma, beta],
            Op::Dense { weight, bias, .. } => vec![weight, bias],
            _ => vec![],
        }
    }
}

#[derive(Debug, Clone)]
pub struct Node {
    pub name: String,
    pub op: Op,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    /// Zero-mean normal with standard deviation `sqrt(2 / fan_in)`.
    He { fan_in: usize },
    Normal { std: f64 },
    Zeros,
    Ones,
}

#[derive(Debug, Clone)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
}

/// Incrementally assembles a [`GraphPlan`], inferring shapes as nodes are added.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    nodes: Vec<Node>,
    params: Vec<ParamSpec>,
    param_names: HashMap<String, ParamId>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn shape(&self, id: NodeId) -> &[usize] {
        &self.nodes[id].shape
    }

    pub fn channels(&self, id: NodeId) -> usize {
        self.nodes[id].shape[0]
    }

    fn push(&mut self, name: impl Into<String>, op: Op, shape: Vec<usize>) -> NodeId {
        self.nodes.push(Node {
            name: name.into(),
            op,
            shape,
        });
        self.nodes.len() - 1
    }

    fn param(&mut self, name: String, shape: Vec<usize>, init: Init) -> Result<ParamId> {
        if self.param_names.contains_key(&name) {
            return Err(CoreError::Config(format!("duplicate parameter name `{}`", name)));
        }
        let id = self.params.len();
        self.param_names.insert(name.clone(), id);
        self.params.push(ParamSpec { name, shape, init });
        Ok(id)
    }

    pub fn input(&mut self, name: &str, shape: &[usize]) -> NodeId {
        self.push(name, Op::Input, shape.to_vec())
    }

    /// Square `kernel x kernel` convolution to `out_channels`.
    pub fn conv(
        &mut self,
        name: &str,
        x: NodeId,
        out_channels: usize,
        kernel: usize,
        spec: ConvSpec,
        with_bias: bool,
    ) -> Result<NodeId> {
        let (c, h, w) = chw(self.shape(x))?;
        let (oh, _) = ops::conv_axis(h, kernel, &spec)?;
        let (ow, _) = ops::conv_axis(w, kernel, &spec)?;
        let weight = self.param(
            format!("{name}.weight"),
            vec![out_channels, c, kernel, kernel],
            Init::He {
                fan_in: c * kernel * kernel,
            },
        )?;
        let bias = if with_bias {
            Some(self.param(format!("{name}.bias"), vec![out_channels], Init::Zeros)?)
        } else {
            None
        };
        Ok(self.push(
            name,
            Op::Conv {
                x,
                weight,
                bias,
                spec,
            },
            vec![out_channels, oh, ow],
        ))
    }

    pub fn group_norm(&mut self, name: &str, x: NodeId, groups: usize) -> Result<NodeId> {
        let shape = self.shape(x).to_vec();
        let (c, _, _) = chw(&shape)?;
        if groups == 0 || c % groups != 0 {
            return Err(CoreError::Config(format!(
                "`{}`: {} channels not divisible into {} groups",
                name, c, groups
            )));
        }
        let gamma = self.param(format!("{name}.gamma"), vec![c], Init::Ones)?;
        let beta = self.param(format!("{name}.beta"), vec![c], Init::Zeros)?;
        Ok(self.push(
            name,
            Op::GroupNorm {
                x,
                gamma,
                beta,
                groups,
            },
            shape,
        ))
    }

    pub fn relu(&mut self, name: &str, x: NodeId) -> NodeId {
        let shape = self.shape(x).to_vec();
        self.push(name, Op::Relu { x }, shape)
    }

    pub fn dropout(&mut self, name: &str, x: NodeId, rate: f64) -> Result<NodeId> {
        if !(0.0..1.0).contains(&rate) {
            return Err(CoreError::Config(format!("dropout rate {} outside [0, 1)", rate)));
        }
        let shape = self.shape(x).to_vec();
        Ok(self.push(name, Op::Dropout { x, rate }, shape))
    }

    pub fn max_pool(&mut self, name: &str, x: NodeId) -> Result<NodeId> {
        let (c, h, w) = chw(self.shape(x))?;
        if h % 2 != 0 || w % 2 != 0 {
            return Err(CoreError::Config(format!(
                "`{}`: cannot 2x2-pool a {}x{} map",
                name, h, w
            )));
        }
        Ok(self.push(name, Op::MaxPool { x }, vec![c, h / 2, w / 2]))
    }

    pub fn upsample(&mut self, name: &str, x: NodeId) -> Result<NodeId> {
        let (c, h, w) = chw(self.shape(x))?;
        Ok(self.push(name, Op::Upsample { x }, vec![c, 2 * h, 2 * w]))
    }

    pub fn add(&mut self, name: &str, a: NodeId, b: NodeId) -> Result<NodeId> {
        if self.shape(a) != self.shape(b) {
            return shape_err(format!(
                "`{}`: cannot add {:?} and {:?}",
                name,
                self.shape(a),
                self.shape(b)
            ));
        }
        let shape = self.shape(a).to_vec();
        Ok(self.push(name, Op::Add { a, b }, shape))
    }

    pub fn concat(&mut self, name: &str, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ca, ha, wa) = chw(self.shape(a))?;
        let (cb, hb, wb) = chw(self.shape(b))?;
        if (ha, wa) != (hb, wb) {
            return shape_err(format!(
                "`{}`: cannot concatenate {:?} and {:?}",
                name,
                self.shape(a),
                self.shape(b)
            ));
        }
        Ok(self.push(name, Op::Concat { a, b }, vec![ca + cb, ha, wa]))
    }

    pub fn square_mean(&mut self, name: &str, x: NodeId) -> Result<NodeId> {
        let (c, _, _) = chw(self.shape(x))?;
        Ok(self.push(name, Op::SquareMean { x }, vec![c]))
    }

    pub fn dense(&mut self, name: &str, x: NodeId, out: usize, std: f64) -> Result<NodeId> {
        let fan_in: usize = self.shape(x).iter().product();
        let weight = self.param(
            format!("{name}.weight"),
            vec![out, fan_in],
            Init::Normal { std },
        )?;
        let bias = self.param(format!("{name}.bias"), vec![out], Init::Zeros)?;
        Ok(self.push(name, Op::Dense { x, weight, bias }, vec![out]))
    }

    /// Seals the plan with `output` as its result node. Fails if any parameter
    /// cannot influence the output.
    pub fn finish(self, output: NodeId) -> Result<GraphPlan> {
        let mut live = vec![false; self.nodes.len()];
        live[output] = true;
        for id in (0..=output).rev() {
            if live[id] {
                for i in self.nodes[id].op.inputs() {
                    live[i] = true;
                }
            }
        }
        let mut reached = vec![false; self.params.len()];
        for (id, node) in self.nodes.iter().enumerate() {
            if live[id] {
                for p in node.op.params() {
                    reached[p] = true;
                }
            }
        }
        if let Some(p) = reached.iter().position(|r| !r) {
            return Err(CoreError::Config(format!(
                "parameter `{}` does not reach the output",
                self.params[p].name
            )));
        }
        let inputs: Vec<NodeId> = self
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.op == Op::Input)
            .map(|(i, _)| i)
            .collect();
        if inputs.len() != 1 {
            return Err(CoreError::Config(format!(
                "graph must have exactly one input node, found {}",
                inputs.len()
            )));
        }
        Ok(GraphPlan {
            nodes: self.nodes,
            params: self.params,
            input: inputs[0],
            output,
        })
    }
}

fn chw(shape: &[usize]) -> Result<(usize, usize, usize)> {
    match shape[..] {
        [c, h, w] => Ok((c, h, w)),
        _ => shape_err(format!("expected a (C,H,W) feature map, got {:?}", shape)),
    }
}

/// Topologically ordered nodes plus parameter shapes. Nodes only refer to
/// earlier nodes, so index order is a valid execution order.
#[derive(Debug, Clone)]
pub struct GraphPlan {
    pub nodes: Vec<Node>,
    pub params: Vec<ParamSpec>,
    pub input: NodeId,
    pub output: NodeId,
}

impl GraphPlan {
    pub fn input_shape(&self) -> &[usize] {
        &self.nodes[self.input].shape
    }

    pub fn node(&self, name: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(|p| p.shape.iter().product::<usize>()).sum()
    }
}

/// Named parameter tensors in registration order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore<T> {
    names: Vec<String>,
    tensors: Vec<Tensor<T>>,
}

impl<T: Real> ParamStore<T> {
    pub fn new(names: Vec<String>, tensors: Vec<Tensor<T>>) -> Self {
        assert_eq!(names.len(), tensors.len());
        ParamStore { names, tensors }
    }

    pub fn zeros_like(specs: &[ParamSpec]) -> Self {
        ParamStore {
            names: specs.iter().map(|s| s.name.clone()).collect(),
            tensors: specs.iter().map(|s| Tensor::zeros(&s.shape)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor<T>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.tensors
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.id(name).map(|i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<T>> {
        self.id(name).map(move |i| &mut self.tensors[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    fn accumulate(&mut self, other: &ParamStore<T>) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            a.add_assign(b).expect("gradient layouts agree");
        }
    }
}

/// Parameter gradients share the parameter layout.
pub type Gradients<T> = ParamStore<T>;

#[derive(Debug, Clone)]
enum Cache<T> {
    None,
    GroupNorm(GroupNormCache<T>),
    Mask(Vec<T>),
    ArgMax(Vec<usize>),
}

/// Activations of one forward pass, kept for the reverse pass.
#[derive(Debug, Clone)]
pub struct Trace<T> {
    values: Vec<Tensor<T>>,
    caches: Vec<Cache<T>>,
}

impl<T: Real> Trace<T> {
    pub fn value(&self, id: NodeId) -> &Tensor<T> {
        &self.values[id]
    }

    pub fn output(&self) -> &Tensor<T> {
        self.values.last().expect("non-empty trace")
    }
}

fn init_params<T: Real>(specs: &[ParamSpec], seed: u64) -> ParamStore<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let tensors = specs
        .iter()
        .map(|s| {
            let n: usize = s.shape.iter().product();
            let data = match s.init {
                Init::Zeros => vec![T::zero(); n],
                Init::Ones => vec![T::one(); n],
                Init::He { fan_in } => sample_normal(&mut rng, (2.0 / fan_in as f64).sqrt(), n),
                Init::Normal { std } => sample_normal(&mut rng, std, n),
            };
            Tensor::from_vec(&s.shape, data).expect("spec shape")
        })
        .collect();
    ParamStore {
        names: specs.iter().map(|s| s.name.clone()).collect(),
        tensors,
    }
}

fn sample_normal<T: Real>(rng: &mut ChaCha8Rng, std: f64, n: usize) -> Vec<T> {
    if std == 0.0 {
        return vec![T::zero(); n];
    }
    let dist = Normal::new(0.0, std).expect("finite std");
    (0..n).map(|_| T::lit(dist.sample(rng))).collect()
}

/// An executable graph: plan, parameters and the dropout generator.
#[derive(Debug, Clone)]
pub struct TensorGraph<T> {
    plan: GraphPlan,
    params: ParamStore<T>,
    rng: ChaCha8Rng,
}

impl<T: Real> TensorGraph<T> {
    /// Initializes every parameter from `seed`.
    pub fn initialize(plan: GraphPlan, seed: u64) -> Self {
        let params = init_params(&plan.params, seed);
        Self::with_params(plan, params, seed).expect("initialized layout matches plan")
    }

    pub fn with_params(plan: GraphPlan, params: ParamStore<T>, seed: u64) -> Result<Self> {
        if params.len() != plan.params.len() {
            return shape_err(format!(
                "plan declares {} parameters, store holds {}",
                plan.params.len(),
                params.len()
            ));
        }
        for (spec, (name, t)) in plan.params.iter().zip(params.iter()) {
            if spec.name != name || spec.shape != t.shape() {
                return shape_err(format!(
                    "parameter `{}` {:?} does not match plan entry `{}` {:?}",
                    name,
                    t.shape(),
                    spec.name,
                    spec.shape
                ));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        Ok(TensorGraph { plan, params, rng })
    }

    pub fn plan(&self) -> &GraphPlan {
        &self.plan
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.params
    }

    pub fn into_params(self) -> ParamStore<T> {
        self.params
    }

    /// Runs one sample. `mask_seed` drives the dropout masks in training mode.
    pub fn run_sample(&self, input: &Tensor<T>, mode: Mode, mask_seed: u64) -> Result<Trace<T>> {
        if input.shape() != self.plan.input_shape() {
            return shape_err(format!(
                "input {:?} does not match graph input {:?}",
                input.shape(),
                self.plan.input_shape()
            ));
        }
        let mut mask_rng = ChaCha8Rng::seed_from_u64(mask_seed);
        let p = self.params.tensors();
        let mut values: Vec<Tensor<T>> = Vec::with_capacity(self.plan.nodes.len());
        let mut caches = Vec::with_capacity(self.plan.nodes.len());
        for node in &self.plan.nodes {
            let (value, cache) = match node.op {
                Op::Input => (input.clone(), Cache::None),
                Op::Conv {
                    x,
                    weight,
                    bias,
                    ref spec,
                } => (
                    ops::conv2d(&values[x], &p[weight], bias.map(|b| &p[b]), spec)?,
                    Cache::None,
                ),
                Op::GroupNorm {
                    x,
                    gamma,
                    beta,
                    groups,
                } => {
                    let (y, c) = ops::group_norm_cached(
                        &values[x],
                        groups,
                        &p[gamma],
                        &p[beta],
                        T::lit(GROUP_NORM_EPS),
                    )?;
                    (y, Cache::GroupNorm(c))
                }
                Op::Relu { x } => (ops::relu(&values[x]), Cache::None),
                Op::Dropout { x, rate } => {
                    if mode == Mode::Train && rate > 0.0 {
                        let mask = ops::dropout_mask(values[x].shape()[0], rate, &mut mask_rng);
                        (ops::apply_channel_mask(&values[x], &mask)?, Cache::Mask(mask))
                    } else {
                        (values[x].clone(), Cache::None)
                    }
                }
                Op::MaxPool { x } => {
                    let (y, arg) = ops::max_pool2(&values[x])?;
                    (y, Cache::ArgMax(arg))
                }
                Op::Upsample { x } => (ops::upsample2(&values[x])?, Cache::None),
                Op::Add { a, b } => {
                    let mut y = values[a].clone();
                    y.add_assign(&values[b])?;
                    (y, Cache::None)
                }
                Op::Concat { a, b } => (ops::concat_channels(&values[a], &values[b])?, Cache::None),
                Op::SquareMean { x } => (ops::square_mean_pool(&values[x])?, Cache::None),
                Op::Dense { x, weight, bias } => {
                    (ops::dense(&values[x], &p[weight], &p[bias])?, Cache::None)
                }
            };
            if !value.all_finite() {
                return Err(CoreError::NonFinite {
                    node: node.name.clone(),
                });
            }
            values.push(value);
            caches.push(cache);
        }
        Ok(Trace { values, caches })
    }

    /// Reverse pass from `output_grad` (gradient of the loss w.r.t. the output node).
    pub fn backprop_sample(&self, trace: &Trace<T>, output_grad: Tensor<T>) -> Result<Gradients<T>> {
        let nodes = &self.plan.nodes;
        if output_grad.shape() != nodes[self.plan.output].shape.as_slice() {
            return shape_err("output gradient shape mismatch");
        }
        let p = self.params.tensors();
        let mut grads = ParamStore::zeros_like(&self.plan.params);
        let mut node_grads: Vec<Option<Tensor<T>>> = vec![None; nodes.len()];
        node_grads[self.plan.output] = Some(output_grad);

        fn acc<T: Real>(slot: &mut Option<Tensor<T>>, g: Tensor<T>) -> Result<()> {
            match slot {
                Some(t) => t.add_assign(&g),
                None => {
                    *slot = Some(g);
                    Ok(())
                }
            }
        }

        for id in (0..nodes.len()).rev() {
            let g = match node_grads[id].take() {
                Some(g) => g,
                None => continue,
            };
            match nodes[id].op {
                Op::Input => {}
                Op::Conv {
                    x,
                    weight,
                    bias,
                    ref spec,
                } => {
                    let (gx, gw, gb) = ops::conv2d_backward(&trace.values[x], &p[weight], &g, spec)?;
                    grads.tensors[weight].add_assign(&gw)?;
                    if let Some(b) = bias {
                        grads.tensors[b].add_assign(&gb)?;
                    }
                    acc(&mut node_grads[x], gx)?;
                }
                Op::GroupNorm { x, gamma, beta, .. } => {
                    let cache = match &trace.caches[id] {
                        Cache::GroupNorm(c) => c,
                        _ => unreachable!("group norm trace carries its cache"),
                    };
                    let (gx, gg, gb) = ops::group_norm_backward(cache, &p[gamma], &g)?;
                    grads.tensors[gamma].add_assign(&gg)?;
                    grads.tensors[beta].add_assign(&gb)?;
                    acc(&mut node_grads[x], gx)?;
                }
                Op::Relu { x } => {
                    acc(&mut node_grads[x], ops::relu_backward(&trace.values[x], &g))?;
                }
                Op::Dropout { x, .. } => {
                    let gx = match &trace.caches[id] {
                        Cache::Mask(mask) => ops::apply_channel_mask(&g, mask)?,
                        _ => g,
                    };
                    acc(&mut node_grads[x], gx)?;
                }
                Op::MaxPool { x } => {
                    let arg = match &trace.caches[id] {
                        Cache::ArgMax(a) => a,
                        _ => unreachable!("max pool trace carries its argmax"),
                    };
                    let gx = ops::max_pool2_backward(trace.values[x].shape(), arg, &g)?;
                    acc(&mut node_grads[x], gx)?;
                }
                Op::Upsample { x } => {
                    acc(&mut node_grads[x], ops::upsample2_backward(&g)?)?;
                }
                Op::Add { a, b } => {
                    acc(&mut node_grads[b], g.clone())?;
                    acc(&mut node_grads[a], g)?;
                }
                Op::Concat { a, b } => {
                    let ca = trace.values[a].len();
                    let data = g.into_data();
                    let gb = Tensor::from_vec(trace.values[b].shape(), data[ca..].to_vec())?;
                    let ga = Tensor::from_vec(trace.values[a].shape(), data[..ca].to_vec())?;
                    acc(&mut node_grads[a], ga)?;
                    acc(&mut node_grads[b], gb)?;
                }
                Op::SquareMean { x } => {
                    let gx = ops::square_mean_pool_backward(&trace.values[x], &g)?;
                    acc(&mut node_grads[x], gx)?;
                }
                Op::Dense { x, weight, bias } => {
                    let (gx, gw, gb) = ops::dense_backward(&trace.values[x], &p[weight], &g)?;
                    grads.tensors[weight].add_assign(&gw)?;
                    grads.tensors[bias].add_assign(&gb)?;
                    acc(&mut node_grads[x], gx)?;
                }
            }
        }
        Ok(grads)
    }

    fn split_batch(&self, batch: &Tensor<T>) -> Result<Vec<Tensor<T>>> {
        let (n, c, h, w) = batch.nchw()?;
        if [c, h, w] != self.plan.input_shape() {
            return shape_err(format!(
                "batch items ({}, {}, {}) do not match graph input {:?}",
                c,
                h,
                w,
                self.plan.input_shape()
            ));
        }
        (0..n).map(|i| batch.item(i)).collect()
    }

    fn check_scalar_output(&self) -> Result<()> {
        if self.plan.nodes[self.plan.output].shape != [1] {
            return shape_err("graph output is not a single logit");
        }
        Ok(())
    }

    /// Draws one dropout seed per sample from the graph generator, in sample order.
    pub fn draw_mask_seeds(&mut self, n: usize) -> Vec<u64> {
        (0..n).map(|_| self.rng.random()).collect()
    }

    /// Logits for every image of an `(N, C, H, W)` batch.
    pub fn logits(&mut self, batch: &Tensor<T>, mode: Mode) -> Result<Vec<T>> {
        self.check_scalar_output()?;
        let items = self.split_batch(batch)?;
        let seeds = match mode {
            Mode::Train => self.draw_mask_seeds(items.len()),
            Mode::Infer => vec![0; items.len()],
        };
        let this = &*self;
        items
            .par_iter()
            .zip(seeds.par_iter())
            .map(|(x, &s)| this.run_sample(x, mode, s).map(|t| t.output().data()[0]))
            .collect()
    }

    /// Per-image normalcy scores in (0, 1).
    pub fn forward(&mut self, batch: &Tensor<T>, mode: Mode) -> Result<Vec<T>> {
        Ok(self.logits(batch, mode)?.into_iter().map(ops::sigmoid).collect())
    }

    /// Mean binary cross-entropy and its parameter gradients for a batch run in
    /// training mode.
    pub fn backward(&mut self, batch: &Tensor<T>, labels: &[T]) -> Result<(T, Gradients<T>)> {
        let n = batch.nchw()?.0;
        let seeds = self.draw_mask_seeds(n);
        self.loss_and_gradients(batch, labels, Mode::Train, &seeds)
    }

    /// Loss and gradients with caller-chosen dropout seeds, for reproducible
    /// finite-difference checks.
    pub fn loss_and_gradients(
        &self,
        batch: &Tensor<T>,
        labels: &[T],
        mode: Mode,
        seeds: &[u64],
    ) -> Result<(T, Gradients<T>)> {
        self.check_scalar_output()?;
        let items = self.split_batch(batch)?;
        if labels.len() != items.len() {
            return Err(CoreError::Argument(format!(
                "{} labels for a batch of {}",
                labels.len(),
                items.len()
            )));
        }
        if seeds.len() != items.len() {
            return Err(CoreError::Argument("one dropout seed per sample required".into()));
        }
        let n = T::from_count(items.len());
        let per_sample: Vec<(T, Gradients<T>)> = items
            .par_iter()
            .zip(labels.par_iter().zip(seeds.par_iter()))
            .map(|(x, (&y, &s))| {
                let trace = self.run_sample(x, mode, s)?;
                let z = trace.output().data()[0];
                let dz = (ops::sigmoid(z) - y) / n;
                let g = self.backprop_sample(&trace, Tensor::vector(vec![dz]))?;
                Ok((ops::bce_with_logit(z, y), g))
            })
            .collect::<Result<_>>()?;
        let mut loss = T::zero();
        let mut total = ParamStore::zeros_like(&self.plan.params);
        for (l, g) in &per_sample {
            loss += *l;
            total.accumulate(g);
        }
        Ok((loss / n, total))
    }

    /// Mean loss only, with fixed dropout seeds.
    pub fn loss(&self, batch: &Tensor<T>, labels: &[T], mode: Mode, seeds: &[u64]) -> Result<T> {
        let items = self.split_batch(batch)?;
        let mut total = T::zero();
        for ((x, &y), &s) in items.iter().zip(labels).zip(seeds) {
            let z = self.run_sample(x, mode, s)?.output().data()[0];
            total += ops::bce_with_logit(z, y);
        }
        Ok(total / T::from_count(items.len()))
    }
}
