use cxr_core::net::gradcheck::{check_gradients, jitter_parameters, GradCheckOptions, GradCheckReport};
use cxr_core::net::graph::{GraphBuilder, NodeId};
use cxr_core::net::pyramid::add_dilated_block;
use cxr_core::net::{build_pyramid_graph, ConvSpec, GraphConfig, Mode, TensorGraph};
use cxr_core::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-4;

fn random_batch(n: usize, shape: &[usize], seed: u64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len: usize = shape.iter().product::<usize>() * n;
    let mut full = vec![n];
    full.extend_from_slice(shape);
    Tensor::from_vec(&full, (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn run(graph: TensorGraph<f64>, input: &[usize], mode: Mode) -> GradCheckReport {
    let mut graph = graph;
    jitter_parameters(&mut graph, 5);
    let batch = random_batch(3, input, 11);
    let labels = [1.0, 0.0, 1.0];
    let opts = GradCheckOptions {
        per_tensor: 24,
        ..Default::default()
    };
    let report = check_gradients(&mut graph, &batch, &labels, mode, &[1, 2, 3], &opts).unwrap();
    assert!(
        report.max_rel_error() < TOL,
        "worst {:?}",
        report.worst()
    );
    report
}

fn head(b: &mut GraphBuilder, x: NodeId) -> NodeId {
    let pooled = b.square_mean("pool", x).unwrap();
    b.dense("head.dense", pooled, 1, 0.5).unwrap()
}

#[test]
fn conv_with_stride_and_dilation() {
    for (stride, dilation) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
        let mut b = GraphBuilder::new();
        let x = b.input("x", &[3, 9, 9]);
        let c = b.conv("conv", x, 4, 3, ConvSpec::same(stride, dilation), true).unwrap();
        let out = head(&mut b, c);
        run(TensorGraph::initialize(b.finish(out).unwrap(), 1), &[3, 9, 9], Mode::Infer);
    }
}

#[test]
fn group_norm_node() {
    let mut b = GraphBuilder::new();
    let x = b.input("x", &[2, 5, 5]);
    let c = b.conv("conv", x, 8, 3, ConvSpec::default(), true).unwrap();
    let n = b.group_norm("gn", c, 4).unwrap();
    let out = head(&mut b, n);
    run(TensorGraph::initialize(b.finish(out).unwrap(), 2), &[2, 5, 5], Mode::Infer);
}

#[test]
fn dilated_block_node() {
    for (cin, width) in [(4, 8), (8, 8)] {
        let mut b = GraphBuilder::new();
        let x = b.input("x", &[cin, 8, 8]);
        let blk = add_dilated_block(&mut b, "block", x, width, 4, 0.3).unwrap();
        let out = head(&mut b, blk);
        let r = run(TensorGraph::initialize(b.finish(out).unwrap(), 3), &[cin, 8, 8], Mode::Train);
        assert_eq!(r.entries.iter().any(|e| e.param.starts_with("block.skip")), cin != width);
    }
}

#[test]
fn second_order_pool_node() {
    let mut b = GraphBuilder::new();
    let x = b.input("x", &[6, 4, 4]);
    let proj = b.conv("sop.proj", x, 5, 1, ConvSpec::default(), false).unwrap();
    let out = head(&mut b, proj);
    run(TensorGraph::initialize(b.finish(out).unwrap(), 4), &[6, 4, 4], Mode::Infer);
}

#[test]
fn dense_head_node() {
    let mut b = GraphBuilder::new();
    let x = b.input("x", &[3, 2, 2]);
    let out = b.dense("head.dense", x, 1, 0.5).unwrap();
    run(TensorGraph::initialize(b.finish(out).unwrap(), 5), &[3, 2, 2], Mode::Infer);
}

#[test]
fn full_desk_graph() {
    let cfg = GraphConfig::desk();
    let mut graph = build_pyramid_graph::<f64>(&cfg).unwrap();
    jitter_parameters(&mut graph, 7);
    let batch = random_batch(2, &[1, 64, 64], 13);
    let opts = GradCheckOptions {
        per_tensor: 3,
        ..Default::default()
    };
    let report = check_gradients(&mut graph, &batch, &[1.0, 0.0], Mode::Train, &[21, 22], &opts).unwrap();
    assert_eq!(
        report.entries.iter().map(|e| &e.param).collect::<std::collections::BTreeSet<_>>().len(),
        graph.params().len()
    );
    assert!(report.max_rel_error() < TOL, "worst {:?}", report.worst());
}

