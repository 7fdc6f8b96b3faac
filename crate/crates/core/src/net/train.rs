//! Minibatch training loop with augmentation, Nadam and a held-out AUC per epoch.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::augment::{augment, AugmentPolicy};
use super::graph::TensorGraph;
use super::ops::Mode;
use super::optim::{NadamHyper, OptimState};
use crate::error::{CoreError, Result};
use crate::eval::{roc_auc, Label, ScoreTable};
use crate::scalar::Real;
use crate::tensor::Tensor;

/// One labelled `(1, H, W)` image.
#[derive(Debug, Clone)]
pub struct Example<T> {
    pub image: Tensor<T>,
    pub label: Label,
}

#[derive(Debug, Clone)]
pub struct Dataset<T> {
    pub train: Vec<Example<T>>,
    pub holdout: Vec<Example<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    /// Seeds the shuffling order.
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub holdout_auc: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
}

impl TrainingLog {
    /// `epoch,mean_loss,holdout_auc` with a header row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,mean_loss,holdout_auc\n");
        for r in &self.epochs {
            let _ = writeln!(s, "{},{},{}", r.epoch, r.mean_loss, r.holdout_auc);
        }
        s
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }
}

/// Normalcy scores for `examples`, evaluated in inference mode in chunks.
pub fn score_examples<T: Real>(graph: &mut TensorGraph<T>, examples: &[Example<T>], chunk: usize) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(examples.len());
    for part in examples.chunks(chunk.max(1)) {
        let images: Vec<Tensor<T>> = part.iter().map(|e| e.image.clone()).collect();
        out.extend(graph.forward(&Tensor::stack(&images)?, Mode::Infer)?);
    }
    Ok(out)
}

pub fn holdout_auc<T: Real>(graph: &mut TensorGraph<T>, examples: &[Example<T>], chunk: usize) -> Result<f64> {
    let scores = score_examples(graph, examples, chunk)?;
    let pairs: Vec<(T, Label)> = scores.into_iter().zip(examples.iter().map(|e| e.label)).collect();
    Ok(roc_auc(&ScoreTable::from_pairs(&pairs)?)?.as_f64())
}

pub fn train_toy<T: Real>(
    graph: TensorGraph<T>,
    data: &Dataset<T>,
    policy: &AugmentPolicy,
    hyper: NadamHyper,
    options: TrainOptions,
) -> Result<(TrainingLog, TensorGraph<T>)> {
    train_toy_observed(graph, data, policy, hyper, options, |_| {})
}

/// As [`train_toy`], calling `observe` after every epoch.
pub fn train_toy_observed<T: Real>(
    mut graph: TensorGraph<T>,
    data: &Dataset<T>,
    policy: &AugmentPolicy,
    hyper: NadamHyper,
    options: TrainOptions,
    mut observe: impl FnMut(&EpochRecord),
) -> Result<(TrainingLog, TensorGraph<T>)> {
    if data.train.is_empty() {
        return Err(CoreError::Argument("training set is empty".into()));
    }
    if options.batch_size == 0 {
        return Err(CoreError::Argument("batch size must be positive".into()));
    }
    let has = |l: Label| data.holdout.iter().any(|e| e.label == l);
    if !has(Label::Normal) || !has(Label::Abnormal) {
        return Err(CoreError::Argument(
            "held-out set needs at least one normal and one abnormal image".into(),
        ));
    }
    policy.validate()?;
    let mut log = TrainingLog::default();
    if options.epochs == 0 {
        return Ok((log, graph));
    }

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(options.seed);
    shuffle_rng.set_stream(2);
    let mut augment_rng = ChaCha8Rng::seed_from_u64(policy.seed);
    augment_rng.set_stream(3);
    let mut optim = OptimState::new(hyper, graph.params().tensors());
    let mut order: Vec<usize> = (0..data.train.len()).collect();

    for epoch in 1..=options.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(options.batch_size) {
            let images = batch
                .iter()
                .map(|&i| augment(&data.train[i].image, policy, &mut augment_rng))
                .collect::<Result<Vec<_>>>()?;
            let labels: Vec<T> = batch.iter().map(|&i| data.train[i].label.target()).collect();
            let (loss, grads) = graph.backward(&Tensor::stack(&images)?, &labels)?;
            loss_sum += loss.as_f64() * batch.len() as f64;
            optim.step(graph.params_mut().tensors_mut(), grads.tensors())?;
        }
        let record = EpochRecord {
            epoch,
            mean_loss: loss_sum / data.train.len() as f64,
            holdout_auc: holdout_auc(&mut graph, &data.holdout, 64)?,
        };
        observe(&record);
        log.epochs.push(record);
    }
    Ok((log, graph))
}
