use std::time::Instant;

use rayon::prelude::*;

use crate::data::SequenceDataset;
use crate::error::{FdtnError, Result};
use crate::grid::RealGrid;
use crate::model::network::Fdtn;
use crate::nn::{Adam, AdamSettings, Grads};
use crate::rng::Rng;

/// Mean squared error over all pixels of all frames.
pub fn mse(predicted: &[RealGrid], target: &[RealGrid]) -> f64 {
    let n: usize = target.iter().map(RealGrid::len).sum();
    let sum: f64 = predicted
        .iter()
        .zip(target)
        .flat_map(|(p, t)| p.values().iter().zip(t.values()))
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    sum / n.max(1) as f64
}

/// Gradient of [`mse`] with respect to each predicted frame.
pub fn mse_grad(predicted: &[RealGrid], target: &[RealGrid]) -> Vec<RealGrid> {
    let n: usize = target.iter().map(RealGrid::len).sum();
    let scale = 2.0 / n.max(1) as f64;
    predicted
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let g = p
                .values()
                .iter()
                .zip(t.values())
                .map(|(p, t)| scale * (p - t))
                .collect();
            RealGrid::new(p.width(), p.height(), g).expect("same shape as prediction")
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub mean_mse: f64,
    /// MSE at each prediction step, averaged over sequences.
    pub per_step: Vec<f64>,
    pub sequences: usize,
}

fn split_sequence<'a>(
    model: &Fdtn,
    seq: &'a [RealGrid],
) -> Result<(&'a [RealGrid], &'a [RealGrid])> {
    let c = model.config();
    let needed = c.seed_count + c.horizon;
    if seq.len() < needed {
        return Err(FdtnError::InvalidArgument(format!(
            "sequences have {} frames; seed_count {} + horizon {} needs {needed}",
            seq.len(),
            c.seed_count,
            c.horizon
        )));
    }
    Ok((&seq[..c.seed_count], &seq[c.seed_count..needed]))
}

fn summarize(per_seq: Vec<Vec<f64>>, horizon: usize) -> Evaluation {
    let count = per_seq.len();
    let mut per_step = vec![0.0; horizon];
    for errs in &per_seq {
        per_step.iter_mut().zip(errs).for_each(|(a, e)| *a += e);
    }
    per_step.iter_mut().for_each(|a| *a /= count.max(1) as f64);
    let mean_mse = per_step.iter().sum::<f64>() / horizon.max(1) as f64;
    Evaluation {
        mean_mse,
        per_step,
        sequences: count,
    }
}

fn step_errors(predicted: &[RealGrid], target: &[RealGrid]) -> Vec<f64> {
    predicted
        .iter()
        .zip(target)
        .map(|(p, t)| mse(std::slice::from_ref(p), std::slice::from_ref(t)))
        .collect()
}

/// Mean per-pixel MSE of `model` predictions over every sequence.
pub fn evaluate(model: &Fdtn, dataset: &SequenceDataset) -> Result<Evaluation> {
    let per_seq = dataset
        .sequences
        .iter()
        .map(|seq| {
            let (seeds, target) = split_sequence(model, seq)?;
            Ok(step_errors(&model.rollout(seeds)?, target))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(per_seq, model.config().horizon))
}

/// Error of repeating the last seed frame, with the model's seed/horizon split.
pub fn copy_last_baseline(model: &Fdtn, dataset: &SequenceDataset) -> Result<Evaluation> {
    let per_seq = dataset
        .sequences
        .iter()
        .map(|seq| {
            let (seeds, target) = split_sequence(model, seq)?;
            let last = seeds.last().expect("seed_count >= 2");
            Ok(step_errors(&vec![last.clone(); target.len()], target))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(per_seq, model.config().horizon))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    pub adam: AdamSettings,
    pub epochs: usize,
    pub batch_size: usize,
    /// Seeds the per-epoch shuffle.
    pub seed: u64,
    /// Worker threads for per-sequence gradients; results do not depend on it.
    pub threads: usize,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            adam: AdamSettings::default(),
            epochs: 20,
            batch_size: 16,
            seed: 7,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_mse: f64,
    pub test_mse: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochLog>,
}

impl TrainReport {
    pub fn final_test_mse(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.test_mse)
    }
}

fn sequence_grads(model: &Fdtn, seq: &[RealGrid]) -> Result<(f64, Grads)> {
    let (seeds, target) = split_sequence(model, seq)?;
    let tape = model.rollout_recorded(seeds, target.len())?;
    let loss = mse(tape.outputs(), target);
    let grads = model.backward(&tape, &mse_grad(tape.outputs(), target))?;
    Ok((loss, grads))
}

/// Train with Adam on full-horizon backpropagation through time.
///
/// Epoch 0 in the report is the evaluation before any update. Per-sequence
/// gradients are reduced in sequence order, so the result is identical for
/// every thread count.
pub fn train_bptt(
    model: &mut Fdtn,
    train: &SequenceDataset,
    test: &SequenceDataset,
    settings: &TrainSettings,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainReport> {
    if settings.batch_size == 0 || train.is_empty() {
        return Err(FdtnError::InvalidArgument(
            "training needs a non-empty dataset and batch_size >= 1".into(),
        ));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.threads.max(1))
        .build()
        .map_err(|e| FdtnError::InvalidArgument(format!("thread pool: {e}")))?;
    let mut adam = Adam::new(model.params(), settings.adam);
    let mut rng = Rng::new(settings.seed);
    let mut epochs = Vec::with_capacity(settings.epochs + 1);

    let start = Instant::now();
    let log = EpochLog {
        epoch: 0,
        train_mse: pool.install(|| evaluate_par(model, train))?,
        test_mse: pool.install(|| evaluate_par(model, test))?,
        seconds: start.elapsed().as_secs_f64(),
    };
    on_epoch(&log);
    epochs.push(log);

    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=settings.epochs {
        let start = Instant::now();
        for i in (1..order.len()).rev() {
            order.swap(i, rng.below(i as u64 + 1) as usize);
        }
        let mut loss_sum = 0.0;
        for batch in order.chunks(settings.batch_size) {
            let shared: &Fdtn = model;
            let results = pool.install(|| {
                batch
                    .par_iter()
                    .map(|&k| sequence_grads(shared, &train.sequences[k]))
                    .collect::<Result<Vec<_>>>()
            })?;
            let scale = 1.0 / batch.len() as f64;
            let params = model.params_mut();
            params.zero_grad();
            for (loss, g) in &results {
                loss_sum += loss;
                params.accumulate(g, scale);
            }
            adam.step(params)?;
        }
        let log = EpochLog {
            epoch,
            train_mse: loss_sum / train.len() as f64,
            test_mse: pool.install(|| evaluate_par(model, test))?,
            seconds: start.elapsed().as_secs_f64(),
        };
        on_epoch(&log);
        epochs.push(log);
    }
    Ok(TrainReport { epochs })
}

fn evaluate_par(model: &Fdtn, dataset: &SequenceDataset) -> Result<f64> {
    let losses = dataset
        .sequences
        .par_iter()
        .map(|seq| {
            let (seeds, target) = split_sequence(model, seq)?;
            Ok(mse(&model.rollout(seeds)?, target))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len().max(1) as f64)
}
