//! Single-trial training and test-split evaluation.
//!
//! A trial is fully determined by its config and seed: model init, shuffle
//! order, and dropout all draw from one ChaCha8 stream, and eval-mode
//! forwards consume no randomness, so rerunning a seed reproduces every bit.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::WindowedDataset;
use crate::error::Error;
use crate::metrics::{DayPrediction, EvalReport};
use crate::models::{
    predict_multistep, CheckpointMeta, Forecaster, Lstm, ModelFamily, Rnn, Transformer,
};
use crate::optim::Optimizer;
use crate::tensor::{Graph, TensorId};
use crate::Result;

use super::config::ExperimentConfig;

/// Everything `fit` leaves behind: the trained parameters live in `graph`.
pub struct FitResult {
    pub graph: Graph,
    pub model: Box<dyn Forecaster>,
    /// Mean per-window training MSE after each epoch (normalized space).
    pub train_mse: Vec<f64>,
    /// Teacher-forced MSE on the eval split after each epoch.
    pub eval_mse: Vec<f64>,
}

/// Scalar results of one trial, cheap to ship across threads.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub trial_id: usize,
    pub seed: u64,
    pub report: EvalReport,
    pub epochs: usize,
    pub final_train_mse: f64,
    pub wall_ms: u128,
}

/// A trial's model kept alive for checkpointing or further prediction.
pub struct TrainedModel {
    pub graph: Graph,
    pub model: Box<dyn Forecaster>,
    pub meta: CheckpointMeta,
}

pub fn build_model(
    g: &mut Graph,
    cfg: &ExperimentConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Box<dyn Forecaster>> {
    Ok(match cfg.family {
        ModelFamily::Transformer => Box::new(Transformer::new(g, rng, cfg.transformer)?),
        ModelFamily::Lstm => Box::new(Lstm::new(g, rng, cfg.recurrent)?),
        ModelFamily::Rnn => Box::new(Rnn::new(g, rng, cfg.recurrent)?),
    })
}

pub fn checkpoint_meta(cfg: &ExperimentConfig, data: &WindowedDataset) -> CheckpointMeta {
    CheckpointMeta {
        family: cfg.family,
        transformer: (cfg.family == ModelFamily::Transformer).then_some(cfg.transformer),
        recurrent: (cfg.family != ModelFamily::Transformer).then_some(cfg.recurrent),
        norm: data.norm.clone(),
    }
}

/// Mean teacher-forced loss over `windows`, built on the current tape.
fn batch_loss(
    g: &mut Graph,
    model: &dyn Forecaster,
    windows: &[&crate::data::Window],
    training: bool,
    rng: &mut ChaCha8Rng,
) -> Result<TensorId> {
    let mut total: Option<TensorId> = None;
    for w in windows {
        let pred = model.forward_window(g, &w.input, Some(&w.target), training, rng)?;
        let target = g.leaf(w.target.len(), 1, w.target.clone())?;
        let loss = g.mse(pred, target)?;
        total = Some(match total {
            Some(t) => g.add(t, loss)?,
            None => loss,
        });
    }
    let total = total.ok_or_else(|| Error::Contract("batch_loss needs windows".into()))?;
    g.scale(total, 1.0 / windows.len() as f64)
}

fn finite_or_diverged(loss: f64, epoch: usize, context: &str) -> Result<f64> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(Error::Diverged {
            epoch,
            detail: format!("non-finite {context} loss {loss}"),
        })
    }
}

/// Train one model on the dataset's train split for `cfg.epochs` epochs of
/// shuffled mini-batch gradient descent. No early stopping: every run does
/// the full budget, and the per-epoch histories tell the story instead.
pub fn fit(cfg: &ExperimentConfig, data: &WindowedDataset, seed: u64) -> Result<FitResult> {
    let mut g = Graph::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = build_model(&mut g, cfg, &mut rng)?;
    g.mark_persistent();
    let params = model.params();
    let mut opt = Optimizer::new(cfg.optimizer, &g, &params)?;
    let sched = cfg.scheduler();

    if data.train.is_empty() {
        return Err(Error::Contract("dataset has no training windows".into()));
    }
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut train_mse = Vec::with_capacity(cfg.epochs);
    let mut eval_mse = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut sq_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            g.reset();
            opt.zero_grads(&mut g);
            let windows: Vec<&crate::data::Window> =
                chunk.iter().map(|&i| &data.train[i]).collect();
            let loss = batch_loss(&mut g, model.as_ref(), &windows, true, &mut rng)?;
            let loss_val = finite_or_diverged(g.value(loss)?[0], epoch, "training")?;
            sq_sum += loss_val * windows.len() as f64;
            g.backward(loss)?;
            let lr_t = sched.lr_at(opt.step_count() + 1, cfg.optimizer.base_lr)?;
            opt.step(&mut g, lr_t).map_err(|e| match e {
                Error::Numeric(detail) => Error::Diverged { epoch, detail },
                other => other,
            })?;
        }
        let epoch_train = sq_sum / data.train.len() as f64;
        train_mse.push(epoch_train);

        // Monitoring only; eval mode draws no randomness, so this does not
        // perturb the training stream. Memorized datasets have no eval
        // split and mirror the train loss.
        let epoch_eval = if data.eval.is_empty() {
            epoch_train
        } else {
            g.reset();
            let windows: Vec<&crate::data::Window> = data.eval.iter().collect();
            let loss = batch_loss(&mut g, model.as_ref(), &windows, false, &mut rng)?;
            finite_or_diverged(g.value(loss)?[0], epoch, "eval")?
        };
        eval_mse.push(epoch_eval);
        log::debug!("epoch {epoch}: train mse {epoch_train:.6}, eval mse {epoch_eval:.6}");
    }

    Ok(FitResult {
        graph: g,
        model,
        train_mse,
        eval_mse,
    })
}

/// Multi-step forecasts for every test window, flattened to (date, actual,
/// predicted) days. Each window contributes `horizon` days starting at its
/// first target date, so adjacent windows overlap when horizon > 1.
pub fn evaluate_test(
    g: &mut Graph,
    model: &dyn Forecaster,
    data: &WindowedDataset,
    trial_id: usize,
    seed: u64,
) -> Result<EvalReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut days = Vec::with_capacity(data.test.len() * data.horizon);
    for w in &data.test {
        g.reset();
        let preds = predict_multistep(model, g, &mut rng, &w.input, data.horizon, &data.norm)?;
        for (k, &p) in preds.iter().enumerate() {
            days.push(DayPrediction {
                date: data.dates[w.t0 + k],
                actual: data.raw_positive[w.t0 + k],
                predicted: p,
            });
        }
    }
    EvalReport::new(days, trial_id, seed)
}

/// Run one full trial and keep the trained model.
pub fn run_trial_full(
    cfg: &ExperimentConfig,
    data: &WindowedDataset,
    trial_id: usize,
) -> Result<(TrialOutcome, TrainedModel)> {
    let seed = cfg.base_seed.wrapping_add(trial_id as u64);
    let start = Instant::now();
    let fit_res = fit(cfg, data, seed)?;
    let FitResult {
        mut graph,
        model,
        train_mse,
        ..
    } = fit_res;
    let report = evaluate_test(&mut graph, model.as_ref(), data, trial_id, seed)?;
    let outcome = TrialOutcome {
        trial_id,
        seed,
        epochs: cfg.epochs,
        final_train_mse: *train_mse.last().expect("epochs >= 1"),
        wall_ms: start.elapsed().as_millis(),
        report,
    };
    let trained = TrainedModel {
        graph,
        model,
        meta: checkpoint_meta(cfg, data),
    };
    Ok((outcome, trained))
}

/// Run one full trial, dropping the model after evaluation.
pub fn run_trial(
    cfg: &ExperimentConfig,
    data: &WindowedDataset,
    trial_id: usize,
) -> Result<TrialOutcome> {
    run_trial_full(cfg, data, trial_id).map(|(outcome, _)| outcome)
}
