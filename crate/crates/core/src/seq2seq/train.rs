use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{Condition, Seq2Seq};
use crate::autodiff::{sgd_step_many, shrink_weights, ParamSet, Tape, Var, DEFAULT_CLIP_NORM};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    /// Multiplier applied to the learning rate after each epoch.
    pub lr_decay: f64,
    pub clip_norm: f64,
    /// L2 penalty coefficient; weights shrink by `1 - lr * weight_decay` per step.
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            lr: 0.5,
            lr_decay: 1.0,
            clip_norm: DEFAULT_CLIP_NORM,
            weight_decay: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate must be positive, got {}", self.lr)));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::InvalidArgument(format!("lr decay must lie in (0, 1], got {}", self.lr_decay)));
        }
        if !(self.clip_norm > 0.0) {
            return Err(Error::InvalidArgument(format!("clip norm must be positive, got {}", self.clip_norm)));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay * self.lr < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "weight decay must be non-negative with lr * decay < 1, got {}",
                self.weight_decay
            )));
        }
        Ok(())
    }
}

/// Mean training loss per epoch.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub epoch_losses: Vec<f64>,
}

impl TrainLog {
    pub fn last(&self) -> Option<f64> {
        self.epoch_losses.last().copied()
    }
}

/// Anything whose parameters are updated by [`sgd_epochs`].
pub trait Trainable {
    fn param_sets(&self) -> Vec<&ParamSet>;
    fn param_sets_mut(&mut self) -> Vec<&mut ParamSet>;
}

impl Trainable for Seq2Seq {
    fn param_sets(&self) -> Vec<&ParamSet> {
        vec![self.params()]
    }

    fn param_sets_mut(&mut self) -> Vec<&mut ParamSet> {
        vec![self.params_mut()]
    }
}

fn diverged(epoch: usize, step: usize, e: Error) -> Error {
    match e {
        Error::NonFinite(what) => Error::Diverged {
            epoch,
            step,
            detail: format!("non-finite value in {what}"),
        },
        other => other,
    }
}

/// Per-example SGD over `n` examples, shuffled each epoch by a seeded RNG.
pub fn sgd_epochs<M, F>(model: &mut M, n: usize, cfg: &TrainConfig, loss_fn: F) -> Result<TrainLog>
where
    M: Trainable,
    F: FnMut(&M, &mut Tape, usize) -> Result<Var>,
{
    sgd_epochs_with(model, n, cfg, loss_fn, |_, _| Ok(()))
}

/// [`sgd_epochs`] with a hook run after every epoch.
pub fn sgd_epochs_with<M, F, H>(model: &mut M, n: usize, cfg: &TrainConfig, mut loss_fn: F, mut after_epoch: H) -> Result<TrainLog>
where
    M: Trainable,
    F: FnMut(&M, &mut Tape, usize) -> Result<Var>,
    H: FnMut(&mut M, usize) -> Result<()>,
{
    cfg.validate()?;
    if n == 0 {
        return Err(Error::Empty("training set"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut log = TrainLog::default();
    let mut lr = cfg.lr;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (step, &i) in order.iter().enumerate() {
            let mut tape = Tape::new();
            let grads = (|| {
                let loss = loss_fn(model, &mut tape, i)?;
                let value = tape.value(loss)?.item()?;
                let grads = tape.backward_many(loss, &model.param_sets())?;
                Ok((value, grads))
            })();
            let (value, grads) = grads.map_err(|e| diverged(epoch, step, e))?;
            total += value;
            sgd_step_many(&mut model.param_sets_mut(), &grads, lr, cfg.clip_norm)
                .map_err(|e| diverged(epoch, step, e))?;
            if cfg.weight_decay > 0.0 {
                shrink_weights(&mut model.param_sets_mut(), 1.0 - lr * cfg.weight_decay);
            }
        }
        let mean = total / n as f64;
        if !mean.is_finite() {
            return Err(Error::Diverged {
                epoch,
                step: n,
                detail: "epoch loss is not finite".into(),
            });
        }
        info!("epoch {} loss {:.6} lr {:.4}", epoch + 1, mean, lr);
        log.epoch_losses.push(mean);
        after_epoch(model, epoch)?;
        lr *= cfg.lr_decay;
    }
    debug!("training finished after {} epochs", cfg.epochs);
    Ok(log)
}

/// Teacher-forced training on `(source, target)` id pairs.
pub fn train_seq2seq(model: &mut Seq2Seq, pairs: &[(Vec<u32>, Vec<u32>)], cfg: &TrainConfig) -> Result<TrainLog> {
    sgd_epochs(model, pairs.len(), cfg, |m, tape, i| {
        let (src, tgt) = &pairs[i];
        let b = m.bind(tape, true)?;
        Ok(m.trace(tape, &b, Condition::Source(src), tgt)?.loss)
    })
}

/// Teacher-forced training of a decoder from fixed latent vectors.
pub fn train_from_latents(
    model: &mut Seq2Seq,
    examples: &[(super::LatentRep, Vec<u32>)],
    cfg: &TrainConfig,
) -> Result<TrainLog> {
    sgd_epochs(model, examples.len(), cfg, |m, tape, i| {
        let (z, tgt) = &examples[i];
        let b = m.bind(tape, true)?;
        Ok(m.trace(tape, &b, Condition::Latent(z), tgt)?.loss)
    })
}
