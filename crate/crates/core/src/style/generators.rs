use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::classifier::{ClassifierConfig, StyleClassifier};
use crate::autodiff::{grad_check, GradCheckReport, ParamSet, Tape, Var};
use crate::corpus::Style;
use crate::error::{Error, Result};
use crate::seq2seq::{sgd_epochs_with, Condition, LatentRep, Seq2Seq, Seq2SeqConfig, TrainConfig, TrainLog, Trainable};

pub const GEN_S1_FILE: &str = "gen_s1.model";
pub const GEN_S2_FILE: &str = "gen_s2.model";

/// One latent-conditioned decoder per style, with separate parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct StyleGenerators {
    pub s1: Seq2Seq,
    pub s2: Seq2Seq,
}

impl Trainable for StyleGenerators {
    fn param_sets(&self) -> Vec<&ParamSet> {
        vec![self.s1.params(), self.s2.params()]
    }

    fn param_sets_mut(&mut self) -> Vec<&mut ParamSet> {
        vec![self.s1.params_mut(), self.s2.params_mut()]
    }
}

impl StyleGenerators {
    pub fn new(d_emb: usize, d_h: usize, vocab_size: usize, seed: u64) -> Result<Self> {
        let config = Seq2SeqConfig {
            d_emb,
            d_h,
            v_src: 0,
            v_tgt: vocab_size,
            attention: false,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(StyleGenerators {
            s1: Seq2Seq::new(config, &mut rng)?,
            s2: Seq2Seq::new(config, &mut rng)?,
        })
    }

    pub fn get(&self, style: Style) -> &Seq2Seq {
        match style {
            Style::S1 => &self.s1,
            Style::S2 => &self.s2,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.s1.config().v_tgt
    }

    pub fn d_h(&self) -> usize {
        self.s1.config().d_h
    }

    /// Greedy decoding from `z` with the generator of `style`.
    pub fn generate(&self, style: Style, z: &LatentRep, max_len: usize) -> Result<Vec<u32>> {
        self.get(style).greedy_decode(Condition::Latent(z), max_len)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        self.s1.save(&dir.join(GEN_S1_FILE))?;
        self.s2.save(&dir.join(GEN_S2_FILE))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let s1 = Seq2Seq::load(&dir.join(GEN_S1_FILE))?;
        let s2 = Seq2Seq::load(&dir.join(GEN_S2_FILE))?;
        if s1.config() != s2.config() || s1.config().has_encoder() || s1.config().attention {
            return Err(Error::Format("generator files disagree or are not latent decoders".into()));
        }
        Ok(StyleGenerators { s1, s2 })
    }
}

/// Components of the generator objective for one sentence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenLoss {
    pub recon: f64,
    pub class: f64,
    /// Zero when no feedback term is used.
    pub feed: f64,
    pub lambda_c: f64,
    pub lambda_f: f64,
    pub total: f64,
}

impl GenLoss {
    /// `|total - (recon + lambda_c * class + lambda_f * feed)|`.
    pub fn composition_error(&self) -> f64 {
        (self.total - (self.recon + self.lambda_c * self.class + self.lambda_f * self.feed)).abs()
    }
}

/// One training sentence with its latent encoding and, during fine-tuning,
/// the encoding of its transferred version.
#[derive(Clone, Debug, PartialEq)]
pub struct GenItem {
    pub ids: Vec<u32>,
    pub style: Style,
    pub z: LatentRep,
    pub z_cycle: Option<LatentRep>,
}

/// Weights of the loss terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub lambda_c: f64,
    pub lambda_f: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda_c: 1.0,
            lambda_f: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda_c", self.lambda_c), ("lambda_f", self.lambda_f)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be a finite value >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

pub struct GenLossVars {
    pub recon: Var,
    pub class: Var,
    pub feed: Option<Var>,
    pub total: Var,
}

/// Records the objective for `item` with the generator of its own style
/// bound from `gen_params`. The classifier is recorded frozen. The feedback
/// term is included only when `item.z_cycle` is set.
pub fn record_gen_loss(
    tape: &mut Tape,
    gen: &Seq2Seq,
    gen_params: &ParamSet,
    clf: &StyleClassifier,
    item: &GenItem,
    weights: LossWeights,
) -> Result<GenLossVars> {
    weights.validate()?;
    if clf.config().vocab_size != gen.config().v_tgt {
        return Err(Error::InvalidArgument(format!(
            "classifier vocabulary {} vs generator vocabulary {}",
            clf.config().vocab_size,
            gen.config().v_tgt
        )));
    }
    let g = gen.bind_set(tape, gen_params, true)?;
    let trace = gen.trace(tape, &g, Condition::Latent(&item.z), &item.ids)?;
    // distributions for the sentence tokens, without the final EOS step
    let n = item.ids.len();
    let logits = tape.concat(&trace.logits[..n], 0)?;
    let soft = tape.softmax(logits)?;
    let c = clf.bind(tape, false)?;
    let emb_c = clf.embed_soft_var(tape, &c, soft)?;
    let logit = clf.logit_from_embedded(tape, &c, emb_c)?;
    let class = StyleClassifier::bce(tape, logit, item.style)?;

    let weighted = tape.scale(class, weights.lambda_c)?;
    let mut total = tape.add(trace.loss, weighted)?;
    let mut feed = None;
    if let Some(zc) = &item.z_cycle {
        let f = gen.trace(tape, &g, Condition::Latent(zc), &item.ids)?.loss;
        let weighted = tape.scale(f, weights.lambda_f)?;
        total = tape.add(total, weighted)?;
        feed = Some(f);
    }
    Ok(GenLossVars {
        recon: trace.loss,
        class,
        feed,
        total,
    })
}

fn read_loss(tape: &Tape, v: &GenLossVars, weights: LossWeights) -> Result<GenLoss> {
    Ok(GenLoss {
        recon: tape.value(v.recon)?.item()?,
        class: tape.value(v.class)?.item()?,
        feed: match v.feed {
            Some(f) => tape.value(f)?.item()?,
            None => 0.0,
        },
        lambda_c: weights.lambda_c,
        lambda_f: weights.lambda_f,
        total: tape.value(v.total)?.item()?,
    })
}

/// Loss of one sentence under the current generators, without training.
pub fn generator_loss(gens: &StyleGenerators, clf: &StyleClassifier, item: &GenItem, weights: LossWeights) -> Result<GenLoss> {
    let gen = gens.get(item.style);
    let mut tape = Tape::new();
    let v = record_gen_loss(&mut tape, gen, gen.params(), clf, item, weights)?;
    read_loss(&tape, &v, weights)
}

/// Per-step loss record of a generator training run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GenTrainLog {
    pub epochs: TrainLog,
    pub steps: Vec<GenLoss>,
}

/// SGD over `items`, each updating only the generator of its own style.
/// `after_epoch` may replace the items (used for per-epoch regeneration).
pub fn train_on_items<H>(
    gens: &mut StyleGenerators,
    clf: &StyleClassifier,
    items: &mut Vec<GenItem>,
    weights: LossWeights,
    tc: &TrainConfig,
    mut after_epoch: H,
) -> Result<GenTrainLog>
where
    H: FnMut(&StyleGenerators, &mut Vec<GenItem>, usize) -> Result<()>,
{
    weights.validate()?;
    let mut steps = Vec::new();
    let n = items.len();
    let cell = std::cell::RefCell::new(std::mem::take(items));
    let epochs = sgd_epochs_with(
        gens,
        n,
        tc,
        |g, tape, i| {
            let items = cell.borrow();
            let item = &items[i];
            let gen = g.get(item.style);
            let v = record_gen_loss(tape, gen, gen.params(), clf, item, weights)?;
            steps.push(read_loss(tape, &v, weights)?);
            Ok(v.total)
        },
        |g, epoch| after_epoch(g, &mut cell.borrow_mut(), epoch),
    )?;
    *items = cell.into_inner();
    Ok(GenTrainLog { epochs, steps })
}

/// Finite-difference check of the full generator objective on a random
/// 3-token instance, with or without the feedback term.
pub fn objective_grad_check(seed: u64, with_feedback: bool, eps: f64) -> Result<GradCheckReport> {
    const V: usize = 20;
    const D: usize = 6;
    let gens = StyleGenerators::new(4, D, V, seed)?;
    let clf = StyleClassifier::new(
        ClassifierConfig {
            vocab_size: V,
            d_emb: 4,
            filters: 3,
        },
        seed.wrapping_add(1),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let mut latent = || LatentRep::new((0..D).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let style = if seed % 2 == 0 { Style::S1 } else { Style::S2 };
    let item = GenItem {
        ids: vec![6, 11, 17],
        style,
        z: latent()?,
        z_cycle: if with_feedback { Some(latent()?) } else { None },
    };
    let weights = LossWeights {
        lambda_c: 1.0,
        lambda_f: if with_feedback { 0.5 } else { 0.0 },
    };
    let gen = gens.get(style).clone();
    let f = |tape: &mut Tape, p: &ParamSet| Ok(record_gen_loss(tape, &gen, p, &clf, &item, weights)?.total);
    grad_check(f, gen.params(), eps)
}
