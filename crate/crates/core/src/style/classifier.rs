use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{read_u32, sigmoid, ParamSet, Tape, Tensor, Var, INIT_SCALE};
use crate::corpus::{Style, StyleExample, Vocabulary};
use crate::error::{Error, Result};
use crate::seq2seq::{sgd_epochs, TrainConfig, TrainLog, Trainable};

const MAGIC: &[u8; 4] = b"SCLF";
const VERSION: u32 = 1;
const WINDOW: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClassifierConfig {
    pub vocab_size: usize,
    pub d_emb: usize,
    pub filters: usize,
}

/// Convolutional binary classifier: embeddings, one window-3 filter bank,
/// max-over-time pooling, one logit for `P(s2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StyleClassifier {
    config: ClassifierConfig,
    params: ParamSet,
}

/// Classifier parameters recorded on a tape.
#[derive(Clone, Copy)]
pub struct BoundClassifier {
    emb: Var,
    conv_w: Var,
    conv_b: Var,
    out_w: Var,
    out_b: Var,
}

/// Input to [`StyleClassifier::classify`].
#[derive(Clone, Copy, Debug)]
pub enum ClassifierInput<'a> {
    Ids(&'a [u32]),
    /// `T x V` rows of token distributions; each row must sum to 1.
    Soft(&'a Tensor),
}

impl Trainable for StyleClassifier {
    fn param_sets(&self) -> Vec<&ParamSet> {
        vec![&self.params]
    }

    fn param_sets_mut(&mut self) -> Vec<&mut ParamSet> {
        vec![&mut self.params]
    }
}

impl StyleClassifier {
    pub fn new(config: ClassifierConfig, seed: u64) -> Result<Self> {
        if config.vocab_size == 0 || config.d_emb == 0 || config.filters == 0 {
            return Err(Error::InvalidArgument(format!("degenerate classifier config {config:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ParamSet::new();
        p.init_uniform("emb", vec![config.vocab_size, config.d_emb], INIT_SCALE, &mut rng)?;
        p.init_uniform("conv.w", vec![WINDOW * config.d_emb, config.filters], INIT_SCALE, &mut rng)?;
        p.init_uniform("conv.b", vec![1, config.filters], INIT_SCALE, &mut rng)?;
        p.init_uniform("out.w", vec![config.filters, 1], INIT_SCALE, &mut rng)?;
        p.init_uniform("out.b", vec![1, 1], INIT_SCALE, &mut rng)?;
        Ok(StyleClassifier { config, params: p })
    }

    pub fn config(&self) -> ClassifierConfig {
        self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> Result<BoundClassifier> {
        let p = &self.params;
        let mut get = |name: &str| if trainable { tape.param(p, name) } else { tape.frozen(p, name) };
        Ok(BoundClassifier {
            emb: get("emb")?,
            conv_w: get("conv.w")?,
            conv_b: get("conv.b")?,
            out_w: get("out.w")?,
            out_b: get("out.b")?,
        })
    }

    /// Embeds the input as a `T x d_emb` matrix.
    pub fn embed(&self, tape: &mut Tape, b: &BoundClassifier, input: ClassifierInput<'_>) -> Result<Var> {
        match input {
            ClassifierInput::Ids(ids) => {
                if ids.is_empty() {
                    return Err(Error::Empty("classifier input"));
                }
                if let Some(&bad) = ids.iter().find(|&&i| i as usize >= self.config.vocab_size) {
                    return Err(Error::TargetOutOfRange {
                        target: bad as usize,
                        classes: self.config.vocab_size,
                    });
                }
                let ids: Vec<usize> = ids.iter().map(|&i| i as usize).collect();
                tape.embedding(b.emb, &ids)
            }
            ClassifierInput::Soft(dist) => {
                check_distribution_rows(dist, self.config.vocab_size)?;
                let d = tape.constant(dist.clone());
                tape.matmul(d, b.emb)
            }
        }
    }

    /// Expected embeddings of distribution rows already recorded on the tape.
    pub fn embed_soft_var(&self, tape: &mut Tape, b: &BoundClassifier, soft: Var) -> Result<Var> {
        tape.matmul(soft, b.emb)
    }

    /// Logit of `P(s2)` for an embedded `T x d_emb` sequence.
    pub fn logit_from_embedded(&self, tape: &mut Tape, b: &BoundClassifier, x: Var) -> Result<Var> {
        let t = tape.value(x)?.rows();
        let left: Vec<Option<usize>> = (0..t).map(|i| i.checked_sub(1)).collect();
        let right: Vec<Option<usize>> = (0..t).map(|i| (i + 1 < t).then_some(i + 1)).collect();
        let l = tape.gather(x, left)?;
        let r = tape.gather(x, right)?;
        let windows = tape.concat(&[l, x, r], 1)?;
        let h = tape.matmul(windows, b.conv_w)?;
        let h = tape.add(h, b.conv_b)?;
        let h = tape.tanh(h)?;
        let pooled = tape.max_rows(h)?;
        let o = tape.matmul(pooled, b.out_w)?;
        tape.add(o, b.out_b)
    }

    /// Binary cross-entropy of a logit against `style`.
    pub fn bce(tape: &mut Tape, logit: Var, style: Style) -> Result<Var> {
        let zero = tape.constant(Tensor::zeros(vec![1, 1]));
        let two = tape.concat(&[zero, logit], 1)?;
        tape.cross_entropy(two, &[style.class()])
    }

    /// Probability that the input has style s2.
    pub fn classify(&self, input: ClassifierInput<'_>) -> Result<f64> {
        let mut tape = Tape::new();
        let b = self.bind(&mut tape, false)?;
        let x = self.embed(&mut tape, &b, input)?;
        let logit = self.logit_from_embedded(&mut tape, &b, x)?;
        Ok(sigmoid(tape.value(logit)?.item()?))
    }

    pub fn predict(&self, ids: &[u32]) -> Result<Style> {
        Ok(if self.classify(ClassifierInput::Ids(ids))? >= 0.5 {
            Style::S2
        } else {
            Style::S1
        })
    }

    /// Fraction of examples whose predicted style matches the label.
    pub fn accuracy(&self, vocab: &Vocabulary, examples: &[&StyleExample]) -> Result<f64> {
        if examples.is_empty() {
            return Err(Error::Empty("evaluation set"));
        }
        let mut hit = 0;
        for e in examples {
            if self.predict(&vocab.encode(&e.tokens))? == e.style {
                hit += 1;
            }
        }
        Ok(hit as f64 / examples.len() as f64)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        let c = &self.config;
        for v in [VERSION, c.vocab_size as u32, c.d_emb as u32, c.filters as u32] {
            w.write_all(&v.to_le_bytes())?;
        }
        self.params.write_to(w)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a classifier file".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported classifier version {version}")));
        }
        let config = ClassifierConfig {
            vocab_size: read_u32(&mut r)? as usize,
            d_emb: read_u32(&mut r)? as usize,
            filters: read_u32(&mut r)? as usize,
        };
        let params = ParamSet::read_from(&mut r)?;
        let template = StyleClassifier::new(config, 0)?;
        let same = template
            .params
            .iter()
            .zip(params.iter())
            .all(|((a, x), (b, y))| a == b && x.shape() == y.shape());
        if !same || template.params.len() != params.len() {
            return Err(Error::Format("classifier parameters do not match header".into()));
        }
        Ok(StyleClassifier { config, params })
    }
}

fn check_distribution_rows(dist: &Tensor, v: usize) -> Result<()> {
    if dist.shape().len() != 2 || dist.cols() != v {
        return Err(Error::ShapeMismatch {
            op: "classify",
            detail: format!("soft input {:?} vs vocabulary {v}", dist.shape()),
        });
    }
    for r in 0..dist.rows() {
        let row = dist.row_slice(r);
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > 1e-9 || row.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidArgument(format!("row {r} is not a distribution (sum {s})")));
        }
    }
    Ok(())
}

/// Trains with per-example binary cross-entropy; returns dev accuracy.
pub fn train_classifier(
    vocab: &Vocabulary,
    train: &[&StyleExample],
    dev: &[&StyleExample],
    config: ClassifierConfig,
    tc: &TrainConfig,
) -> Result<(StyleClassifier, f64, TrainLog)> {
    let has = |s: Style| train.iter().any(|e| e.style == s);
    if !has(Style::S1) || !has(Style::S2) {
        return Err(Error::InvalidArgument("classifier training data has a single class".into()));
    }
    if config.vocab_size != vocab.len() {
        return Err(Error::InvalidArgument(format!(
            "classifier vocabulary {} vs {}",
            config.vocab_size,
            vocab.len()
        )));
    }
    let encoded: Vec<(Vec<u32>, Style)> = train.iter().map(|e| (vocab.encode(&e.tokens), e.style)).collect();
    let mut clf = StyleClassifier::new(config, tc.seed)?;
    let log = sgd_epochs(&mut clf, encoded.len(), tc, |c, tape, i| {
        let (ids, style) = &encoded[i];
        let b = c.bind(tape, true)?;
        let x = c.embed(tape, &b, ClassifierInput::Ids(ids))?;
        let logit = c.logit_from_embedded(tape, &b, x)?;
        StyleClassifier::bce(tape, logit, *style)
    })?;
    let acc = clf.accuracy(vocab, dev)?;
    Ok((clf, acc, log))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clf() -> StyleClassifier {
        StyleClassifier::new(
            ClassifierConfig {
                vocab_size: 9,
                d_emb: 4,
                filters: 5,
            },
            3,
        )
        .unwrap()
    }

    #[test]
    fn one_hot_soft_input_matches_hard_input() {
        let c = clf();
        let ids = [6u32, 2, 8, 7];
        let mut rows = vec![0.0; ids.len() * 9];
        for (t, &i) in ids.iter().enumerate() {
            rows[t * 9 + i as usize] = 1.0;
        }
        let soft = Tensor::matrix(ids.len(), 9, rows).unwrap();
        let a = c.classify(ClassifierInput::Ids(&ids)).unwrap();
        let b = c.classify(ClassifierInput::Soft(&soft)).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(a > 0.0 && a < 1.0);
    }

    #[test]
    fn soft_rows_must_be_distributions() {
        let c = clf();
        let bad = Tensor::matrix(1, 9, vec![0.2; 9]).unwrap();
        assert!(matches!(c.classify(ClassifierInput::Soft(&bad)), Err(Error::InvalidArgument(_))));
        assert!(c.classify(ClassifierInput::Ids(&[])).is_err());
    }

    #[test]
    fn bce_at_even_odds_is_ln_two() {
        let mut tape = Tape::new();
        let logit = tape.constant(Tensor::zeros(vec![1, 1]));
        for s in [Style::S1, Style::S2] {
            let l = StyleClassifier::bce(&mut tape, logit, s).unwrap();
            let v = tape.value(l).unwrap().item().unwrap();
            assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
        }
    }

    #[test]
    fn single_token_input_works() {
        assert!(clf().classify(ClassifierInput::Ids(&[6])).is_ok());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.bin");
        let c = clf();
        c.save(&p).unwrap();
        assert_eq!(StyleClassifier::load(&p).unwrap(), c);
    }
}
