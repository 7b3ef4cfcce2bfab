//! Multilingual translation systems and pivot-based sentence encodings.
//!
//! The one-to-many system is a single tagged model translating the source
//! language into both pivots. The many-to-one system reads either pivot
//! (union vocabulary, no tag) and translates back; its encoder produces the
//! latent vectors used by the style generators.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Lang, ParallelCorpus, Tokens, Vocabulary, RESERVED};
use crate::error::{Error, Result};
use crate::seq2seq::{
    max_decode_len, train_seq2seq, Condition, LatentRep, Seq2Seq, Seq2SeqConfig, TrainConfig, TrainLog,
};

pub const MANIFEST_FILE: &str = "mt.manifest";
const O2M_FILE: &str = "one_to_many.model";
const M2O_FILE: &str = "many_to_one.model";
const SRC_VOCAB_FILE: &str = "source.vocab";
const PIVOT_VOCAB_FILE: &str = "pivot.vocab";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MtConfig {
    pub d_emb: usize,
    pub d_h: usize,
    pub max_vocab: usize,
    pub train: TrainConfig,
}

impl Default for MtConfig {
    fn default() -> Self {
        MtConfig {
            d_emb: Seq2SeqConfig::DEFAULT_D_EMB,
            d_h: Seq2SeqConfig::DEFAULT_D_H,
            max_vocab: 512,
            train: TrainConfig::default(),
        }
    }
}

fn check_pair(a: &ParallelCorpus, b: &ParallelCorpus, src: Option<Lang>, tgt: Option<Lang>) -> Result<()> {
    for c in [a, b] {
        if c.is_empty() {
            return Err(Error::Empty("parallel corpus"));
        }
    }
    let ok = |c: &ParallelCorpus, l: Lang| {
        src.map_or(c.src_lang == l, |s| c.src_lang == s) && tgt.map_or(c.tgt_lang == l, |t| c.tgt_lang == t)
    };
    if !ok(a, Lang::L1) || !ok(b, Lang::L2) {
        return Err(Error::InvalidArgument(format!(
            "expected l1 and l2 corpora, got {}-{} and {}-{}",
            a.src_lang, a.tgt_lang, b.src_lang, b.tgt_lang
        )));
    }
    Ok(())
}

/// Pairs of both corpora interleaved: a[0], b[0], a[1], b[1], ...
fn interleave<'a>(a: &'a ParallelCorpus, b: &'a ParallelCorpus) -> Vec<(&'a Tokens, &'a Tokens, Lang)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    for i in 0..a.len().max(b.len()) {
        for c in [a, b] {
            if let Some((s, t)) = c.pairs.get(i) {
                let pivot = if c.src_lang == Lang::En { c.tgt_lang } else { c.src_lang };
                out.push((s, t, pivot));
            }
        }
    }
    out
}

fn model_config(cfg: &MtConfig, v_src: usize, v_tgt: usize) -> Seq2SeqConfig {
    Seq2SeqConfig {
        d_emb: cfg.d_emb,
        d_h: cfg.d_h,
        v_src,
        v_tgt,
        attention: true,
    }
}

/// Source language into either pivot, selected by a leading tag token.
#[derive(Clone, Debug, PartialEq)]
pub struct OneToManySystem {
    pub model: Seq2Seq,
    pub src_vocab: Vocabulary,
    pub pivot_vocab: Vocabulary,
}

/// Either pivot back into the source language.
#[derive(Clone, Debug, PartialEq)]
pub struct ManyToOneSystem {
    pub model: Seq2Seq,
    pub pivot_vocab: Vocabulary,
    pub tgt_vocab: Vocabulary,
}

pub fn train_one_to_many(
    en_l1: &ParallelCorpus,
    en_l2: &ParallelCorpus,
    cfg: &MtConfig,
) -> Result<(OneToManySystem, TrainLog)> {
    check_pair(en_l1, en_l2, Some(Lang::En), None)?;
    let src_vocab = Vocabulary::build(en_l1.pairs.iter().chain(&en_l2.pairs).map(|p| &p.0), cfg.max_vocab)?;
    let pivot_vocab = Vocabulary::build(en_l1.pairs.iter().chain(&en_l2.pairs).map(|p| &p.1), cfg.max_vocab)?;
    for lang in Lang::PIVOTS {
        let tag = lang.target_tag().expect("pivots carry tags");
        if pivot_vocab.token(tag).is_none() || src_vocab.token(tag) != Some(RESERVED[tag as usize]) {
            return Err(Error::InvalidArgument(format!("vocabulary lacks the tag for {lang}")));
        }
    }
    let pairs: Vec<(Vec<u32>, Vec<u32>)> = interleave(en_l1, en_l2)
        .into_iter()
        .map(|(s, t, lang)| {
            let mut src = vec![lang.target_tag().expect("pivot")];
            src.extend(src_vocab.encode(s));
            (src, pivot_vocab.encode(t))
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
    let mut model = Seq2Seq::new(model_config(cfg, src_vocab.len(), pivot_vocab.len()), &mut rng)?;
    info!("training one-to-many on {} pairs", pairs.len());
    let log = train_seq2seq(&mut model, &pairs, &cfg.train)?;
    Ok((
        OneToManySystem {
            model,
            src_vocab,
            pivot_vocab,
        },
        log,
    ))
}

pub fn train_many_to_one(
    l1_en: &ParallelCorpus,
    l2_en: &ParallelCorpus,
    cfg: &MtConfig,
) -> Result<(ManyToOneSystem, TrainLog)> {
    check_pair(l1_en, l2_en, None, Some(Lang::En))?;
    let pivot_vocab = Vocabulary::build(l1_en.pairs.iter().chain(&l2_en.pairs).map(|p| &p.0), cfg.max_vocab)?;
    let tgt_vocab = Vocabulary::build(l1_en.pairs.iter().chain(&l2_en.pairs).map(|p| &p.1), cfg.max_vocab)?;
    let pairs: Vec<(Vec<u32>, Vec<u32>)> = interleave(l1_en, l2_en)
        .into_iter()
        .map(|(s, t, _)| (pivot_vocab.encode(s), tgt_vocab.encode(t)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed.wrapping_add(1));
    let mut model = Seq2Seq::new(model_config(cfg, pivot_vocab.len(), tgt_vocab.len()), &mut rng)?;
    info!("training many-to-one on {} pairs", pairs.len());
    let log = train_seq2seq(&mut model, &pairs, &cfg.train)?;
    Ok((
        ManyToOneSystem {
            model,
            pivot_vocab,
            tgt_vocab,
        },
        log,
    ))
}

fn nonempty<T: AsRef<str>>(x: &[T]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::Empty("sentence"));
    }
    Ok(())
}

impl OneToManySystem {
    /// Greedy translation into one pivot; an immediate EOS is an error.
    pub fn translate<T: AsRef<str>>(&self, x: &[T], lang: Lang) -> Result<Tokens> {
        nonempty(x)?;
        let tag = lang
            .target_tag()
            .ok_or_else(|| Error::InvalidArgument(format!("`{lang}` is not a pivot language")))?;
        let mut src = vec![tag];
        src.extend(self.src_vocab.encode(x));
        let out = self.model.greedy_decode(Condition::Source(&src), max_decode_len(x.len()))?;
        if out.is_empty() {
            return Err(Error::EmptyTranslation);
        }
        Ok(self.pivot_vocab.decode(&out))
    }

    /// Translations into both pivots.
    pub fn pivot_translate<T: AsRef<str>>(&self, x: &[T]) -> Result<(Tokens, Tokens)> {
        Ok((self.translate(x, Lang::L1)?, self.translate(x, Lang::L2)?))
    }
}

impl ManyToOneSystem {
    pub fn back_translate<T: AsRef<str>>(&self, y: &[T]) -> Result<Tokens> {
        nonempty(y)?;
        let src = self.pivot_vocab.encode(y);
        let out = self.model.greedy_decode(Condition::Source(&src), max_decode_len(y.len()))?;
        if out.is_empty() {
            return Err(Error::EmptyTranslation);
        }
        Ok(self.tgt_vocab.decode(&out))
    }

    /// Final encoder state of a pivot sentence.
    pub fn encode<T: AsRef<str>>(&self, y: &[T]) -> Result<LatentRep> {
        nonempty(y)?;
        let enc = self.model.encode(&self.pivot_vocab.encode(y))?;
        LatentRep::new(enc.final_state)
    }

    /// Mean of the encodings of the two pivot sentences.
    pub fn encode_pivots<T: AsRef<str>>(&self, x_l1: &[T], x_l2: &[T]) -> Result<LatentRep> {
        let z1 = self.encode(x_l1)?;
        let z2 = self.encode(x_l2)?;
        LatentRep::average(&z1, &z2)
    }

    /// Single-pivot encoding.
    pub fn bst_encode<T: AsRef<str>>(&self, x_l1: &[T]) -> Result<LatentRep> {
        self.encode(x_l1)
    }
}

/// Both systems, saved as two model files, two vocabularies and a manifest.
#[derive(Clone, Debug, PartialEq)]
pub struct MtSystems {
    pub one_to_many: OneToManySystem,
    pub many_to_one: ManyToOneSystem,
}

impl MtSystems {
    pub fn d_h(&self) -> usize {
        self.many_to_one.model.config().d_h
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.one_to_many.model.save(&dir.join(O2M_FILE))?;
        self.many_to_one.model.save(&dir.join(M2O_FILE))?;
        self.one_to_many.src_vocab.save(&dir.join(SRC_VOCAB_FILE))?;
        self.one_to_many.pivot_vocab.save(&dir.join(PIVOT_VOCAB_FILE))?;
        fs::write(dir.join(MANIFEST_FILE), self.manifest())?;
        Ok(())
    }

    pub fn manifest(&self) -> String {
        let mut m = String::new();
        m.push_str(&format!("one_to_many = {O2M_FILE}\n"));
        m.push_str(&format!("many_to_one = {M2O_FILE}\n"));
        m.push_str(&format!("source_vocab = {SRC_VOCAB_FILE}\n"));
        m.push_str(&format!("pivot_vocab = {PIVOT_VOCAB_FILE}\n"));
        m.push_str(&format!("source = {}\n", Lang::En));
        m.push_str("pivots = l1 l2\n");
        for lang in Lang::PIVOTS {
            let tag = lang.target_tag().expect("pivot");
            m.push_str(&format!("tag.{lang} = {}\n", RESERVED[tag as usize]));
        }
        m
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path)?;
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let (k, v) = line.split_once(" = ").ok_or_else(|| Error::Parse {
                source_name: path.display().to_string(),
                line: i + 1,
                msg: "expected `key = value`".into(),
            })?;
            entries.insert(k.to_string(), v.to_string());
        }
        let file = |key: &str| {
            entries
                .get(key)
                .map(|f| dir.join(f))
                .ok_or_else(|| Error::Format(format!("manifest lacks `{key}`")))
        };
        if entries.get("pivots").map(String::as_str) != Some("l1 l2") {
            return Err(Error::Format("manifest must name pivots `l1 l2`".into()));
        }
        let src_vocab = Vocabulary::load(&file("source_vocab")?)?;
        let pivot_vocab = Vocabulary::load(&file("pivot_vocab")?)?;
        let o2m = Seq2Seq::load(&file("one_to_many")?)?;
        let m2o = Seq2Seq::load(&file("many_to_one")?)?;
        let (oc, mc) = (o2m.config(), m2o.config());
        if oc.v_src != src_vocab.len() || oc.v_tgt != pivot_vocab.len() || mc.v_src != pivot_vocab.len() || mc.v_tgt != src_vocab.len() {
            return Err(Error::Format("model and vocabulary sizes disagree".into()));
        }
        Ok(MtSystems {
            one_to_many: OneToManySystem {
                model: o2m,
                src_vocab: src_vocab.clone(),
                pivot_vocab: pivot_vocab.clone(),
            },
            many_to_one: ManyToOneSystem {
                model: m2o,
                pivot_vocab,
                tgt_vocab: src_vocab,
            },
        })
    }

    /// Trains both systems from one set of source/pivot corpora.
    pub fn train(en_l1: &ParallelCorpus, en_l2: &ParallelCorpus, cfg: &MtConfig) -> Result<(Self, TrainLog, TrainLog)> {
        let (o2m, log_o) = train_one_to_many(en_l1, en_l2, cfg)?;
        let (m2o, log_m) = train_many_to_one(&en_l1.reversed(), &en_l2.reversed(), cfg)?;
        if o2m.src_vocab != m2o.tgt_vocab || o2m.pivot_vocab != m2o.pivot_vocab {
            return Err(Error::InvalidArgument("translation directions built different vocabularies".into()));
        }
        Ok((
            MtSystems {
                one_to_many: o2m,
                many_to_one: m2o,
            },
            log_o,
            log_m,
        ))
    }

    /// source -> pivot -> source.
    pub fn round_trip<T: AsRef<str>>(&self, x: &[T], lang: Lang) -> Result<Tokens> {
        let y = self.one_to_many.translate(x, lang)?;
        self.many_to_one.back_translate(&y)
    }
}
