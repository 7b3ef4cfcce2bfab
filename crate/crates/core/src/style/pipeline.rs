use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use log::{info, warn};
use sha2::{Digest, Sha256};

use super::classifier::StyleClassifier;
use super::generators::{train_on_items, GenItem, GenTrainLog, LossWeights, StyleGenerators};
use crate::corpus::{Lang, Style, StyleExample, Tokens, Vocabulary};
use crate::error::{Error, Result};
use crate::mt::MtSystems;
use crate::seq2seq::{max_decode_len, LatentRep, TrainConfig};

pub const CLASSIFIER_FILE: &str = "classifier.model";
pub const PROVENANCE_FILE: &str = "provenance.txt";
pub const MT_DIR: &str = "mt";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TransferVariant {
    /// Single pivot (l1).
    Bst,
    /// Average of both pivot encodings.
    Mbst,
    /// `Mbst` fine-tuned with the cycle feedback loss.
    MbstF,
}

impl TransferVariant {
    pub const ALL: [TransferVariant; 3] = [TransferVariant::Bst, TransferVariant::Mbst, TransferVariant::MbstF];

    pub fn name(self) -> &'static str {
        match self {
            TransferVariant::Bst => "bst",
            TransferVariant::Mbst => "mbst",
            TransferVariant::MbstF => "mbst_f",
        }
    }

    pub fn averages_pivots(self) -> bool {
        self != TransferVariant::Bst
    }
}

impl fmt::Display for TransferVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TransferVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TransferVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown variant `{s}`")))
    }
}

/// Latent vector of a source-language sentence along the variant's pivot path.
pub fn encode_sentence<T: AsRef<str>>(systems: &MtSystems, variant: TransferVariant, x: &[T]) -> Result<LatentRep> {
    if variant.averages_pivots() {
        let (y1, y2) = systems.one_to_many.pivot_translate(x)?;
        systems.many_to_one.encode_pivots(&y1, &y2)
    } else {
        let y1 = systems.one_to_many.translate(x, Lang::L1)?;
        systems.many_to_one.bst_encode(&y1)
    }
}

/// Encodes sentences for generator training. Sentences whose pivot
/// translation comes out empty are skipped; the count is returned.
pub fn build_items(
    systems: &MtSystems,
    variant: TransferVariant,
    examples: &[&StyleExample],
) -> Result<(Vec<GenItem>, usize)> {
    let vocab = &systems.one_to_many.src_vocab;
    let mut items = Vec::with_capacity(examples.len());
    let mut skipped = 0;
    for e in examples {
        match encode_sentence(systems, variant, &e.tokens) {
            Ok(z) => items.push(GenItem {
                ids: vocab.encode(&e.tokens),
                style: e.style,
                z,
                z_cycle: None,
            }),
            Err(Error::EmptyTranslation) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if skipped > 0 {
        warn!("skipped {skipped} sentences with empty pivot translations");
    }
    Ok((items, skipped))
}

fn check_compatible(gens: &StyleGenerators, clf: &StyleClassifier, systems: &MtSystems) -> Result<()> {
    let v = systems.one_to_many.src_vocab.len();
    if gens.vocab_size() != v || clf.config().vocab_size != v {
        return Err(Error::InvalidArgument(format!(
            "vocabulary sizes differ: generators {}, classifier {}, translation {v}",
            gens.vocab_size(),
            clf.config().vocab_size
        )));
    }
    if gens.d_h() != systems.d_h() {
        return Err(Error::InvalidArgument(format!(
            "generator width {} vs encoder width {}",
            gens.d_h(),
            systems.d_h()
        )));
    }
    Ok(())
}

/// Generator training settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub d_emb: usize,
    pub weights: LossWeights,
    pub train: TrainConfig,
}

/// Trains both generators from the frozen classifier and the variant's
/// pivot encodings. Returns the generators, the loss log and the number of
/// skipped sentences.
pub fn train_generators(
    systems: &MtSystems,
    clf: &StyleClassifier,
    variant: TransferVariant,
    train: &[&StyleExample],
    cfg: &GeneratorConfig,
) -> Result<(StyleGenerators, GenTrainLog, usize)> {
    if variant == TransferVariant::MbstF {
        return Err(Error::InvalidArgument(
            "mbst_f generators come from feedback fine-tuning of an mbst model".into(),
        ));
    }
    let mut gens = StyleGenerators::new(
        cfg.d_emb,
        systems.d_h(),
        systems.one_to_many.src_vocab.len(),
        cfg.train.seed,
    )?;
    check_compatible(&gens, clf, systems)?;
    let (mut items, skipped) = build_items(systems, variant, train)?;
    if items.is_empty() {
        return Err(Error::Empty("generator training set"));
    }
    info!("training {variant} generators on {} sentences", items.len());
    let log = train_on_items(&mut gens, clf, &mut items, cfg.weights, &cfg.train, |_, _, _| Ok(()))?;
    Ok((gens, log, skipped))
}

/// A transferred sentence; `flagged` marks a degenerate translation for
/// which the input was copied unchanged.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transferred {
    pub tokens: Tokens,
    pub flagged: bool,
}

/// Rewrites `x` (of `source_style`) in the opposite style.
pub fn transfer<T: AsRef<str>>(
    variant: TransferVariant,
    gens: &StyleGenerators,
    systems: &MtSystems,
    x: &[T],
    source_style: Style,
) -> Result<Transferred> {
    if x.is_empty() {
        return Err(Error::Empty("sentence"));
    }
    let copy = || Transferred {
        tokens: x.iter().map(|t| t.as_ref().to_string()).collect(),
        flagged: true,
    };
    let z = match encode_sentence(systems, variant, x) {
        Ok(z) => z,
        Err(Error::EmptyTranslation) => return Ok(copy()),
        Err(e) => return Err(e),
    };
    let ids = gens.generate(source_style.opposite(), &z, max_decode_len(x.len()))?;
    if ids.is_empty() {
        return Ok(copy());
    }
    Ok(Transferred {
        tokens: systems.one_to_many.src_vocab.decode(&ids),
        flagged: false,
    })
}

/// Transfers of both style sets, aligned with their inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferCorpus {
    pub x12: Vec<Transferred>,
    pub x21: Vec<Transferred>,
}

impl TransferCorpus {
    pub fn flagged(&self) -> usize {
        self.x12.iter().chain(&self.x21).filter(|t| t.flagged).count()
    }
}

fn transfer_all(
    variant: TransferVariant,
    gens: &StyleGenerators,
    systems: &MtSystems,
    xs: &[Tokens],
    style: Style,
) -> Result<Vec<Transferred>> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(8);
    let chunk = xs.len().div_ceil(threads).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = xs
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|x| transfer(variant, gens, systems, x, style))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        let mut out = Vec::with_capacity(xs.len());
        for h in handles {
            out.extend(h.join().expect("transfer worker panicked")?);
        }
        Ok(out)
    })
}

pub fn generate_transfer_corpus(
    variant: TransferVariant,
    gens: &StyleGenerators,
    systems: &MtSystems,
    x1: &[Tokens],
    x2: &[Tokens],
) -> Result<TransferCorpus> {
    let out = TransferCorpus {
        x12: transfer_all(variant, gens, systems, x1, Style::S1)?,
        x21: transfer_all(variant, gens, systems, x2, Style::S2)?,
    };
    let flagged = out.flagged();
    if flagged > 0 {
        warn!("{flagged} transfers fell back to copying the input");
    }
    Ok(out)
}

/// `x` transferred to the opposite style and back.
pub fn cycle<T: AsRef<str>>(
    variant: TransferVariant,
    gens: &StyleGenerators,
    systems: &MtSystems,
    x: &[T],
    style: Style,
) -> Result<(Transferred, Transferred)> {
    let there = transfer(variant, gens, systems, x, style)?;
    let back = transfer(variant, gens, systems, &there.tokens, style.opposite())?;
    Ok((there, back))
}

fn cycle_latent(systems: &MtSystems, t: &Transferred) -> Result<Option<LatentRep>> {
    if t.flagged {
        return Ok(None);
    }
    match encode_sentence(systems, TransferVariant::Mbst, &t.tokens) {
        Ok(z) => Ok(Some(z)),
        Err(Error::EmptyTranslation) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Fine-tuning settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FinetuneConfig {
    pub weights: LossWeights,
    pub train: TrainConfig,
    /// Regenerate the transferred corpora after every epoch instead of once.
    pub regenerate_each_epoch: bool,
}

/// Fine-tunes MBST generators with the cycle feedback term. `x12`/`x21` are
/// the transfers of `x1`/`x2` made by `gens` before fine-tuning.
#[allow(clippy::too_many_arguments)]
pub fn feedback_finetune(
    gens: &StyleGenerators,
    clf: &StyleClassifier,
    systems: &MtSystems,
    x1: &[Tokens],
    x2: &[Tokens],
    x12: &[Transferred],
    x21: &[Transferred],
    cfg: &FinetuneConfig,
) -> Result<(StyleGenerators, GenTrainLog)> {
    if x1.len() != x12.len() || x2.len() != x21.len() {
        return Err(Error::Misaligned(format!(
            "{}/{} originals vs {}/{} transfers",
            x1.len(),
            x2.len(),
            x12.len(),
            x21.len()
        )));
    }
    check_compatible(gens, clf, systems)?;
    let vocab: &Vocabulary = &systems.one_to_many.src_vocab;
    let mut items = Vec::with_capacity(x1.len() + x2.len());
    let mut sources: Vec<(&Tokens, Style)> = Vec::with_capacity(items.capacity());
    let mut skipped = 0;
    for (xs, hats, style) in [(x1, x12, Style::S1), (x2, x21, Style::S2)] {
        for (x, hat) in xs.iter().zip(hats) {
            let z = match encode_sentence(systems, TransferVariant::Mbst, x) {
                Ok(z) => z,
                Err(Error::EmptyTranslation) => {
                    skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let z_cycle = cycle_latent(systems, hat)?;
            if z_cycle.is_none() {
                skipped += 1;
            }
            items.push(GenItem {
                ids: vocab.encode(x),
                style,
                z,
                z_cycle,
            });
            sources.push((x, style));
        }
    }
    if skipped > 0 {
        warn!("{skipped} sentences lack a usable encoding or transfer");
    }
    if items.is_empty() {
        return Err(Error::Empty("fine-tuning set"));
    }
    let mut tuned = gens.clone();
    info!("feedback fine-tuning on {} sentences", items.len());
    let log = train_on_items(&mut tuned, clf, &mut items, cfg.weights, &cfg.train, |g, items, _| {
        if !cfg.regenerate_each_epoch {
            return Ok(());
        }
        for (item, (x, style)) in items.iter_mut().zip(&sources) {
            let hat = transfer(TransferVariant::MbstF, g, systems, x, *style)?;
            item.z_cycle = cycle_latent(systems, &hat)?;
        }
        Ok(())
    })?;
    Ok((tuned, log))
}

/// Lineage record stored with every checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub variant: TransferVariant,
    pub seed: u64,
    pub lambda_c: f64,
    pub lambda_f: f64,
    /// Content hash of the checkpoint this one was fine-tuned from.
    pub parent: Option<String>,
}

impl Provenance {
    pub fn validate(&self) -> Result<()> {
        match (self.variant, &self.parent) {
            (TransferVariant::MbstF, None) => Err(Error::InvalidArgument("mbst_f requires a parent mbst checkpoint".into())),
            (TransferVariant::Bst | TransferVariant::Mbst, Some(_)) => {
                Err(Error::InvalidArgument(format!("{} checkpoints have no parent", self.variant)))
            }
            _ => Ok(()),
        }
    }

    pub fn to_text(&self) -> String {
        format!(
            "variant = {}\nseed = {}\nlambda_c = {:?}\nlambda_f = {:?}\nparent = {}\n",
            self.variant,
            self.seed,
            self.lambda_c,
            self.lambda_f,
            self.parent.as_deref().unwrap_or("none")
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let (k, v) = line.split_once(" = ").ok_or_else(|| Error::Parse {
                source_name: PROVENANCE_FILE.into(),
                line: i + 1,
                msg: "expected `key = value`".into(),
            })?;
            kv.insert(k, v);
        }
        let get = |k: &str| kv.get(k).copied().ok_or_else(|| Error::Format(format!("provenance lacks `{k}`")));
        let num = |k: &str| -> Result<f64> {
            get(k)?.parse().map_err(|_| Error::Format(format!("bad number for `{k}`")))
        };
        let p = Provenance {
            variant: get("variant")?.parse()?,
            seed: get("seed")?.parse().map_err(|_| Error::Format("bad seed".into()))?,
            lambda_c: num("lambda_c")?,
            lambda_f: num("lambda_f")?,
            parent: match get("parent")? {
                "none" => None,
                h => Some(h.to_string()),
            },
        };
        p.validate()?;
        Ok(p)
    }
}

/// Everything needed to run one variant: classifier, generators, the
/// translation systems, and provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct StyleCheckpoint {
    pub classifier: StyleClassifier,
    pub generators: StyleGenerators,
    pub systems: MtSystems,
    pub provenance: Provenance,
}

impl StyleCheckpoint {
    pub fn new(
        classifier: StyleClassifier,
        generators: StyleGenerators,
        systems: MtSystems,
        provenance: Provenance,
    ) -> Result<Self> {
        provenance.validate()?;
        check_compatible(&generators, &classifier, &systems)?;
        Ok(StyleCheckpoint {
            classifier,
            generators,
            systems,
            provenance,
        })
    }

    pub fn variant(&self) -> TransferVariant {
        self.provenance.variant
    }

    /// SHA-256 over the classifier, both generators and the provenance text.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.classifier.to_bytes());
        h.update(self.generators.s1.to_bytes());
        h.update(self.generators.s2.to_bytes());
        h.update(self.provenance.to_text().as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.classifier.save(&dir.join(CLASSIFIER_FILE))?;
        self.generators.save(dir)?;
        self.systems.save(&dir.join(MT_DIR))?;
        fs::write(dir.join(PROVENANCE_FILE), self.provenance.to_text())?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let provenance = Provenance::parse(&fs::read_to_string(dir.join(PROVENANCE_FILE))?)?;
        Self::new(
            StyleClassifier::load(&dir.join(CLASSIFIER_FILE))?,
            StyleGenerators::load(dir)?,
            MtSystems::load(&dir.join(MT_DIR))?,
            provenance,
        )
    }

    pub fn transfer<T: AsRef<str>>(&self, x: &[T], source_style: Style) -> Result<Transferred> {
        transfer(self.variant(), &self.generators, &self.systems, x, source_style)
    }
}
