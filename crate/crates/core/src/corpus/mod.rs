//! Vocabularies, labeled and parallel corpora, splits, and the synthetic
//! cipher languages used as ground truth for every downstream stage.

mod io;
mod split;
mod synth;
mod vocab;

use std::fmt;
use std::str::FromStr;

pub use io::{
    load_labeled, load_parallel, load_split_manifest, save_labeled, save_parallel,
    save_split_manifest,
};
pub use split::SplitFractions;
pub use synth::{synth_generate, PivotCipher, SynthCorpora, SynthRequest, SyntheticLanguageSpec};
pub use vocab::{
    Sentence, Vocabulary, BOS, EOS, NUM_RESERVED, PAD, RESERVED, TAG_L1, TAG_L2, UNK,
};

use crate::error::{Error, Result};

pub type Tokens = Vec<String>;

/// Splits a whitespace-tokenized line.
pub fn tokenize(line: &str) -> Tokens {
    line.split_whitespace().map(str::to_string).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Lang {
    /// The source language whose style is transferred.
    En,
    L1,
    L2,
}

impl Lang {
    pub const PIVOTS: [Lang; 2] = [Lang::L1, Lang::L2];

    pub fn name(self) -> &'static str {
        match self {
            Lang::En => "en",
            Lang::L1 => "l1",
            Lang::L2 => "l2",
        }
    }

    /// Target-language tag prepended to one-to-many inputs.
    pub fn target_tag(self) -> Option<u32> {
        match self {
            Lang::En => None,
            Lang::L1 => Some(TAG_L1),
            Lang::L2 => Some(TAG_L2),
        }
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Lang {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "en" => Ok(Lang::En),
            "l1" => Ok(Lang::L1),
            "l2" => Ok(Lang::L2),
            _ => Err(Error::InvalidArgument(format!("unknown language tag `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Style {
    S1,
    S2,
}

impl Style {
    pub fn opposite(self) -> Style {
        match self {
            Style::S1 => Style::S2,
            Style::S2 => Style::S1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Style::S1 => "s1",
            Style::S2 => "s2",
        }
    }

    /// Binary class id: s1 = 0, s2 = 1.
    pub fn class(self) -> usize {
        match self {
            Style::S1 => 0,
            Style::S2 => 1,
        }
    }
}

impl fmt::Display for Style {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Style {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "s1" => Ok(Style::S1),
            "s2" => Ok(Style::S2),
            _ => Err(Error::InvalidArgument(format!("unknown style label `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Dev,
    Test,
    ClassTrain,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Train, Split::Dev, Split::Test, Split::ClassTrain];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
            Split::ClassTrain => "classtrain",
        }
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown split `{s}`")))
    }
}

/// Sentence pairs in one translation direction.
#[derive(Clone, Debug, PartialEq)]
pub struct ParallelCorpus {
    pub src_lang: Lang,
    pub tgt_lang: Lang,
    pub pairs: Vec<(Tokens, Tokens)>,
}

impl ParallelCorpus {
    pub fn new(src_lang: Lang, tgt_lang: Lang, pairs: Vec<(Tokens, Tokens)>) -> Result<Self> {
        if src_lang == tgt_lang {
            return Err(Error::InvalidArgument(format!(
                "source and target language are both `{src_lang}`"
            )));
        }
        if let Some(i) = pairs.iter().position(|(s, t)| s.is_empty() || t.is_empty()) {
            return Err(Error::InvalidArgument(format!("pair {i} has an empty side")));
        }
        Ok(ParallelCorpus {
            src_lang,
            tgt_lang,
            pairs,
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// The same pairs in the opposite direction.
    pub fn reversed(&self) -> ParallelCorpus {
        ParallelCorpus {
            src_lang: self.tgt_lang,
            tgt_lang: self.src_lang,
            pairs: self.pairs.iter().map(|(s, t)| (t.clone(), s.clone())).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StyleExample {
    pub tokens: Tokens,
    pub style: Style,
}

/// Style-labeled sentences with an optional split assignment per sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct StyleCorpus {
    pub examples: Vec<StyleExample>,
    splits: Option<Vec<Split>>,
}

impl StyleCorpus {
    pub fn new(examples: Vec<StyleExample>) -> Result<Self> {
        if let Some(i) = examples.iter().position(|e| e.tokens.is_empty()) {
            return Err(Error::InvalidArgument(format!("example {i} is empty")));
        }
        Ok(StyleCorpus {
            examples,
            splits: None,
        })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn splits(&self) -> Option<&[Split]> {
        self.splits.as_deref()
    }

    /// Attaches an explicit assignment; every split must hold both styles.
    pub fn with_splits(mut self, splits: Vec<Split>) -> Result<Self> {
        if splits.len() != self.examples.len() {
            return Err(Error::Misaligned(format!(
                "{} split entries for {} examples",
                splits.len(),
                self.examples.len()
            )));
        }
        split::check_nonempty(&self.examples, &splits)?;
        self.splits = Some(splits);
        Ok(self)
    }

    /// Examples of `split` (all examples when unsplit) with the given style.
    pub fn select(&self, split: Option<Split>, style: Option<Style>) -> Vec<&StyleExample> {
        self.examples
            .iter()
            .enumerate()
            .filter(|(i, e)| {
                let split_ok = match (split, &self.splits) {
                    (None, _) => true,
                    (Some(s), Some(v)) => v[*i] == s,
                    (Some(_), None) => false,
                };
                split_ok && style.map_or(true, |s| e.style == s)
            })
            .map(|(_, e)| e)
            .collect()
    }

    /// Seeded, per-style assignment to train/dev/test/classtrain.
    pub fn split_corpus(&self, fractions: SplitFractions, seed: u64) -> Result<StyleCorpus> {
        let splits = split::assign(&self.examples, fractions, seed)?;
        self.clone().with_splits(splits)
    }
}
