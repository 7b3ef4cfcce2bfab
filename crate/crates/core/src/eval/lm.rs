use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};

pub const LM_BOS: &str = "<s>";
pub const LM_EOS: &str = "</s>";
pub const LM_UNK: &str = "<unk>";
pub const ORDER: usize = 3;

#[derive(Clone, Debug, Default, PartialEq)]
struct ContextStats {
    total: u64,
    next: HashMap<u32, u64>,
}

impl ContextStats {
    fn add(&mut self, w: u32) {
        self.total += 1;
        *self.next.entry(w).or_insert(0) += 1;
    }

    fn types(&self) -> u64 {
        self.next.len() as u64
    }

    /// Witten-Bell: `(c(h w) + T(h) * lower) / (c(h) + T(h))`.
    fn smooth(&self, w: u32, lower: f64) -> f64 {
        let c = self.next.get(&w).copied().unwrap_or(0) as f64;
        let t = self.types() as f64;
        (c + t * lower) / (self.total as f64 + t)
    }
}

/// Order-3 Witten-Bell language model. Training tokens seen once are
/// replaced by `<unk>`, which therefore receives their counts; the lowest
/// order falls back to a uniform distribution over the known words,
/// `</s>` and `<unk>`.
#[derive(Clone, Debug, PartialEq)]
pub struct NGramLM {
    words: Vec<String>,
    index: HashMap<String, u32>,
    unk: u32,
    eos: u32,
    bos: u32,
    unigram: ContextStats,
    bigram: HashMap<u32, ContextStats>,
    trigram: HashMap<(u32, u32), ContextStats>,
}

impl NGramLM {
    fn with_words(mut words: Vec<String>) -> Self {
        for special in [LM_EOS, LM_UNK] {
            if !words.iter().any(|w| w == special) {
                words.push(special.to_string());
            }
        }
        let index: HashMap<String, u32> = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        let bos = words.len() as u32;
        NGramLM {
            unk: index[LM_UNK],
            eos: index[LM_EOS],
            bos,
            words,
            index,
            unigram: ContextStats::default(),
            bigram: HashMap::new(),
            trigram: HashMap::new(),
        }
    }

    /// Counts over `sentences`; boundary symbols are added here.
    pub fn train<S: AsRef<str>>(sentences: &[Vec<S>]) -> Result<Self> {
        if sentences.iter().all(|s| s.is_empty()) {
            return Err(Error::Empty("language model corpus"));
        }
        let mut freq: HashMap<&str, u64> = HashMap::new();
        for s in sentences {
            for w in s {
                *freq.entry(w.as_ref()).or_insert(0) += 1;
            }
        }
        let known: BTreeSet<&str> = freq
            .iter()
            .filter(|(w, &c)| c >= 2 && **w != LM_BOS)
            .map(|(w, _)| *w)
            .collect();
        let mut lm = Self::with_words(known.into_iter().map(str::to_string).collect());
        for s in sentences {
            if s.is_empty() {
                continue;
            }
            let ids = lm.sentence_ids(s);
            for i in 2..ids.len() {
                let (h2, h1, w) = (ids[i - 2], ids[i - 1], ids[i]);
                lm.unigram.add(w);
                lm.bigram.entry(h1).or_default().add(w);
                lm.trigram.entry((h2, h1)).or_default().add(w);
            }
        }
        Ok(lm)
    }

    /// A model with no counts: every prediction is `1 / vocab_size`, where
    /// the vocabulary is `words` plus `</s>` and `<unk>`.
    pub fn uniform<S: AsRef<str>>(words: &[S]) -> Self {
        let mut seen = BTreeSet::new();
        let words = words
            .iter()
            .map(|w| w.as_ref().to_string())
            .filter(|w| seen.insert(w.clone()))
            .collect();
        Self::with_words(words)
    }

    /// Number of predictable words, `</s>` and `<unk>` included.
    pub fn vocab_size(&self) -> usize {
        self.words.len()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    fn id(&self, w: &str) -> u32 {
        if w == LM_BOS {
            return self.bos;
        }
        self.index.get(w).copied().unwrap_or(self.unk)
    }

    /// `<s> <s> w1 .. wn </s>` as ids, OOV mapped to `<unk>`.
    fn sentence_ids<S: AsRef<str>>(&self, s: &[S]) -> Vec<u32> {
        let mut ids = vec![self.bos, self.bos];
        ids.extend(s.iter().map(|w| self.id(w.as_ref())));
        ids.push(self.eos);
        ids
    }

    /// Raw count of an n-gram (`n` in 1..=3) as collected in training.
    pub fn count<S: AsRef<str>>(&self, ngram: &[S]) -> u64 {
        let ids: Vec<u32> = ngram.iter().map(|w| self.id(w.as_ref())).collect();
        let get = |stats: Option<&ContextStats>, w: u32| stats.and_then(|s| s.next.get(&w)).copied().unwrap_or(0);
        match ids[..] {
            [w] => get(Some(&self.unigram), w),
            [h1, w] => get(self.bigram.get(&h1), w),
            [h2, h1, w] => get(self.trigram.get(&(h2, h1)), w),
            _ => 0,
        }
    }

    fn prob_ids(&self, h2: u32, h1: u32, w: u32) -> f64 {
        let p0 = 1.0 / self.words.len() as f64;
        let p1 = if self.unigram.total > 0 { self.unigram.smooth(w, p0) } else { p0 };
        let p2 = self.bigram.get(&h1).map_or(p1, |s| s.smooth(w, p1));
        self.trigram.get(&(h2, h1)).map_or(p2, |s| s.smooth(w, p2))
    }

    /// `P(w | h2 h1)`; use `<s>` for sentence-initial context.
    pub fn prob(&self, h2: &str, h1: &str, w: &str) -> f64 {
        self.prob_ids(self.id(h2), self.id(h1), self.id(w))
    }

    /// Total log-probability and number of predicted tokens (`</s>` counts,
    /// `<s>` does not).
    pub fn log_prob<S: AsRef<str>>(&self, sentence: &[S]) -> (f64, usize) {
        let ids = self.sentence_ids(sentence);
        let lp = (2..ids.len()).map(|i| self.prob_ids(ids[i - 2], ids[i - 1], ids[i]).ln()).sum();
        (lp, ids.len() - 2)
    }

    /// Largest deviation from 1 of `sum_w P(w | h)` over every observed
    /// context of every order.
    pub fn max_normalization_error(&self) -> f64 {
        let mut contexts: Vec<(u32, u32)> = self.trigram.keys().copied().collect();
        contexts.extend(self.bigram.keys().map(|&h1| (u32::MAX, h1)));
        contexts.push((u32::MAX, u32::MAX));
        let mut worst: f64 = 0.0;
        for (h2, h1) in contexts {
            let s: f64 = (0..self.words.len() as u32).map(|w| self.prob_ids(h2, h1, w)).sum();
            worst = worst.max((s - 1.0).abs());
        }
        worst
    }
}

/// `exp(-sum log P / tokens)` over the whole corpus.
pub fn perplexity<S: AsRef<str>>(lm: &NGramLM, sentences: &[Vec<S>]) -> Result<f64> {
    let (mut lp, mut n) = (0.0, 0usize);
    for s in sentences {
        let (l, k) = lm.log_prob(s);
        lp += l;
        n += k;
    }
    if n == 0 {
        return Err(Error::Empty("perplexity input"));
    }
    Ok((-lp / n as f64).exp())
}
