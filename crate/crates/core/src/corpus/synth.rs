use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Lang, ParallelCorpus, Style, StyleCorpus, StyleExample, Tokens};
use crate::error::{Error, Result};

/// Substitution cipher plus chunk reversal that turns a source sentence into
/// one pivot language.
#[derive(Clone, Debug, PartialEq)]
pub struct PivotCipher {
    pub lang: Lang,
    /// Pivot token for each base-vocabulary index.
    pub forward: Vec<String>,
    /// Every contiguous chunk of this many tokens is reversed.
    pub chunk: usize,
}

/// A seeded pair of synthetic pivot languages and two marker-defined styles.
#[derive(Clone, Debug)]
pub struct SyntheticLanguageSpec {
    pub seed: u64,
    content: Vec<String>,
    markers: [Vec<String>; 2],
    pivots: Vec<PivotCipher>,
    base_index: HashMap<String, usize>,
    inverse: Vec<HashMap<String, usize>>,
}

/// Sizes for [`synth_generate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthRequest {
    pub n_parallel: usize,
    pub n_parallel_test: usize,
    pub n_style: usize,
    /// Inclusive length range of parallel sentences.
    pub parallel_len: (usize, usize),
    /// Inclusive length range of style sentences, marker included.
    pub style_len: (usize, usize),
}

impl Default for SynthRequest {
    fn default() -> Self {
        SynthRequest {
            n_parallel: 2000,
            n_parallel_test: 200,
            n_style: 2000,
            parallel_len: (3, 12),
            style_len: (3, 8),
        }
    }
}

fn check_range((min, max): (usize, usize)) -> Result<()> {
    if min == 0 || min > max {
        return Err(Error::InvalidArgument(format!(
            "length range must satisfy 1 <= min <= max, got ({min}, {max})"
        )));
    }
    Ok(())
}

/// Everything [`synth_generate`] produces.
#[derive(Clone, Debug)]
pub struct SynthCorpora {
    pub en_l1: ParallelCorpus,
    pub en_l2: ParallelCorpus,
    pub l1_en: ParallelCorpus,
    pub l2_en: ParallelCorpus,
    pub held_out_en_l1: ParallelCorpus,
    pub held_out_en_l2: ParallelCorpus,
    pub style: StyleCorpus,
}

fn reverse_chunks<T: Clone>(xs: &[T], k: usize) -> Vec<T> {
    xs.chunks(k).flat_map(|c| c.iter().rev().cloned()).collect()
}

impl SyntheticLanguageSpec {
    pub const DEFAULT_CONTENT: usize = 200;
    pub const DEFAULT_MARKERS: usize = 8;
    pub const DEFAULT_CHUNKS: [usize; 2] = [2, 3];

    pub fn new(seed: u64) -> Self {
        Self::with_sizes(seed, Self::DEFAULT_CONTENT, Self::DEFAULT_MARKERS, Self::DEFAULT_CHUNKS)
            .expect("default sizes are valid")
    }

    /// Content tokens `w0..`, style-1 markers `a0..`, style-2 markers `b0..`;
    /// pivot alphabets `p0..` and `q0..` under seeded permutations.
    pub fn with_sizes(seed: u64, n_content: usize, n_markers: usize, chunks: [usize; 2]) -> Result<Self> {
        let content: Vec<String> = (0..n_content).map(|i| format!("w{i}")).collect();
        let a: Vec<String> = (0..n_markers).map(|i| format!("a{i}")).collect();
        let b: Vec<String> = (0..n_markers).map(|i| format!("b{i}")).collect();
        let n_base = n_content + 2 * n_markers;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pivots = Vec::new();
        for (lang, (prefix, chunk)) in Lang::PIVOTS.into_iter().zip(["p", "q"].into_iter().zip(chunks)) {
            let mut perm: Vec<usize> = (0..n_base).collect();
            perm.shuffle(&mut rng);
            pivots.push(PivotCipher {
                lang,
                forward: perm.into_iter().map(|j| format!("{prefix}{j}")).collect(),
                chunk,
            });
        }
        Self::from_parts(seed, content, a, b, pivots)
    }

    pub fn from_parts(
        seed: u64,
        content: Vec<String>,
        markers_s1: Vec<String>,
        markers_s2: Vec<String>,
        pivots: Vec<PivotCipher>,
    ) -> Result<Self> {
        if content.is_empty() || markers_s1.is_empty() || markers_s2.is_empty() {
            return Err(Error::InvalidArgument("content and both marker sets must be nonempty".into()));
        }
        let s1: HashSet<&String> = markers_s1.iter().collect();
        if markers_s2.iter().any(|m| s1.contains(m)) {
            return Err(Error::InvalidArgument("marker sets overlap".into()));
        }
        let mut base_index = HashMap::new();
        for (i, t) in content.iter().chain(&markers_s1).chain(&markers_s2).enumerate() {
            if base_index.insert(t.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "token `{t}` appears twice in the base vocabulary"
                )));
            }
        }
        let mut langs: Vec<Lang> = pivots.iter().map(|p| p.lang).collect();
        langs.sort();
        if langs != Lang::PIVOTS {
            return Err(Error::InvalidArgument("need exactly one cipher for each of l1 and l2".into()));
        }
        let mut inverse = Vec::new();
        for p in &pivots {
            if p.chunk == 0 {
                return Err(Error::InvalidArgument(format!("degenerate cipher for {}: chunk size 0", p.lang)));
            }
            if p.forward.len() != base_index.len() {
                return Err(Error::InvalidArgument(format!(
                    "degenerate cipher for {}: maps {} of {} base tokens",
                    p.lang,
                    p.forward.len(),
                    base_index.len()
                )));
            }
            let mut inv = HashMap::new();
            for (i, t) in p.forward.iter().enumerate() {
                if inv.insert(t.clone(), i).is_some() {
                    return Err(Error::InvalidArgument(format!(
                        "degenerate cipher for {}: `{t}` is the image of two tokens",
                        p.lang
                    )));
                }
            }
            inverse.push(inv);
        }
        Ok(SyntheticLanguageSpec {
            seed,
            content,
            markers: [markers_s1, markers_s2],
            pivots,
            base_index,
            inverse,
        })
    }

    pub fn content(&self) -> &[String] {
        &self.content
    }

    pub fn markers(&self, style: Style) -> &[String] {
        &self.markers[style.class()]
    }

    /// Content tokens followed by both marker sets.
    pub fn base_tokens(&self) -> Vec<String> {
        self.content
            .iter()
            .chain(&self.markers[0])
            .chain(&self.markers[1])
            .cloned()
            .collect()
    }

    pub fn cipher(&self, lang: Lang) -> Result<&PivotCipher> {
        self.pivots
            .iter()
            .find(|p| p.lang == lang)
            .ok_or_else(|| Error::InvalidArgument(format!("`{lang}` is not a pivot language")))
    }

    fn pivot_slot(&self, lang: Lang) -> Result<usize> {
        self.pivots
            .iter()
            .position(|p| p.lang == lang)
            .ok_or_else(|| Error::InvalidArgument(format!("`{lang}` is not a pivot language")))
    }

    /// Ground-truth translation of a source sentence into pivot `lang`.
    pub fn oracle_translate<T: AsRef<str>>(&self, x: &[T], lang: Lang) -> Result<Tokens> {
        let cipher = self.cipher(lang)?;
        let ids = x
            .iter()
            .map(|t| {
                self.base_index
                    .get(t.as_ref())
                    .copied()
                    .ok_or_else(|| Error::UnknownToken(t.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(reverse_chunks(&ids, cipher.chunk)
            .into_iter()
            .map(|i| cipher.forward[i].clone())
            .collect())
    }

    /// Inverse of [`oracle_translate`](Self::oracle_translate).
    pub fn oracle_back_translate<T: AsRef<str>>(&self, y: &[T], lang: Lang) -> Result<Tokens> {
        let slot = self.pivot_slot(lang)?;
        let inv = &self.inverse[slot];
        let ids = y
            .iter()
            .map(|t| {
                inv.get(t.as_ref())
                    .copied()
                    .ok_or_else(|| Error::UnknownToken(t.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let base = self.base_tokens();
        Ok(reverse_chunks(&ids, self.pivots[slot].chunk)
            .into_iter()
            .map(|i| base[i].clone())
            .collect())
    }

    pub fn marker_style(&self, token: &str) -> Option<Style> {
        if self.markers[0].iter().any(|m| m == token) {
            Some(Style::S1)
        } else if self.markers[1].iter().any(|m| m == token) {
            Some(Style::S2)
        } else {
            None
        }
    }

    /// Rule-based label: the style whose markers appear, if exactly one does.
    pub fn detect_style<T: AsRef<str>>(&self, tokens: &[T]) -> Option<Style> {
        let found: HashSet<Style> = tokens.iter().filter_map(|t| self.marker_style(t.as_ref())).collect();
        match found.len() {
            1 => found.into_iter().next(),
            _ => None,
        }
    }
}

fn sample_len(rng: &mut ChaCha8Rng, min: usize, max: usize) -> usize {
    rng.gen_range(min..=max)
}

/// Deterministic corpora for the given spec: multi-way parallel source/pivot
/// data (train and held-out) and a balanced style corpus in which every
/// sentence carries exactly one marker of its style.
pub fn synth_generate(spec: &SyntheticLanguageSpec, req: &SynthRequest) -> Result<SynthCorpora> {
    if req.n_parallel == 0 || req.n_style == 0 {
        return Err(Error::InvalidArgument("sentence counts must be at least 1".into()));
    }
    check_range(req.parallel_len)?;
    check_range(req.style_len)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x9e37_79b9_7f4a_7c15);
    let base = spec.base_tokens();

    let mut en_sentences = Vec::with_capacity(req.n_parallel + req.n_parallel_test);
    for _ in 0..req.n_parallel + req.n_parallel_test {
        let len = sample_len(&mut rng, req.parallel_len.0, req.parallel_len.1);
        let s: Tokens = (0..len).map(|_| base[rng.gen_range(0..base.len())].clone()).collect();
        en_sentences.push(s);
    }
    let make = |lang: Lang, range: std::ops::Range<usize>| -> Result<ParallelCorpus> {
        let pairs = en_sentences[range]
            .iter()
            .map(|x| Ok((x.clone(), spec.oracle_translate(x, lang)?)))
            .collect::<Result<Vec<_>>>()?;
        ParallelCorpus::new(Lang::En, lang, pairs)
    };
    let train = 0..req.n_parallel;
    let test = req.n_parallel..req.n_parallel + req.n_parallel_test;
    let en_l1 = make(Lang::L1, train.clone())?;
    let en_l2 = make(Lang::L2, train)?;
    let held_out_en_l1 = make(Lang::L1, test.clone())?;
    let held_out_en_l2 = make(Lang::L2, test)?;

    let mut examples = Vec::with_capacity(req.n_style);
    for i in 0..req.n_style {
        let style = if i % 2 == 0 { Style::S1 } else { Style::S2 };
        let len = sample_len(&mut rng, req.style_len.0, req.style_len.1);
        let mut tokens: Tokens = (0..len - 1)
            .map(|_| spec.content[rng.gen_range(0..spec.content.len())].clone())
            .collect();
        let markers = spec.markers(style);
        let marker = markers[rng.gen_range(0..markers.len())].clone();
        let pos = rng.gen_range(0..len);
        tokens.insert(pos, marker);
        examples.push(StyleExample { tokens, style });
    }

    Ok(SynthCorpora {
        l1_en: en_l1.reversed(),
        l2_en: en_l2.reversed(),
        en_l1,
        en_l2,
        held_out_en_l1,
        held_out_en_l2,
        style: StyleCorpus::new(examples)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Tokens {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn tiny(forward: &[&str], chunk: usize) -> SyntheticLanguageSpec {
        let pivots = vec![
            PivotCipher {
                lang: Lang::L1,
                forward: forward.iter().map(|s| s.to_string()).collect(),
                chunk,
            },
            PivotCipher {
                lang: Lang::L2,
                forward: forward.iter().map(|s| s.to_string()).collect(),
                chunk: 1,
            },
        ];
        SyntheticLanguageSpec::from_parts(0, toks("a b"), toks("m"), toks("n"), pivots).unwrap()
    }

    #[test]
    fn identity_cipher_with_unit_chunks_is_identity() {
        let spec = tiny(&["a", "b", "m", "n"], 1);
        let x = toks("a b m b");
        assert_eq!(spec.oracle_translate(&x, Lang::L1).unwrap(), x);
    }

    #[test]
    fn swap_cipher_with_pair_chunks() {
        let spec = tiny(&["b", "a", "m", "n"], 2);
        let y = spec.oracle_translate(&toks("a b a"), Lang::L1).unwrap();
        assert_eq!(y, toks("a b b"));
        assert_eq!(spec.oracle_back_translate(&y, Lang::L1).unwrap(), toks("a b a"));
    }

    #[test]
    fn unknown_tokens_are_rejected() {
        let spec = SyntheticLanguageSpec::new(1);
        assert!(matches!(spec.oracle_translate(&toks("w1 zzz"), Lang::L1), Err(Error::UnknownToken(_))));
        assert!(spec.oracle_translate(&toks("w1"), Lang::En).is_err());
    }

    #[test]
    fn overlapping_markers_and_degenerate_ciphers_are_rejected() {
        let ok = vec![
            PivotCipher { lang: Lang::L1, forward: toks("x y z"), chunk: 1 },
            PivotCipher { lang: Lang::L2, forward: toks("x y z"), chunk: 1 },
        ];
        assert!(SyntheticLanguageSpec::from_parts(0, toks("a"), toks("m"), toks("m"), ok.clone()).is_err());
        let mut dup = ok.clone();
        dup[0].forward = toks("x x z");
        assert!(SyntheticLanguageSpec::from_parts(0, toks("a"), toks("m"), toks("n"), dup).is_err());
        let mut zero = ok.clone();
        zero[1].chunk = 0;
        assert!(SyntheticLanguageSpec::from_parts(0, toks("a"), toks("m"), toks("n"), zero).is_err());
        assert!(SyntheticLanguageSpec::from_parts(0, toks("a"), toks("m"), toks("n"), ok).is_ok());
    }

    #[test]
    fn generation_is_seeded() {
        let req = SynthRequest { n_parallel: 20, n_parallel_test: 5, n_style: 30, parallel_len: (2, 6), style_len: (2, 6) };
        let a = synth_generate(&SyntheticLanguageSpec::new(7), &req).unwrap();
        let b = synth_generate(&SyntheticLanguageSpec::new(7), &req).unwrap();
        assert_eq!(a.en_l1, b.en_l1);
        assert_eq!(a.en_l2, b.en_l2);
        assert_eq!(a.style, b.style);
        let c = synth_generate(&SyntheticLanguageSpec::new(8), &req).unwrap();
        assert_ne!(a.en_l1, c.en_l1);
    }

    #[test]
    fn bad_requests() {
        let spec = SyntheticLanguageSpec::new(0);
        let mut req = SynthRequest { n_parallel: 1, n_parallel_test: 0, n_style: 1, parallel_len: (3, 2), style_len: (1, 1) };
        assert!(synth_generate(&spec, &req).is_err());
        req.parallel_len = (0, 2);
        assert!(synth_generate(&spec, &req).is_err());
        req.parallel_len = (1, 2);
        req.style_len = (0, 1);
        assert!(synth_generate(&spec, &req).is_err());
        req.style_len = (1, 1);
        req.n_style = 0;
        assert!(synth_generate(&spec, &req).is_err());
    }
}
