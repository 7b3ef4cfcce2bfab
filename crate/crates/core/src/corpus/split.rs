use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Split, Style, StyleExample};
use crate::error::{Error, Result};

/// Fractions for train, dev, test and classtrain; positive, summing to one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitFractions {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
    pub classtrain: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.7,
            dev: 0.1,
            test: 0.1,
            classtrain: 0.1,
        }
    }
}

impl SplitFractions {
    pub fn new(train: f64, dev: f64, test: f64, classtrain: f64) -> Result<Self> {
        let f = SplitFractions {
            train,
            dev,
            test,
            classtrain,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.train, self.dev, self.test, self.classtrain]
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.as_array();
        if a.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "split fractions must all be positive, got {a:?} (every split needs both styles)"
            )));
        }
        let sum: f64 = a.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("split fractions sum to {sum}, not 1")));
        }
        Ok(())
    }
}

pub(crate) fn assign(examples: &[StyleExample], fractions: SplitFractions, seed: u64) -> Result<Vec<Split>> {
    fractions.validate()?;
    let mut out = vec![Split::Train; examples.len()];
    for (k, style) in [Style::S1, Style::S2].into_iter().enumerate() {
        let mut idx: Vec<usize> = examples
            .iter()
            .enumerate()
            .filter(|(_, e)| e.style == style)
            .map(|(i, _)| i)
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(2).wrapping_add(k as u64));
        idx.shuffle(&mut rng);
        let n = idx.len() as f64;
        let mut cum = 0.0;
        let mut start = 0usize;
        for (split, frac) in Split::ALL.into_iter().zip(fractions.as_array()) {
            cum += frac;
            let end = if split == Split::ClassTrain {
                idx.len()
            } else {
                ((cum * n).round() as usize).min(idx.len())
            };
            for &i in &idx[start..end.max(start)] {
                out[i] = split;
            }
            start = end.max(start);
        }
    }
    check_nonempty(examples, &out)?;
    Ok(out)
}

pub(crate) fn check_nonempty(examples: &[StyleExample], splits: &[Split]) -> Result<()> {
    for split in Split::ALL {
        for style in [Style::S1, Style::S2] {
            let present = examples
                .iter()
                .zip(splits)
                .any(|(e, s)| *s == split && e.style == style);
            if !present {
                return Err(Error::InvalidArgument(format!(
                    "split `{}` has no `{}` sentences",
                    split.name(),
                    style
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::StyleCorpus;

    fn corpus(n: usize) -> StyleCorpus {
        let examples = (0..n)
            .map(|i| StyleExample {
                tokens: vec![format!("w{i}")],
                style: if i % 2 == 0 { Style::S1 } else { Style::S2 },
            })
            .collect();
        StyleCorpus::new(examples).unwrap()
    }

    #[test]
    fn proportions_on_a_thousand_sentences() {
        let c = corpus(1000).split_corpus(SplitFractions::default(), 9).unwrap();
        let splits = c.splits().unwrap();
        let count = |s: Split| splits.iter().filter(|&&x| x == s).count() as i64;
        assert!((count(Split::Train) - 700).abs() <= 20);
        for s in [Split::Dev, Split::Test, Split::ClassTrain] {
            assert!((count(s) - 100).abs() <= 20);
        }
        for style in [Style::S1, Style::S2] {
            let n = c.select(Some(Split::Train), Some(style)).len() as f64;
            assert!((n / 500.0 - 0.7).abs() <= 0.02);
        }
    }

    #[test]
    fn same_seed_same_assignment() {
        let a = corpus(200).split_corpus(SplitFractions::default(), 1).unwrap();
        let b = corpus(200).split_corpus(SplitFractions::default(), 1).unwrap();
        assert_eq!(a.splits(), b.splits());
    }

    #[test]
    fn degenerate_fractions_are_rejected() {
        let f = SplitFractions {
            train: 1.0,
            dev: 0.0,
            test: 0.0,
            classtrain: 0.0,
        };
        assert!(corpus(100).split_corpus(f, 0).is_err());
        assert!(SplitFractions::new(0.5, 0.2, 0.2, 0.2).is_err());
    }

    #[test]
    fn too_small_corpus_leaves_a_split_empty() {
        assert!(corpus(4).split_corpus(SplitFractions::default(), 0).is_err());
    }
}
