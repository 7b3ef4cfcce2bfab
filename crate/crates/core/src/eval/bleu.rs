use std::collections::HashMap;

use crate::error::{Error, Result};

const MAX_N: usize = 4;

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
        }
    }
    m
}

/// Corpus BLEU (n = 1..4, uniform weights, brevity penalty) on
/// whitespace tokens, case-sensitive and unsmoothed: a zero precision at any
/// order gives 0.
pub fn bleu<S: AsRef<str>>(hyps: &[Vec<S>], refs: &[Vec<S>]) -> Result<f64> {
    if hyps.len() != refs.len() {
        return Err(Error::Misaligned(format!(
            "{} hypotheses vs {} references",
            hyps.len(),
            refs.len()
        )));
    }
    if hyps.is_empty() {
        return Err(Error::Empty("BLEU input"));
    }
    let mut matched = [0usize; MAX_N];
    let mut total = [0usize; MAX_N];
    let (mut hyp_len, mut ref_len) = (0usize, 0usize);
    for (h, r) in hyps.iter().zip(refs) {
        hyp_len += h.len();
        ref_len += r.len();
        for n in 1..=MAX_N {
            let hc = ngram_counts(h, n);
            let rc = ngram_counts(r, n);
            for (g, c) in &hc {
                matched[n - 1] += (*c).min(rc.get(g).copied().unwrap_or(0));
                total[n - 1] += c;
            }
        }
    }
    if matched.iter().any(|&m| m == 0) {
        return Ok(0.0);
    }
    let log_p: f64 = (0..MAX_N)
        .map(|i| (matched[i] as f64 / total[i] as f64).ln())
        .sum::<f64>()
        / MAX_N as f64;
    let bp = if hyp_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    Ok(100.0 * bp * log_p.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn identity_and_disjoint() {
        let h = vec![t("a b c d e"), t("x y z w")];
        assert!((bleu(&h, &h).unwrap() - 100.0).abs() < 1e-12);
        assert_eq!(bleu(&[t("a b c d")], &[t("e f g h")]).unwrap(), 0.0);
    }

    #[test]
    fn missing_fourgrams_give_zero() {
        assert_eq!(bleu(&[t("the cat sat")], &[t("the cat sat down")]).unwrap(), 0.0);
    }

    #[test]
    fn misaligned_lists_fail() {
        assert!(matches!(bleu(&[t("a")], &[]), Err(Error::Misaligned(_))));
    }
}
