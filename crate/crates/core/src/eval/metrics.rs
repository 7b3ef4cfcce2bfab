use crate::error::{Error, Result};

fn check_aligned<T>(hyps: &[T], refs: &[T]) -> Result<()> {
    if hyps.len() != refs.len() {
        return Err(Error::Misaligned(format!(
            "{} hypotheses vs {} references",
            hyps.len(),
            refs.len()
        )));
    }
    if hyps.is_empty() {
        return Err(Error::Empty("hypothesis list"));
    }
    Ok(())
}

/// Position-wise token matches over the longer of each pair, as a fraction.
pub fn token_accuracy<S: AsRef<str>>(hyps: &[Vec<S>], refs: &[Vec<S>]) -> Result<f64> {
    check_aligned(hyps, refs)?;
    let (mut hit, mut total) = (0usize, 0usize);
    for (h, r) in hyps.iter().zip(refs) {
        total += h.len().max(r.len());
        hit += h.iter().zip(r).filter(|(a, b)| a.as_ref() == b.as_ref()).count();
    }
    Ok(if total == 0 { 1.0 } else { hit as f64 / total as f64 })
}

/// Fraction of pairs that match exactly.
pub fn exact_match_rate<S: AsRef<str>>(hyps: &[Vec<S>], refs: &[Vec<S>]) -> Result<f64> {
    check_aligned(hyps, refs)?;
    let same = hyps
        .iter()
        .zip(refs)
        .filter(|(h, r)| h.len() == r.len() && h.iter().zip(r.iter()).all(|(a, b)| a.as_ref() == b.as_ref()))
        .count();
    Ok(same as f64 / hyps.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: &str) -> Vec<&str> {
        x.split_whitespace().collect()
    }

    #[test]
    fn accuracy_counts_the_longer_side() {
        let acc = token_accuracy(&[s("a b c"), s("x")], &[s("a z"), s("x")]).unwrap();
        assert!((acc - 2.0 / 4.0).abs() < 1e-15);
        assert_eq!(exact_match_rate(&[s("a b"), s("x")], &[s("a b"), s("y")]).unwrap(), 0.5);
        assert!(token_accuracy(&[s("a")], &[]).is_err());
    }
}
