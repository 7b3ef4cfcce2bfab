use std::collections::{BTreeSet, HashMap};

/// Independent scan-based Witten-Bell model: every count is recomputed by
/// walking the padded training sentences.
pub struct BruteForce {
    padded: Vec<Vec<String>>,
    vocab: Vec<String>,
}

impl BruteForce {
    pub fn new(train: &[Vec<String>]) -> Self {
        let mut freq: HashMap<&String, usize> = HashMap::new();
        for w in train.iter().flatten() {
            *freq.entry(w).or_default() += 1;
        }
        let map = |w: &String| if freq[w] >= 2 { w.clone() } else { "<unk>".to_string() };
        let padded = train
            .iter()
            .map(|s| {
                let mut p = vec!["<s>".to_string(), "<s>".to_string()];
                p.extend(s.iter().map(map));
                p.push("</s>".to_string());
                p
            })
            .collect();
        let mut vocab: BTreeSet<String> = freq.iter().filter(|(_, &c)| c >= 2).map(|(w, _)| (*w).clone()).collect();
        vocab.insert("</s>".into());
        vocab.insert("<unk>".into());
        BruteForce {
            padded,
            vocab: vocab.into_iter().collect(),
        }
    }

    /// Followers of `history` (suffix match), one entry per occurrence.
    fn followers(&self, history: &[&str]) -> Vec<String> {
        let mut out = Vec::new();
        for s in &self.padded {
            for i in 2..s.len() {
                let k = history.len();
                if s[i - k..i].iter().zip(history).all(|(a, b)| a == b) {
                    out.push(s[i].clone());
                }
            }
        }
        out
    }

    pub fn prob(&self, history: &[&str], w: &str) -> f64 {
        let lower = if history.is_empty() {
            1.0 / self.vocab.len() as f64
        } else {
            self.prob(&history[1..], w)
        };
        let f = self.followers(history);
        if f.is_empty() {
            return lower;
        }
        let c = f.iter().filter(|x| *x == w).count() as f64;
        let types = f.iter().collect::<BTreeSet<_>>().len() as f64;
        (c + types * lower) / (f.len() as f64 + types)
    }

    pub fn perplexity(&self, test: &[Vec<String>]) -> f64 {
        let mut product_log = 0.0;
        let mut n = 0;
        for s in test {
            let mut p = vec!["<s>".to_string(), "<s>".to_string()];
            p.extend(s.iter().map(|w| if self.vocab.contains(w) { w.clone() } else { "<unk>".into() }));
            p.push("</s>".into());
            let mut prod = 1.0f64;
            for i in 2..p.len() {
                prod *= self.prob(&[p[i - 2].as_str(), p[i - 1].as_str()], &p[i]);
                n += 1;
            }
            product_log += prod.ln();
        }
        (-product_log / n as f64).exp()
    }
}
