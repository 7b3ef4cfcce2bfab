use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Tokens;
use crate::error::{Error, Result};

/// One annotation item: the original and two system outputs in randomized
/// order. `a_first` records whether option 1 is system A.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SheetRow {
    pub index: usize,
    pub original: Tokens,
    pub option_1: Tokens,
    pub option_2: Tokens,
    pub a_first: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HumanEvalSheet {
    pub rows: Vec<SheetRow>,
}

/// Samples `n` aligned items and shuffles A/B per item. Pairs are
/// `(original, output)`; both lists must share the originals.
pub fn export_human_eval(
    pairs_a: &[(Tokens, Tokens)],
    pairs_b: &[(Tokens, Tokens)],
    n: usize,
    seed: u64,
) -> Result<HumanEvalSheet> {
    if pairs_a.len() != pairs_b.len() {
        return Err(Error::Misaligned(format!("{} vs {} items", pairs_a.len(), pairs_b.len())));
    }
    if let Some(i) = pairs_a.iter().zip(pairs_b).position(|(a, b)| a.0 != b.0) {
        return Err(Error::Misaligned(format!("item {i} has different originals")));
    }
    if n == 0 || n > pairs_a.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot sample {n} of {} items",
            pairs_a.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = sample(&mut rng, pairs_a.len(), n).into_vec();
    let rows = picked
        .into_iter()
        .map(|i| {
            let a_first = rng.gen_bool(0.5);
            let (a, b) = (pairs_a[i].1.clone(), pairs_b[i].1.clone());
            let (option_1, option_2) = if a_first { (a, b) } else { (b, a) };
            SheetRow {
                index: i,
                original: pairs_a[i].0.clone(),
                option_1,
                option_2,
                a_first,
            }
        })
        .collect();
    Ok(HumanEvalSheet { rows })
}

impl HumanEvalSheet {
    pub fn sheet_text(&self) -> String {
        let mut s = String::from("item\toriginal\toption_1\toption_2\n");
        for (k, r) in self.rows.iter().enumerate() {
            s.push_str(&format!(
                "{k}\t{}\t{}\t{}\n",
                r.original.join(" "),
                r.option_1.join(" "),
                r.option_2.join(" ")
            ));
        }
        s
    }

    pub fn key_text(&self) -> String {
        let mut s = String::from("item\tsource_index\toption_1\toption_2\n");
        for (k, r) in self.rows.iter().enumerate() {
            let (o1, o2) = if r.a_first { ("A", "B") } else { ("B", "A") };
            s.push_str(&format!("{k}\t{}\t{o1}\t{o2}\n", r.index));
        }
        s
    }

    pub fn write(&self, sheet: &Path, key: &Path) -> Result<()> {
        fs::write(sheet, self.sheet_text())?;
        fs::write(key, self.key_text())?;
        Ok(())
    }

    /// Recovers `(index, output_a, output_b)` from sheet and key texts.
    pub fn reconstruct(sheet: &str, key: &str) -> Result<Vec<(usize, String, String)>> {
        let bad = |m: &str| Error::Format(format!("annotation files: {m}"));
        let mut out = Vec::new();
        for (s, k) in sheet.lines().skip(1).zip(key.lines().skip(1)) {
            let sf: Vec<&str> = s.split('\t').collect();
            let kf: Vec<&str> = k.split('\t').collect();
            if sf.len() != 4 || kf.len() != 4 || sf[0] != kf[0] {
                return Err(bad("rows do not line up"));
            }
            let index = kf[1].parse().map_err(|_| bad("bad index"))?;
            let (a, b) = match (kf[2], kf[3]) {
                ("A", "B") => (sf[2], sf[3]),
                ("B", "A") => (sf[3], sf[2]),
                _ => return Err(bad("bad key")),
            };
            out.push((index, a.to_string(), b.to_string()));
        }
        Ok(out)
    }
}
