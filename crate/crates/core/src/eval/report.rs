use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::corpus::{Style, Tokens, Vocabulary};
use crate::error::{Error, Result};
use crate::style::StyleClassifier;

/// Percentage of sentences the classifier assigns to their intended style
/// (threshold 0.5).
pub fn style_accuracy(clf: &StyleClassifier, vocab: &Vocabulary, generated: &[(Tokens, Style)]) -> Result<f64> {
    if generated.is_empty() {
        return Err(Error::Empty("generated sentences"));
    }
    let mut hit = 0;
    for (tokens, style) in generated {
        if tokens.is_empty() {
            continue;
        }
        if clf.predict(&vocab.encode(tokens))? == *style {
            hit += 1;
        }
    }
    Ok(100.0 * hit as f64 / generated.len() as f64)
}

/// Flat `metric.path = value` report, sorted by key.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalReport {
    entries: BTreeMap<String, String>,
}

impl EvalReport {
    pub fn new() -> Self {
        Self::default()
    }

    fn check_key(key: &str) -> Result<()> {
        if key.is_empty() || key.contains(char::is_whitespace) || key.contains('=') {
            return Err(Error::InvalidArgument(format!("bad report key `{key}`")));
        }
        Ok(())
    }

    pub fn set_text(&mut self, key: &str, value: &str) -> Result<()> {
        Self::check_key(key)?;
        if value.contains('\n') {
            return Err(Error::InvalidArgument(format!("value for `{key}` spans lines")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn set_value(&mut self, key: &str, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::NonFinite("report value"));
        }
        self.set_text(key, &format!("{value:.6}"))
    }

    pub fn set_percentage(&mut self, key: &str, value: f64) -> Result<()> {
        if !(0.0..=100.0).contains(&value) {
            return Err(Error::InvalidArgument(format!("`{key}` = {value} is not a percentage")));
        }
        self.set_value(key, value)
    }

    pub fn set_perplexity(&mut self, key: &str, value: f64) -> Result<()> {
        if !(value >= 1.0) {
            return Err(Error::InvalidArgument(format!("`{key}` = {value} is below 1")));
        }
        self.set_value(key, value)
    }

    pub fn set_count(&mut self, key: &str, value: usize) -> Result<()> {
        self.set_text(key, &value.to_string())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key)?.parse().ok()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut r = EvalReport::new();
        for (i, line) in text.lines().enumerate() {
            let (k, v) = line.split_once(" = ").ok_or_else(|| Error::Parse {
                source_name: "report".into(),
                line: i + 1,
                msg: "expected `key = value`".into(),
            })?;
            r.set_text(k, v)?;
        }
        Ok(r)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_and_ranges() {
        let mut r = EvalReport::new();
        r.set_percentage("accuracy.mbst.s1_to_s2", 87.5).unwrap();
        r.set_perplexity("perplexity.mbst.s1_to_s2", 12.25).unwrap();
        r.set_text("provenance.variant", "mbst").unwrap();
        assert!(r.set_percentage("x", 101.0).is_err());
        assert!(r.set_perplexity("y", 0.5).is_err());
        let text = r.to_text();
        assert_eq!(text.lines().next().unwrap(), "accuracy.mbst.s1_to_s2 = 87.500000");
        assert_eq!(EvalReport::parse(&text).unwrap(), r);
    }
}
