use std::fs;
use std::path::Path;

use super::{tokenize, Lang, ParallelCorpus, Split, StyleCorpus, StyleExample};
use crate::error::{Error, Result};

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        source_name: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// Reads `<style-label>\t<space-separated tokens>` lines.
pub fn load_labeled(path: &Path) -> Result<StyleCorpus> {
    let text = fs::read_to_string(path)?;
    let mut examples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(parse_err(path, i + 1, format!("expected 2 tab-separated fields, got {}", fields.len())));
        }
        let style = fields[0].parse().map_err(|e: Error| parse_err(path, i + 1, e.to_string()))?;
        let tokens = tokenize(fields[1]);
        if tokens.is_empty() {
            return Err(parse_err(path, i + 1, "empty sentence"));
        }
        examples.push(StyleExample { tokens, style });
    }
    StyleCorpus::new(examples)
}

pub fn save_labeled(corpus: &StyleCorpus, path: &Path) -> Result<()> {
    let mut out = String::new();
    for e in &corpus.examples {
        out.push_str(e.style.name());
        out.push('\t');
        out.push_str(&e.tokens.join(" "));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a `#lang <src> <tgt>` header followed by `<src>\t<tgt>` lines.
pub fn load_parallel(path: &Path) -> Result<ParallelCorpus> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(path, 1, "missing `#lang` header"))?;
    let langs: Vec<&str> = header.split_whitespace().collect();
    if langs.len() != 3 || langs[0] != "#lang" {
        return Err(parse_err(path, 1, "expected `#lang <src-tag> <tgt-tag>`"));
    }
    let src: Lang = langs[1].parse().map_err(|e: Error| parse_err(path, 1, e.to_string()))?;
    let tgt: Lang = langs[2].parse().map_err(|e: Error| parse_err(path, 1, e.to_string()))?;
    let mut pairs = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(parse_err(path, i + 1, format!("expected 2 tab-separated fields, got {}", fields.len())));
        }
        let (s, t) = (tokenize(fields[0]), tokenize(fields[1]));
        if s.is_empty() || t.is_empty() {
            return Err(parse_err(path, i + 1, "empty sentence"));
        }
        pairs.push((s, t));
    }
    ParallelCorpus::new(src, tgt, pairs).map_err(|e| parse_err(path, 1, e.to_string()))
}

pub fn save_parallel(corpus: &ParallelCorpus, path: &Path) -> Result<()> {
    let mut out = format!("#lang {} {}\n", corpus.src_lang, corpus.tgt_lang);
    for (s, t) in &corpus.pairs {
        out.push_str(&s.join(" "));
        out.push('\t');
        out.push_str(&t.join(" "));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes `<line-index>\t<split-name>` for every example.
pub fn save_split_manifest(corpus: &StyleCorpus, path: &Path) -> Result<()> {
    let splits = corpus
        .splits()
        .ok_or_else(|| Error::InvalidArgument("corpus has no split assignment".into()))?;
    let mut out = String::new();
    for (i, s) in splits.iter().enumerate() {
        out.push_str(&format!("{i}\t{}\n", s.name()));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a manifest and attaches it to `corpus`.
pub fn load_split_manifest(corpus: StyleCorpus, path: &Path) -> Result<StyleCorpus> {
    let text = fs::read_to_string(path)?;
    let mut splits = vec![None; corpus.len()];
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(parse_err(path, i + 1, "expected `<line-index>\\t<split-name>`"));
        }
        let idx: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(path, i + 1, format!("bad line index `{}`", fields[0])))?;
        let split: Split = fields[1].parse().map_err(|e: Error| parse_err(path, i + 1, e.to_string()))?;
        let slot = splits
            .get_mut(idx)
            .ok_or_else(|| parse_err(path, i + 1, format!("line index {idx} out of range")))?;
        if slot.replace(split).is_some() {
            return Err(parse_err(path, i + 1, format!("line index {idx} assigned twice")));
        }
    }
    let splits = splits
        .into_iter()
        .enumerate()
        .map(|(i, s)| s.ok_or_else(|| parse_err(path, 0, format!("line index {i} has no split"))))
        .collect::<Result<Vec<_>>>()?;
    corpus.with_splits(splits)
}
