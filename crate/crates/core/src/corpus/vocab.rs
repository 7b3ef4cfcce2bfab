use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const PAD: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;
pub const UNK: u32 = 3;
pub const TAG_L1: u32 = 4;
pub const TAG_L2: u32 = 5;

/// Tokens with fixed ids `0..6` in every vocabulary.
pub const RESERVED: [&str; 6] = ["<pad>", "<s>", "</s>", "<unk>", "<2l1>", "<2l2>"];

pub const NUM_RESERVED: usize = RESERVED.len();

/// Bidirectional token/id map. Out-of-vocabulary tokens encode to [`UNK`].
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    max_size: usize,
}

/// An encoded sentence: ids without BOS/EOS, plus the text it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    pub ids: Vec<u32>,
    pub text: String,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

impl Vocabulary {
    fn reserved_only(max_size: usize) -> Self {
        let tokens: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            tokens,
            index,
            max_size,
        }
    }

    /// Keeps the most frequent tokens up to `max_size` entries (reserved ones
    /// included); ties go to the token seen first.
    pub fn build<I, S, T>(sentences: I, max_size: usize) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: IntoIterator<Item = T>,
        T: AsRef<str>,
    {
        if max_size <= NUM_RESERVED {
            return Err(Error::InvalidArgument(format!(
                "max_size must exceed the {NUM_RESERVED} reserved tokens, got {max_size}"
            )));
        }
        // token -> (count, first occurrence)
        let mut counts: HashMap<String, (usize, usize)> = HashMap::new();
        let mut position = 0usize;
        for sentence in sentences {
            for tok in sentence {
                let tok = tok.as_ref();
                let entry = counts.entry(tok.to_string()).or_insert((0, position));
                entry.0 += 1;
                position += 1;
            }
        }
        if position == 0 {
            return Err(Error::Empty("vocabulary input stream"));
        }
        let mut ranked: Vec<(String, usize, usize)> = counts
            .into_iter()
            .filter(|(t, _)| !RESERVED.contains(&t.as_str()))
            .map(|(t, (c, first))| (t, c, first))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));

        let mut vocab = Self::reserved_only(max_size);
        for (tok, _, _) in ranked.into_iter().take(max_size - NUM_RESERVED) {
            vocab.index.insert(tok.clone(), vocab.tokens.len() as u32);
            vocab.tokens.push(tok);
        }
        Ok(vocab)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn is_reserved(id: u32) -> bool {
        (id as usize) < NUM_RESERVED
    }

    pub fn encode<T: AsRef<str>>(&self, tokens: &[T]) -> Vec<u32> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    pub fn decode(&self, ids: &[u32]) -> Vec<String> {
        ids.iter()
            .map(|&i| self.token(i).unwrap_or(RESERVED[UNK as usize]).to_string())
            .collect()
    }

    pub fn encode_sentence<T: AsRef<str>>(&self, tokens: &[T]) -> Result<Sentence> {
        if tokens.is_empty() {
            return Err(Error::Empty("sentence"));
        }
        let text = tokens.iter().map(|t| t.as_ref()).collect::<Vec<_>>().join(" ");
        Ok(Sentence {
            ids: self.encode(tokens),
            text,
        })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// One token per line, in id order; the first line records `max_size`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = format!("#max_size {}\n", self.max_size);
        for t in &self.tokens {
            out.push_str(t);
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let source_name = path.display().to_string();
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let max_size = header
            .strip_prefix("#max_size ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Parse {
                source_name: source_name.clone(),
                line: 1,
                msg: "expected `#max_size N` header".into(),
            })?;
        let mut vocab = Self::reserved_only(max_size);
        for (i, line) in lines.enumerate() {
            if i < NUM_RESERVED {
                if line != RESERVED[i] {
                    return Err(Error::Parse {
                        source_name,
                        line: i + 2,
                        msg: format!("reserved token {} must be `{}`", i, RESERVED[i]),
                    });
                }
                continue;
            }
            if vocab.index.contains_key(line) {
                return Err(Error::Parse {
                    source_name,
                    line: i + 2,
                    msg: format!("duplicate token `{line}`"),
                });
            }
            vocab.index.insert(line.to_string(), vocab.tokens.len() as u32);
            vocab.tokens.push(line.to_string());
        }
        Ok(vocab)
    }
}
