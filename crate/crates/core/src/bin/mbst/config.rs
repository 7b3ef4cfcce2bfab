use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use mbst::corpus::{SplitFractions, SynthRequest};
use mbst::mt::MtConfig;
use mbst::seq2seq::TrainConfig;
use mbst::style::{ClassifierConfig, FinetuneConfig, GeneratorConfig, LossWeights, TransferVariant};

/// A configuration file or value that failed validation.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Every tunable of the pipeline. Serialized as `key = value` lines.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub language_seed: u64,
    pub n_parallel: usize,
    pub n_parallel_test: usize,
    pub n_style: usize,
    pub parallel_len: (usize, usize),
    pub style_len: (usize, usize),
    pub split: [f64; 4],
    pub max_vocab: usize,
    pub d_emb: usize,
    pub d_h: usize,
    pub filters: usize,
    pub mt_epochs: usize,
    pub mt_lr: f64,
    pub mt_lr_decay: f64,
    pub clf_epochs: usize,
    pub clf_lr: f64,
    pub clf_weight_decay: f64,
    pub gen_epochs: usize,
    pub gen_lr: f64,
    pub gen_lr_decay: f64,
    pub ft_epochs: usize,
    pub ft_lr: f64,
    pub ft_regenerate: bool,
    pub clip_norm: f64,
    pub lambda_c: f64,
    pub lambda_f: f64,
    pub variant: TransferVariant,
    pub pivots: usize,
    pub data: Option<PathBuf>,
    pub mt: Option<PathBuf>,
    pub parent: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub input: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let synth = SynthRequest::default();
        RunConfig {
            seed: 1,
            language_seed: 1,
            n_parallel: synth.n_parallel,
            n_parallel_test: synth.n_parallel_test,
            n_style: synth.n_style,
            parallel_len: synth.parallel_len,
            style_len: synth.style_len,
            split: SplitFractions::default().as_array(),
            max_vocab: 512,
            d_emb: 32,
            d_h: 64,
            filters: 16,
            mt_epochs: 12,
            mt_lr: 0.5,
            mt_lr_decay: 0.9,
            clf_epochs: 10,
            clf_lr: 0.5,
            clf_weight_decay: 0.001,
            gen_epochs: 20,
            gen_lr: 0.3,
            gen_lr_decay: 0.93,
            ft_epochs: 8,
            ft_lr: 0.15,
            ft_regenerate: true,
            clip_norm: 5.0,
            lambda_c: 1.0,
            lambda_f: 1.0,
            variant: TransferVariant::Mbst,
            pivots: 2,
            data: None,
            mt: None,
            parent: None,
            checkpoint: None,
            input: None,
        }
    }
}

const SPLIT_KEYS: [&str; 4] = ["split.train", "split.dev", "split.test", "split.classtrain"];

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| bad(format!("`{key}`: cannot parse `{v}`")))
}

fn parse_range(key: &str, v: &str) -> Result<(usize, usize), ConfigError> {
    let (a, b) = v
        .split_once(',')
        .ok_or_else(|| bad(format!("`{key}`: expected `min,max`, got `{v}`")))?;
    Ok((parse_num(key, a.trim())?, parse_num(key, b.trim())?))
}

fn path_text(p: &Option<PathBuf>) -> String {
    p.as_ref().map_or_else(String::new, |p| p.display().to_string())
}

fn parse_path(v: &str) -> Option<PathBuf> {
    (!v.is_empty()).then(|| PathBuf::from(v))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        match key {
            "seed" => self.seed = parse_num(key, v)?,
            "language_seed" => self.language_seed = parse_num(key, v)?,
            "n_parallel" => self.n_parallel = parse_num(key, v)?,
            "n_parallel_test" => self.n_parallel_test = parse_num(key, v)?,
            "n_style" => self.n_style = parse_num(key, v)?,
            "parallel_len" => self.parallel_len = parse_range(key, v)?,
            "style_len" => self.style_len = parse_range(key, v)?,
            "max_vocab" => self.max_vocab = parse_num(key, v)?,
            "d_emb" => self.d_emb = parse_num(key, v)?,
            "d_h" => self.d_h = parse_num(key, v)?,
            "filters" => self.filters = parse_num(key, v)?,
            "mt.epochs" => self.mt_epochs = parse_num(key, v)?,
            "mt.lr" => self.mt_lr = parse_num(key, v)?,
            "mt.lr_decay" => self.mt_lr_decay = parse_num(key, v)?,
            "classifier.epochs" => self.clf_epochs = parse_num(key, v)?,
            "classifier.lr" => self.clf_lr = parse_num(key, v)?,
            "classifier.weight_decay" => self.clf_weight_decay = parse_num(key, v)?,
            "generator.epochs" => self.gen_epochs = parse_num(key, v)?,
            "generator.lr" => self.gen_lr = parse_num(key, v)?,
            "generator.lr_decay" => self.gen_lr_decay = parse_num(key, v)?,
            "finetune.epochs" => self.ft_epochs = parse_num(key, v)?,
            "finetune.lr" => self.ft_lr = parse_num(key, v)?,
            "finetune.regenerate_each_epoch" => self.ft_regenerate = parse_num(key, v)?,
            "clip_norm" => self.clip_norm = parse_num(key, v)?,
            "lambda_c" => self.lambda_c = parse_num(key, v)?,
            "lambda_f" => self.lambda_f = parse_num(key, v)?,
            "variant" => self.variant = v.parse().map_err(|e: mbst::Error| bad(e.to_string()))?,
            "pivots" => self.pivots = parse_num(key, v)?,
            "data" => self.data = parse_path(v),
            "mt" => self.mt = parse_path(v),
            "parent" => self.parent = parse_path(v),
            "checkpoint" => self.checkpoint = parse_path(v),
            "input" => self.input = parse_path(v),
            _ => match SPLIT_KEYS.iter().position(|k| *k == key) {
                Some(i) => self.split[i] = parse_num(key, v)?,
                None => return Err(bad(format!("unknown key `{key}`"))),
            },
        }
        Ok(())
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        let range = |r: (usize, usize)| format!("{},{}", r.0, r.1);
        let mut e = vec![
            ("seed", self.seed.to_string()),
            ("language_seed", self.language_seed.to_string()),
            ("n_parallel", self.n_parallel.to_string()),
            ("n_parallel_test", self.n_parallel_test.to_string()),
            ("n_style", self.n_style.to_string()),
            ("parallel_len", range(self.parallel_len)),
            ("style_len", range(self.style_len)),
        ];
        for (k, v) in SPLIT_KEYS.iter().zip(self.split) {
            e.push((k, format!("{v:?}")));
        }
        e.extend([
            ("max_vocab", self.max_vocab.to_string()),
            ("d_emb", self.d_emb.to_string()),
            ("d_h", self.d_h.to_string()),
            ("filters", self.filters.to_string()),
            ("mt.epochs", self.mt_epochs.to_string()),
            ("mt.lr", format!("{:?}", self.mt_lr)),
            ("mt.lr_decay", format!("{:?}", self.mt_lr_decay)),
            ("classifier.epochs", self.clf_epochs.to_string()),
            ("classifier.lr", format!("{:?}", self.clf_lr)),
            ("classifier.weight_decay", format!("{:?}", self.clf_weight_decay)),
            ("generator.epochs", self.gen_epochs.to_string()),
            ("generator.lr", format!("{:?}", self.gen_lr)),
            ("generator.lr_decay", format!("{:?}", self.gen_lr_decay)),
            ("finetune.epochs", self.ft_epochs.to_string()),
            ("finetune.lr", format!("{:?}", self.ft_lr)),
            ("finetune.regenerate_each_epoch", self.ft_regenerate.to_string()),
            ("clip_norm", format!("{:?}", self.clip_norm)),
            ("lambda_c", format!("{:?}", self.lambda_c)),
            ("lambda_f", format!("{:?}", self.lambda_f)),
            ("variant", self.variant.name().to_string()),
            ("pivots", self.pivots.to_string()),
            ("data", path_text(&self.data)),
            ("mt", path_text(&self.mt)),
            ("parent", path_text(&self.parent)),
            ("checkpoint", path_text(&self.checkpoint)),
            ("input", path_text(&self.input)),
        ]);
        e
    }

    pub fn to_text(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Parses `key = value` lines over the defaults. Blank lines and `#`
    /// comments are ignored.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut c = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: expected `key = value`", i + 1)))?;
            c.set(k.trim(), v.trim()).map_err(|e| bad(format!("line {}: {}", i + 1, e.0)))?;
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| anyhow::Error::new(e).context(format!("reading {}", path.display())))?;
        Ok(Self::parse(&text)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let counts = [
            ("n_parallel", self.n_parallel),
            ("n_parallel_test", self.n_parallel_test),
            ("n_style", self.n_style),
            ("max_vocab", self.max_vocab),
            ("d_emb", self.d_emb),
            ("d_h", self.d_h),
            ("filters", self.filters),
            ("mt.epochs", self.mt_epochs),
            ("classifier.epochs", self.clf_epochs),
            ("generator.epochs", self.gen_epochs),
            ("finetune.epochs", self.ft_epochs),
        ];
        for (k, v) in counts {
            if v == 0 {
                return Err(bad(format!("`{k}` must be positive")));
            }
        }
        let rates = [
            ("mt.lr", self.mt_lr),
            ("classifier.lr", self.clf_lr),
            ("generator.lr", self.gen_lr),
            ("finetune.lr", self.ft_lr),
            ("clip_norm", self.clip_norm),
        ];
        for (k, v) in rates {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(format!("`{k}` must be positive, got {v}")));
            }
        }
        if !(self.clf_weight_decay >= 0.0 && self.clf_weight_decay * self.clf_lr < 1.0) {
            return Err(bad(format!(
                "`classifier.weight_decay` must be non-negative with lr * decay < 1, got {}",
                self.clf_weight_decay
            )));
        }
        for (k, v) in [("mt.lr_decay", self.mt_lr_decay), ("generator.lr_decay", self.gen_lr_decay)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(bad(format!("`{k}` must lie in (0, 1], got {v}")));
            }
        }
        for (k, (lo, hi)) in [("parallel_len", self.parallel_len), ("style_len", self.style_len)] {
            if lo == 0 || lo > hi {
                return Err(bad(format!("`{k}` must satisfy 1 <= min <= max")));
            }
        }
        self.fractions()?;
        self.weights().validate().map_err(|e| bad(e.to_string()))?;
        let expected = if self.variant.averages_pivots() { 2 } else { 1 };
        if self.pivots != expected {
            return Err(bad(format!(
                "variant {} uses {expected} pivot(s), but `pivots` = {}",
                self.variant, self.pivots
            )));
        }
        if self.variant == TransferVariant::MbstF && self.parent.is_none() {
            return Err(bad("variant mbst_f requires a parent mbst checkpoint (`parent`)"));
        }
        Ok(())
    }

    pub fn fractions(&self) -> Result<SplitFractions, ConfigError> {
        let [a, b, c, d] = self.split;
        SplitFractions::new(a, b, c, d).map_err(|e| bad(e.to_string()))
    }

    pub fn synth_request(&self) -> SynthRequest {
        SynthRequest {
            n_parallel: self.n_parallel,
            n_parallel_test: self.n_parallel_test,
            n_style: self.n_style,
            parallel_len: self.parallel_len,
            style_len: self.style_len,
        }
    }

    fn train(&self, epochs: usize, lr: f64, lr_decay: f64) -> TrainConfig {
        TrainConfig {
            epochs,
            lr,
            lr_decay,
            clip_norm: self.clip_norm,
            weight_decay: 0.0,
            seed: self.seed,
        }
    }

    pub fn mt_config(&self) -> MtConfig {
        MtConfig {
            d_emb: self.d_emb,
            d_h: self.d_h,
            max_vocab: self.max_vocab,
            train: self.train(self.mt_epochs, self.mt_lr, self.mt_lr_decay),
        }
    }

    pub fn classifier_config(&self, vocab_size: usize) -> ClassifierConfig {
        ClassifierConfig {
            vocab_size,
            d_emb: self.d_emb,
            filters: self.filters,
        }
    }

    pub fn classifier_train(&self) -> TrainConfig {
        TrainConfig {
            weight_decay: self.clf_weight_decay,
            ..self.train(self.clf_epochs, self.clf_lr, 1.0)
        }
    }

    pub fn weights(&self) -> LossWeights {
        LossWeights {
            lambda_c: self.lambda_c,
            lambda_f: self.lambda_f,
        }
    }

    pub fn generator_config(&self) -> GeneratorConfig {
        GeneratorConfig {
            d_emb: self.d_emb,
            weights: self.weights(),
            train: self.train(self.gen_epochs, self.gen_lr, self.gen_lr_decay),
        }
    }

    pub fn finetune_config(&self) -> FinetuneConfig {
        FinetuneConfig {
            weights: self.weights(),
            train: self.train(self.ft_epochs, self.ft_lr, 1.0),
            regenerate_each_epoch: self.ft_regenerate,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut c = RunConfig::default();
        c.seed = 42;
        c.lambda_c = 0.25;
        c.split = [0.6, 0.2, 0.1, 0.1];
        c.parent = Some(PathBuf::from("runs/mbst"));
        c.ft_regenerate = false;
        let text = c.to_text();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn comments_blank_lines_and_order_are_ignored() {
        let a = RunConfig::parse("# run\n\nlambda_f = 0.5  # weaker feedback\nseed = 3\n").unwrap();
        let b = RunConfig::parse("seed = 3\nlambda_f = 0.5\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.lambda_f, 0.5);
        assert_eq!(a.d_h, RunConfig::default().d_h);
    }

    #[test]
    fn bad_input_is_rejected() {
        assert!(RunConfig::parse("no_such_key = 1").is_err());
        assert!(RunConfig::parse("seed 1").is_err());
        assert!(RunConfig::parse("seed = -1").is_err());
        assert!(RunConfig::parse("style_len = 3").is_err());
    }

    #[test]
    fn validation() {
        assert!(RunConfig::default().validate().is_ok());
        let mut c = RunConfig::default();
        c.variant = TransferVariant::MbstF;
        assert!(c.validate().is_err());
        c.parent = Some(PathBuf::from("p"));
        assert!(c.validate().is_ok());
        c.pivots = 1;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.gen_lr = 0.0;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.split = [1.0, 0.0, 0.0, 0.0];
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.lambda_c = -1.0;
        assert!(c.validate().is_err());
    }
}
