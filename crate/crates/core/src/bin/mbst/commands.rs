use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};

use mbst::autodiff::{check_primitive, PrimitiveKind};
use mbst::corpus::{
    load_labeled, load_parallel, load_split_manifest, save_labeled, save_parallel, save_split_manifest, synth_generate,
    Split, Style, StyleCorpus, StyleExample, SyntheticLanguageSpec, Tokens,
};
use mbst::eval::{evaluate_mt, evaluate_transfer, export_human_eval, NGramLM};
use mbst::mt::MtSystems;
use mbst::style::{
    feedback_finetune, generate_transfer_corpus, objective_grad_check, train_classifier, train_generators, Provenance,
    StyleCheckpoint, TransferVariant,
};

use crate::config::{ConfigError, RunConfig};
use crate::Common;

pub const EN_L1: &str = "en_l1.par";
pub const EN_L2: &str = "en_l2.par";
pub const TEST_EN_L1: &str = "test_en_l1.par";
pub const TEST_EN_L2: &str = "test_en_l2.par";
pub const STYLE: &str = "style.tsv";
pub const SPLITS: &str = "style.splits";
pub const RUN_CONF: &str = "run.conf";

const GRAD_EPS: f64 = 1e-5;
const GRAD_TOL: f64 = 1e-4;
const OBJECTIVE_TRIALS: u64 = 20;

#[derive(Debug)]
pub struct MissingInput(pub PathBuf);

impl fmt::Display for MissingInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "input not found: {}", self.0.display())
    }
}

impl std::error::Error for MissingInput {}

#[derive(Debug)]
pub struct OutputExists(pub PathBuf);

impl fmt::Display for OutputExists {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} already exists (pass --force to replace it)", self.0.display())
    }
}

impl std::error::Error for OutputExists {}

#[derive(Debug)]
pub struct CheckFailed(pub String);

impl fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "gradient check failed: {}", self.0)
    }
}

impl std::error::Error for CheckFailed {}

fn config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => {
            require(p)?;
            RunConfig::load(p)?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn require(path: &Path) -> Result<()> {
    if !path.exists() {
        return Err(MissingInput(path.to_path_buf()).into());
    }
    Ok(())
}

fn required_path(flag: Option<PathBuf>, from_config: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    let p = flag
        .or_else(|| from_config.clone())
        .ok_or_else(|| ConfigError(format!("`{name}` is required (flag --{name} or config key)")))?;
    require(&p)?;
    Ok(p)
}

/// Output staged at `<path>.partial` and renamed into place on success.
struct Staged {
    target: PathBuf,
    partial: PathBuf,
    force: bool,
}

impl Staged {
    fn new(target: &Path, force: bool) -> Result<Self> {
        if target.exists() && !force {
            return Err(OutputExists(target.to_path_buf()).into());
        }
        let mut partial = target.as_os_str().to_owned();
        partial.push(".partial");
        let partial = PathBuf::from(partial);
        remove(&partial)?;
        Ok(Staged {
            target: target.to_path_buf(),
            partial,
            force,
        })
    }

    fn commit(self) -> Result<()> {
        if self.force {
            remove(&self.target)?;
        }
        fs::rename(&self.partial, &self.target)
            .with_context(|| format!("moving {} into place", self.target.display()))?;
        info!("wrote {}", self.target.display());
        Ok(())
    }
}

impl Drop for Staged {
    fn drop(&mut self) {
        let _ = remove(&self.partial);
    }
}

fn remove(path: &Path) -> Result<()> {
    if path.is_dir() {
        fs::remove_dir_all(path)?;
    } else if path.exists() {
        fs::remove_file(path)?;
    }
    Ok(())
}

fn out_path(common: &Common) -> Result<PathBuf> {
    common
        .out
        .clone()
        .ok_or_else(|| ConfigError("--out is required".into()).into())
}

fn load_style(data: &Path) -> Result<StyleCorpus> {
    let style_path = data.join(STYLE);
    let splits_path = data.join(SPLITS);
    require(&style_path)?;
    require(&splits_path)?;
    Ok(load_split_manifest(load_labeled(&style_path)?, &splits_path)?)
}

fn texts(examples: &[&StyleExample]) -> Vec<Tokens> {
    examples.iter().map(|e| e.tokens.clone()).collect()
}

fn style_sets(corpus: &StyleCorpus, split: Split) -> (Vec<Tokens>, Vec<Tokens>) {
    (
        texts(&corpus.select(Some(split), Some(Style::S1))),
        texts(&corpus.select(Some(split), Some(Style::S2))),
    )
}

fn load_checkpoint(path: &Path) -> Result<StyleCheckpoint> {
    require(path)?;
    StyleCheckpoint::load(path).with_context(|| format!("loading checkpoint {}", path.display()))
}

pub fn synth_data(common: &Common) -> Result<()> {
    let cfg = config(common)?;
    cfg.validate()?;
    let out = Staged::new(&out_path(common)?, common.force)?;
    let spec = SyntheticLanguageSpec::new(cfg.language_seed);
    let corpora = synth_generate(&spec, &cfg.synth_request())?;
    let style = corpora.style.split_corpus(cfg.fractions()?, cfg.seed)?;
    let dir = &out.partial;
    fs::create_dir_all(dir)?;
    save_parallel(&corpora.en_l1, &dir.join(EN_L1))?;
    save_parallel(&corpora.en_l2, &dir.join(EN_L2))?;
    save_parallel(&corpora.held_out_en_l1, &dir.join(TEST_EN_L1))?;
    save_parallel(&corpora.held_out_en_l2, &dir.join(TEST_EN_L2))?;
    save_labeled(&style, &dir.join(STYLE))?;
    save_split_manifest(&style, &dir.join(SPLITS))?;
    fs::write(dir.join(RUN_CONF), cfg.to_text())?;
    info!(
        "{} parallel pairs per pivot, {} style sentences",
        corpora.en_l1.len(),
        style.len()
    );
    out.commit()
}

pub fn train_mt(common: &Common, data: Option<PathBuf>) -> Result<()> {
    let cfg = config(common)?;
    cfg.validate()?;
    let data = required_path(data, &cfg.data, "data")?;
    let out = Staged::new(&out_path(common)?, common.force)?;
    let (p1, p2) = (data.join(EN_L1), data.join(EN_L2));
    require(&p1)?;
    require(&p2)?;
    let en_l1 = load_parallel(&p1)?;
    let en_l2 = load_parallel(&p2)?;
    let (systems, log_o2m, log_m2o) = MtSystems::train(&en_l1, &en_l2, &cfg.mt_config())?;
    if let (Some(a), Some(b)) = (log_o2m.epoch_losses.last(), log_m2o.epoch_losses.last()) {
        info!("final losses: one-to-many {a:.4}, many-to-one {b:.4}");
    }
    systems.save(&out.partial)?;
    out.commit()
}

pub fn train_style(common: &Common, data: Option<PathBuf>, mt: Option<PathBuf>, variant: Option<String>) -> Result<()> {
    let mut cfg = config(common)?;
    if let Some(v) = variant {
        cfg.set("variant", &v)?;
        cfg.pivots = if cfg.variant.averages_pivots() { 2 } else { 1 };
    }
    cfg.validate()?;
    if cfg.variant == TransferVariant::MbstF {
        return Err(ConfigError("mbst_f checkpoints are made by finetune-feedback".into()).into());
    }
    let data = required_path(data, &cfg.data, "data")?;
    let mt = required_path(mt, &cfg.mt, "mt")?;
    let out = Staged::new(&out_path(common)?, common.force)?;
    let systems = MtSystems::load(&mt).with_context(|| format!("loading {}", mt.display()))?;
    let corpus = load_style(&data)?;
    let vocab = &systems.one_to_many.src_vocab;
    let (clf, dev_acc, _) = train_classifier(
        vocab,
        &corpus.select(Some(Split::ClassTrain), None),
        &corpus.select(Some(Split::Dev), None),
        cfg.classifier_config(vocab.len()),
        &cfg.classifier_train(),
    )?;
    info!("classifier dev accuracy {:.2}%", 100.0 * dev_acc);
    let (gens, _, skipped) = train_generators(
        &systems,
        &clf,
        cfg.variant,
        &corpus.select(Some(Split::Train), None),
        &cfg.generator_config(),
    )?;
    if skipped > 0 {
        warn!("{skipped} training sentences had an empty pivot translation");
    }
    let provenance = Provenance {
        variant: cfg.variant,
        seed: cfg.seed,
        lambda_c: cfg.lambda_c,
        lambda_f: cfg.lambda_f,
        parent: None,
    };
    let ckpt = StyleCheckpoint::new(clf, gens, systems, provenance)?;
    ckpt.save(&out.partial)?;
    out.commit()
}

pub fn finetune(common: &Common, data: Option<PathBuf>, parent: Option<PathBuf>) -> Result<()> {
    let mut cfg = config(common)?;
    cfg.variant = TransferVariant::MbstF;
    cfg.pivots = 2;
    if parent.is_some() {
        cfg.parent = parent;
    }
    cfg.validate()?;
    let parent_dir = required_path(None, &cfg.parent, "parent")?;
    let data = required_path(data, &cfg.data, "data")?;
    let out = Staged::new(&out_path(common)?, common.force)?;
    let base = load_checkpoint(&parent_dir)?;
    if base.variant() != TransferVariant::Mbst {
        return Err(ConfigError(format!("parent must be an mbst checkpoint, found {}", base.variant())).into());
    }
    let corpus = load_style(&data)?;
    let (x1, x2) = style_sets(&corpus, Split::Train);
    let before = generate_transfer_corpus(TransferVariant::Mbst, &base.generators, &base.systems, &x1, &x2)?;
    if before.flagged() > 0 {
        warn!("{} transfers fell back to copying", before.flagged());
    }
    let (gens, _) = feedback_finetune(
        &base.generators,
        &base.classifier,
        &base.systems,
        &x1,
        &x2,
        &before.x12,
        &before.x21,
        &cfg.finetune_config(),
    )?;
    let provenance = Provenance {
        variant: TransferVariant::MbstF,
        seed: cfg.seed,
        lambda_c: cfg.lambda_c,
        lambda_f: cfg.lambda_f,
        parent: Some(base.content_hash()),
    };
    let ckpt = StyleCheckpoint::new(base.classifier, gens, base.systems, provenance)?;
    ckpt.save(&out.partial)?;
    out.commit()
}

pub fn transfer(common: &Common, checkpoint: Option<PathBuf>, input: Option<PathBuf>) -> Result<()> {
    let cfg = config(common)?;
    cfg.validate()?;
    let ckpt_dir = required_path(checkpoint, &cfg.checkpoint, "checkpoint")?;
    let input = required_path(input, &cfg.input, "input")?;
    let out = Staged::new(&out_path(common)?, common.force)?;
    let ckpt = load_checkpoint(&ckpt_dir)?;
    let corpus = load_labeled(&input)?;
    let mut examples = Vec::with_capacity(corpus.len());
    let mut flagged = 0;
    for e in corpus.select(None, None) {
        let t = ckpt.transfer(&e.tokens, e.style)?;
        flagged += usize::from(t.flagged);
        examples.push(StyleExample {
            tokens: t.tokens,
            style: e.style.opposite(),
        });
    }
    if flagged > 0 {
        warn!("{flagged} of {} sentences were copied unchanged", examples.len());
    }
    save_labeled(&StyleCorpus::new(examples)?, &out.partial)?;
    out.commit()
}

pub fn evaluate(
    common: &Common,
    data: Option<PathBuf>,
    checkpoint: Option<PathBuf>,
    compare: Option<PathBuf>,
    sheet: Option<PathBuf>,
    samples: usize,
) -> Result<()> {
    let cfg = config(common)?;
    cfg.validate()?;
    let data = required_path(data, &cfg.data, "data")?;
    let ckpt_dir = required_path(checkpoint, &cfg.checkpoint, "checkpoint")?;
    if let Some(c) = &compare {
        require(c)?;
    }
    let out = Staged::new(&out_path(common)?, common.force)?;
    let sheet_out = match &sheet {
        Some(s) => {
            let mut key = s.as_os_str().to_owned();
            key.push(".key");
            Some((Staged::new(s, common.force)?, Staged::new(Path::new(&key), common.force)?))
        }
        None => None,
    };
    let ckpt = load_checkpoint(&ckpt_dir)?;
    let corpus = load_style(&data)?;
    let (t1, t2) = (data.join(TEST_EN_L1), data.join(TEST_EN_L2));
    require(&t1)?;
    require(&t2)?;
    let held = [load_parallel(&t1)?, load_parallel(&t2)?];

    let lm = NGramLM::train(&texts(&corpus.select(Some(Split::Train), None)))?;
    let (x1, x2) = style_sets(&corpus, Split::Test);
    let mut report = evaluate_transfer(&ckpt, &lm, &x1, &x2)?;
    let vocab = &ckpt.systems.one_to_many.src_vocab;
    let dev = corpus.select(Some(Split::Dev), None);
    report.set_percentage("classifier.dev_accuracy", 100.0 * ckpt.classifier.accuracy(vocab, &dev)?)?;
    evaluate_mt(&ckpt.systems, &[&held[0], &held[1]], &mut report)?;
    report.save(&out.partial)?;

    if let (Some(other), Some((sheet_stage, key_stage))) = (compare, sheet_out) {
        let other = load_checkpoint(&other)?;
        let pairs = |c: &StyleCheckpoint| -> Result<Vec<(Tokens, Tokens)>> {
            let t = generate_transfer_corpus(c.variant(), &c.generators, &c.systems, &x1, &x2)?;
            Ok(x1.iter().chain(&x2).cloned().zip(t.x12.into_iter().chain(t.x21).map(|t| t.tokens)).collect())
        };
        let (a, b) = (pairs(&ckpt)?, pairs(&other)?);
        let sheet = export_human_eval(&a, &b, samples.min(a.len()), cfg.seed)?;
        sheet.write(&sheet_stage.partial, &key_stage.partial)?;
        sheet_stage.commit()?;
        key_stage.commit()?;
    }
    out.commit()
}

pub fn grad_check(common: &Common, trials: u64) -> Result<()> {
    let cfg = config(common)?;
    if trials == 0 {
        bail!(ConfigError("--trials must be positive".into()));
    }
    let out = match &common.out {
        Some(p) => Some(Staged::new(p, common.force)?),
        None => None,
    };
    let mut lines = Vec::new();
    let mut failed = Vec::new();
    let mut record = |name: String, worst: f64| {
        let ok = worst < GRAD_TOL;
        if !ok {
            failed.push(name.clone());
        }
        lines.push(format!("{name}\t{worst:.3e}\t{}", if ok { "pass" } else { "fail" }));
    };
    for kind in PrimitiveKind::ALL {
        let mut worst = 0f64;
        for t in 0..trials {
            worst = worst.max(check_primitive(kind, cfg.seed.wrapping_add(t), GRAD_EPS)?.max_rel_error);
        }
        info!("{kind}: max relative error {worst:.3e}");
        record(kind.to_string(), worst);
    }
    for (name, feedback) in [("objective", false), ("objective_feedback", true)] {
        let mut worst = 0f64;
        for t in 0..trials.min(OBJECTIVE_TRIALS) {
            worst = worst.max(objective_grad_check(cfg.seed.wrapping_add(t), feedback, GRAD_EPS)?.max_rel_error);
        }
        info!("{name}: max relative error {worst:.3e}");
        record(name.to_string(), worst);
    }
    let text = format!("check\tmax_rel_error\tresult\n{}\n", lines.join("\n"));
    match out {
        Some(o) => {
            fs::write(&o.partial, text)?;
            o.commit()?;
        }
        None => print!("{text}"),
    }
    if !failed.is_empty() {
        return Err(CheckFailed(failed.join(", ")).into());
    }
    Ok(())
}
