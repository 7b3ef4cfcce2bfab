use crate::corpus::{Lang, ParallelCorpus, Style, Tokens};
use crate::error::{Error, Result};
use crate::mt::MtSystems;
use crate::style::{generate_transfer_corpus, StyleCheckpoint, StyleGenerators, TransferVariant, Transferred};

use super::bleu::bleu;
use super::lm::{perplexity, NGramLM};
use super::metrics::{exact_match_rate, token_accuracy};
use super::report::{style_accuracy, EvalReport};

/// Transfers of both style sets and their transfers back.
#[derive(Clone, Debug, PartialEq)]
pub struct CycleRun {
    pub x12: Vec<Transferred>,
    pub x21: Vec<Transferred>,
    /// `x1 -> s2 -> s1`; `None` when either step fell back to copying.
    pub x121: Vec<Option<Tokens>>,
    pub x212: Vec<Option<Tokens>>,
}

fn unflag(t: &Transferred) -> Option<&Tokens> {
    (!t.flagged).then_some(&t.tokens)
}

pub fn run_cycles(
    variant: TransferVariant,
    gens: &StyleGenerators,
    systems: &MtSystems,
    x1: &[Tokens],
    x2: &[Tokens],
) -> Result<CycleRun> {
    let there = generate_transfer_corpus(variant, gens, systems, x1, x2)?;
    let t12: Vec<Tokens> = there.x12.iter().map(|t| t.tokens.clone()).collect();
    let t21: Vec<Tokens> = there.x21.iter().map(|t| t.tokens.clone()).collect();
    let back = generate_transfer_corpus(variant, gens, systems, &t21, &t12)?;
    let join = |first: &[Transferred], second: &[Transferred]| -> Vec<Option<Tokens>> {
        first
            .iter()
            .zip(second)
            .map(|(a, b)| unflag(a).and(unflag(b)).cloned())
            .collect()
    };
    Ok(CycleRun {
        x121: join(&there.x12, &back.x21),
        x212: join(&there.x21, &back.x12),
        x12: there.x12,
        x21: there.x21,
    })
}

fn or_empty(cyc: &[Option<Tokens>]) -> Vec<Tokens> {
    cyc.iter().map(|c| c.clone().unwrap_or_default()).collect()
}

/// Fraction of originals reproduced exactly by their cycle; fallbacks count
/// as misses.
pub fn cycle_exact_match(originals: &[Tokens], cycled: &[Option<Tokens>]) -> Result<f64> {
    exact_match_rate(&or_empty(cycled), originals)
}

pub fn cycle_token_accuracy(originals: &[Tokens], cycled: &[Option<Tokens>]) -> Result<f64> {
    token_accuracy(&or_empty(cycled), originals)
}

/// Style accuracy, perplexity, cycle agreement and sample counts of a
/// checkpoint on held-out sentences of each style.
pub fn evaluate_transfer(ckpt: &StyleCheckpoint, lm: &NGramLM, x1: &[Tokens], x2: &[Tokens]) -> Result<EvalReport> {
    if x1.is_empty() || x2.is_empty() {
        return Err(Error::Empty("evaluation sentences"));
    }
    let run = run_cycles(ckpt.variant(), &ckpt.generators, &ckpt.systems, x1, x2)?;
    let vocab = &ckpt.systems.one_to_many.src_vocab;
    let mut r = EvalReport::new();
    let p = &ckpt.provenance;
    r.set_text("variant", p.variant.name())?;
    r.set_count("provenance.seed", p.seed as usize)?;
    r.set_value("provenance.lambda_c", p.lambda_c)?;
    r.set_value("provenance.lambda_f", p.lambda_f)?;
    r.set_text("provenance.parent", p.parent.as_deref().unwrap_or("none"))?;
    r.set_text("checkpoint.hash", &ckpt.content_hash())?;

    let labeled = |ts: &[Transferred], s: Style| -> Vec<(Tokens, Style)> { ts.iter().map(|t| (t.tokens.clone(), s)).collect() };
    let g12 = labeled(&run.x12, Style::S2);
    let g21 = labeled(&run.x21, Style::S1);
    let all: Vec<_> = g12.iter().chain(&g21).cloned().collect();
    r.set_percentage("style_accuracy.s1_to_s2", style_accuracy(&ckpt.classifier, vocab, &g12)?)?;
    r.set_percentage("style_accuracy.s2_to_s1", style_accuracy(&ckpt.classifier, vocab, &g21)?)?;
    r.set_percentage("style_accuracy.overall", style_accuracy(&ckpt.classifier, vocab, &all)?)?;

    let texts = |ts: &[Transferred]| -> Vec<Tokens> { ts.iter().map(|t| t.tokens.clone()).collect() };
    r.set_perplexity("perplexity.s1_to_s2", perplexity(lm, &texts(&run.x12))?)?;
    r.set_perplexity("perplexity.s2_to_s1", perplexity(lm, &texts(&run.x21))?)?;

    r.set_percentage("cycle.exact_match.s1", 100.0 * cycle_exact_match(x1, &run.x121)?)?;
    r.set_percentage("cycle.exact_match.s2", 100.0 * cycle_exact_match(x2, &run.x212)?)?;
    r.set_percentage("cycle.token_accuracy.s1", 100.0 * cycle_token_accuracy(x1, &run.x121)?)?;
    r.set_percentage("cycle.token_accuracy.s2", 100.0 * cycle_token_accuracy(x2, &run.x212)?)?;

    r.set_count("count.s1", x1.len())?;
    r.set_count("count.s2", x2.len())?;
    let flagged = run.x12.iter().chain(&run.x21).filter(|t| t.flagged).count();
    r.set_count("count.flagged", flagged)?;
    Ok(r)
}

/// BLEU of both translation systems on held-out source/pivot pairs, added
/// to `report` under `bleu.<src>_<tgt>`.
pub fn evaluate_mt(systems: &MtSystems, held_out: &[&ParallelCorpus], report: &mut EvalReport) -> Result<()> {
    for corpus in held_out {
        if corpus.src_lang != Lang::En || corpus.is_empty() {
            return Err(Error::InvalidArgument("held-out corpora must be nonempty source-to-pivot pairs".into()));
        }
        let lang = corpus.tgt_lang;
        let srcs: Vec<&Tokens> = corpus.pairs.iter().map(|p| &p.0).collect();
        let refs: Vec<Tokens> = corpus.pairs.iter().map(|p| p.1.clone()).collect();
        let hyps: Vec<Tokens> = srcs
            .iter()
            .map(|x| match systems.one_to_many.translate(x, lang) {
                Err(Error::EmptyTranslation) => Ok(Vec::new()),
                other => other,
            })
            .collect::<Result<_>>()?;
        let back: Vec<Tokens> = refs
            .iter()
            .map(|y| match systems.many_to_one.back_translate(y) {
                Err(Error::EmptyTranslation) => Ok(Vec::new()),
                other => other,
            })
            .collect::<Result<_>>()?;
        let originals: Vec<Tokens> = srcs.iter().map(|s| (*s).clone()).collect();
        report.set_percentage(&format!("bleu.en_{lang}"), bleu(&hyps, &refs)?)?;
        report.set_percentage(&format!("bleu.{lang}_en"), bleu(&back, &originals)?)?;
        report.set_percentage(&format!("token_accuracy.en_{lang}"), 100.0 * token_accuracy(&hyps, &refs)?)?;
        report.set_percentage(&format!("token_accuracy.{lang}_en"), 100.0 * token_accuracy(&back, &originals)?)?;
    }
    Ok(())
}
