//! Automatic metrics: style accuracy, order-3 language-model perplexity,
//! BLEU, token accuracy; flat key-value reports; annotation-sheet export.

mod bleu;
mod human;
mod lm;
mod metrics;
mod pipeline;
mod report;

pub use bleu::bleu;
pub use human::{export_human_eval, HumanEvalSheet, SheetRow};
pub use lm::{perplexity, NGramLM, LM_BOS, LM_EOS, LM_UNK, ORDER};
pub use metrics::{exact_match_rate, token_accuracy};
pub use pipeline::{
    cycle_exact_match, cycle_token_accuracy, evaluate_mt, evaluate_transfer, run_cycles, CycleRun,
};
pub use report::{style_accuracy, EvalReport};
