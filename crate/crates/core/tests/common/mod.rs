#![allow(dead_code)]

pub mod lm_oracle;

use mbst::corpus::{synth_generate, SynthCorpora, SynthRequest, SyntheticLanguageSpec};
use mbst::mt::{MtConfig, MtSystems};
use mbst::seq2seq::TrainConfig;
use mbst::style::{ClassifierConfig, StyleClassifier};

/// Corpora plus briefly trained, narrow translation systems: enough to
/// exercise the plumbing, not to translate well.
pub fn small_setup(seed: u64) -> (SynthCorpora, MtSystems) {
    let req = SynthRequest {
        n_parallel: 300,
        n_parallel_test: 20,
        n_style: 200,
        parallel_len: (3, 8),
        style_len: (3, 6),
    };
    let c = synth_generate(&SyntheticLanguageSpec::new(seed), &req).unwrap();
    let cfg = MtConfig {
        d_emb: 8,
        d_h: 12,
        train: TrainConfig {
            epochs: 3,
            seed,
            ..TrainConfig::default()
        },
        ..MtConfig::default()
    };
    let (systems, _, _) = MtSystems::train(&c.en_l1, &c.en_l2, &cfg).unwrap();
    (c, systems)
}

pub fn untrained_classifier(systems: &MtSystems, seed: u64) -> StyleClassifier {
    let config = ClassifierConfig {
        vocab_size: systems.one_to_many.src_vocab.len(),
        d_emb: 8,
        filters: 6,
    };
    StyleClassifier::new(config, seed).unwrap()
}
