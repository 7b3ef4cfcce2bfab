//! Style classifier, latent-conditioned style generators, their training
//! objective, cycle-feedback fine-tuning, and transfer.

mod classifier;
mod generators;
mod pipeline;

pub use classifier::{train_classifier, BoundClassifier, ClassifierConfig, ClassifierInput, StyleClassifier};
pub use generators::{
    generator_loss, objective_grad_check, record_gen_loss, train_on_items, GenItem, GenLoss, GenLossVars, GenTrainLog, LossWeights,
    StyleGenerators, GEN_S1_FILE, GEN_S2_FILE,
};
pub use pipeline::{
    build_items, cycle, encode_sentence, feedback_finetune, generate_transfer_corpus, train_generators, transfer,
    FinetuneConfig, GeneratorConfig, Provenance, StyleCheckpoint, TransferCorpus, TransferVariant, Transferred,
    CLASSIFIER_FILE, MT_DIR, PROVENANCE_FILE,
};
