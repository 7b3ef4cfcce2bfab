mod common;

use mbst::autodiff::{grad_check, ParamSet, Tape};
use mbst::corpus::{Split, SplitFractions, Style, StyleExample, Tokens};
use mbst::seq2seq::{LatentRep, TrainConfig};
use mbst::style::{
    encode_sentence, feedback_finetune, generate_transfer_corpus, generator_loss, record_gen_loss, train_classifier,
    train_generators, train_on_items, ClassifierConfig, ClassifierInput, FinetuneConfig, GenItem, GeneratorConfig,
    LossWeights, Provenance, StyleCheckpoint, StyleGenerators, TransferVariant,
};

fn latent(d: usize, phase: f64) -> LatentRep {
    LatentRep::new((0..d).map(|i| 0.5 * (i as f64 + phase).sin()).collect()).unwrap()
}

fn gen_config(seed: u64, weights: LossWeights) -> GeneratorConfig {
    GeneratorConfig {
        d_emb: 8,
        weights,
        train: TrainConfig {
            epochs: 2,
            lr: 0.3,
            seed,
            ..TrainConfig::default()
        },
    }
}

fn texts(examples: &[&StyleExample]) -> Vec<Tokens> {
    examples.iter().map(|e| e.tokens.clone()).collect()
}

#[test]
fn objective_gradients_match_finite_differences() {
    let (_, systems) = common::small_setup(1);
    let clf = common::untrained_classifier(&systems, 2);
    let v = systems.one_to_many.src_vocab.len();
    let gens = StyleGenerators::new(4, systems.d_h(), v, 3).unwrap();
    let d = systems.d_h();
    for (z_cycle, lambda_f) in [(None, 0.0), (Some(latent(d, 2.0)), 0.7)] {
        let item = GenItem {
            ids: vec![9, 12, 30],
            style: Style::S2,
            z: latent(d, 0.0),
            z_cycle,
        };
        let weights = LossWeights {
            lambda_c: 1.3,
            lambda_f,
        };
        let gen = gens.get(Style::S2).clone();
        let (g, c, it) = (gen.clone(), clf.clone(), item.clone());
        let f = move |tape: &mut Tape, p: &ParamSet| Ok(record_gen_loss(tape, &g, p, &c, &it, weights)?.total);
        let report = grad_check(f, gen.params(), 1e-5).unwrap();
        assert!(report.max_rel_error < 1e-4, "{report:?}");
    }
}

#[test]
fn loss_terms_compose() {
    let (_, systems) = common::small_setup(2);
    let clf = common::untrained_classifier(&systems, 1);
    let gens = StyleGenerators::new(8, systems.d_h(), systems.one_to_many.src_vocab.len(), 5).unwrap();
    let d = systems.d_h();
    let plain = GenItem {
        ids: vec![10, 11, 12, 13],
        style: Style::S1,
        z: latent(d, 1.0),
        z_cycle: None,
    };
    let zero_c = LossWeights {
        lambda_c: 0.0,
        lambda_f: 1.0,
    };
    let l = generator_loss(&gens, &clf, &plain, zero_c).unwrap();
    assert_eq!(l.total.to_bits(), l.recon.to_bits());
    assert_eq!(l.feed, 0.0);

    let with_cycle = GenItem {
        z_cycle: Some(latent(d, 4.0)),
        ..plain.clone()
    };
    for (lc, lf) in [(1.0, 1.0), (0.25, 3.0), (2.0, 0.5)] {
        let w = LossWeights {
            lambda_c: lc,
            lambda_f: lf,
        };
        let l = generator_loss(&gens, &clf, &with_cycle, w).unwrap();
        assert!(l.composition_error() <= 1e-12, "{l:?}");
        assert!(l.feed >= 0.0);
    }
    let w = LossWeights {
        lambda_c: 0.8,
        lambda_f: 0.0,
    };
    let eq5 = generator_loss(&gens, &clf, &with_cycle, w).unwrap();
    let eq1 = generator_loss(&gens, &clf, &plain, w).unwrap();
    assert_eq!(eq5.total.to_bits(), eq1.total.to_bits());
    assert!(generator_loss(&gens, &clf, &plain, LossWeights { lambda_c: -1.0, lambda_f: 0.0 }).is_err());
}

#[test]
fn zero_feedback_weight_trains_exactly_like_the_base_objective() {
    let (_, systems) = common::small_setup(3);
    let clf = common::untrained_classifier(&systems, 1);
    let gens = StyleGenerators::new(8, systems.d_h(), systems.one_to_many.src_vocab.len(), 5).unwrap();
    let d = systems.d_h();
    let base: Vec<GenItem> = (0..12)
        .map(|i| GenItem {
            ids: vec![6 + i, 20 + i, 40 + i],
            style: if i % 2 == 0 { Style::S1 } else { Style::S2 },
            z: latent(d, i as f64),
            z_cycle: None,
        })
        .collect();
    let cycled: Vec<GenItem> = base
        .iter()
        .map(|it| GenItem {
            z_cycle: Some(latent(d, 7.0)),
            ..it.clone()
        })
        .collect();
    let w = LossWeights {
        lambda_c: 1.0,
        lambda_f: 0.0,
    };
    let tc = TrainConfig {
        epochs: 2,
        seed: 4,
        ..TrainConfig::default()
    };
    let run = |mut items: Vec<GenItem>| {
        let mut g = gens.clone();
        let log = train_on_items(&mut g, &clf, &mut items, w, &tc, |_, _, _| Ok(())).unwrap();
        (log.steps.iter().map(|s| s.total.to_bits()).collect::<Vec<_>>(), g)
    };
    let (a, ga) = run(base);
    let (b, gb) = run(cycled);
    assert_eq!(a, b);
    assert_eq!(ga.s1.to_bytes(), gb.s1.to_bytes());
    assert_eq!(ga.s2.to_bytes(), gb.s2.to_bytes());
}

#[test]
fn generator_training_keeps_the_classifier_frozen_and_is_seeded() {
    let (c, systems) = common::small_setup(4);
    let clf = common::untrained_classifier(&systems, 3);
    let before = clf.to_bytes();
    let style = c.style.split_corpus(SplitFractions::default(), 4).unwrap();
    let train = style.select(Some(Split::Train), None);
    let cfg = gen_config(9, LossWeights::default());
    let (g1, log1, _) = train_generators(&systems, &clf, TransferVariant::Mbst, &train, &cfg).unwrap();
    let (g2, log2, _) = train_generators(&systems, &clf, TransferVariant::Mbst, &train, &cfg).unwrap();
    assert_eq!(clf.to_bytes(), before);
    assert_eq!(log1, log2);
    assert_eq!(g1, g2);
    assert!(log1.steps.iter().all(|s| s.composition_error() <= 1e-12));
    assert!(train_generators(&systems, &clf, TransferVariant::MbstF, &train, &cfg).is_err());
}

#[test]
fn unweighted_training_is_auto_encoding_with_falling_loss() {
    let (c, systems) = common::small_setup(10);
    let clf = common::untrained_classifier(&systems, 2);
    let style = c.style.split_corpus(SplitFractions::default(), 10).unwrap();
    let train: Vec<&StyleExample> = style.select(Some(Split::Train), None).into_iter().take(30).collect();
    let mut cfg = gen_config(
        2,
        LossWeights {
            lambda_c: 0.0,
            lambda_f: 0.0,
        },
    );
    cfg.train.epochs = 15;
    let (_, log, _) = train_generators(&systems, &clf, TransferVariant::Mbst, &train, &cfg).unwrap();
    assert!(log.steps.iter().all(|s| s.total.to_bits() == s.recon.to_bits()));
    let losses = &log.epochs.epoch_losses;
    for w in losses.windows(2) {
        assert!(w[1] <= 1.05 * w[0], "{losses:?}");
    }
    assert!(losses.last().unwrap() < &losses[0]);
}

#[test]
fn feedback_finetune_logs_compose_and_checks_alignment() {
    let (c, systems) = common::small_setup(5);
    let clf = common::untrained_classifier(&systems, 3);
    let style = c.style.split_corpus(SplitFractions::default(), 5).unwrap();
    let train = style.select(Some(Split::Train), None);
    let mut cfg = gen_config(1, LossWeights::default());
    cfg.train.epochs = 8;
    let (mbst, _, _) = train_generators(&systems, &clf, TransferVariant::Mbst, &train, &cfg).unwrap();
    cfg.train.epochs = 2;
    let x1 = texts(&style.select(Some(Split::Train), Some(Style::S1)));
    let x2 = texts(&style.select(Some(Split::Train), Some(Style::S2)));
    let tc = generate_transfer_corpus(TransferVariant::Mbst, &mbst, &systems, &x1, &x2).unwrap();
    assert_eq!(tc.x12.len(), x1.len());
    assert_eq!(tc.x21.len(), x2.len());
    assert!(tc.flagged() < x1.len() + x2.len());
    let before = clf.to_bytes();
    for regenerate in [false, true] {
        let fcfg = FinetuneConfig {
            weights: LossWeights::default(),
            train: cfg.train,
            regenerate_each_epoch: regenerate,
        };
        let (tuned, log) = feedback_finetune(&mbst, &clf, &systems, &x1, &x2, &tc.x12, &tc.x21, &fcfg).unwrap();
        assert_ne!(tuned, mbst);
        assert!(log.steps.iter().all(|s| s.composition_error() <= 1e-12 && s.feed >= 0.0));
        assert!(log.steps.iter().any(|s| s.feed > 0.0));
    }
    assert_eq!(clf.to_bytes(), before);
    let fcfg = FinetuneConfig {
        weights: LossWeights::default(),
        train: cfg.train,
        regenerate_each_epoch: false,
    };
    assert!(feedback_finetune(&mbst, &clf, &systems, &x1[1..], &x2, &tc.x12, &tc.x21, &fcfg).is_err());
}

#[test]
fn transfer_is_deterministic_and_aligned() {
    let (c, systems) = common::small_setup(6);
    let clf = common::untrained_classifier(&systems, 3);
    let style = c.style.split_corpus(SplitFractions::default(), 6).unwrap();
    let train = style.select(Some(Split::Train), None);
    let (gens, _, _) = train_generators(&systems, &clf, TransferVariant::Bst, &train, &gen_config(2, LossWeights::default())).unwrap();
    let x1 = texts(&style.select(Some(Split::Test), Some(Style::S1)));
    let x2 = texts(&style.select(Some(Split::Test), Some(Style::S2)));
    let a = generate_transfer_corpus(TransferVariant::Bst, &gens, &systems, &x1, &x2).unwrap();
    let b = generate_transfer_corpus(TransferVariant::Bst, &gens, &systems, &x1, &x2).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.x12.len(), x1.len());
    for (x, t) in x1.iter().zip(&a.x12) {
        assert!(!t.tokens.is_empty());
        if t.flagged {
            assert_eq!(&t.tokens, x);
        }
    }
}

#[test]
fn variants_use_their_own_pivot_path() {
    let (c, systems) = common::small_setup(7);
    let x = &c.style.examples[0].tokens;
    let bst = encode_sentence(&systems, TransferVariant::Bst, x);
    let mbst = encode_sentence(&systems, TransferVariant::Mbst, x);
    let (Ok(bst), Ok(mbst)) = (bst, mbst) else {
        return;
    };
    let l1 = systems.one_to_many.translate(x, mbst::corpus::Lang::L1).unwrap();
    let l2 = systems.one_to_many.translate(x, mbst::corpus::Lang::L2).unwrap();
    assert_eq!(bst, systems.many_to_one.encode(&l1).unwrap());
    assert_eq!(mbst, systems.many_to_one.encode_pivots(&l1, &l2).unwrap());
    assert_eq!(encode_sentence(&systems, TransferVariant::MbstF, x).unwrap(), mbst);
}

#[test]
fn trained_classifier_separates_marker_styles() {
    let (c, systems) = common::small_setup(8);
    let vocab = &systems.one_to_many.src_vocab;
    let style = c.style.split_corpus(SplitFractions::default(), 8).unwrap();
    let mut train = style.select(Some(Split::Train), None);
    train.extend(style.select(Some(Split::ClassTrain), None));
    let config = ClassifierConfig {
        vocab_size: vocab.len(),
        d_emb: 16,
        filters: 16,
    };
    let tc = TrainConfig {
        epochs: 15,
        lr: 0.5,
        seed: 8,
        ..TrainConfig::default()
    };
    let (clf, dev_acc, _) = train_classifier(vocab, &train, &style.select(Some(Split::Dev), None), config, &tc).unwrap();
    assert!(dev_acc >= 0.99, "dev accuracy {dev_acc}");
    for e in style.select(Some(Split::Test), Some(Style::S1)) {
        let p = clf.classify(ClassifierInput::Ids(&vocab.encode(&e.tokens))).unwrap();
        assert!(p < 0.05, "{:?} -> {p}", e.tokens);
    }
    let one_class = style.select(Some(Split::Train), Some(Style::S1));
    assert!(train_classifier(vocab, &one_class, &one_class, config, &tc).is_err());
}

#[test]
fn checkpoints_round_trip_and_record_lineage() {
    let (c, systems) = common::small_setup(9);
    let clf = common::untrained_classifier(&systems, 3);
    let style = c.style.split_corpus(SplitFractions::default(), 9).unwrap();
    let train = style.select(Some(Split::Train), None);
    let (gens, _, _) = train_generators(&systems, &clf, TransferVariant::Mbst, &train, &gen_config(3, LossWeights::default())).unwrap();
    let prov = Provenance {
        variant: TransferVariant::Mbst,
        seed: 3,
        lambda_c: 1.0,
        lambda_f: 1.0,
        parent: None,
    };
    let ckpt = StyleCheckpoint::new(clf.clone(), gens.clone(), systems.clone(), prov.clone()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    ckpt.save(dir.path()).unwrap();
    let back = StyleCheckpoint::load(dir.path()).unwrap();
    assert_eq!(back, ckpt);
    assert_eq!(back.content_hash(), ckpt.content_hash());
    assert_eq!(ckpt.content_hash().len(), 64);

    let orphan = Provenance {
        variant: TransferVariant::MbstF,
        ..prov.clone()
    };
    assert!(StyleCheckpoint::new(clf.clone(), gens.clone(), systems.clone(), orphan).is_err());
    let child = Provenance {
        variant: TransferVariant::MbstF,
        parent: Some(ckpt.content_hash()),
        ..prov.clone()
    };
    let f = StyleCheckpoint::new(clf.clone(), gens.clone(), systems.clone(), child.clone()).unwrap();
    assert_ne!(f.content_hash(), ckpt.content_hash());
    assert_eq!(Provenance::parse(&child.to_text()).unwrap(), child);
    let adopted = Provenance {
        parent: Some("ab".into()),
        ..prov
    };
    assert!(adopted.validate().is_err());
}
