use mbst::corpus::{synth_generate, Lang, SynthRequest, SyntheticLanguageSpec, Vocabulary};
use mbst::seq2seq::{
    max_decode_len, train_seq2seq, Condition, LatentRep, Seq2Seq, Seq2SeqConfig, TrainConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Pairs = Vec<(Vec<u32>, Vec<u32>)>;

fn cipher_pairs(n: usize, seed: u64, len: (usize, usize)) -> (Pairs, usize, usize) {
    let spec = SyntheticLanguageSpec::new(seed);
    let req = SynthRequest {
        n_parallel: n,
        n_parallel_test: 0,
        n_style: 2,
        parallel_len: len,
        style_len: (2, 2),
    };
    let c = synth_generate(&spec, &req).unwrap();
    let sv = Vocabulary::build(c.en_l1.pairs.iter().map(|p| &p.0), 512).unwrap();
    let tv = Vocabulary::build(c.en_l1.pairs.iter().map(|p| &p.1), 512).unwrap();
    assert_eq!(c.en_l1.tgt_lang, Lang::L1);
    let pairs = c.en_l1.pairs.iter().map(|(s, t)| (sv.encode(s), tv.encode(t))).collect();
    (pairs, sv.len(), tv.len())
}

fn attention_model(v_src: usize, v_tgt: usize, seed: u64) -> Seq2Seq {
    let cfg = Seq2SeqConfig {
        d_emb: Seq2SeqConfig::DEFAULT_D_EMB,
        d_h: Seq2SeqConfig::DEFAULT_D_H,
        v_src,
        v_tgt,
        attention: true,
    };
    Seq2Seq::new(cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

#[test]
fn untrained_loss_is_near_log_vocab() {
    let v = 120;
    let m = attention_model(v, v, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut total = 0.0;
    for _ in 0..100 {
        let len = rng.gen_range(2..8);
        let x: Vec<u32> = (0..len).map(|_| rng.gen_range(6..v as u32)).collect();
        let y: Vec<u32> = (0..len).map(|_| rng.gen_range(6..v as u32)).collect();
        total += m.teacher_forced_loss(Condition::Source(&x), &y).unwrap();
    }
    let mean = total / 100.0;
    let ln_v = (v as f64).ln();
    assert!((mean - ln_v).abs() / ln_v < 0.15, "mean {mean} vs ln V {ln_v}");
}

#[test]
fn fifty_sentence_cipher_corpus_is_learned() {
    let (pairs, vs, vt) = cipher_pairs(50, 5, (3, 8));
    let mut m = attention_model(vs, vt, 1);
    let tc = TrainConfig {
        epochs: 300,
        lr: 0.5,
        seed: 2,
        ..TrainConfig::default()
    };
    let log = train_seq2seq(&mut m, &pairs, &tc).unwrap();
    let first = log.epoch_losses[0];
    assert!((first - (vt as f64).ln()).abs() / (vt as f64).ln() < 0.15, "epoch 0 loss {first}");
    assert!(log.last().unwrap() < 0.1, "final loss {:?}", log.last());
}

#[test]
fn ten_sentence_corpus_overfits_and_decodes() {
    let (pairs, vs, vt) = cipher_pairs(10, 9, (3, 6));
    let mut m = attention_model(vs, vt, 4);
    let tc = TrainConfig {
        epochs: 500,
        lr: 0.5,
        seed: 4,
        ..TrainConfig::default()
    };
    let log = train_seq2seq(&mut m, &pairs, &tc).unwrap();
    assert!(log.last().unwrap() < 0.05, "final loss {:?}", log.last());
    for (x, y) in &pairs {
        assert_eq!(&m.greedy_decode(Condition::Source(x), max_decode_len(x.len())).unwrap(), y);
    }
}

#[test]
fn training_is_deterministic() {
    let (pairs, vs, vt) = cipher_pairs(20, 1, (3, 6));
    let tc = TrainConfig {
        epochs: 3,
        seed: 8,
        ..TrainConfig::default()
    };
    let run = || {
        let mut m = attention_model(vs, vt, 0);
        let log = train_seq2seq(&mut m, &pairs, &tc).unwrap();
        (log, m.to_bytes())
    };
    assert_eq!(run(), run());
}

#[test]
fn attention_weights_are_a_simplex_at_every_step() {
    let (pairs, vs, vt) = cipher_pairs(5, 2, (4, 9));
    let m = attention_model(vs, vt, 6);
    for (x, _) in &pairs {
        let (_, weights) = m.greedy_decode_with_attention(Condition::Source(x), 6).unwrap();
        assert!(!weights.is_empty());
        for w in weights {
            assert_eq!(w.len(), x.len() + 1);
            assert!(w.iter().all(|&p| p >= 0.0));
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn latent_decoding_depends_only_on_z() {
    let cfg = Seq2SeqConfig {
        d_emb: 8,
        d_h: 12,
        v_src: 0,
        v_tgt: 40,
        attention: false,
    };
    let m = Seq2Seq::new(cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let z = LatentRep::new((0..12).map(|i| (i as f64 * 0.3).sin()).collect()).unwrap();
    let same = LatentRep::average(&z, &z).unwrap();
    let a = m.greedy_decode(Condition::Latent(&z), 10).unwrap();
    assert_eq!(a, m.greedy_decode(Condition::Latent(&same), 10).unwrap());
    let y = [7, 8, 9];
    assert_eq!(
        m.teacher_forced_loss(Condition::Latent(&z), &y).unwrap().to_bits(),
        m.teacher_forced_loss(Condition::Latent(&same), &y).unwrap().to_bits()
    );
}

#[test]
fn encodings_have_fixed_width_and_eos_row() {
    let m = attention_model(50, 50, 0);
    for len in [3usize, 9] {
        let x: Vec<u32> = (0..len as u32).map(|i| 6 + i).collect();
        let enc = m.encode(&x).unwrap();
        assert_eq!(enc.final_state.len(), Seq2SeqConfig::DEFAULT_D_H);
        assert_eq!(enc.len(), len + 1);
        assert_eq!(enc, m.encode(&x).unwrap());
    }
}
