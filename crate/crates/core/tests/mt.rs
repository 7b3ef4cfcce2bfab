mod common;

use mbst::corpus::{Lang, ParallelCorpus};
use mbst::mt::{train_many_to_one, train_one_to_many, MtConfig, MtSystems, MANIFEST_FILE};
use mbst::seq2seq::{LatentRep, TrainConfig};
use mbst::Error;

#[test]
fn averaging_matches_independent_encodings() {
    let (c, systems) = common::small_setup(3);
    let m2o = &systems.many_to_one;
    for (_, y1) in c.en_l1.pairs.iter().take(25) {
        for (_, y2) in c.en_l2.pairs.iter().take(4) {
            let z = m2o.encode_pivots(y1, y2).unwrap();
            let z1 = m2o.encode(y1).unwrap();
            let z2 = m2o.encode(y2).unwrap();
            for i in 0..z.dim() {
                let mean = (z1.z[i] + z2.z[i]) / 2.0;
                assert!((z.z[i] - mean).abs() <= 1e-12);
            }
            let swapped = m2o.encode_pivots(y2, y1).unwrap();
            assert_eq!(z, swapped);
        }
    }
}

#[test]
fn equal_pivots_give_the_single_encoding() {
    let (c, systems) = common::small_setup(4);
    for (_, y) in c.en_l1.pairs.iter().take(20) {
        let z = systems.many_to_one.encode_pivots(y, y).unwrap();
        assert_eq!(z, systems.many_to_one.encode(y).unwrap());
        assert_eq!(systems.many_to_one.bst_encode(y).unwrap(), systems.many_to_one.encode(y).unwrap());
    }
}

#[test]
fn toy_average() {
    let z1 = LatentRep::new(vec![1.0, 3.0]).unwrap();
    let z2 = LatentRep::new(vec![3.0, 1.0]).unwrap();
    assert_eq!(LatentRep::average(&z1, &z2).unwrap().z, vec![2.0, 2.0]);
    assert!(LatentRep::average(&z1, &LatentRep::new(vec![1.0]).unwrap()).is_err());
    assert!(LatentRep::new(vec![f64::NAN]).is_err());
}

#[test]
fn systems_round_trip_through_a_directory() {
    let (c, systems) = common::small_setup(5);
    let dir = tempfile::tempdir().unwrap();
    systems.save(dir.path()).unwrap();
    let manifest = std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
    assert!(manifest.contains("pivots = l1 l2"));
    assert!(manifest.contains("tag.l1 = <2l1>"));
    let back = MtSystems::load(dir.path()).unwrap();
    assert_eq!(back, systems);
    let y = &c.en_l1.pairs[0].1;
    assert_eq!(back.many_to_one.encode(y).unwrap(), systems.many_to_one.encode(y).unwrap());
}

#[test]
fn manifest_without_pivots_is_rejected() {
    let (_, systems) = common::small_setup(6);
    let dir = tempfile::tempdir().unwrap();
    systems.save(dir.path()).unwrap();
    let path = dir.path().join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).unwrap().replace("pivots = l1 l2\n", "");
    std::fs::write(&path, text).unwrap();
    assert!(MtSystems::load(dir.path()).is_err());
}

#[test]
fn training_is_deterministic() {
    let (c, _) = common::small_setup(7);
    let cfg = MtConfig {
        d_emb: 6,
        d_h: 8,
        train: TrainConfig {
            epochs: 1,
            seed: 1,
            ..TrainConfig::default()
        },
        ..MtConfig::default()
    };
    let a = MtSystems::train(&c.en_l1, &c.en_l2, &cfg).unwrap();
    let b = MtSystems::train(&c.en_l1, &c.en_l2, &cfg).unwrap();
    assert_eq!(a.1, b.1);
    assert_eq!(a.2, b.2);
    assert_eq!(a.0.one_to_many.model.to_bytes(), b.0.one_to_many.model.to_bytes());
    assert_eq!(a.0.many_to_one.model.to_bytes(), b.0.many_to_one.model.to_bytes());
}

#[test]
fn corpora_must_match_the_direction() {
    let (c, _) = common::small_setup(8);
    let cfg = MtConfig::default();
    assert!(train_one_to_many(&c.l1_en, &c.l2_en, &cfg).is_err());
    assert!(train_one_to_many(&c.en_l2, &c.en_l1, &cfg).is_err());
    assert!(train_many_to_one(&c.en_l1, &c.en_l2, &cfg).is_err());
    let empty = ParallelCorpus {
        src_lang: Lang::En,
        tgt_lang: Lang::L1,
        pairs: vec![],
    };
    assert!(train_one_to_many(&empty, &c.en_l2, &cfg).is_err());
}

#[test]
fn translating_into_the_source_language_is_an_error() {
    let (c, systems) = common::small_setup(9);
    let x = &c.en_l1.pairs[0].0;
    assert!(matches!(
        systems.one_to_many.translate(x, Lang::En),
        Err(Error::InvalidArgument(_))
    ));
    let empty: Vec<String> = vec![];
    assert!(systems.many_to_one.encode(&empty).is_err());
}
