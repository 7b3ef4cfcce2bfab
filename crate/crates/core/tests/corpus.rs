use mbst::corpus::*;
use proptest::prelude::*;

fn spec() -> SyntheticLanguageSpec {
    SyntheticLanguageSpec::new(17)
}

#[test]
fn marker_rule_labels_every_generated_style_sentence() {
    let s = spec();
    let req = SynthRequest {
        n_parallel: 5,
        n_parallel_test: 0,
        n_style: 1000,
        parallel_len: (3, 12),
        style_len: (3, 12),
    };
    let c = synth_generate(&s, &req).unwrap();
    assert_eq!(c.style.len(), 1000);
    let mut per_style = [0, 0];
    for e in &c.style.examples {
        assert_eq!(s.detect_style(&e.tokens), Some(e.style), "{:?}", e.tokens);
        assert!((3..=12).contains(&e.tokens.len()));
        per_style[e.style.class()] += 1;
    }
    assert_eq!(per_style, [500, 500]);
}

#[test]
fn parallel_pairs_follow_the_cipher() {
    let s = spec();
    let req = SynthRequest {
        n_parallel: 200,
        n_parallel_test: 50,
        n_style: 2,
        parallel_len: (1, 12),
        style_len: (1, 12),
    };
    let c = synth_generate(&s, &req).unwrap();
    for (corpus, lang) in [(&c.en_l1, Lang::L1), (&c.en_l2, Lang::L2), (&c.held_out_en_l1, Lang::L1)] {
        for (x, y) in &corpus.pairs {
            assert_eq!(&s.oracle_translate(x, lang).unwrap(), y);
        }
    }
    assert_eq!(c.l1_en, c.en_l1.reversed());
    assert_eq!(c.held_out_en_l2.len(), 50);
}

#[test]
fn pivot_alphabets_are_disjoint() {
    let s = spec();
    let l1: std::collections::HashSet<_> = s.cipher(Lang::L1).unwrap().forward.iter().cloned().collect();
    let l2 = &s.cipher(Lang::L2).unwrap().forward;
    assert!(l2.iter().all(|t| !l1.contains(t)));
    assert_eq!(l1.len(), s.base_tokens().len());
}

#[test]
fn generated_corpora_survive_files() {
    let dir = tempfile::tempdir().unwrap();
    let s = spec();
    let req = SynthRequest {
        n_parallel: 30,
        n_parallel_test: 0,
        n_style: 40,
        parallel_len: (2, 6),
        style_len: (2, 6),
    };
    let c = synth_generate(&s, &req).unwrap();
    let p = dir.path().join("en_l1.par");
    save_parallel(&c.en_l1, &p).unwrap();
    assert_eq!(load_parallel(&p).unwrap(), c.en_l1);
    let p = dir.path().join("style.tsv");
    save_labeled(&c.style, &p).unwrap();
    assert_eq!(load_labeled(&p).unwrap(), c.style);
}

#[test]
fn vocabulary_covers_the_synthetic_source_language() {
    let s = spec();
    let v = Vocabulary::build([s.base_tokens()], 512).unwrap();
    assert_eq!(v.len(), NUM_RESERVED + 216);
    assert!(v.len() <= v.max_size());
}

proptest! {
    #[test]
    fn oracle_round_trip(ids in prop::collection::vec(0usize..216, 1..15), pivot in 0usize..2) {
        let s = spec();
        let base = s.base_tokens();
        let x: Vec<String> = ids.iter().map(|&i| base[i].clone()).collect();
        let lang = Lang::PIVOTS[pivot];
        let y = s.oracle_translate(&x, lang).unwrap();
        prop_assert_eq!(y.len(), x.len());
        prop_assert_eq!(s.oracle_back_translate(&y, lang).unwrap(), x);
    }

    #[test]
    fn vocabulary_encode_decode(words in prop::collection::vec("[a-e]{1,3}", 1..30)) {
        let v = Vocabulary::build([words.clone()], 64).unwrap();
        for id in 0..v.len() as u32 {
            prop_assert_eq!(v.encode(&v.decode(&[id])), vec![id]);
        }
        prop_assert_eq!(v.decode(&v.encode(&words)), words);
        prop_assert!(v.len() <= 64);
    }

    #[test]
    fn splits_partition_and_keep_both_styles(seed in 0u64..50) {
        let s = spec();
        let req = SynthRequest { n_parallel: 1, n_parallel_test: 0, n_style: 200, parallel_len: (2, 5), style_len: (2, 5) };
        let c = synth_generate(&s, &req).unwrap().style.split_corpus(SplitFractions::default(), seed).unwrap();
        let mut total = 0;
        for split in Split::ALL {
            for style in [Style::S1, Style::S2] {
                let n = c.select(Some(split), Some(style)).len();
                prop_assert!(n > 0);
                total += n;
            }
        }
        prop_assert_eq!(total, 200);
    }
}
