mod common;

use common::lm_oracle::BruteForce;
use mbst::eval::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn corpus(lines: &[&str]) -> Vec<Vec<String>> {
    lines.iter().map(|l| l.split_whitespace().map(str::to_string).collect()).collect()
}

#[test]
fn perplexity_matches_brute_force_products() {
    let train = corpus(&[
        "the cat sat",
        "the dog sat",
        "a cat ran",
        "the cat ran home",
        "a dog sat home",
        "the bird",
        "cat cat dog",
    ]);
    let test = corpus(&["the cat sat home", "a bird ran", "zebra the dog"]);
    let lm = NGramLM::train(&train).unwrap();
    let oracle = BruteForce::new(&train);
    for data in [&train, &test] {
        let got = perplexity(&lm, data).unwrap();
        let want = oracle.perplexity(data);
        assert!(((got - want) / want).abs() < 1e-9, "{got} vs {want}");
        assert!(got >= 1.0);
    }
    assert!(lm.max_normalization_error() < 1e-9);
}

#[test]
fn three_sentence_toy_corpus() {
    let train = corpus(&["x y z", "x y", "y z z"]);
    let lm = NGramLM::train(&train).unwrap();
    let want = BruteForce::new(&train).perplexity(&train);
    let got = perplexity(&lm, &train).unwrap();
    assert!(((got - want) / want).abs() < 1e-9);
}

#[test]
fn training_text_beats_shuffled_text() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let words = ["w0", "w1", "w2", "w3", "w4", "w5"];
    let train: Vec<Vec<String>> = (0..60)
        .map(|i| (0..6).map(|k| words[(i + k) % 6].to_string()).collect())
        .collect();
    let lm = NGramLM::train(&train).unwrap();
    let own = perplexity(&lm, &train).unwrap();
    for _ in 0..5 {
        let shuffled: Vec<Vec<String>> = train
            .iter()
            .map(|s| {
                let mut s = s.clone();
                s.shuffle(&mut rng);
                s
            })
            .collect();
        assert!(own <= perplexity(&lm, &shuffled).unwrap());
    }
}

#[test]
fn bleu_hand_computed_example() {
    let h = corpus(&["the cat sat on the mat"]);
    let r = corpus(&["the cat sat on a mat"]);
    // precisions 5/6, 3/5, 2/4, 1/3; equal lengths so no brevity penalty
    let want = 100.0 * (5.0 / 6.0 * 3.0 / 5.0 * 2.0 / 4.0 * 1.0 / 3.0f64).powf(0.25);
    assert!((bleu(&h, &r).unwrap() - want).abs() < 1e-12);
    let short = corpus(&["the cat sat on"]);
    let long = corpus(&["the cat sat on the mat"]);
    let bp = (1.0 - 6.0 / 4.0f64).exp();
    assert!((bleu(&short, &long).unwrap() - 100.0 * bp).abs() < 1e-12);
    assert_eq!(bleu(&corpus(&["the cat sat"]), &corpus(&["the cat sat down"])).unwrap(), 0.0);
}

#[test]
fn annotation_sheet_is_seeded_and_invertible() {
    let n = 300;
    let orig: Vec<Vec<String>> = (0..n).map(|i| vec![format!("o{i}")]).collect();
    let a: Vec<_> = orig.iter().enumerate().map(|(i, o)| (o.clone(), vec![format!("a{i}")])).collect();
    let b: Vec<_> = orig.iter().enumerate().map(|(i, o)| (o.clone(), vec![format!("b{i}")])).collect();
    let sheet = export_human_eval(&a, &b, 200, 9).unwrap();
    assert_eq!(sheet.rows.len(), 200);
    let again = export_human_eval(&a, &b, 200, 9).unwrap();
    assert_eq!(sheet.sheet_text(), again.sheet_text());
    assert_eq!(sheet.key_text(), again.key_text());
    let back = HumanEvalSheet::reconstruct(&sheet.sheet_text(), &sheet.key_text()).unwrap();
    assert_eq!(back.len(), 200);
    for (i, oa, ob) in back {
        assert_eq!(oa, format!("a{i}"));
        assert_eq!(ob, format!("b{i}"));
    }
    assert!(sheet.rows.iter().any(|r| r.a_first) && sheet.rows.iter().any(|r| !r.a_first));
    assert!(export_human_eval(&a, &b[1..], 5, 0).is_err());
    assert!(export_human_eval(&a, &b, n + 1, 0).is_err());
}

proptest! {
    #[test]
    fn bleu_ignores_pair_order(perm_seed in 0u64..1000) {
        let h = corpus(&["a b c d e", "b c d e f g", "x y z a b", "c d e f"]);
        let r = corpus(&["a b c d f", "b c d e f", "x y z a b c", "c d e f"]);
        let base = bleu(&h, &r).unwrap();
        let mut idx: Vec<usize> = (0..4).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(perm_seed));
        let hp: Vec<_> = idx.iter().map(|&i| h[i].clone()).collect();
        let rp: Vec<_> = idx.iter().map(|&i| r[i].clone()).collect();
        prop_assert!((bleu(&hp, &rp).unwrap() - base).abs() < 1e-9);
        prop_assert!((0.0..=100.0).contains(&base));
    }

    #[test]
    fn lm_is_normalized_for_random_corpora(lines in prop::collection::vec(prop::collection::vec(0usize..5, 1..6), 1..8)) {
        let train: Vec<Vec<String>> = lines.iter().map(|l| l.iter().map(|i| format!("t{i}")).collect()).collect();
        let lm = NGramLM::train(&train).unwrap();
        prop_assert!(lm.max_normalization_error() < 1e-9);
    }
}
