mod common;

use std::io::Cursor;
use std::path::Path;

use nalgebra::DMatrix;
use normprobe::builder::{
    build_ppmi_space, count_cooccurrence, count_with_vocabulary, ppmi, truncated_svd, BuilderConfig,
    CooccurrenceCounts, CsrMatrix, SvdMethod, TextCorpus,
};
use normprobe::data::{align, CasePolicy, EmbeddingFormat, EmbeddingSpace, NormDataset};
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::jacobi_singular_values;

fn cfg(window: usize, min_count: u64, dim: usize) -> BuilderConfig {
    BuilderConfig {
        window,
        min_count,
        dim,
        ..Default::default()
    }
}

#[test]
fn hand_counted_window() {
    let (vocab, counts) = count_cooccurrence(&TextCorpus("a b c"), &cfg(1, 1, 1)).unwrap();
    assert_eq!(vocab.words.len(), 3);
    assert_eq!(counts.get("a", "b"), 1);
    assert_eq!(counts.get("b", "a"), 1);
    assert_eq!(counts.get("b", "c"), 1);
    assert_eq!(counts.get("c", "b"), 1);
    assert_eq!(counts.get("a", "c"), 0);
    assert_eq!(counts.total, 4);
}

#[test]
fn documents_reset_the_window() {
    let (_, counts) = count_cooccurrence(&TextCorpus("a b\n\nc d"), &cfg(5, 1, 1)).unwrap();
    assert_eq!(counts.get("b", "c"), 0);
    assert_eq!(counts.get("a", "b"), 1);
}

#[test]
fn empty_corpus_is_degenerate() {
    let err = count_cooccurrence(&TextCorpus(""), &cfg(2, 1, 1)).unwrap_err();
    assert!(err.is_degenerate(), "{err}");
    let err = count_cooccurrence(&TextCorpus("a b"), &cfg(2, 5, 1)).unwrap_err();
    assert!(err.is_degenerate(), "{err}");
}

fn counts_of(vocab: &[&str], dense: &[u64]) -> CooccurrenceCounts {
    let n = vocab.len();
    let triplets = dense
        .iter()
        .enumerate()
        .filter(|(_, c)| **c > 0)
        .map(|(k, c)| ((k / n) as u32, (k % n) as u32, *c))
        .collect();
    CooccurrenceCounts {
        vocab: vocab.iter().map(|s| s.to_string()).collect(),
        counts: CsrMatrix::from_triplets(n, n, triplets),
        total: dense.iter().sum(),
        window: 1,
    }
}

#[test]
fn ppmi_two_word_toy() {
    let m = ppmi(&counts_of(&["a", "b"], &[0, 2, 2, 0])).unwrap();
    assert!((m.get(0, 1).unwrap() - 2f64.ln()).abs() < 1e-12);
    assert_eq!(m.get(0, 0).unwrap_or(0.0), 0.0);
}

#[test]
fn ppmi_of_independent_counts_is_zero() {
    // Outer product of marginals (1, 2, 3).
    let dense = [1, 2, 3, 2, 4, 6, 3, 6, 9];
    let m = ppmi(&counts_of(&["a", "b", "c"], &dense)).unwrap();
    assert!(m.to_dense().iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn ppmi_matches_direct_formula() {
    let dense = [0, 3, 1, 3, 2, 5, 1, 5, 0];
    let m = ppmi(&counts_of(&["a", "b", "c"], &dense)).unwrap().to_dense();
    let total: u64 = dense.iter().sum();
    for i in 0..3 {
        for j in 0..3 {
            let c = dense[i * 3 + j] as f64;
            let row: u64 = dense[i * 3..i * 3 + 3].iter().sum();
            let col: u64 = (0..3).map(|k| dense[k * 3 + j]).sum();
            let expect = if c == 0.0 {
                0.0
            } else {
                ((c / total as f64) / ((row as f64 / total as f64) * (col as f64 / total as f64)))
                    .ln()
                    .max(0.0)
            };
            assert!((m[(i, j)] - expect).abs() < 1e-12, "({i},{j})");
        }
    }
}

fn random_dense(n: usize, m: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0))
}

fn rel_error(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn svd_of_identity() {
    let eye = DMatrix::<f64>::identity(5, 5);
    let svd = truncated_svd(&eye, 5, 0, SvdMethod::Exact).unwrap();
    assert!(svd.singular_values.iter().all(|s| (s - 1.0).abs() < 1e-12));
    assert!((svd.reconstruct() - &eye).amax() < 1e-12);
}

#[test]
fn svd_of_rank_one() {
    let u = DMatrix::from_column_slice(4, 1, &[1.0, -2.0, 0.5, 3.0]);
    let v = DMatrix::from_column_slice(3, 1, &[2.0, 1.0, -1.0]);
    let a = &u * v.transpose();
    for method in [SvdMethod::Exact, SvdMethod::DEFAULT_RANDOMIZED] {
        let svd = truncated_svd(&a, 1, 3, method).unwrap();
        assert!(rel_error(&svd.reconstruct(), &a) < 1e-12, "{method:?}");
    }
}

#[test]
fn svd_matches_jacobi_oracle() {
    for seed in 0..5 {
        let a = random_dense(10, 8, seed);
        let oracle = jacobi_singular_values(&a);
        for method in [SvdMethod::Exact, SvdMethod::DEFAULT_RANDOMIZED, SvdMethod::Auto] {
            let svd = truncated_svd(&a, 3, seed, method).unwrap();
            for k in 0..3 {
                assert!(
                    (svd.singular_values[k] - oracle[k]).abs() < 1e-6,
                    "seed {seed} {method:?} σ{k}: {} vs {}",
                    svd.singular_values[k],
                    oracle[k]
                );
            }
        }
    }
}

#[test]
fn svd_range_and_determinism() {
    let a = random_dense(6, 4, 1);
    assert!(truncated_svd(&a, 0, 0, SvdMethod::Exact).is_err());
    assert!(truncated_svd(&a, 5, 0, SvdMethod::Exact).is_err());
    let x = truncated_svd(&a, 2, 42, SvdMethod::DEFAULT_RANDOMIZED).unwrap();
    let y = truncated_svd(&a, 2, 42, SvdMethod::DEFAULT_RANDOMIZED).unwrap();
    assert_eq!(x, y);
}

#[test]
fn full_rank_reconstruction() {
    for (n, m) in [(7, 5), (5, 7), (6, 6)] {
        let a = random_dense(n, m, (n * m) as u64);
        let d = n.min(m);
        for method in [SvdMethod::Exact, SvdMethod::DEFAULT_RANDOMIZED] {
            let svd = truncated_svd(&a, d, 0, method).unwrap();
            assert!(rel_error(&svd.reconstruct(), &a) < 1e-8, "{n}x{m} {method:?}");
        }
    }
}

#[test]
fn randomized_error_is_near_optimal() {
    // A matrix with a decaying spectrum, large enough to take the
    // randomized path under Auto.
    let (n, m) = (600, 500);
    let left = random_dense(n, 40, 5).qr().q();
    let right = random_dense(m, 40, 6).qr().q();
    let spectrum = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(40, |i, _| 0.8f64.powi(i as i32)));
    let a = &left * spectrum * right.transpose() + random_dense(n, m, 7) * 1e-3;
    let d = 10;
    let sigma = jacobi_singular_values(&a);
    let optimal = sigma[d..].iter().map(|s| s * s).sum::<f64>().sqrt();
    for method in [SvdMethod::Auto, SvdMethod::DEFAULT_RANDOMIZED] {
        let svd = truncated_svd(&a, d, 9, method).unwrap();
        let err = (svd.reconstruct() - &a).norm();
        assert!(err <= 1.01 * optimal, "{method:?}: {err} vs optimal {optimal}");
    }
}

const TOY_NOUNS: [&str; 6] = ["cat", "dog", "car", "bus", "apple", "pear"];
const TOY_VERBS: [&str; 4] = ["sees", "likes", "drives", "eats"];

fn toy_corpus(sentences: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for s in 0..sentences {
        let a = TOY_NOUNS[rng.random_range(0..TOY_NOUNS.len())];
        let v = TOY_VERBS[rng.random_range(0..TOY_VERBS.len())];
        let b = TOY_NOUNS[rng.random_range(0..TOY_NOUNS.len())];
        out.push_str(&format!("the {a} {v} the {b}\n"));
        if s % 10 == 9 {
            out.push('\n');
        }
    }
    out
}

#[test]
fn toy_space_loads_and_aligns() {
    let text = toy_corpus(100, 1) + "zebra\n";
    let built = build_ppmi_space(&TextCorpus(&text), &cfg(2, 2, 5), SvdMethod::Auto).unwrap();
    assert_eq!(built.space.dim(), 5);
    assert!(built.space.index_of("zebra").is_none());
    let mut bytes = Vec::new();
    built.space.write_to(&mut bytes, true).unwrap();
    let loaded = EmbeddingSpace::read_from(Cursor::new(bytes), EmbeddingFormat::Auto, Path::new("<built>")).unwrap();
    assert_eq!(loaded.vocab(), built.space.vocab());

    let norms = NormDataset::new(
        vec!["cat".into(), "dog".into(), "unicorn".into()],
        vec!["noun".into(); 3],
        vec!["A".into()],
        vec!["d".into()],
        DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]),
        None,
    )
    .unwrap();
    let aligned = align(&loaded, &norms, CasePolicy::Sensitive).unwrap();
    assert_eq!(aligned.words, ["cat", "dog"]);
    assert_eq!(aligned.missing, ["unicorn"]);
}

#[test]
fn include_words_bypass_the_threshold() {
    let text = toy_corpus(100, 2) + "zebra\n";
    let config = BuilderConfig {
        include_words: vec!["zebra".into(), "okapi".into()],
        ..cfg(2, 2, 5)
    };
    let built = build_ppmi_space(&TextCorpus(&text), &config, SvdMethod::Auto).unwrap();
    assert!(built.space.index_of("zebra").is_some());
    assert_eq!(built.metadata.include_words_absent, ["okapi"]);
}

#[test]
fn full_scale_config_is_echoed() {
    // About 400 types, each occurring at least 50 times.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut text = String::new();
    for doc in 0..100 {
        for t in 0..300 {
            let w = if t % 2 == 0 {
                (doc * 7 + t) % 400
            } else {
                rng.random_range(0..400)
            };
            text.push_str(&format!("w{w} "));
        }
        text.push_str("\n\n");
    }
    let config = BuilderConfig {
        window: 10,
        min_count: 50,
        dim: 300,
        svd_seed: 0,
        include_words: Vec::new(),
    };
    let built = build_ppmi_space(&TextCorpus(&text), &config, SvdMethod::Auto).unwrap();
    let meta = &built.metadata;
    assert_eq!((meta.window, meta.min_count, meta.dim), (10, 50, 300));
    assert!(meta.vocab_size >= 300, "vocabulary {}", meta.vocab_size);
    assert_eq!(built.space.dim(), 300);
    assert_eq!(meta.total_tokens, 30_000);
    let s = &meta.singular_values;
    assert!(s.windows(2).all(|w| w[0] >= w[1]) && s.iter().all(|v| *v >= 0.0));
}

fn words_strategy() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e"]), 0..40)
        .prop_map(|v| v.into_iter().map(String::from).collect())
}

proptest! {
    #[test]
    fn counts_are_symmetric(tokens in words_strategy(), window in 1usize..5) {
        let text = tokens.join(" ");
        let vocab: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let counts = count_with_vocabulary(&TextCorpus(&text), &vocab, window).unwrap();
        let dense = counts.counts.map(|_, _, c| c as f64).to_dense();
        prop_assert_eq!(&dense, &dense.transpose());
        prop_assert_eq!(dense.sum() as u64, counts.total);
    }

    #[test]
    fn stream_split_equivalence(first in words_strategy(), second in words_strategy(), window in 1usize..5) {
        let vocab: Vec<String> = ["a", "b", "c", "e"].iter().map(|s| s.to_string()).collect();
        let (x, y) = (first.join(" "), second.join(" "));
        let joined = format!("{x}\n\n{y}");
        let dense = |text: &str| {
            count_with_vocabulary(&TextCorpus(text), &vocab, window).unwrap().counts.map(|_, _, c| c as f64).to_dense()
        };
        prop_assert_eq!(dense(&joined), dense(&x) + dense(&y));
    }

    #[test]
    fn ppmi_is_nonnegative_and_scale_free(dense in prop::collection::vec(0u64..20, 16), factor in 2u64..9) {
        prop_assume!(dense.iter().any(|c| *c > 0));
        let vocab = ["a", "b", "c", "d"];
        let base = ppmi(&counts_of(&vocab, &dense)).unwrap().to_dense();
        prop_assert!(base.iter().all(|v| *v >= 0.0));
        let scaled: Vec<u64> = dense.iter().map(|c| c * factor).collect();
        let other = ppmi(&counts_of(&vocab, &scaled)).unwrap().to_dense();
        prop_assert!((base - other).amax() < 1e-12);
    }

    #[test]
    fn singular_values_are_sorted(seed in any::<u64>(), n in 2usize..9, m in 2usize..9) {
        let a = random_dense(n, m, seed);
        let d = n.min(m);
        let svd = truncated_svd(&a, d, seed, SvdMethod::Exact).unwrap();
        let s: Vec<f64> = svd.singular_values.iter().copied().collect();
        prop_assert!(s.iter().all(|v| *v >= 0.0));
        prop_assert!(s.windows(2).all(|w| w[0] >= w[1]));
    }
}
