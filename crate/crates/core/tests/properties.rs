mod common;

use common::*;
use proptest::prelude::*;
use trimodal_dti::analysis::{histogram, pair_similarity, rank_scores};
use trimodal_dti::config::SplitScheme;
use trimodal_dti::contrastive::cosine_sim;
use trimodal_dti::fusion::{bce_loss_values, total_loss, FusionMlp, LossWeights};
use trimodal_dti::harness::metrics::compute_metrics;
use trimodal_dti::harness::splits::make_splits;
use trimodal_dti::ingest::pdb::pdb_to_residue_graph;
use trimodal_dti::nn::{to_rows, ForwardCtx, ParamStore};
use trimodal_dti::tokenizer::{detokenize, tokenize, train_vocab};

fn labels_and_scores(max: usize) -> impl Strategy<Value = (Vec<u8>, Vec<f64>)> {
    (2..=max).prop_flat_map(|n| {
        (
            prop::collection::vec(0u8..2, n),
            // Few distinct values so ties are common.
            prop::collection::vec((0u32..8).prop_map(|v| v as f64 / 7.0), n),
        )
    })
    .prop_filter("both classes", |(l, _)| l.contains(&0) && l.contains(&1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn splits_partition_for_any_seed(n in 10usize..400, seed in any::<u64>(), repeats in 1usize..4) {
        for s in make_splits(n, SplitScheme::Repeated811, seed, repeats).unwrap() {
            let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert!((s.test.len() as f64 - n as f64 / 10.0).abs() <= 1.0);
        }
    }

    #[test]
    fn kfold_test_sets_tile_the_data(n in 10usize..200, seed in any::<u64>(), k in 2usize..6) {
        let splits = make_splits(n, SplitScheme::KFold, seed, k).unwrap();
        let mut tests: Vec<usize> = splits.iter().flat_map(|s| s.test.clone()).collect();
        tests.sort_unstable();
        prop_assert_eq!(tests, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn metrics_match_brute_force((labels, scores) in labels_and_scores(50)) {
        let m = compute_metrics(&labels, &scores, 0.5).unwrap();
        prop_assert_eq!(m.auc, auc_oracle(&labels, &scores));
        prop_assert!((m.aupr - ap_oracle(&labels, &scores)).abs() < 1e-12);
        prop_assert_eq!(m.precision, precision_oracle(&labels, &scores, 0.5));
        for v in [m.auc, m.aupr, m.precision] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn classifier_output_is_a_probability(seed in 0u64..1000, rows in 1usize..6, scale in 0.1f64..1e4) {
        let mut store = ParamStore::new(seed);
        let mlp = FusionMlp::new(&mut store, "m", 6, 8, 4, 0.0).unwrap();
        let x: Mat = rand_mat(&mut rng(seed), rows, 6).into_iter().map(|r| r.into_iter().map(|v| v * scale).collect()).collect();
        let p = to_rows(&mlp.forward(&tensor(&x), &mut ForwardCtx::eval()).unwrap().unsqueeze(1).unwrap()).unwrap();
        for r in p {
            prop_assert!(r[0] > 0.0 && r[0] < 1.0, "{}", r[0]);
        }
    }

    #[test]
    fn bce_is_non_negative(pairs in prop::collection::vec((0u8..2, 0.0f64..=1.0), 1..20)) {
        let y: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let p: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let l = bce_loss_values(&y, &p).unwrap();
        prop_assert!(l >= 0.0 && l.is_finite());
    }

    #[test]
    fn total_loss_is_linear(c in 0.0f64..5.0, d in 0.0f64..5.0, p in 0.0f64..5.0, k in 0.0f64..3.0) {
        let w = LossWeights { alpha: 1.0, beta: 0.3, gamma: 0.2 };
        let lhs = total_loss(k * c, k * d, k * p, &w);
        prop_assert!((lhs - k * total_loss(c, d, p, &w)).abs() < 1e-12);
        prop_assert!((total_loss(c, d, p, &w) - (c + 0.3 * d + 0.2 * p)).abs() < 1e-12);
    }

    #[test]
    fn tokenize_round_trips_known_alphabet(corpus in prop::collection::vec("[CNO()=c1]{1,30}", 1..8), probe in "[CNO()=c1]{1,40}") {
        let mut corpus = corpus;
        // Every alphabet character appears once so nothing maps to UNK.
        corpus.push("CNO()=c1".into());
        let vocab = train_vocab(&corpus, 60, 2).unwrap();
        let toks = tokenize(&probe, &vocab, 1000).unwrap();
        prop_assert_eq!(detokenize(&toks, &vocab), probe.clone());
        prop_assert!(toks.len() <= probe.chars().count());
    }

    #[test]
    fn residue_adjacency_is_symmetric(seed in 0u64..500, n in 2usize..30) {
        let mut r = rng(seed);
        let lines: String = (0..n)
            .map(|i| {
                let c = [0; 3].map(|_| rand::Rng::random_range(&mut r, 0.0..20.0));
                format!("ATOM  {:>5}  CA  ALA A{:>4}    {:>8.3}{:>8.3}{:>8.3}  1.00  0.00           C\n", i + 1, i + 1, c[0], c[1], c[2])
            })
            .collect();
        let g = pdb_to_residue_graph(&lines, 8.0).unwrap();
        let a = g.adjacency();
        for i in 0..n {
            prop_assert_eq!(a[i][i], 0.0);
            for j in 0..n {
                prop_assert_eq!(a[i][j], a[j][i]);
            }
        }
    }

    #[test]
    fn cosine_bounded_and_histogram_counts(rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 4), 1..30)) {
        let rows: Vec<Vec<f64>> = rows.into_iter().filter(|r| r.iter().any(|v| v.abs() > 1e-6)).collect();
        prop_assume!(!rows.is_empty());
        let shifted: Vec<Vec<f64>> = rows.iter().rev().cloned().collect();
        for (a, b) in rows.iter().zip(&shifted) {
            let c = cosine_sim(a, b).unwrap();
            prop_assert!((-1.0..=1.0).contains(&c));
        }
        let ids: Vec<String> = (0..rows.len()).map(|i| i.to_string()).collect();
        let s = pair_similarity("d1-d2", &ids, &rows, &shifted).unwrap();
        prop_assert_eq!(s.histogram.iter().sum::<usize>(), rows.len());
        prop_assert_eq!(histogram(&s.similarities), s.histogram);
        prop_assert!((0.0..=1.0).contains(&s.inside_fraction));
    }

    #[test]
    fn ranking_is_ordered_and_consecutive(scores in prop::collection::vec(0.0f64..1.0, 1..40), k in 1usize..50) {
        let scored: Vec<(String, f64)> = scores.iter().enumerate().map(|(i, &s)| (format!("T{i:02}"), s)).collect();
        let ranked = rank_scores(scored, k);
        prop_assert_eq!(ranked.len(), k.min(scores.len()));
        for (i, r) in ranked.iter().enumerate() {
            prop_assert_eq!(r.rank, i + 1);
            if i > 0 {
                prop_assert!(ranked[i - 1].score >= r.score);
            }
        }
        let best = scores.iter().cloned().fold(f64::MIN, f64::max);
        prop_assert_eq!(ranked[0].score, best);
    }
}
