//! Property and oracle checks for the numeric kernels: brute-force
//! agreement for the series descriptors, model determinism contracts,
//! and the app-swap symmetry of feature extraction.

use proptest::prelude::*;

use rivalcast_core::features::{
    coarse_features, compute_labels, FeatureOptions, TextAssets,
};
use rivalcast_core::ingest::bucket;
use rivalcast_core::model::{
    fit_forest, fit_tree, ForestParams, TrainingTargets, TreeParams,
};
use rivalcast_core::num::SplitMix64;
use rivalcast_core::stats::{
    hopping_count, longest_monotone_runs, longest_monotone_subsequences,
};
use rivalcast_core::synth::{generate, Scenario};
use rivalcast_core::textmine::{
    cosine_similarity_raw, detect_comparisons, score_sentiment, sentiment_distribution,
    ComparativeDictionary, MatchMode, SentimentLexicon, SentimentThresholds,
};
use rivalcast_core::WindowSpec;

fn oracle_hop(seq: &[f64]) -> usize {
    let mut count = 0;
    for i in 0..seq.len().saturating_sub(1) {
        if seq[i] > seq[i + 1] {
            count += 1;
        }
    }
    count
}

/// Longest monotone contiguous runs by enumerating every interval.
fn oracle_runs(seq: &[f64]) -> (usize, usize) {
    let n = seq.len();
    let mut best_inc = 0;
    let mut best_dec = 0;
    for i in 0..n {
        for j in i..n {
            let window = &seq[i..=j];
            if window.windows(2).all(|p| p[1] >= p[0]) {
                best_inc = best_inc.max(window.len());
            }
            if window.windows(2).all(|p| p[1] <= p[0]) {
                best_dec = best_dec.max(window.len());
            }
        }
    }
    (best_inc, best_dec)
}

/// Longest monotone subsequences by exhaustive bitmask enumeration.
fn oracle_subsequences(seq: &[f64]) -> (usize, usize) {
    let n = seq.len();
    assert!(n <= 16, "oracle is exponential");
    let mut best_inc = 0;
    let mut best_dec = 0;
    for mask in 1u32..(1 << n) {
        let picked: Vec<f64> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| seq[i]).collect();
        if picked.windows(2).all(|p| p[1] >= p[0]) {
            best_inc = best_inc.max(picked.len());
        }
        if picked.windows(2).all(|p| p[1] <= p[0]) {
            best_dec = best_dec.max(picked.len());
        }
    }
    (best_inc, best_dec)
}

fn random_sequence(rng: &mut SplitMix64, max_len: usize) -> Vec<f64> {
    let len = 1 + rng.next_below(max_len as u64) as usize;
    (0..len).map(|_| rng.next_below(5) as f64).collect()
}

#[test]
fn descriptors_agree_with_brute_force_on_1000_sequences() {
    let mut rng = SplitMix64::new(0xD15C0);
    for _ in 0..1000 {
        let seq = random_sequence(&mut rng, 12);
        assert_eq!(hopping_count(&seq), oracle_hop(&seq), "seq {seq:?}");
        assert_eq!(
            longest_monotone_runs(&seq).unwrap(),
            oracle_runs(&seq),
            "seq {seq:?}"
        );
    }
}

#[test]
fn subsequence_mode_agrees_with_exhaustive_enumeration() {
    let mut rng = SplitMix64::new(0x5EB5E0);
    for _ in 0..400 {
        let seq = random_sequence(&mut rng, 10);
        assert_eq!(
            longest_monotone_subsequences(&seq).unwrap(),
            oracle_subsequences(&seq),
            "seq {seq:?}"
        );
    }
}

#[test]
fn hops_forward_plus_backward_bounded_by_pairs() {
    let mut rng = SplitMix64::new(777);
    for _ in 0..1000 {
        let seq = random_sequence(&mut rng, 12);
        let reversed: Vec<f64> = seq.iter().rev().copied().collect();
        let forward = hopping_count(&seq);
        let backward = hopping_count(&reversed);
        assert!(forward + backward <= seq.len() - 1);
        let has_equal_adjacent = seq.windows(2).any(|w| w[0] == w[1]);
        if !has_equal_adjacent {
            assert_eq!(forward + backward, seq.len() - 1, "seq {seq:?}");
        }
    }
}

proptest! {
    #[test]
    fn cosine_is_symmetric_bounded_and_scale_invariant(
        u in prop::array::uniform3(0.0f64..10.0),
        v in prop::array::uniform3(0.0f64..10.0),
        c in 0.01f64..100.0,
    ) {
        let uv = cosine_similarity_raw(u, v);
        let vu = cosine_similarity_raw(v, u);
        prop_assert_eq!(uv, vu);
        prop_assert!((0.0..=1.0).contains(&uv));
        let scaled = [u[0] * c, u[1] * c, u[2] * c];
        prop_assert!((cosine_similarity_raw(scaled, v) - uv).abs() < 1e-9);
    }

    #[test]
    fn distribution_components_form_a_probability_vector(
        scores in prop::collection::vec(0.0f64..=1.0, 0..40),
        lo in 0.05f64..0.45,
        width in 0.05f64..0.5,
    ) {
        let thresholds = SentimentThresholds { lo, hi: lo + width };
        let dist = sentiment_distribution(&scores, thresholds).unwrap();
        for p in [dist.p_neg, dist.p_neu, dist.p_pos] {
            prop_assert!((0.0..=1.0).contains(&p));
        }
        prop_assert!((dist.p_neg + dist.p_neu + dist.p_pos - 1.0).abs() < 1e-9);
    }

    #[test]
    fn matched_positive_terms_never_lower_the_score(
        base_weight in -3.0f64..3.0,
        extra_weight in 0.0f64..3.0,
    ) {
        let mut lexicon = SentimentLexicon::new();
        lexicon.insert("solid", base_weight).unwrap();
        lexicon.insert("swift", extra_weight).unwrap();
        let without = score_sentiment("a solid frame", &lexicon, MatchMode::Substring);
        let with = score_sentiment("a solid swift frame", &lexicon, MatchMode::Substring);
        prop_assert!(with >= without);
    }
}

fn cmp_dictionary() -> ComparativeDictionary {
    let mut dict = ComparativeDictionary::new();
    dict.insert("sturdier", true).unwrap();
    dict.insert("smoother", true).unwrap();
    dict.insert("heavier", false).unwrap();
    dict.insert("clunkier", false).unwrap();
    dict
}

proptest! {
    #[test]
    fn comparison_scores_never_exceed_count(
        words in prop::collection::vec(
            prop::sample::select(vec![
                "alphabike", "betabike", "sturdier", "heavier", "smoother",
                "clunkier", "ride", "today",
            ]),
            0..12,
        )
    ) {
        let text = words.join(" ");
        let result = detect_comparisons(
            &text,
            &cmp_dictionary(),
            &["alphabike".to_string()],
            &["betabike".to_string()],
            MatchMode::Substring,
        );
        prop_assert!(result.score_a + result.score_b <= result.count);
    }

    #[test]
    fn comparison_counts_add_over_concatenation(
        left in prop::collection::vec(
            prop::sample::select(vec!["alphabike", "betabike", "sturdier", "heavier", "ride"]),
            0..8,
        ),
        right in prop::collection::vec(
            prop::sample::select(vec!["alphabike", "betabike", "smoother", "clunkier", "today"]),
            0..8,
        ),
    ) {
        let dict = cmp_dictionary();
        let kw_a = vec!["alphabike".to_string()];
        let kw_b = vec!["betabike".to_string()];
        let t1 = left.join(" ");
        let t2 = right.join(" ");
        let joined = format!("{t1} . {t2}");
        let c1 = detect_comparisons(&t1, &dict, &kw_a, &kw_b, MatchMode::Substring);
        let c2 = detect_comparisons(&t2, &dict, &kw_a, &kw_b, MatchMode::Substring);
        let c = detect_comparisons(&joined, &dict, &kw_a, &kw_b, MatchMode::Substring);
        prop_assert_eq!(c.count, c1.count + c2.count);
    }
}

fn toy_training_data(rng: &mut SplitMix64, n: usize, p: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..p).map(|_| rng.next_below(20) as f64 / 2.0).collect())
        .collect();
    let y: Vec<f64> = x
        .iter()
        .map(|row| ((row[0] + row[p - 1]) / 40.0 + rng.next_unit() * 0.1).min(1.0))
        .collect();
    (x, y)
}

#[test]
fn row_order_does_not_matter_without_bootstrap() {
    let mut rng = SplitMix64::new(41);
    for trial in 0..20 {
        let (x, y) = toy_training_data(&mut rng, 24, 4);
        let labels: Vec<usize> = y.iter().map(|&v| usize::from(v > 0.5)).collect();

        // An arbitrary but reproducible permutation.
        let perm = {
            let mut p: Vec<usize> = (0..x.len()).collect();
            for i in (1..p.len()).rev() {
                let j = rng.next_below((i + 1) as u64) as usize;
                p.swap(i, j);
            }
            p
        };
        let x_perm: Vec<Vec<f64>> = perm.iter().map(|&i| x[i].clone()).collect();
        let y_perm: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        let labels_perm: Vec<usize> = perm.iter().map(|&i| labels[i]).collect();

        let params = ForestParams {
            n_trees: 7,
            bootstrap: false,
            seed: trial,
            ..ForestParams::default()
        };
        let f1 = fit_forest(
            &x,
            TrainingTargets::Classes { labels: &labels, n_classes: 2 },
            &params,
        )
        .unwrap();
        let f2 = fit_forest(
            &x_perm,
            TrainingTargets::Classes { labels: &labels_perm, n_classes: 2 },
            &params,
        )
        .unwrap();
        let r1 = fit_forest(&x, TrainingTargets::Values(&y), &params).unwrap();
        let r2 = fit_forest(&x_perm, TrainingTargets::Values(&y_perm), &params).unwrap();

        for row in &x {
            assert_eq!(
                f1.predict_class(row).unwrap(),
                f2.predict_class(row).unwrap()
            );
            // Bit-exact: leaf means accumulate in value-sorted order.
            assert_eq!(
                r1.predict_value_raw(row).unwrap(),
                r2.predict_value_raw(row).unwrap()
            );
        }
    }
}

#[test]
fn monotone_feature_transforms_leave_train_predictions_unchanged() {
    let mut rng = SplitMix64::new(99);
    let (x, y) = toy_training_data(&mut rng, 30, 3);
    let labels: Vec<usize> = y.iter().map(|&v| usize::from(v > 0.5)).collect();
    let transforms: [fn(f64) -> f64; 2] = [|v| v * v * v, |v| 2.0 * v + 1.0];

    for (column, transform) in [(0usize, transforms[0]), (2usize, transforms[1])] {
        let x_t: Vec<Vec<f64>> = x
            .iter()
            .map(|row| {
                let mut row = row.clone();
                row[column] = transform(row[column]);
                row
            })
            .collect();
        let mut rng1 = SplitMix64::new(7);
        let mut rng2 = SplitMix64::new(7);
        let t1 = fit_tree(
            &x,
            TrainingTargets::Classes { labels: &labels, n_classes: 2 },
            &TreeParams::default(),
            &mut rng1,
        )
        .unwrap();
        let t2 = fit_tree(
            &x_t,
            TrainingTargets::Classes { labels: &labels, n_classes: 2 },
            &TreeParams::default(),
            &mut rng2,
        )
        .unwrap();
        for (row, row_t) in x.iter().zip(&x_t) {
            assert_eq!(
                t1.predict_class(row).unwrap(),
                t2.predict_class(row_t).unwrap()
            );
        }
    }
}

#[test]
fn regression_predictions_stay_inside_training_range() {
    let mut rng = SplitMix64::new(2024);
    for trial in 0..50 {
        let (x, y) = toy_training_data(&mut rng, 16, 3);
        let params = ForestParams {
            n_trees: 9,
            seed: trial,
            ..ForestParams::default()
        };
        let forest = fit_forest(&x, TrainingTargets::Values(&y), &params).unwrap();
        let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for _ in 0..10 {
            let probe: Vec<f64> = (0..3).map(|_| rng.next_below(30) as f64 / 2.0).collect();
            let value = forest.predict_value_raw(&probe).unwrap();
            assert!(
                value >= lo - 1e-9 && value <= hi + 1e-9,
                "prediction {value} outside [{lo}, {hi}]"
            );
        }
    }
}

#[test]
fn unlimited_tree_memorizes_consistent_training_data() {
    let mut rng = SplitMix64::new(5150);
    let (x, y) = toy_training_data(&mut rng, 40, 3);
    // Deduplicate identical rows to guarantee label consistency.
    let mut seen: Vec<(Vec<f64>, usize)> = Vec::new();
    for (row, &value) in x.iter().zip(&y) {
        if !seen.iter().any(|(r, _)| r == row) {
            seen.push((row.clone(), usize::from(value > 0.5)));
        }
    }
    let (x, labels): (Vec<Vec<f64>>, Vec<usize>) = seen.into_iter().unzip();
    let tree = fit_tree(
        &x,
        TrainingTargets::Classes { labels: &labels, n_classes: 2 },
        &TreeParams {
            max_depth: usize::MAX,
            min_samples_split: 2,
        },
        &mut SplitMix64::new(0),
    )
    .unwrap();
    for (row, &label) in x.iter().zip(&labels) {
        assert_eq!(tree.predict_class(row).unwrap(), label);
    }
}

fn swap_assets() -> TextAssets {
    let mut lexicon = SentimentLexicon::new();
    for (term, weight) in [("great", 2.0), ("smooth", 1.5), ("broken", -2.0), ("laggy", -1.5)] {
        lexicon.insert(term, weight).unwrap();
    }
    TextAssets {
        lexicon,
        dictionary: cmp_dictionary(),
        keywords_a: vec!["alphabike".into()],
        keywords_b: vec!["betabike".into()],
        thresholds: SentimentThresholds::default(),
        match_mode: MatchMode::Substring,
    }
}

/// Swapping the two apps across all inputs negates pc, swaps cr,
/// preserves ci, and maps every coarse feature onto its mirror, exactly.
#[test]
fn swapping_apps_mirrors_labels_and_coarse_features() {
    let assets = swap_assets();
    for seed in 0..5 {
        let scenario = Scenario {
            weeks: 14,
            seed: 1000 + seed,
            review_volume: 3.0,
            post_volume: 2.5,
            download_volume: 80.0,
            ..Scenario::default()
        };
        let data = generate(&scenario, &assets).unwrap();

        let spec = WindowSpec::weekly(scenario.origin);
        let windowed = bucket(&data.reviews, &data.microblogs, &data.downloads, &spec).unwrap();

        let swapped_reviews: Vec<_> = data.reviews.iter().map(|r| r.swapped()).collect();
        let swapped_posts: Vec<_> = data.microblogs.iter().map(|m| m.swapped()).collect();
        let swapped_downloads: Vec<_> = data.downloads.iter().map(|d| d.swapped()).collect();
        let windowed_swapped =
            bucket(&swapped_reviews, &swapped_posts, &swapped_downloads, &spec).unwrap();

        let labels = compute_labels(&windowed);
        let labels_swapped = compute_labels(&windowed_swapped);
        for (original, mirrored) in labels.windows.iter().zip(&labels_swapped.windows) {
            assert_eq!(mirrored.pc, -original.pc);
            if original.pc == 0.0 {
                // Ties are BPositive from either orientation: the class
                // rule is "A only when pc is strictly positive".
                assert_eq!(mirrored.cr, original.cr);
            } else {
                assert_eq!(mirrored.cr, original.cr.swapped());
            }
            assert_eq!(mirrored.ci, original.ci);
            assert_eq!(mirrored.degenerate, original.degenerate);
        }

        let opts = FeatureOptions::default();
        let coarse = coarse_features(&windowed, &assets, &opts).unwrap();
        let coarse_swapped =
            coarse_features(&windowed_swapped, &assets.swapped(), &opts).unwrap();

        let pairs = [
            ("n_reviews_a", "n_reviews_b"),
            ("mean_rating_a", "mean_rating_b"),
            ("r_ba", "r_ab"),
            ("cmp_score_a", "cmp_score_b"),
        ];
        for (left, right) in pairs {
            let l = coarse.feature_index(left).unwrap();
            let r = coarse.feature_index(right).unwrap();
            assert_eq!(coarse.series(l), coarse_swapped.series(r), "{left}<->{right}");
            assert_eq!(coarse.series(r), coarse_swapped.series(l), "{right}<->{left}");
        }
        for negated in ["dn_norm", "ds"] {
            let i = coarse.feature_index(negated).unwrap();
            for (a, b) in coarse.series(i).iter().zip(coarse_swapped.series(i)) {
                assert_eq!(*b, -*a, "{negated}");
            }
        }
        for preserved in [
            "sent_sim", "n_posts", "n_users", "n_reposts", "n_comments", "n_likes", "cmp_count",
        ] {
            let i = coarse.feature_index(preserved).unwrap();
            assert_eq!(coarse.series(i), coarse_swapped.series(i), "{preserved}");
        }
    }
}
