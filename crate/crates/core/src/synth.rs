//! Deterministic synthetic data for two competing apps.
//!
//! A latent popularity walk per app drives weekly downloads (through a
//! softplus link), review volume and polarity, and the direction of
//! comparative microblog posts. Texts are assembled from the pipeline's
//! own lexicon and comparative dictionary so the injected signal is
//! recoverable by construction. Generation is reproducible byte for
//! byte: every decision draws from fixed splitmix64 streams whose draw
//! counts do not depend on the signal-strength parameters.

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{compute_labels, TextAssets, WindowLabel};
use crate::ingest::{
    bucket, ts_format, App, Dataset, DownloadRecord, IngestError, MicroblogRecord, ReviewRecord,
    WindowSpec,
};
use crate::num::{splitmix64, SplitMix64};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("scenario field {field}: {message}")]
    InvalidScenario {
        field: &'static str,
        message: String,
    },
    #[error("generator needs at least one keyword per app and a non-empty lexicon and dictionary")]
    MissingAssets,
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

fn default_origin() -> DateTime<Utc> {
    ts_format::parse("2021-01-04T00:00:00Z").expect("static timestamp")
}

/// Generator controls: how long, how noisy, how strongly the texts track
/// the latent contest, and how much data per week.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub weeks: usize,
    pub seed: u64,
    #[serde(with = "ts_format")]
    pub origin: DateTime<Utc>,
    pub base_a: f64,
    pub drift_a: f64,
    pub base_b: f64,
    pub drift_b: f64,
    /// Weekly random-walk noise scale.
    pub noise: f64,
    /// How strongly review polarity and ratings track latent quality.
    pub sentiment_signal: f64,
    /// How strongly comparison direction tracks the popularity gap.
    pub comparison_signal: f64,
    pub review_volume: f64,
    pub post_volume: f64,
    pub download_volume: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            weeks: 38,
            seed: 42,
            origin: default_origin(),
            base_a: 0.4,
            drift_a: 0.05,
            base_b: 0.8,
            drift_b: 0.0,
            noise: 0.08,
            sentiment_signal: 0.8,
            comparison_signal: 0.8,
            review_volume: 6.0,
            post_volume: 4.0,
            download_volume: 1500.0,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |field: &'static str, message: String| {
            Err(SynthError::InvalidScenario { field, message })
        };
        if self.weeks < 12 {
            return fail("weeks", format!("must be >= 12, got {}", self.weeks));
        }
        if !(0.0..=1.0).contains(&self.sentiment_signal) {
            return fail(
                "sentiment_signal",
                format!("must lie in [0, 1], got {}", self.sentiment_signal),
            );
        }
        if !(0.0..=1.0).contains(&self.comparison_signal) {
            return fail(
                "comparison_signal",
                format!("must lie in [0, 1], got {}", self.comparison_signal),
            );
        }
        if self.noise.is_nan() || self.noise < 0.0 {
            return fail("noise", format!("must be >= 0, got {}", self.noise));
        }
        for (field, value) in [
            ("review_volume", self.review_volume),
            ("post_volume", self.post_volume),
            ("download_volume", self.download_volume),
        ] {
            if !value.is_finite() || value < 0.0 {
                return fail("volume", format!("{field} must be finite and >= 0, got {value}"));
            }
        }
        Ok(())
    }
}

/// Ground truth emitted next to the generated streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub version: u32,
    pub weeks: usize,
    pub seed: u64,
    #[serde(with = "ts_format")]
    pub origin: DateTime<Utc>,
    pub latent_a: Vec<f64>,
    pub latent_b: Vec<f64>,
    pub windows: Vec<WindowLabel>,
}

/// Generated record streams plus the ground truth.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub reviews: Vec<ReviewRecord>,
    pub microblogs: Vec<MicroblogRecord>,
    pub downloads: Vec<DownloadRecord>,
    pub truth: Truth,
}

impl SynthOutput {
    pub fn reviews_jsonl(&self) -> String {
        to_jsonl(&self.reviews)
    }

    pub fn microblogs_jsonl(&self) -> String {
        to_jsonl(&self.microblogs)
    }

    pub fn downloads_jsonl(&self) -> String {
        to_jsonl(&self.downloads)
    }

    pub fn truth_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(&self.truth).expect("truth serialization");
        out.push('\n');
        out
    }
}

fn to_jsonl<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("record serialization"));
        out.push('\n');
    }
    out
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        (1.0 + x.exp()).ln()
    }
}

const DAYS_PER_WEEK: usize = 7;

struct Clock {
    origin: DateTime<Utc>,
}

impl Clock {
    /// Deterministic intra-day timestamp for the i-th record of a week;
    /// records cycle through the seven days.
    fn at(&self, week: usize, index: usize, phase: i64) -> DateTime<Utc> {
        let day = (index % DAYS_PER_WEEK) as i64;
        let second = (phase + 977 * (index / DAYS_PER_WEEK) as i64) % 86_400;
        self.origin
            + Duration::days(week as i64 * 7 + day)
            + Duration::seconds(second)
    }
}

/// Generate the three record streams and the ground truth for a
/// scenario.
///
/// The same scenario always yields the same records; independent draw
/// streams per concern keep the latent path identical when only the
/// signal strengths change.
pub fn generate(scenario: &Scenario, assets: &TextAssets) -> Result<SynthOutput, SynthError> {
    scenario.validate()?;
    let (positive_terms, negative_terms) = assets.lexicon.terms_by_sign();
    let cmp_positive: Vec<&str> = assets.dictionary.positive_terms().collect();
    let cmp_negative: Vec<&str> = assets.dictionary.negative_terms().collect();
    if assets.keywords_a.is_empty()
        || assets.keywords_b.is_empty()
        || positive_terms.is_empty()
        || negative_terms.is_empty()
        || cmp_positive.is_empty()
        || cmp_negative.is_empty()
    {
        return Err(SynthError::MissingAssets);
    }
    let kw_a = assets.keywords_a[0].as_str();
    let kw_b = assets.keywords_b[0].as_str();

    let mut rng_latent = SplitMix64::new(splitmix64(scenario.seed.wrapping_add(1)));
    let mut rng_reviews = SplitMix64::new(splitmix64(scenario.seed.wrapping_add(2)));
    let mut rng_posts = SplitMix64::new(splitmix64(scenario.seed.wrapping_add(3)));
    let mut rng_cross = SplitMix64::new(splitmix64(scenario.seed.wrapping_add(4)));
    let mut rng_engage = SplitMix64::new(splitmix64(scenario.seed.wrapping_add(5)));

    let mut latent_a = Vec::with_capacity(scenario.weeks);
    let mut latent_b = Vec::with_capacity(scenario.weeks);
    for w in 0..scenario.weeks {
        let (a, b) = if w == 0 {
            (scenario.base_a, scenario.base_b)
        } else {
            (
                latent_a[w - 1] + scenario.drift_a + scenario.noise * rng_latent.next_normal(),
                latent_b[w - 1] + scenario.drift_b + scenario.noise * rng_latent.next_normal(),
            )
        };
        latent_a.push(a);
        latent_b.push(b);
    }

    let clock = Clock {
        origin: scenario.origin,
    };
    let mut reviews = Vec::new();
    let mut microblogs = Vec::new();
    let mut downloads = Vec::new();

    for w in 0..scenario.weeks {
        let sp_a = softplus(latent_a[w]);
        let sp_b = softplus(latent_b[w]);
        let gap = latent_a[w] - latent_b[w];
        let attention = ((sp_a + sp_b) / 2.0).round() as u64;

        // Downloads: the weekly total split over the seven days.
        for (app, sp) in [(App::A, sp_a), (App::B, sp_b)] {
            let weekly = (scenario.download_volume * sp).round().max(0.0) as u64;
            let per_day = weekly / DAYS_PER_WEEK as u64;
            let remainder = (weekly % DAYS_PER_WEEK as u64) as usize;
            for day in 0..DAYS_PER_WEEK {
                downloads.push(DownloadRecord {
                    app,
                    ts: clock.at(w, day, 43_200),
                    downloads: per_day + u64::from(day < remainder),
                });
            }
        }

        // Reviews: polarity and ratings lean with latent quality.
        for (app, sp, quality) in [
            (App::A, sp_a, gap.tanh()),
            (App::B, sp_b, -gap.tanh()),
        ] {
            let n = (scenario.review_volume * sp).round().max(0.0) as usize;
            for i in 0..n {
                let u_polarity = rng_reviews.next_unit();
                let term_draw = rng_reviews.next_u64();
                let u_rating = rng_reviews.next_unit();
                let p_positive = 0.5 + 0.5 * scenario.sentiment_signal * quality;
                let (text, lean) = if u_polarity < p_positive {
                    let term = positive_terms[(term_draw % positive_terms.len() as u64) as usize];
                    (format!("the ride felt {term} this week"), 1.0)
                } else {
                    let term = negative_terms[(term_draw % negative_terms.len() as u64) as usize];
                    (format!("the app felt {term} on my ride"), -1.0)
                };
                let rating = (3.0
                    + 1.6 * scenario.sentiment_signal * quality.mul_add(0.5, 0.5 * lean)
                    + 1.2 * (2.0 * u_rating - 1.0))
                    .round()
                    .clamp(1.0, 5.0) as u8;
                reviews.push(ReviewRecord {
                    app,
                    store: format!("store-{}", i % 3),
                    ts: clock.at(w, i, 32_400),
                    rating: Some(rating),
                    text,
                });
            }
        }

        // Combined-crawl posts: comparisons lean with the popularity gap,
        // plus plain chatter.
        let n_cmp = (scenario.post_volume * (sp_a + sp_b) / 2.0).round().max(0.0) as usize;
        let p_favor_a = 0.5 + 0.5 * scenario.comparison_signal * gap.tanh();
        for i in 0..n_cmp {
            let u_direction = rng_posts.next_unit();
            let u_branch = rng_posts.next_unit();
            let term_draw = rng_posts.next_u64();
            let (favored, other) = if u_direction < p_favor_a {
                (kw_a, kw_b)
            } else {
                (kw_b, kw_a)
            };
            let text = if u_branch < 0.5 {
                let term = cmp_positive[(term_draw % cmp_positive.len() as u64) as usize];
                format!("{favored} is {term} than {other} around here")
            } else {
                let term = cmp_negative[(term_draw % cmp_negative.len() as u64) as usize];
                format!("{other} is {term} than {favored} again")
            };
            microblogs.push(post(
                Dataset::Both,
                clock.at(w, i, 21_600),
                text,
                attention,
                n_cmp + n_cmp / 2,
                &mut rng_engage,
            ));
        }
        for i in 0..n_cmp / 2 {
            microblogs.push(post(
                Dataset::Both,
                clock.at(w, n_cmp + i, 23_400),
                format!("weekend ride with {kw_a} and {kw_b} in the park"),
                attention,
                n_cmp + n_cmp / 2,
                &mut rng_engage,
            ));
        }

        // Single-app crawls: every post names its own app and sometimes
        // the rival; cross-mentions rise as the contest tightens.
        let p_cross = 0.15 + 0.6 * (-gap.abs()).exp();
        for (dataset, own, rival, sp) in [
            (Dataset::A, kw_a, kw_b, sp_a),
            (Dataset::B, kw_b, kw_a, sp_b),
        ] {
            let n = (scenario.post_volume * sp).round().max(0.0) as usize;
            for i in 0..n {
                let u_cross = rng_cross.next_unit();
                let text = if u_cross < p_cross {
                    format!("{own} ride today, a {rival} passed by")
                } else {
                    format!("{own} ride in the sun")
                };
                microblogs.push(post(
                    dataset,
                    clock.at(w, i, 28_800),
                    text,
                    attention,
                    n,
                    &mut rng_engage,
                ));
            }
        }
    }

    let windowed = bucket(&reviews, &microblogs, &downloads, &WindowSpec::weekly(scenario.origin))?;
    let labels = compute_labels(&windowed);

    Ok(SynthOutput {
        reviews,
        microblogs,
        downloads,
        truth: Truth {
            version: 1,
            weeks: scenario.weeks,
            seed: scenario.seed,
            origin: scenario.origin,
            latent_a,
            latent_b,
            windows: labels.windows,
        },
    })
}

fn post(
    dataset: Dataset,
    ts: DateTime<Utc>,
    text: String,
    attention: u64,
    weekly_posts: usize,
    rng: &mut SplitMix64,
) -> MicroblogRecord {
    let pool = (weekly_posts as u64 * 3 / 4).max(4);
    MicroblogRecord {
        dataset,
        ts,
        user_id: format!("u{:04}", rng.next_below(pool)),
        text,
        reposts: rng.next_below(4 + attention),
        comments: rng.next_below(3 + attention),
        likes: rng.next_below(5 + attention),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textmine::{
        ComparativeDictionary, MatchMode, SentimentLexicon, SentimentThresholds,
    };

    fn assets() -> TextAssets {
        let mut lexicon = SentimentLexicon::new();
        for (term, weight) in [
            ("great", 2.0),
            ("smooth", 1.5),
            ("broken", -2.0),
            ("laggy", -1.5),
        ] {
            lexicon.insert(term, weight).unwrap();
        }
        let mut dictionary = ComparativeDictionary::new();
        for term in ["sturdier", "smoother"] {
            dictionary.insert(term, true).unwrap();
        }
        for term in ["heavier", "clunkier"] {
            dictionary.insert(term, false).unwrap();
        }
        TextAssets {
            lexicon,
            dictionary,
            keywords_a: vec!["alphabike".into()],
            keywords_b: vec!["betabike".into()],
            thresholds: SentimentThresholds::default(),
            match_mode: MatchMode::Substring,
        }
    }

    #[test]
    fn same_scenario_twice_is_byte_identical() {
        let scenario = Scenario::default();
        let one = generate(&scenario, &assets()).unwrap();
        let two = generate(&scenario, &assets()).unwrap();
        assert_eq!(one.reviews_jsonl(), two.reviews_jsonl());
        assert_eq!(one.microblogs_jsonl(), two.microblogs_jsonl());
        assert_eq!(one.downloads_jsonl(), two.downloads_jsonl());
        assert_eq!(one.truth_json(), two.truth_json());
    }

    #[test]
    fn thirty_eight_weeks_produce_38_truth_rows() {
        let scenario = Scenario::default();
        let output = generate(&scenario, &assets()).unwrap();
        assert_eq!(output.truth.windows.len(), 38);
        assert_eq!(output.truth.latent_a.len(), 38);
        // Download records cover every day of every week.
        assert_eq!(output.downloads.len(), 38 * 7 * 2);
    }

    #[test]
    fn too_short_scenarios_are_rejected() {
        let scenario = Scenario {
            weeks: 5,
            ..Scenario::default()
        };
        let err = generate(&scenario, &assets());
        assert!(matches!(
            err,
            Err(SynthError::InvalidScenario { field: "weeks", .. })
        ));
    }

    #[test]
    fn signal_out_of_range_is_rejected() {
        let scenario = Scenario {
            comparison_signal: 1.5,
            ..Scenario::default()
        };
        assert!(generate(&scenario, &assets()).is_err());
    }

    #[test]
    fn latent_path_ignores_signal_strengths() {
        let base = Scenario::default();
        let strong = Scenario {
            sentiment_signal: 1.0,
            comparison_signal: 1.0,
            ..base.clone()
        };
        let weak = Scenario {
            sentiment_signal: 0.0,
            comparison_signal: 0.0,
            ..base
        };
        let a = generate(&strong, &assets()).unwrap();
        let b = generate(&weak, &assets()).unwrap();
        assert_eq!(a.truth.latent_a, b.truth.latent_a);
        assert_eq!(a.truth.latent_b, b.truth.latent_b);
        assert_eq!(a.downloads_jsonl(), b.downloads_jsonl());
    }
}
