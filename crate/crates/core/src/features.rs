//! Competitive feature extraction and the model-ready matrix.
//!
//! Coarse features are per-sub-window scalars computed straight from the
//! bucketed records: review-count and rating differences, sentiment
//! similarity, microblog volume, cross-mention ratios, and comparison
//! direction scores. Fine features summarize each coarse feature's
//! intra-window series with eight temporal descriptors. Labels come from
//! the normalized download difference per window.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{SubWindow, WindowedDataset};
use crate::stats;
use crate::textmine::{
    cosine_similarity, count_mentions, detect_comparisons, score_sentiment,
    sentiment_distribution, ComparativeDictionary, ComparisonResult, MatchMode, SentimentLexicon,
    SentimentThresholds, TextError,
};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Stats(#[from] stats::StatsError),
    #[error("feature subset must not be empty")]
    EmptySubset,
    #[error("unknown feature tag {0:?} (expected CF, FF, AF, or MF)")]
    UnknownTag(String),
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("matrix has {rows} rows but labels cover {labels} windows")]
    RowMismatch { rows: usize, labels: usize },
}

/// Everything the text miner needs: the lexicon, the comparative
/// dictionary, per-app keyword lists, score thresholds, and match mode.
#[derive(Debug, Clone)]
pub struct TextAssets {
    pub lexicon: SentimentLexicon,
    pub dictionary: ComparativeDictionary,
    pub keywords_a: Vec<String>,
    pub keywords_b: Vec<String>,
    pub thresholds: SentimentThresholds,
    pub match_mode: MatchMode,
}

impl TextAssets {
    /// The same assets with the two apps' keyword lists exchanged.
    pub fn swapped(&self) -> TextAssets {
        TextAssets {
            keywords_a: self.keywords_b.clone(),
            keywords_b: self.keywords_a.clone(),
            ..self.clone()
        }
    }
}

/// Data source a feature derives from: app store or microblogging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SourceTag {
    Af,
    Mf,
}

/// Granularity of a feature: coarse per-window scalar or fine temporal
/// descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GrainTag {
    Cf,
    Ff,
}

impl fmt::Display for SourceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceTag::Af => "AF",
            SourceTag::Mf => "MF",
        })
    }
}

impl fmt::Display for GrainTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GrainTag::Cf => "CF",
            GrainTag::Ff => "FF",
        })
    }
}

/// One of the four selectable tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FeatureTag {
    Cf,
    Ff,
    Af,
    Mf,
}

impl FromStr for FeatureTag {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "CF" => Ok(FeatureTag::Cf),
            "FF" => Ok(FeatureTag::Ff),
            "AF" => Ok(FeatureTag::Af),
            "MF" => Ok(FeatureTag::Mf),
            other => Err(FeatureError::UnknownTag(other.to_string())),
        }
    }
}

impl fmt::Display for FeatureTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureTag::Cf => "CF",
            FeatureTag::Ff => "FF",
            FeatureTag::Af => "AF",
            FeatureTag::Mf => "MF",
        })
    }
}

/// A set of feature tags selecting matrix columns.
///
/// Selection works per axis: a column is kept when its grain tag is in
/// the subset's grain selection (or the subset names no grain at all)
/// and likewise for its source tag. `{CF}` therefore selects every
/// coarse column from both sources.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetSpec {
    tags: BTreeSet<FeatureTag>,
}

impl SubsetSpec {
    pub fn new(tags: impl IntoIterator<Item = FeatureTag>) -> Result<Self, FeatureError> {
        let tags: BTreeSet<FeatureTag> = tags.into_iter().collect();
        if tags.is_empty() {
            return Err(FeatureError::EmptySubset);
        }
        Ok(SubsetSpec { tags })
    }

    /// All four tags: the full matrix.
    pub fn full() -> Self {
        SubsetSpec {
            tags: [FeatureTag::Cf, FeatureTag::Ff, FeatureTag::Af, FeatureTag::Mf]
                .into_iter()
                .collect(),
        }
    }

    pub fn parse_list(parts: &[impl AsRef<str>]) -> Result<Self, FeatureError> {
        let mut tags = BTreeSet::new();
        for part in parts {
            tags.insert(part.as_ref().parse::<FeatureTag>()?);
        }
        if tags.is_empty() {
            return Err(FeatureError::EmptySubset);
        }
        Ok(SubsetSpec { tags })
    }

    pub fn includes(&self, grain: GrainTag, source: SourceTag) -> bool {
        let grain_tag = match grain {
            GrainTag::Cf => FeatureTag::Cf,
            GrainTag::Ff => FeatureTag::Ff,
        };
        let source_tag = match source {
            SourceTag::Af => FeatureTag::Af,
            SourceTag::Mf => FeatureTag::Mf,
        };
        let wants_grain = self.tags.contains(&FeatureTag::Cf) || self.tags.contains(&FeatureTag::Ff);
        let wants_source = self.tags.contains(&FeatureTag::Af) || self.tags.contains(&FeatureTag::Mf);
        (!wants_grain || self.tags.contains(&grain_tag))
            && (!wants_source || self.tags.contains(&source_tag))
    }

    pub fn label(&self) -> String {
        self.tags
            .iter()
            .map(FeatureTag::to_string)
            .collect::<Vec<_>>()
            .join("+")
    }
}

/// Definition of one coarse feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoarseFeatureDef {
    pub name: &'static str,
    pub source: SourceTag,
}

const BASE_FEATURES: [CoarseFeatureDef; 17] = [
    CoarseFeatureDef { name: "n_reviews_a", source: SourceTag::Af },
    CoarseFeatureDef { name: "n_reviews_b", source: SourceTag::Af },
    CoarseFeatureDef { name: "dn_norm", source: SourceTag::Af },
    CoarseFeatureDef { name: "mean_rating_a", source: SourceTag::Af },
    CoarseFeatureDef { name: "mean_rating_b", source: SourceTag::Af },
    CoarseFeatureDef { name: "ds", source: SourceTag::Af },
    CoarseFeatureDef { name: "sent_sim", source: SourceTag::Af },
    CoarseFeatureDef { name: "n_posts", source: SourceTag::Mf },
    CoarseFeatureDef { name: "n_users", source: SourceTag::Mf },
    CoarseFeatureDef { name: "n_reposts", source: SourceTag::Mf },
    CoarseFeatureDef { name: "n_comments", source: SourceTag::Mf },
    CoarseFeatureDef { name: "n_likes", source: SourceTag::Mf },
    CoarseFeatureDef { name: "r_ba", source: SourceTag::Mf },
    CoarseFeatureDef { name: "r_ab", source: SourceTag::Mf },
    CoarseFeatureDef { name: "cmp_count", source: SourceTag::Mf },
    CoarseFeatureDef { name: "cmp_score_a", source: SourceTag::Mf },
    CoarseFeatureDef { name: "cmp_score_b", source: SourceTag::Mf },
];

const ABS_FEATURES: [CoarseFeatureDef; 2] = [
    CoarseFeatureDef { name: "dn_norm_abs", source: SourceTag::Af },
    CoarseFeatureDef { name: "ds_abs", source: SourceTag::Af },
];

/// Basis for the fine descriptors: the sub-window series of the target
/// window itself, or the week-end values of a trailing stretch of
/// windows (truncated at the start of the data).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FineBasis {
    #[default]
    Daily,
    Trailing(usize),
}

/// Tendency descriptor flavor: contiguous runs (default) or general
/// subsequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MonotoneMode {
    #[default]
    ContiguousRuns,
    Subsequence,
}

#[derive(Debug, Clone, Default)]
pub struct FeatureOptions {
    pub fine_basis: FineBasis,
    pub monotone: MonotoneMode,
    /// Also emit `dn_norm_abs` and `ds_abs` columns carrying the
    /// unsigned differences.
    pub include_absolute_diffs: bool,
}

/// Per-sub-window values of every coarse feature.
#[derive(Debug, Clone)]
pub struct CoarseSeries {
    pub features: Vec<CoarseFeatureDef>,
    pub window_count: usize,
    pub subs_per_window: usize,
    values: Vec<Vec<f64>>,
}

impl CoarseSeries {
    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    /// The full per-sub-window series of one feature.
    pub fn series(&self, feature: usize) -> &[f64] {
        &self.values[feature]
    }

    /// The sub-window series of one feature inside window `w`.
    pub fn sub_series(&self, feature: usize, w: usize) -> &[f64] {
        let start = w * self.subs_per_window;
        &self.values[feature][start..start + self.subs_per_window]
    }

    /// Week-end value: the feature at the last sub-window of window `w`.
    pub fn week_end(&self, feature: usize, w: usize) -> f64 {
        self.values[feature][(w + 1) * self.subs_per_window - 1]
    }
}

fn mean_rating(reviews: &[crate::ingest::ReviewRecord]) -> f64 {
    let ratings: Vec<f64> = reviews
        .iter()
        .filter_map(|r| r.rating.map(f64::from))
        .collect();
    if ratings.is_empty() {
        // Scale midpoint stands in when a side has no ratings.
        3.0
    } else {
        ratings.iter().sum::<f64>() / ratings.len() as f64
    }
}

fn sub_window_values(cell: &SubWindow, assets: &TextAssets) -> Result<Vec<f64>, FeatureError> {
    let n_a = cell.reviews_a.len() as f64;
    let n_b = cell.reviews_b.len() as f64;
    let dn_norm = if n_a + n_b == 0.0 {
        0.0
    } else {
        (n_a - n_b) / (n_a + n_b)
    };
    let mean_a = mean_rating(&cell.reviews_a);
    let mean_b = mean_rating(&cell.reviews_b);
    let ds = mean_a - mean_b;

    let score = |reviews: &[crate::ingest::ReviewRecord]| -> Vec<f64> {
        reviews
            .iter()
            .map(|r| score_sentiment(&r.text, &assets.lexicon, assets.match_mode))
            .collect()
    };
    let dist_a = sentiment_distribution(&score(&cell.reviews_a), assets.thresholds)?;
    let dist_b = sentiment_distribution(&score(&cell.reviews_b), assets.thresholds)?;
    let sent_sim = cosine_similarity(&dist_a, &dist_b);

    let n_posts = cell.posts_both.len() as f64;
    let n_users = cell
        .posts_both
        .iter()
        .map(|p| p.user_id.as_str())
        .collect::<BTreeSet<_>>()
        .len() as f64;
    let n_reposts = cell.posts_both.iter().map(|p| p.reposts).sum::<u64>() as f64;
    let n_comments = cell.posts_both.iter().map(|p| p.comments).sum::<u64>() as f64;
    let n_likes = cell.posts_both.iter().map(|p| p.likes).sum::<u64>() as f64;

    let ratio = |posts: &[crate::ingest::MicroblogRecord],
                 num_kw: &[String],
                 den_kw: &[String]| {
        let texts: Vec<&str> = posts.iter().map(|p| p.text.as_str()).collect();
        let den = count_mentions(&texts, den_kw, assets.match_mode);
        if den == 0 {
            0.0
        } else {
            count_mentions(&texts, num_kw, assets.match_mode) as f64 / den as f64
        }
    };
    let r_ba = ratio(&cell.posts_a, &assets.keywords_b, &assets.keywords_a);
    let r_ab = ratio(&cell.posts_b, &assets.keywords_a, &assets.keywords_b);

    let mut cmp = ComparisonResult::default();
    for post in &cell.posts_both {
        cmp.accumulate(detect_comparisons(
            &post.text,
            &assets.dictionary,
            &assets.keywords_a,
            &assets.keywords_b,
            assets.match_mode,
        ));
    }

    Ok(vec![
        n_a,
        n_b,
        dn_norm,
        mean_a,
        mean_b,
        ds,
        sent_sim,
        n_posts,
        n_users,
        n_reposts,
        n_comments,
        n_likes,
        r_ba,
        r_ab,
        cmp.count as f64,
        cmp.score_a as f64,
        cmp.score_b as f64,
    ])
}

/// Compute every coarse feature for every sub-window.
pub fn coarse_features(
    windowed: &WindowedDataset,
    assets: &TextAssets,
    opts: &FeatureOptions,
) -> Result<CoarseSeries, FeatureError> {
    let mut features: Vec<CoarseFeatureDef> = BASE_FEATURES.to_vec();
    if opts.include_absolute_diffs {
        features.extend(ABS_FEATURES);
    }
    let subs_per_window = windowed.spec.subs_per_window();
    let window_count = windowed.window_count();
    let mut values = vec![Vec::with_capacity(window_count * subs_per_window); features.len()];

    let dn_idx = BASE_FEATURES.iter().position(|f| f.name == "dn_norm").unwrap();
    let ds_idx = BASE_FEATURES.iter().position(|f| f.name == "ds").unwrap();

    for window in &windowed.windows {
        for cell in &window.subs {
            let base = sub_window_values(cell, assets)?;
            for (feature, value) in base.iter().enumerate() {
                values[feature].push(*value);
            }
            if opts.include_absolute_diffs {
                values[BASE_FEATURES.len()].push(base[dn_idx].abs());
                values[BASE_FEATURES.len() + 1].push(base[ds_idx].abs());
            }
        }
    }

    Ok(CoarseSeries {
        features,
        window_count,
        subs_per_window,
        values,
    })
}

/// Number of strict drops in a series; re-exported here because it is one
/// of the fine descriptors.
pub use crate::stats::{hopping_count, longest_monotone_runs, longest_monotone_subsequences};

/// The eight temporal descriptors of one coarse feature's sub-series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FineStats {
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub hop_count: f64,
    pub longest_inc_run: f64,
    pub longest_dec_run: f64,
}

pub const FINE_DESCRIPTORS: [&str; 8] = [
    "mean",
    "std",
    "median",
    "min",
    "max",
    "hop_count",
    "longest_inc_run",
    "longest_dec_run",
];

impl FineStats {
    pub fn describe(series: &[f64], monotone: MonotoneMode) -> Result<FineStats, FeatureError> {
        let (inc, dec) = match monotone {
            MonotoneMode::ContiguousRuns => stats::longest_monotone_runs(series)?,
            MonotoneMode::Subsequence => stats::longest_monotone_subsequences(series)?,
        };
        Ok(FineStats {
            mean: stats::mean(series)?,
            std: stats::population_std(series)?,
            median: stats::median(series)?,
            min: stats::min(series)?,
            max: stats::max(series)?,
            hop_count: stats::hopping_count(series) as f64,
            longest_inc_run: inc as f64,
            longest_dec_run: dec as f64,
        })
    }

    pub fn get(&self, descriptor: &str) -> Option<f64> {
        match descriptor {
            "mean" => Some(self.mean),
            "std" => Some(self.std),
            "median" => Some(self.median),
            "min" => Some(self.min),
            "max" => Some(self.max),
            "hop_count" => Some(self.hop_count),
            "longest_inc_run" => Some(self.longest_inc_run),
            "longest_dec_run" => Some(self.longest_dec_run),
            _ => None,
        }
    }
}

/// Fine descriptors of every coarse feature for one window.
#[derive(Debug, Clone)]
pub struct FineVector {
    pub per_feature: Vec<FineStats>,
}

/// Compute the fine descriptors for window `w` on the configured basis.
pub fn fine_features(
    coarse: &CoarseSeries,
    w: usize,
    opts: &FeatureOptions,
) -> Result<FineVector, FeatureError> {
    let mut per_feature = Vec::with_capacity(coarse.features.len());
    for feature in 0..coarse.features.len() {
        let stats = match opts.fine_basis {
            FineBasis::Daily => FineStats::describe(coarse.sub_series(feature, w), opts.monotone)?,
            FineBasis::Trailing(l) => {
                let start = (w + 1).saturating_sub(l.max(1));
                let series: Vec<f64> = (start..=w).map(|i| coarse.week_end(feature, i)).collect();
                FineStats::describe(&series, opts.monotone)?
            }
        };
        per_feature.push(stats);
    }
    Ok(FineVector { per_feature })
}

/// Which app won a window's popularity contest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContestClass {
    APositive,
    BPositive,
}

impl ContestClass {
    pub fn swapped(self) -> ContestClass {
        match self {
            ContestClass::APositive => ContestClass::BPositive,
            ContestClass::BPositive => ContestClass::APositive,
        }
    }

    /// Class index for the model layer. `BPositive` is index 0 so that
    /// vote ties resolve to the "not A more popular" side.
    pub fn to_index(self) -> usize {
        match self {
            ContestClass::BPositive => 0,
            ContestClass::APositive => 1,
        }
    }

    pub fn from_index(index: usize) -> ContestClass {
        if index == 0 {
            ContestClass::BPositive
        } else {
            ContestClass::APositive
        }
    }
}

impl fmt::Display for ContestClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ContestClass::APositive => "APositive",
            ContestClass::BPositive => "BPositive",
        })
    }
}

impl FromStr for ContestClass {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "APositive" => Ok(ContestClass::APositive),
            "BPositive" => Ok(ContestClass::BPositive),
            other => Err(FeatureError::Csv {
                line: 0,
                message: format!("unknown contest class {other:?}"),
            }),
        }
    }
}

/// Labels for one window: download sums, the normalized difference `pc`,
/// the winner class, and the intensity `|pc|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowLabel {
    pub downloads_a: u64,
    pub downloads_b: u64,
    pub pc: f64,
    pub cr: ContestClass,
    pub ci: f64,
    /// Set when the window saw no downloads at all; pc defaults to 0.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ContestLabels {
    pub windows: Vec<WindowLabel>,
}

impl ContestLabels {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn pc_series(&self) -> Vec<f64> {
        self.windows.iter().map(|w| w.pc).collect()
    }

    pub fn cr_series(&self) -> Vec<ContestClass> {
        self.windows.iter().map(|w| w.cr).collect()
    }

    pub fn ci_series(&self) -> Vec<f64> {
        self.windows.iter().map(|w| w.ci).collect()
    }
}

/// Label from one window's download sums.
pub fn label_from_downloads(downloads_a: u64, downloads_b: u64) -> WindowLabel {
    let total = downloads_a + downloads_b;
    let (pc, degenerate) = if total == 0 {
        (0.0, true)
    } else {
        (
            (downloads_a as f64 - downloads_b as f64) / total as f64,
            false,
        )
    };
    let cr = if pc > 0.0 {
        ContestClass::APositive
    } else {
        ContestClass::BPositive
    };
    WindowLabel {
        downloads_a,
        downloads_b,
        pc,
        cr,
        ci: pc.abs(),
        degenerate,
    }
}

/// Per-window contest labels from the bucketed download records.
pub fn compute_labels(windowed: &WindowedDataset) -> ContestLabels {
    let windows = (0..windowed.window_count())
        .map(|w| {
            let (a, b) = windowed.downloads_in_window(w);
            label_from_downloads(a, b)
        })
        .collect();
    ContestLabels { windows }
}

/// One matrix column: header name plus its two group tags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    pub grain: GrainTag,
    pub source: SourceTag,
}

impl Column {
    pub fn header(&self) -> String {
        format!("{}|{}|{}", self.name, self.grain, self.source)
    }

    pub fn parse_header(header: &str) -> Result<Column, FeatureError> {
        let parts: Vec<&str> = header.split('|').collect();
        if parts.len() != 3 {
            return Err(FeatureError::UnknownColumn(header.to_string()));
        }
        let grain = match parts[1] {
            "CF" => GrainTag::Cf,
            "FF" => GrainTag::Ff,
            _ => return Err(FeatureError::UnknownColumn(header.to_string())),
        };
        let source = match parts[2] {
            "AF" => SourceTag::Af,
            "MF" => SourceTag::Mf,
            _ => return Err(FeatureError::UnknownColumn(header.to_string())),
        };
        Ok(Column {
            name: parts[0].to_string(),
            grain,
            source,
        })
    }
}

/// Model-ready matrix: one row per window, columns tagged by grain and
/// source, labels row-aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<f64>>,
    pub labels: ContestLabels,
}

/// Assemble the matrix for a subset of the tag space.
///
/// Coarse columns carry the week-end sub-window value of each coarse
/// feature; fine columns carry the eight descriptors. Columns are
/// ordered lexicographically by header so output layout never depends on
/// construction order.
pub fn build_matrix(
    coarse: &CoarseSeries,
    fines: &[FineVector],
    labels: &ContestLabels,
    subset: &SubsetSpec,
) -> Result<FeatureMatrix, FeatureError> {
    if coarse.window_count != labels.len() || fines.len() != labels.len() {
        return Err(FeatureError::RowMismatch {
            rows: coarse.window_count.min(fines.len()),
            labels: labels.len(),
        });
    }

    enum ValueSource {
        WeekEnd(usize),
        Fine(usize, &'static str),
    }

    let mut selected: Vec<(Column, ValueSource)> = Vec::new();
    for (idx, feature) in coarse.features.iter().enumerate() {
        if subset.includes(GrainTag::Cf, feature.source) {
            selected.push((
                Column {
                    name: feature.name.to_string(),
                    grain: GrainTag::Cf,
                    source: feature.source,
                },
                ValueSource::WeekEnd(idx),
            ));
        }
        if subset.includes(GrainTag::Ff, feature.source) {
            for descriptor in FINE_DESCRIPTORS {
                selected.push((
                    Column {
                        name: format!("{}:{}", feature.name, descriptor),
                        grain: GrainTag::Ff,
                        source: feature.source,
                    },
                    ValueSource::Fine(idx, descriptor),
                ));
            }
        }
    }
    if selected.is_empty() {
        return Err(FeatureError::EmptySubset);
    }
    selected.sort_by_key(|(column, _)| column.header());

    let rows = (0..labels.len())
        .map(|w| {
            selected
                .iter()
                .map(|(_, source)| match source {
                    ValueSource::WeekEnd(f) => coarse.week_end(*f, w),
                    ValueSource::Fine(f, descriptor) => fines[w].per_feature[*f]
                        .get(descriptor)
                        .expect("descriptor name is valid"),
                })
                .collect()
        })
        .collect();

    Ok(FeatureMatrix {
        columns: selected.into_iter().map(|(c, _)| c).collect(),
        rows,
        labels: labels.clone(),
    })
}

impl FeatureMatrix {
    pub fn window_count(&self) -> usize {
        self.rows.len()
    }

    /// Project onto a subset of the columns; values are untouched.
    pub fn project(&self, subset: &SubsetSpec) -> Result<FeatureMatrix, FeatureError> {
        let keep: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| subset.includes(c.grain, c.source))
            .map(|(i, _)| i)
            .collect();
        if keep.is_empty() {
            return Err(FeatureError::EmptySubset);
        }
        Ok(FeatureMatrix {
            columns: keep.iter().map(|&i| self.columns[i].clone()).collect(),
            rows: self
                .rows
                .iter()
                .map(|row| keep.iter().map(|&i| row[i]).collect())
                .collect(),
            labels: self.labels.clone(),
        })
    }

    /// CSV with a header row; floats use the shortest representation
    /// that parses back to the same value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("window");
        for column in &self.columns {
            out.push(',');
            out.push_str(&column.header());
        }
        out.push('\n');
        for (w, row) in self.rows.iter().enumerate() {
            out.push_str(&w.to_string());
            for value in row {
                out.push(',');
                out.push_str(&value.to_string());
            }
            out.push('\n');
        }
        out
    }

    /// Parse a features CSV (as produced by [`FeatureMatrix::to_csv`],
    /// possibly with leading `#` comment lines) against known labels.
    pub fn from_csv(features_csv: &str, labels: ContestLabels) -> Result<FeatureMatrix, FeatureError> {
        let mut lines = features_csv
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(FeatureError::Csv {
            line: 1,
            message: "missing header row".into(),
        })?;
        let mut fields = header.split(',');
        if fields.next() != Some("window") {
            return Err(FeatureError::Csv {
                line: 1,
                message: "first column must be 'window'".into(),
            });
        }
        let columns: Vec<Column> = fields
            .map(Column::parse_header)
            .collect::<Result<_, _>>()?;

        let mut rows = Vec::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            let mut fields = line.split(',');
            let window: usize = fields
                .next()
                .and_then(|f| f.parse().ok())
                .ok_or(FeatureError::Csv {
                    line: line_no,
                    message: "bad window index".into(),
                })?;
            if window != rows.len() {
                return Err(FeatureError::Csv {
                    line: line_no,
                    message: format!("expected window {}, found {window}", rows.len()),
                });
            }
            let row: Vec<f64> = fields
                .map(|f| f.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| FeatureError::Csv {
                    line: line_no,
                    message: e.to_string(),
                })?;
            if row.len() != columns.len() {
                return Err(FeatureError::Csv {
                    line: line_no,
                    message: format!("expected {} values, found {}", columns.len(), row.len()),
                });
            }
            rows.push(row);
        }
        if rows.len() != labels.len() {
            return Err(FeatureError::RowMismatch {
                rows: rows.len(),
                labels: labels.len(),
            });
        }
        Ok(FeatureMatrix {
            columns,
            rows,
            labels,
        })
    }
}

impl ContestLabels {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("window,downloads_a,downloads_b,pc,cr,ci,degenerate\n");
        for (w, label) in self.windows.iter().enumerate() {
            out.push_str(&format!(
                "{w},{},{},{},{},{},{}\n",
                label.downloads_a, label.downloads_b, label.pc, label.cr, label.ci, label.degenerate
            ));
        }
        out
    }

    pub fn from_csv(csv: &str) -> Result<ContestLabels, FeatureError> {
        let mut lines = csv
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
        lines.next().ok_or(FeatureError::Csv {
            line: 1,
            message: "missing header row".into(),
        })?;
        let mut windows = Vec::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(FeatureError::Csv {
                    line: line_no,
                    message: format!("expected 7 fields, found {}", fields.len()),
                });
            }
            let parse_err = |message: String| FeatureError::Csv {
                line: line_no,
                message,
            };
            windows.push(WindowLabel {
                downloads_a: fields[1].parse().map_err(|_| parse_err("bad downloads_a".into()))?,
                downloads_b: fields[2].parse().map_err(|_| parse_err("bad downloads_b".into()))?,
                pc: fields[3].parse().map_err(|_| parse_err("bad pc".into()))?,
                cr: fields[4].parse()?,
                ci: fields[5].parse().map_err(|_| parse_err("bad ci".into()))?,
                degenerate: fields[6].parse().map_err(|_| parse_err("bad degenerate flag".into()))?,
            });
        }
        Ok(ContestLabels { windows })
    }
}

/// Convenience: coarse + fine + labels + matrix in one pass.
pub fn extract_matrix(
    windowed: &WindowedDataset,
    assets: &TextAssets,
    opts: &FeatureOptions,
    subset: &SubsetSpec,
) -> Result<FeatureMatrix, FeatureError> {
    let coarse = coarse_features(windowed, assets, opts)?;
    let fines: Vec<FineVector> = (0..coarse.window_count)
        .map(|w| fine_features(&coarse, w, opts))
        .collect::<Result<_, _>>()?;
    let labels = compute_labels(windowed);
    build_matrix(&coarse, &fines, &labels, subset)
}
