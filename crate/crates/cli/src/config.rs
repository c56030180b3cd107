//! Pipeline configuration: a single JSON file plus flag overrides
//! (flags win). Relative paths inside the config resolve against the
//! config file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rivalcast_core::features::{FineBasis, MonotoneMode, SubsetSpec};
use rivalcast_core::ingest::{ts_format, WindowSpec};
use rivalcast_core::model::{ForestParams, TreeParams};
use rivalcast_core::synth::Scenario;
use rivalcast_core::textmine::{MatchMode, SentimentThresholds};
use rivalcast_core::EvalScheme;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    pub reviews: PathBuf,
    pub microblogs: PathBuf,
    pub downloads: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    pub origin: String,
    pub window_length_secs: i64,
    pub sub_window_length_secs: i64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            origin: "2021-01-04T00:00:00Z".into(),
            window_length_secs: 7 * 86_400,
            sub_window_length_secs: 86_400,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub mtry: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: 12,
            min_samples_split: 2,
            mtry: None,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub train_weeks: usize,
    pub strict_forecast: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            train_weeks: 10,
            strict_forecast: false,
        }
    }
}

/// Generator controls without `seed` and `origin`: those always come
/// from the top-level seed and the window origin.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub weeks: usize,
    pub base_a: f64,
    pub drift_a: f64,
    pub base_b: f64,
    pub drift_b: f64,
    pub noise: f64,
    pub sentiment_signal: f64,
    pub comparison_signal: f64,
    pub review_volume: f64,
    pub post_volume: f64,
    pub download_volume: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let s = Scenario::default();
        ScenarioConfig {
            weeks: s.weeks,
            base_a: s.base_a,
            drift_a: s.drift_a,
            base_b: s.base_b,
            drift_b: s.drift_b,
            noise: s.noise,
            sentiment_signal: s.sentiment_signal,
            comparison_signal: s.comparison_signal,
            review_volume: s.review_volume,
            post_volume: s.post_volume,
            download_volume: s.download_volume,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub inputs: Option<InputPaths>,
    pub lexicon: Option<PathBuf>,
    pub comparative_dictionary: Option<PathBuf>,
    pub keywords_a: Vec<String>,
    pub keywords_b: Vec<String>,
    pub window: WindowConfig,
    pub sentiment_thresholds: [f64; 2],
    pub match_mode: MatchMode,
    /// "daily" or "trailing:L".
    pub fine_basis: String,
    /// "runs" or "subsequence".
    pub monotone: String,
    pub include_absolute_diffs: bool,
    pub subset: Vec<String>,
    pub ablation_subsets: Vec<Vec<String>>,
    pub forest: ForestConfig,
    pub eval: EvalConfig,
    pub strict: bool,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
    pub synth: Option<ScenarioConfig>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            inputs: None,
            lexicon: None,
            comparative_dictionary: None,
            keywords_a: Vec::new(),
            keywords_b: Vec::new(),
            window: WindowConfig::default(),
            sentiment_thresholds: [0.4, 0.6],
            match_mode: MatchMode::Substring,
            fine_basis: "daily".into(),
            monotone: "runs".into(),
            include_absolute_diffs: false,
            subset: vec!["CF".into(), "FF".into(), "AF".into(), "MF".into()],
            ablation_subsets: vec![
                vec!["CF".into()],
                vec!["FF".into()],
                vec!["CF".into(), "FF".into()],
                vec!["AF".into()],
                vec!["MF".into()],
                vec!["AF".into(), "MF".into()],
            ],
            forest: ForestConfig::default(),
            eval: EvalConfig::default(),
            strict: false,
            seed: 42,
            out_dir: PathBuf::from("out"),
            threads: None,
            synth: None,
        }
    }
}

/// Flag overrides; any set flag wins over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub subset: Option<Vec<String>>,
    pub train_weeks: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub strict: bool,
    pub fine_basis: Option<String>,
    pub threads: Option<usize>,
}

fn config_error(field: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

impl PipelineConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<PipelineConfig, CliError> {
        if !path.exists() {
            return Err(CliError::MissingFile(path.to_path_buf()));
        }
        let raw = fs::read_to_string(path)
            .map_err(|e| CliError::Internal(format!("reading {}: {e}", path.display())))?;
        let mut config: PipelineConfig = serde_json::from_str(&raw)
            .map_err(|e| config_error("config", e.to_string()))?;

        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.resolve_paths(base);

        if let Some(seed) = overrides.seed {
            config.seed = seed;
        }
        if let Some(subset) = &overrides.subset {
            config.subset = subset.clone();
        }
        if let Some(train_weeks) = overrides.train_weeks {
            config.eval.train_weeks = train_weeks;
        }
        if let Some(out_dir) = &overrides.out_dir {
            config.out_dir = out_dir.clone();
        }
        if overrides.strict {
            config.strict = true;
        }
        if let Some(fine_basis) = &overrides.fine_basis {
            config.fine_basis = fine_basis.clone();
        }
        if let Some(threads) = overrides.threads {
            config.threads = Some(threads);
        }

        config.validate()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&p);
            }
        };
        if let Some(inputs) = &mut self.inputs {
            rebase(&mut inputs.reviews);
            rebase(&mut inputs.microblogs);
            rebase(&mut inputs.downloads);
        }
        if let Some(lexicon) = &mut self.lexicon {
            rebase(lexicon);
        }
        if let Some(dictionary) = &mut self.comparative_dictionary {
            rebase(dictionary);
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.window_spec()?;
        self.thresholds()?;
        self.subset_spec()?;
        self.fine_basis()?;
        self.monotone_mode()?;
        for (i, subset) in self.ablation_subsets.iter().enumerate() {
            SubsetSpec::parse_list(subset)
                .map_err(|e| config_error("ablation_subsets", format!("entry {i}: {e}")))?;
        }
        if self.forest.n_trees < 1 {
            return Err(config_error("forest.n_trees", "must be >= 1"));
        }
        if self.forest.max_depth < 1 {
            return Err(config_error("forest.max_depth", "must be >= 1"));
        }
        if self.forest.min_samples_split < 2 {
            return Err(config_error("forest.min_samples_split", "must be >= 2"));
        }
        if self.eval.train_weeks < 1 {
            return Err(config_error("eval.train_weeks", "must be >= 1"));
        }
        if let Some(scenario) = &self.synth {
            self.scenario(scenario)
                .validate()
                .map_err(|e| config_error("synth", e.to_string()))?;
        }
        Ok(())
    }

    pub fn window_spec(&self) -> Result<WindowSpec, CliError> {
        let origin = ts_format::parse(&self.window.origin)
            .map_err(|e| config_error("window.origin", e))?;
        let spec = WindowSpec {
            origin,
            window_length: chrono::Duration::seconds(self.window.window_length_secs),
            sub_window_length: chrono::Duration::seconds(self.window.sub_window_length_secs),
        };
        spec.validate().map_err(|e| config_error("window", e.to_string()))?;
        Ok(spec)
    }

    pub fn thresholds(&self) -> Result<SentimentThresholds, CliError> {
        let thresholds = SentimentThresholds {
            lo: self.sentiment_thresholds[0],
            hi: self.sentiment_thresholds[1],
        };
        thresholds
            .validate()
            .map_err(|e| config_error("sentiment_thresholds", e.to_string()))?;
        Ok(thresholds)
    }

    pub fn subset_spec(&self) -> Result<SubsetSpec, CliError> {
        SubsetSpec::parse_list(&self.subset).map_err(|e| config_error("subset", e.to_string()))
    }

    pub fn ablation_specs(&self) -> Result<Vec<SubsetSpec>, CliError> {
        self.ablation_subsets
            .iter()
            .map(|s| {
                SubsetSpec::parse_list(s)
                    .map_err(|e| config_error("ablation_subsets", e.to_string()))
            })
            .collect()
    }

    pub fn fine_basis(&self) -> Result<FineBasis, CliError> {
        let raw = self.fine_basis.trim();
        if raw == "daily" {
            return Ok(FineBasis::Daily);
        }
        if let Some(weeks) = raw.strip_prefix("trailing:") {
            let l: usize = weeks
                .parse()
                .map_err(|_| config_error("fine_basis", format!("bad trailing length {weeks:?}")))?;
            if l < 1 {
                return Err(config_error("fine_basis", "trailing length must be >= 1"));
            }
            return Ok(FineBasis::Trailing(l));
        }
        Err(config_error(
            "fine_basis",
            format!("expected \"daily\" or \"trailing:L\", got {raw:?}"),
        ))
    }

    pub fn monotone_mode(&self) -> Result<MonotoneMode, CliError> {
        match self.monotone.trim() {
            "runs" => Ok(MonotoneMode::ContiguousRuns),
            "subsequence" => Ok(MonotoneMode::Subsequence),
            other => Err(config_error(
                "monotone",
                format!("expected \"runs\" or \"subsequence\", got {other:?}"),
            )),
        }
    }

    pub fn forest_params(&self) -> ForestParams {
        ForestParams {
            n_trees: self.forest.n_trees,
            mtry: self.forest.mtry,
            bootstrap: self.forest.bootstrap,
            seed: self.seed,
            tree: TreeParams {
                max_depth: self.forest.max_depth,
                min_samples_split: self.forest.min_samples_split,
            },
        }
    }

    pub fn eval_scheme(&self) -> EvalScheme {
        EvalScheme {
            train_weeks: self.eval.train_weeks,
            strict_forecast: self.eval.strict_forecast,
        }
    }

    pub fn scenario(&self, sc: &ScenarioConfig) -> Scenario {
        Scenario {
            weeks: sc.weeks,
            seed: self.seed,
            origin: ts_format::parse(&self.window.origin).expect("validated origin"),
            base_a: sc.base_a,
            drift_a: sc.drift_a,
            base_b: sc.base_b,
            drift_b: sc.drift_b,
            noise: sc.noise,
            sentiment_signal: sc.sentiment_signal,
            comparison_signal: sc.comparison_signal,
            review_volume: sc.review_volume,
            post_volume: sc.post_volume,
            download_volume: sc.download_volume,
        }
    }

    /// Path of a generated-or-provided input stream.
    pub fn input_path(&self, which: InputFile) -> PathBuf {
        match (&self.inputs, which) {
            (Some(inputs), InputFile::Reviews) => inputs.reviews.clone(),
            (Some(inputs), InputFile::Microblogs) => inputs.microblogs.clone(),
            (Some(inputs), InputFile::Downloads) => inputs.downloads.clone(),
            (None, which) => self.out_dir.join(which.default_name()),
        }
    }

    /// Hash of the experiment semantics. File locations, the output
    /// directory, and thread counts are deliberately excluded so the
    /// same experiment hashes identically wherever it runs.
    pub fn semantic_hash(&self) -> String {
        #[derive(Serialize)]
        struct View<'a> {
            keywords_a: &'a [String],
            keywords_b: &'a [String],
            window: &'a WindowConfig,
            sentiment_thresholds: [f64; 2],
            match_mode: MatchMode,
            fine_basis: &'a str,
            monotone: &'a str,
            include_absolute_diffs: bool,
            subset: &'a [String],
            ablation_subsets: &'a [Vec<String>],
            forest: &'a ForestConfig,
            eval: &'a EvalConfig,
            strict: bool,
            seed: u64,
            synth: &'a Option<ScenarioConfig>,
        }
        let view = View {
            keywords_a: &self.keywords_a,
            keywords_b: &self.keywords_b,
            window: &self.window,
            sentiment_thresholds: self.sentiment_thresholds,
            match_mode: self.match_mode,
            fine_basis: &self.fine_basis,
            monotone: &self.monotone,
            include_absolute_diffs: self.include_absolute_diffs,
            subset: &self.subset,
            ablation_subsets: &self.ablation_subsets,
            forest: &self.forest,
            eval: &self.eval,
            strict: self.strict,
            seed: self.seed,
            synth: &self.synth,
        };
        let canonical = serde_json::to_string(&view).expect("config serialization");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(64);
        for byte in digest {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }
}

#[derive(Debug, Clone, Copy)]
pub enum InputFile {
    Reviews,
    Microblogs,
    Downloads,
}

impl InputFile {
    pub fn default_name(self) -> &'static str {
        match self {
            InputFile::Reviews => "reviews.jsonl",
            InputFile::Microblogs => "microblogs.jsonl",
            InputFile::Downloads => "downloads.jsonl",
        }
    }
}
