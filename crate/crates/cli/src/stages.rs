//! The five pipeline stages. Each stage reads only files produced by
//! earlier stages (or the configured inputs), writes its outputs under
//! the output directory, and embeds the config hash and seed in every
//! artifact it produces.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rivalcast_core::eval::{ablation_run, rolling_evaluate, AblationReport, AblationRow, EvalReport};
use rivalcast_core::features::{
    extract_matrix, ContestLabels, FeatureMatrix, FeatureOptions, TextAssets, WindowLabel,
};
use rivalcast_core::ingest::{
    bucket, parse_downloads, parse_downloads_lenient, parse_microblogs, parse_microblogs_lenient,
    parse_reviews, parse_reviews_lenient, SkippedLine,
};
use rivalcast_core::model::{fit_forest, TrainingTargets};
use rivalcast_core::synth::generate;
use rivalcast_core::textmine::{ComparativeDictionary, SentimentLexicon};
use rivalcast_core::Forest;

use crate::config::{InputFile, PipelineConfig};
use crate::CliError;

pub struct Stage<'a> {
    pub config: &'a PipelineConfig,
    pub config_hash: String,
}

impl<'a> Stage<'a> {
    pub fn new(config: &'a PipelineConfig) -> Stage<'a> {
        Stage {
            config_hash: config.semantic_hash(),
            config,
        }
    }

    fn provenance_comment(&self) -> String {
        format!("# config_hash={} seed={}\n", self.config_hash, self.config.seed)
    }

    fn out_path(&self, name: &str) -> PathBuf {
        self.config.out_dir.join(name)
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.config.out_dir).map_err(|e| {
            CliError::Internal(format!(
                "creating {}: {e}",
                self.config.out_dir.display()
            ))
        })?;
        let path = self.out_path(name);
        fs::write(&path, contents)
            .map_err(|e| CliError::Internal(format!("writing {}: {e}", path.display())))?;
        Ok(path)
    }

    fn open(&self, path: &Path) -> Result<BufReader<fs::File>, CliError> {
        if !path.exists() {
            return Err(CliError::MissingFile(path.to_path_buf()));
        }
        fs::File::open(path)
            .map(BufReader::new)
            .map_err(|e| CliError::Internal(format!("opening {}: {e}", path.display())))
    }

    fn read_to_string(&self, path: &Path) -> Result<String, CliError> {
        if !path.exists() {
            return Err(CliError::MissingFile(path.to_path_buf()));
        }
        fs::read_to_string(path)
            .map_err(|e| CliError::Internal(format!("reading {}: {e}", path.display())))
    }

    fn text_assets(&self) -> Result<TextAssets, CliError> {
        let lexicon_path = self.config.lexicon.as_ref().ok_or_else(|| CliError::Config {
            field: "lexicon".into(),
            message: "a lexicon file is required".into(),
        })?;
        let dictionary_path =
            self.config
                .comparative_dictionary
                .as_ref()
                .ok_or_else(|| CliError::Config {
                    field: "comparative_dictionary".into(),
                    message: "a comparative dictionary file is required".into(),
                })?;
        if self.config.keywords_a.is_empty() {
            return Err(CliError::Config {
                field: "keywords_a".into(),
                message: "at least one keyword is required".into(),
            });
        }
        if self.config.keywords_b.is_empty() {
            return Err(CliError::Config {
                field: "keywords_b".into(),
                message: "at least one keyword is required".into(),
            });
        }
        let lexicon = SentimentLexicon::from_jsonl(self.open(lexicon_path)?)
            .map_err(|e| CliError::Internal(format!("{}: {e}", lexicon_path.display())))?;
        let dictionary = ComparativeDictionary::from_jsonl(self.open(dictionary_path)?)
            .map_err(|e| CliError::Internal(format!("{}: {e}", dictionary_path.display())))?;
        Ok(TextAssets {
            lexicon,
            dictionary,
            keywords_a: self.config.keywords_a.clone(),
            keywords_b: self.config.keywords_b.clone(),
            thresholds: self.config.thresholds()?,
            match_mode: self.config.match_mode,
        })
    }

    fn feature_options(&self) -> Result<FeatureOptions, CliError> {
        Ok(FeatureOptions {
            fine_basis: self.config.fine_basis()?,
            monotone: self.config.monotone_mode()?,
            include_absolute_diffs: self.config.include_absolute_diffs,
        })
    }

    pub fn synth(&self) -> Result<(), CliError> {
        let scenario_config = self.config.synth.as_ref().ok_or_else(|| CliError::Config {
            field: "synth".into(),
            message: "synth requires a scenario section".into(),
        })?;
        let scenario = self.config.scenario(scenario_config);
        let assets = self.text_assets()?;
        let output = generate(&scenario, &assets)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        self.write(InputFile::Reviews.default_name(), &output.reviews_jsonl())?;
        self.write(InputFile::Microblogs.default_name(), &output.microblogs_jsonl())?;
        self.write(InputFile::Downloads.default_name(), &output.downloads_jsonl())?;
        self.write("truth.json", &output.truth_json())?;
        println!(
            "synth: {} weeks, {} reviews, {} posts, {} download records -> {}",
            scenario.weeks,
            output.reviews.len(),
            output.microblogs.len(),
            output.downloads.len(),
            self.config.out_dir.display()
        );
        Ok(())
    }

    pub fn featurize(&self) -> Result<(), CliError> {
        let assets = self.text_assets()?;
        let opts = self.feature_options()?;
        let spec = self.config.window_spec()?;

        let reviews_path = self.config.input_path(InputFile::Reviews);
        let microblogs_path = self.config.input_path(InputFile::Microblogs);
        let downloads_path = self.config.input_path(InputFile::Downloads);

        let data_error = |path: &Path, e: rivalcast_core::ingest::IngestError| {
            CliError::Internal(format!("{}: {e}", path.display()))
        };

        let mut skipped: Vec<(String, SkippedLine)> = Vec::new();
        let (reviews, microblogs, downloads) = if self.config.strict {
            (
                parse_reviews(self.open(&reviews_path)?)
                    .map_err(|e| data_error(&reviews_path, e))?,
                parse_microblogs(self.open(&microblogs_path)?)
                    .map_err(|e| data_error(&microblogs_path, e))?,
                parse_downloads(self.open(&downloads_path)?)
                    .map_err(|e| data_error(&downloads_path, e))?,
            )
        } else {
            let (reviews, skipped_reviews) = parse_reviews_lenient(self.open(&reviews_path)?)
                .map_err(|e| data_error(&reviews_path, e))?;
            let (microblogs, skipped_posts) =
                parse_microblogs_lenient(self.open(&microblogs_path)?)
                    .map_err(|e| data_error(&microblogs_path, e))?;
            let (downloads, skipped_downloads) =
                parse_downloads_lenient(self.open(&downloads_path)?)
                    .map_err(|e| data_error(&downloads_path, e))?;
            for s in skipped_reviews {
                skipped.push((reviews_path.display().to_string(), s));
            }
            for s in skipped_posts {
                skipped.push((microblogs_path.display().to_string(), s));
            }
            for s in skipped_downloads {
                skipped.push((downloads_path.display().to_string(), s));
            }
            (reviews, microblogs, downloads)
        };
        for (file, skip) in &skipped {
            eprintln!("skipped {file}:{} ({})", skip.line, skip.message);
        }

        let windowed = bucket(&reviews, &microblogs, &downloads, &spec)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        if windowed.skipped.total() > 0 {
            eprintln!(
                "out-of-span records skipped: {} reviews, {} microblogs, {} downloads",
                windowed.skipped.reviews, windowed.skipped.microblogs, windowed.skipped.downloads
            );
        }

        // The full matrix goes to disk; train and evaluate project their
        // configured subsets out of it.
        let matrix = extract_matrix(
            &windowed,
            &assets,
            &opts,
            &rivalcast_core::SubsetSpec::full(),
        )
        .map_err(|e| CliError::Internal(e.to_string()))?;

        let mut features_csv = self.provenance_comment();
        features_csv.push_str(&matrix.to_csv());
        let mut labels_csv = self.provenance_comment();
        labels_csv.push_str(&matrix.labels.to_csv());
        self.write("features.csv", &features_csv)?;
        self.write("labels.csv", &labels_csv)?;
        println!(
            "featurize: {} windows x {} columns -> {}",
            matrix.window_count(),
            matrix.columns.len(),
            self.out_path("features.csv").display()
        );
        Ok(())
    }

    fn load_matrix(&self) -> Result<FeatureMatrix, CliError> {
        let features = self.read_to_string(&self.out_path("features.csv"))?;
        let labels_csv = self.read_to_string(&self.out_path("labels.csv"))?;
        let labels = ContestLabels::from_csv(&labels_csv)
            .map_err(|e| CliError::Internal(format!("labels.csv: {e}")))?;
        FeatureMatrix::from_csv(&features, labels)
            .map_err(|e| CliError::Internal(format!("features.csv: {e}")))
    }

    pub fn train(&self) -> Result<(), CliError> {
        let matrix = self.load_matrix()?;
        let subset = self.config.subset_spec()?;
        let projected = matrix
            .project(&subset)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        let params = self.config.forest_params();

        let cr: Vec<usize> = projected
            .labels
            .cr_series()
            .iter()
            .map(|c| c.to_index())
            .collect();
        let ci = projected.labels.ci_series();
        let classifier = fit_forest(
            &projected.rows,
            TrainingTargets::Classes {
                labels: &cr,
                n_classes: 2,
            },
            &params,
        )
        .map_err(|e| CliError::Internal(e.to_string()))?;
        let regressor = fit_forest(&projected.rows, TrainingTargets::Values(&ci), &params)
            .map_err(|e| CliError::Internal(e.to_string()))?;

        let document = TrainedModels {
            version: 1,
            config_hash: self.config_hash.clone(),
            seed: self.config.seed,
            subset: subset.label(),
            columns: projected.columns.iter().map(|c| c.header()).collect(),
            classifier,
            regressor,
        };
        let json = serde_json::to_string(&document)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        self.write("forest.json", &json)?;
        println!(
            "train: {} windows, subset {} -> {}",
            projected.window_count(),
            document.subset,
            self.out_path("forest.json").display()
        );
        Ok(())
    }

    pub fn evaluate(&self) -> Result<(), CliError> {
        let matrix = self.load_matrix()?;
        let subset = self.config.subset_spec()?;
        let scheme = self.config.eval_scheme();
        let params = self.config.forest_params();

        let projected = matrix
            .project(&subset)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        let report = rolling_evaluate(&projected, &scheme, &params)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        let ablation = ablation_run(&matrix, &self.config.ablation_specs()?, &scheme, &params)
            .map_err(|e| CliError::Internal(e.to_string()))?;

        let document = EvalDocument {
            version: 1,
            config_hash: self.config_hash.clone(),
            seed: self.config.seed,
            subset: subset.label(),
            report,
            ablation,
        };
        let mut json = serde_json::to_string_pretty(&document)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        json.push('\n');
        self.write("eval.json", &json)?;

        let mut csv = self.provenance_comment();
        csv.push_str(&document.report.to_csv());
        self.write("eval.csv", &csv)?;
        println!(
            "evaluate: {} folds, accuracy={:.4}, rmse={:.4} -> {}",
            document.report.folds.len(),
            document.report.metrics.accuracy,
            document.report.rmse,
            self.out_path("eval.json").display()
        );
        Ok(())
    }

    pub fn report(&self) -> Result<(), CliError> {
        let eval_json = self.read_to_string(&self.out_path("eval.json"))?;
        let document: EvalDocument = serde_json::from_str(&eval_json)
            .map_err(|e| CliError::Internal(format!("eval.json: {e}")))?;
        let labels_csv = self.read_to_string(&self.out_path("labels.csv"))?;
        let labels = ContestLabels::from_csv(&labels_csv)
            .map_err(|e| CliError::Internal(format!("labels.csv: {e}")))?;

        let mut configurations = vec![AblationRow {
            name: document.subset.clone(),
            accuracy: document.report.metrics.accuracy,
            precision: document.report.metrics.precision,
            recall: document.report.metrics.recall,
            f_measure: document.report.metrics.f_measure,
            rmse: document.report.rmse,
        }];
        for row in &document.ablation.configurations {
            if row.name != document.subset {
                configurations.push(row.clone());
            }
        }
        configurations.push(document.ablation.baseline.clone());

        let mut csv = self.provenance_comment();
        csv.push_str("name,accuracy,precision,recall,f_measure,rmse\n");
        for row in &configurations {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.name, row.accuracy, row.precision, row.recall, row.f_measure, row.rmse
            ));
        }
        self.write("report.csv", &csv)?;

        let weekly: Vec<WeeklyDownloads> = labels
            .windows
            .iter()
            .enumerate()
            .map(|(window, label)| WeeklyDownloads {
                window,
                label: *label,
            })
            .collect();
        let report_document = ReportDocument {
            version: 1,
            config_hash: self.config_hash.clone(),
            seed: self.config.seed,
            configurations,
            weekly_downloads: weekly,
        };
        let mut json = serde_json::to_string_pretty(&report_document)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        json.push('\n');
        self.write("report.json", &json)?;
        println!(
            "report: {} configurations -> {}",
            report_document.configurations.len(),
            self.out_path("report.csv").display()
        );
        Ok(())
    }
}

/// forest.json layout: both task models plus provenance.
#[derive(Debug, Serialize, Deserialize)]
pub struct TrainedModels {
    pub version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub subset: String,
    pub columns: Vec<String>,
    pub classifier: Forest,
    pub regressor: Forest,
}

/// eval.json layout.
#[derive(Debug, Serialize, Deserialize)]
pub struct EvalDocument {
    pub version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub subset: String,
    pub report: EvalReport,
    pub ablation: AblationReport,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct WeeklyDownloads {
    pub window: usize,
    #[serde(flatten)]
    pub label: WindowLabel,
}

/// report.json layout.
#[derive(Debug, Serialize, Deserialize)]
pub struct ReportDocument {
    pub version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub configurations: Vec<AblationRow>,
    pub weekly_downloads: Vec<WeeklyDownloads>,
}
