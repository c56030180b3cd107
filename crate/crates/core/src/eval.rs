//! Rolling-origin backtesting, classification and regression metrics,
//! and feature-subset ablations.
//!
//! Each fold trains on a fixed-length stretch of past windows and
//! predicts the next one. Metrics pool the per-fold predictions before
//! scoring (each fold contributes a single test window, so per-fold
//! rates would be degenerate).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{ContestClass, FeatureError, FeatureMatrix, SubsetSpec};
use crate::model::{
    fit_forest, last_baseline, ForestParams, ModelError, TrainingTargets,
};
use crate::num::Real;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need at least {need} windows for train_weeks={train_weeks}, found {have}")]
    TooFewWindows {
        have: usize,
        need: usize,
        train_weeks: usize,
    },
    #[error("prediction and truth series differ in length ({preds} vs {truths})")]
    LengthMismatch { preds: usize, truths: usize },
    #[error("metrics need at least one prediction")]
    Empty,
    #[error("train_weeks must be >= 1")]
    BadScheme,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

/// Rolling evaluation layout. The fold step and the prediction horizon
/// are both one window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalScheme {
    pub train_weeks: usize,
    /// When set, a window is predicted from the previous window's
    /// features only. The default uses the target window's own features:
    /// the labels come from a separate stream (downloads), so same-week
    /// crowd signals are legitimately observable at prediction time.
    pub strict_forecast: bool,
}

impl Default for EvalScheme {
    fn default() -> Self {
        EvalScheme {
            train_weeks: 10,
            strict_forecast: false,
        }
    }
}

impl EvalScheme {
    pub const STEP: usize = 1;
    pub const HORIZON: usize = 1;

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.train_weeks < 1 {
            return Err(EvalError::BadScheme);
        }
        Ok(())
    }
}

/// Pooled binary classification rates with `APositive` as the positive
/// class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

/// Standard confusion-matrix rates; zero-denominator precision, recall,
/// and F-measure fall back to 0.
pub fn classification_metrics(
    preds: &[ContestClass],
    truths: &[ContestClass],
) -> Result<ClassificationMetrics, EvalError> {
    if preds.len() != truths.len() {
        return Err(EvalError::LengthMismatch {
            preds: preds.len(),
            truths: truths.len(),
        });
    }
    if preds.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut tn = 0usize;
    let mut fn_ = 0usize;
    for (&p, &t) in preds.iter().zip(truths) {
        match (p, t) {
            (ContestClass::APositive, ContestClass::APositive) => tp += 1,
            (ContestClass::APositive, ContestClass::BPositive) => fp += 1,
            (ContestClass::BPositive, ContestClass::BPositive) => tn += 1,
            (ContestClass::BPositive, ContestClass::APositive) => fn_ += 1,
        }
    }
    let rate = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = rate(tp, tp + fp);
    let recall = rate(tp, tp + fn_);
    let f_measure = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(ClassificationMetrics {
        accuracy: (tp + tn) as f64 / preds.len() as f64,
        precision,
        recall,
        f_measure,
    })
}

/// Root mean squared error.
pub fn rmse<R: Real>(preds: &[R], truths: &[R]) -> Result<R, EvalError> {
    if preds.len() != truths.len() {
        return Err(EvalError::LengthMismatch {
            preds: preds.len(),
            truths: truths.len(),
        });
    }
    if preds.is_empty() {
        return Err(EvalError::Empty);
    }
    let sum_sq = preds
        .iter()
        .zip(truths)
        .fold(R::zero(), |acc, (&p, &t)| acc + (p - t) * (p - t));
    Ok((sum_sq / R::from_count(preds.len())).sqrt())
}

/// One rolling fold's predictions and truths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub fold: usize,
    pub target_window: usize,
    pub true_cr: ContestClass,
    pub pred_cr: ContestClass,
    /// Vote fraction behind the predicted class.
    pub pred_cr_probability: f64,
    pub true_ci: f64,
    pub pred_ci: f64,
    pub last_cr: ContestClass,
    pub last_ci: f64,
}

/// Rolling evaluation output: per-fold records, pooled forest metrics,
/// and the same metrics for the last-value baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scheme: EvalScheme,
    pub folds: Vec<FoldRecord>,
    pub metrics: ClassificationMetrics,
    pub rmse: f64,
    pub baseline_metrics: ClassificationMetrics,
    pub baseline_rmse: f64,
}

impl EvalReport {
    /// Per-fold CSV rows followed by summary comment lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "fold,target_window,true_cr,pred_cr,pred_cr_probability,true_ci,pred_ci,last_cr,last_ci\n",
        );
        for f in &self.folds {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                f.fold,
                f.target_window,
                f.true_cr,
                f.pred_cr,
                f.pred_cr_probability,
                f.true_ci,
                f.pred_ci,
                f.last_cr,
                f.last_ci
            ));
        }
        out.push_str(&format!(
            "# accuracy={} precision={} recall={} f_measure={} rmse={}\n",
            self.metrics.accuracy,
            self.metrics.precision,
            self.metrics.recall,
            self.metrics.f_measure,
            self.rmse
        ));
        out.push_str(&format!(
            "# baseline_accuracy={} baseline_rmse={}\n",
            self.baseline_metrics.accuracy, self.baseline_rmse
        ));
        out
    }
}

/// Train on `train_weeks` successive windows, predict the next one, and
/// slide by one window until the data runs out.
pub fn rolling_evaluate(
    matrix: &FeatureMatrix,
    scheme: &EvalScheme,
    params: &ForestParams,
) -> Result<EvalReport, EvalError> {
    scheme.validate()?;
    let t_total = matrix.window_count();
    if t_total < scheme.train_weeks + 1 {
        return Err(EvalError::TooFewWindows {
            have: t_total,
            need: scheme.train_weeks + 1,
            train_weeks: scheme.train_weeks,
        });
    }

    let cr: Vec<ContestClass> = matrix.labels.cr_series();
    let ci: Vec<f64> = matrix.labels.ci_series();

    let mut folds = Vec::new();
    for (fold, t) in ((scheme.train_weeks - 1)..=(t_total - 2)).enumerate() {
        let target = t + 1;
        let train_windows: Vec<usize> = ((t + 1 - scheme.train_weeks)..=t).collect();

        // In strict-forecast mode window w is predicted from window w-1's
        // features, which drops a training pair when w-1 precedes the data.
        let (x_train, train_labels): (Vec<Vec<f64>>, Vec<usize>) = if scheme.strict_forecast {
            let usable: Vec<usize> = train_windows.iter().copied().filter(|&w| w >= 1).collect();
            (
                usable.iter().map(|&w| matrix.rows[w - 1].clone()).collect(),
                usable.clone(),
            )
        } else {
            (
                train_windows.iter().map(|&w| matrix.rows[w].clone()).collect(),
                train_windows.clone(),
            )
        };
        let x_test: &[f64] = if scheme.strict_forecast {
            &matrix.rows[target - 1]
        } else {
            &matrix.rows[target]
        };

        let cr_train: Vec<usize> = train_labels.iter().map(|&w| cr[w].to_index()).collect();
        let ci_train: Vec<f64> = train_labels.iter().map(|&w| ci[w]).collect();

        let classifier = fit_forest(
            &x_train,
            TrainingTargets::Classes {
                labels: &cr_train,
                n_classes: 2,
            },
            params,
        )?;
        let regressor = fit_forest(&x_train, TrainingTargets::Values(&ci_train), params)?;

        let class_prediction = classifier.predict_class(x_test)?;
        let pred_ci = regressor.predict_value(x_test)?;

        folds.push(FoldRecord {
            fold,
            target_window: target,
            true_cr: cr[target],
            pred_cr: ContestClass::from_index(class_prediction.class),
            pred_cr_probability: class_prediction.probability,
            true_ci: ci[target],
            pred_ci,
            last_cr: last_baseline(&cr[..=t])?,
            last_ci: last_baseline(&ci[..=t])?,
        });
    }

    let preds_cr: Vec<ContestClass> = folds.iter().map(|f| f.pred_cr).collect();
    let truths_cr: Vec<ContestClass> = folds.iter().map(|f| f.true_cr).collect();
    let preds_ci: Vec<f64> = folds.iter().map(|f| f.pred_ci).collect();
    let truths_ci: Vec<f64> = folds.iter().map(|f| f.true_ci).collect();
    let last_cr_preds: Vec<ContestClass> = folds.iter().map(|f| f.last_cr).collect();
    let last_ci_preds: Vec<f64> = folds.iter().map(|f| f.last_ci).collect();

    Ok(EvalReport {
        scheme: scheme.clone(),
        metrics: classification_metrics(&preds_cr, &truths_cr)?,
        rmse: rmse(&preds_ci, &truths_ci)?,
        baseline_metrics: classification_metrics(&last_cr_preds, &truths_cr)?,
        baseline_rmse: rmse(&last_ci_preds, &truths_ci)?,
        folds,
    })
}

/// One row of an ablation comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub name: String,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub rmse: f64,
}

impl AblationRow {
    fn from_report(name: String, report: &EvalReport) -> AblationRow {
        AblationRow {
            name,
            accuracy: report.metrics.accuracy,
            precision: report.metrics.precision,
            recall: report.metrics.recall,
            f_measure: report.metrics.f_measure,
            rmse: report.rmse,
        }
    }
}

/// Subset comparison: one row per projection plus the last-value
/// baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub configurations: Vec<AblationRow>,
    pub baseline: AblationRow,
}

impl AblationReport {
    pub fn row(&self, name: &str) -> Option<&AblationRow> {
        self.configurations.iter().find(|r| r.name == name)
    }
}

/// Evaluate each subset projection of the full matrix under the same
/// scheme and parameters.
pub fn ablation_run(
    matrix: &FeatureMatrix,
    subsets: &[SubsetSpec],
    scheme: &EvalScheme,
    params: &ForestParams,
) -> Result<AblationReport, EvalError> {
    let mut configurations = Vec::new();
    let mut baseline = None;
    for subset in subsets {
        let projected = matrix.project(subset)?;
        let report = rolling_evaluate(&projected, scheme, params)?;
        if baseline.is_none() {
            baseline = Some(AblationRow {
                name: "Last".into(),
                accuracy: report.baseline_metrics.accuracy,
                precision: report.baseline_metrics.precision,
                recall: report.baseline_metrics.recall,
                f_measure: report.baseline_metrics.f_measure,
                rmse: report.baseline_rmse,
            });
        }
        configurations.push(AblationRow::from_report(subset.label(), &report));
    }
    let baseline = match baseline {
        Some(row) => row,
        None => {
            // No subsets requested: still evaluate the baseline on the
            // full matrix.
            let report = rolling_evaluate(matrix, scheme, params)?;
            AblationRow {
                name: "Last".into(),
                accuracy: report.baseline_metrics.accuracy,
                precision: report.baseline_metrics.precision,
                recall: report.baseline_metrics.recall,
                f_measure: report.baseline_metrics.f_measure,
                rmse: report.baseline_rmse,
            }
        }
    };
    Ok(AblationReport {
        configurations,
        baseline,
    })
}
