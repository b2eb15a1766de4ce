//! Confusion-matrix construction, the per-class metric suite with
//! macro-averaged reporting, and the three report output formats.
//!
//! Every 0/0 metric case returns 0 rather than skipping the class, so macro
//! averages stay total even for rare classes. Rendered numbers carry four
//! decimal places.

use serde::Serialize;
use serde_json::json;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("label vectors differ in length: {truth} true vs {predicted} predicted")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("label id {id} is outside the {n}-class list")]
    UnknownLabel { id: u32, n: usize },
    #[error("class list is empty")]
    EmptyClassList,
    #[error("confusion matrix has no rows")]
    EmptyMatrix,
}

/// C x C counts; rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

/// Builds the matrix: count[i][j] = rows with true class i predicted as j.
pub fn confusion(
    true_labels: &[u32],
    predicted_labels: &[u32],
    class_list: &[String],
) -> Result<ConfusionMatrix, EvalError> {
    if class_list.is_empty() {
        return Err(EvalError::EmptyClassList);
    }
    if true_labels.len() != predicted_labels.len() {
        return Err(EvalError::LengthMismatch {
            truth: true_labels.len(),
            predicted: predicted_labels.len(),
        });
    }
    let n = class_list.len();
    let mut counts = vec![vec![0u64; n]; n];
    for (&t, &p) in true_labels.iter().zip(predicted_labels) {
        for id in [t, p] {
            if id as usize >= n {
                return Err(EvalError::UnknownLabel { id, n });
            }
        }
        counts[t as usize][p as usize] += 1;
    }
    Ok(ConfusionMatrix {
        classes: class_list.to_vec(),
        counts,
    })
}

impl ConfusionMatrix {
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn true_positives(&self, class: usize) -> u64 {
        self.counts[class][class]
    }

    /// Row sum: TP + FN.
    pub fn row_sum(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    /// Column sum: TP + FP.
    pub fn col_sum(&self, class: usize) -> u64 {
        self.counts.iter().map(|row| row[class]).sum()
    }

    /// Support equals the number of rows whose true class is `class`.
    pub fn support(&self, class: usize) -> u64 {
        self.row_sum(class)
    }

    /// TP / (TP + FP); 0 when the class is never predicted.
    pub fn precision(&self, class: usize) -> f64 {
        ratio(self.true_positives(class), self.col_sum(class))
    }

    /// TP / (TP + FN); 0 when the class never occurs.
    pub fn recall(&self, class: usize) -> f64 {
        ratio(self.true_positives(class), self.row_sum(class))
    }

    /// Harmonic mean of precision and recall; 0 when either is 0.
    pub fn f1(&self, class: usize) -> f64 {
        f1_from_pr(self.precision(class), self.recall(class))
    }

    /// trace / total.
    pub fn accuracy(&self) -> Result<f64, EvalError> {
        let total = self.total();
        if total == 0 {
            return Err(EvalError::EmptyMatrix);
        }
        let trace: u64 = (0..self.n_classes()).map(|c| self.true_positives(c)).sum();
        Ok(trace as f64 / total as f64)
    }
}

fn ratio(numerator: u64, denominator: u64) -> f64 {
    if denominator == 0 {
        0.0
    } else {
        numerator as f64 / denominator as f64
    }
}

/// F1 = 2PR / (P + R), with the 0/0 case defined as 0.
pub fn f1_from_pr(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MacroMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Unweighted means over every class in the class list.
pub fn macro_average(per_class: &[ClassMetrics]) -> MacroMetrics {
    let n = per_class.len().max(1) as f64;
    MacroMetrics {
        precision: per_class.iter().map(|m| m.precision).sum::<f64>() / n,
        recall: per_class.iter().map(|m| m.recall).sum::<f64>() / n,
        f1: per_class.iter().map(|m| m.f1).sum::<f64>() / n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Csv,
    Machine,
}

impl ReportFormat {
    pub fn parse(token: &str) -> Option<ReportFormat> {
        match token {
            "table" => Some(ReportFormat::Table),
            "csv" => Some(ReportFormat::Csv),
            "machine" => Some(ReportFormat::Machine),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Table => "txt",
            ReportFormat::Csv => "csv",
            ReportFormat::Machine => "json",
        }
    }
}

/// Per-class and macro metrics for one (model, target) experiment arm.
///
/// The data window carries the first and last source-flow timestamps of the
/// evaluated rows, keeping rendered reports free of wall-clock values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub model_kind: String,
    pub target_scheme: String,
    pub seed: u64,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub macro_avg: MacroMetrics,
    pub data_start: Option<String>,
    pub data_end: Option<String>,
}

impl EvaluationReport {
    pub fn from_confusion(
        cm: &ConfusionMatrix,
        model_kind: &str,
        target_scheme: &str,
        seed: u64,
        data_window: Option<(String, String)>,
    ) -> Result<EvaluationReport, EvalError> {
        let accuracy = cm.accuracy()?;
        let per_class: Vec<ClassMetrics> = (0..cm.n_classes())
            .map(|c| ClassMetrics {
                class: cm.classes[c].clone(),
                precision: cm.precision(c),
                recall: cm.recall(c),
                f1: cm.f1(c),
                support: cm.support(c),
            })
            .collect();
        let macro_avg = macro_average(&per_class);
        let (data_start, data_end) = match data_window {
            Some((start, end)) => (Some(start), Some(end)),
            None => (None, None),
        };
        Ok(EvaluationReport {
            model_kind: model_kind.to_string(),
            target_scheme: target_scheme.to_string(),
            seed,
            accuracy,
            per_class,
            macro_avg,
            data_start,
            data_end,
        })
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Table => self.render_table(),
            ReportFormat::Csv => self.render_csv(),
            ReportFormat::Machine => self.render_machine(),
        }
    }

    fn render_table(&self) -> String {
        let total: u64 = self.per_class.iter().map(|m| m.support).sum();
        let name_width = self
            .per_class
            .iter()
            .map(|m| m.class.len())
            .chain(["macro avg".len()])
            .max()
            .unwrap_or(10);
        let mut out = String::new();
        out.push_str(&format!(
            "model: {}    target: {}    seed: {}\n\n",
            self.model_kind, self.target_scheme, self.seed
        ));
        out.push_str(&format!(
            "{:<name_width$}  {:>9}  {:>9}  {:>9}  {:>9}\n",
            "class", "precision", "recall", "f1-score", "support"
        ));
        for m in &self.per_class {
            out.push_str(&format!(
                "{:<name_width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>9}\n",
                m.class, m.precision, m.recall, m.f1, m.support
            ));
        }
        out.push_str(&format!(
            "\n{:<name_width$}  {:>9}  {:>9}  {:>9.4}  {:>9}\n",
            "accuracy", "", "", self.accuracy, total
        ));
        out.push_str(&format!(
            "{:<name_width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>9}\n",
            "macro avg", self.macro_avg.precision, self.macro_avg.recall, self.macro_avg.f1, total
        ));
        out
    }

    fn render_csv(&self) -> String {
        let total: u64 = self.per_class.iter().map(|m| m.support).sum();
        let mut out = String::from("class,precision,recall,f1,support\n");
        for m in &self.per_class {
            out.push_str(&format!(
                "{},{:.4},{:.4},{:.4},{}\n",
                m.class, m.precision, m.recall, m.f1, m.support
            ));
        }
        out.push_str(&format!(
            "macro,{:.4},{:.4},{:.4},{}\n",
            self.macro_avg.precision, self.macro_avg.recall, self.macro_avg.f1, total
        ));
        out
    }

    fn render_machine(&self) -> String {
        let value = json!({
            "model_kind": self.model_kind,
            "target_scheme": self.target_scheme,
            "seed": self.seed,
            "accuracy": round4(self.accuracy),
            "classes": self.per_class.iter().map(|m| json!({
                "class": m.class,
                "precision": round4(m.precision),
                "recall": round4(m.recall),
                "f1": round4(m.f1),
                "support": m.support,
            })).collect::<Vec<_>>(),
            "macro": {
                "precision": round4(self.macro_avg.precision),
                "recall": round4(self.macro_avg.recall),
                "f1": round4(self.macro_avg.f1),
            },
            "timestamps": {
                "data_start": self.data_start,
                "data_end": self.data_end,
            },
        });
        let mut text = serde_json::to_string_pretty(&value).expect("report serializes");
        text.push('\n');
        text
    }
}

fn round4(x: f64) -> f64 {
    (x * 10_000.0).round() / 10_000.0
}
