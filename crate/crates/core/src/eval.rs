//! Confusion matrices, accuracy/precision/recall/F1, learning curves.

use std::fmt::Write as _;

use crate::corpus::QualityLabel;
use crate::error::{QuillError, Result};
use crate::neuralnet::EpochTrace;

const K: usize = QualityLabel::COUNT;

/// Rows are true classes, columns predicted classes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: [[u64; K]; K],
}

/// One-vs-rest readout for a single class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BinaryCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl BinaryCounts {
    /// `(TP + TN) / (TP + FP + TN + FN)`.
    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / (self.tp + self.fp + self.tn + self.fn_) as f64
    }
}

pub fn confusion(predictions: &[QualityLabel], truths: &[QualityLabel]) -> Result<ConfusionMatrix> {
    if predictions.len() != truths.len() {
        return Err(QuillError::LengthMismatch {
            left: predictions.len(),
            right: truths.len(),
        });
    }
    if truths.is_empty() {
        return Err(QuillError::Empty("no predictions to compare"));
    }
    let mut cm = ConfusionMatrix::default();
    for (p, t) in predictions.iter().zip(truths) {
        cm.counts[t.index()][p.index()] += 1;
    }
    Ok(cm)
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn column_sum(&self, class: usize) -> u64 {
        self.counts.iter().map(|r| r[class]).sum()
    }

    pub fn one_vs_rest(&self, class: usize) -> BinaryCounts {
        let tp = self.counts[class][class];
        let fn_ = self.row_sum(class) - tp;
        let fp = self.column_sum(class) - tp;
        BinaryCounts {
            tp,
            tn: self.total() - tp - fn_ - fp,
            fp,
            fn_,
        }
    }
}

/// Fraction of correct predictions, `trace / total`.
pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(QuillError::Empty("confusion matrix has no entries"));
    }
    let diag: u64 = (0..K).map(|c| cm.counts[c][c]).sum();
    Ok(diag as f64 / total as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: [f64; K],
    pub recall: [f64; K],
    pub f1: [f64; K],
    pub support: [u64; K],
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// Support-weighted means.
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Per-class metrics with 0 for undefined ratios, plus macro and weighted means.
pub fn precision_recall_f1(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    let accuracy = accuracy(cm)?;
    let total = cm.total() as f64;
    let mut precision = [0.0; K];
    let mut recall = [0.0; K];
    let mut f1 = [0.0; K];
    let mut support = [0u64; K];
    for c in 0..K {
        let b = cm.one_vs_rest(c);
        precision[c] = ratio(b.tp, b.tp + b.fp);
        recall[c] = ratio(b.tp, b.tp + b.fn_);
        f1[c] = harmonic(precision[c], recall[c]);
        support[c] = cm.row_sum(c);
    }
    let mean = |v: &[f64; K]| v.iter().sum::<f64>() / K as f64;
    let weighted = |v: &[f64; K]| (0..K).map(|c| v[c] * support[c] as f64).sum::<f64>() / total;
    Ok(MetricsReport {
        accuracy,
        macro_precision: mean(&precision),
        macro_recall: mean(&recall),
        macro_f1: mean(&f1),
        weighted_precision: weighted(&precision),
        weighted_recall: weighted(&recall),
        weighted_f1: weighted(&f1),
        precision,
        recall,
        f1,
        support,
    })
}

impl MetricsReport {
    pub fn csv_header() -> String {
        let mut h = String::from(
            "model,accuracy,macro_precision,macro_recall,macro_f1,weighted_precision,weighted_recall,weighted_f1",
        );
        for l in QualityLabel::ALL {
            let _ = write!(h, ",precision_{l},recall_{l},f1_{l},support_{l}");
        }
        h
    }

    /// One CSV row, metrics to 4 decimal places.
    pub fn csv_row(&self, model: &str) -> String {
        let mut row = format!(
            "{model},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
            self.accuracy,
            self.macro_precision,
            self.macro_recall,
            self.macro_f1,
            self.weighted_precision,
            self.weighted_recall,
            self.weighted_f1
        );
        for c in 0..K {
            let _ = write!(
                row,
                ",{:.4},{:.4},{:.4},{}",
                self.precision[c], self.recall[c], self.f1[c], self.support[c]
            );
        }
        row
    }
}

/// Header plus one row per `(model name, report)`.
pub fn metrics_csv(rows: &[(String, MetricsReport)]) -> String {
    let mut out = MetricsReport::csv_header();
    out.push('\n');
    for (name, report) in rows {
        out.push_str(&report.csv_row(name));
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveSeries {
    pub model_name: String,
    pub traces: Vec<EpochTrace>,
}

impl CurveSeries {
    pub fn new(model_name: impl Into<String>, traces: Vec<EpochTrace>) -> Result<Self> {
        if traces.windows(2).any(|w| w[1].epoch != w[0].epoch + 1) {
            return Err(QuillError::InvalidParameter("epochs must increase by one".into()));
        }
        Ok(Self {
            model_name: model_name.into(),
            traces,
        })
    }

    pub const CSV_HEADER: &'static str = "epoch,train_loss,train_accuracy,val_loss,val_accuracy";

    /// `epoch,train_loss,train_accuracy,val_loss,val_accuracy`, 6 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for t in &self.traces {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                t.epoch,
                sig6(t.train_loss),
                sig6(t.train_accuracy),
                sig6(t.val_loss),
                sig6(t.val_accuracy)
            );
        }
        out
    }

    pub fn parse_csv(model_name: &str, text: &str) -> Result<Self> {
        let bad = |m: String| QuillError::Format(format!("curves CSV: {m}"));
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h == Self::CSV_HEADER => {}
            other => return Err(bad(format!("unexpected header {other:?}"))),
        }
        let mut traces = Vec::new();
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(bad(format!("line {} has {} fields", n + 2, f.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("line {}: bad number `{s}`", n + 2)));
            traces.push(EpochTrace {
                epoch: f[0].parse().map_err(|_| bad(format!("line {}: bad epoch", n + 2)))?,
                train_loss: num(f[1])?,
                train_accuracy: num(f[2])?,
                val_loss: num(f[3])?,
                val_accuracy: num(f[4])?,
            });
        }
        Self::new(model_name, traces)
    }
}

/// Formats like C's `%.6g`.
pub fn sig6(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let trim = |s: String| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-4..6).contains(&exp) {
        trim(format!("{v:.*}", (5 - exp) as usize))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa.to_string()), exp.abs())
    }
}

/// Earliest epoch ending a run of `patience` consecutive strict increases in
/// validation loss, or `None`.
pub fn detect_overfitting(series: &CurveSeries, patience: usize) -> Option<usize> {
    let patience = patience.max(1);
    let mut run = 0;
    for w in series.traces.windows(2) {
        if w[1].val_loss > w[0].val_loss {
            run += 1;
            if run >= patience {
                return Some(w[1].epoch);
            }
        } else {
            run = 0;
        }
    }
    None
}

/// Concatenates several curve series into one CSV with a leading `model` column.
pub fn merge_curves_csv(series: &[CurveSeries]) -> String {
    let mut out = format!("model,{}\n", CurveSeries::CSV_HEADER);
    for s in series {
        for line in s.to_csv().lines().skip(1) {
            let _ = writeln!(out, "{},{line}", s.model_name);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use QualityLabel::*;

    fn series(val: &[f64]) -> CurveSeries {
        let traces = val
            .iter()
            .enumerate()
            .map(|(i, &v)| EpochTrace {
                epoch: i + 1,
                train_loss: 1.0,
                train_accuracy: 0.5,
                val_loss: v,
                val_accuracy: 0.5,
            })
            .collect();
        CurveSeries::new("m", traces).unwrap()
    }

    #[test]
    fn confusion_examples() {
        let cm = confusion(&[Hq; 5], &[Hq; 5]).unwrap();
        assert_eq!(cm.counts[0][0], 5);
        assert_eq!(cm.total(), 5);
        let cm = confusion(&[LqClose, Hq], &[Hq, LqClose]).unwrap();
        assert_eq!(cm.counts[0][1], 1);
        assert_eq!(cm.counts[1][0], 1);
        assert!(confusion(&[Hq], &[]).is_err());
        assert!(confusion(&[], &[]).is_err());
    }

    #[test]
    fn binary_accuracy_formula() {
        let b = BinaryCounts { tp: 3, tn: 2, fp: 1, fn_: 4 };
        assert_eq!(b.accuracy(), 0.5);
    }

    #[test]
    fn diagonal_is_perfect() {
        let cm = ConfusionMatrix {
            counts: [[4, 0, 0], [0, 2, 0], [0, 0, 7]],
        };
        assert_eq!(accuracy(&cm).unwrap(), 1.0);
        let r = precision_recall_f1(&cm).unwrap();
        assert_eq!((r.macro_precision, r.macro_recall, r.macro_f1), (1.0, 1.0, 1.0));
        assert_eq!((r.weighted_precision, r.weighted_recall, r.weighted_f1), (1.0, 1.0, 1.0));
        assert!(accuracy(&ConfusionMatrix::default()).is_err());
    }

    #[test]
    fn absent_class_scores_zero() {
        let cm = confusion(&[Hq, LqClose, Hq], &[Hq, LqClose, LqClose]).unwrap();
        let r = precision_recall_f1(&cm).unwrap();
        assert_eq!((r.precision[2], r.recall[2], r.f1[2]), (0.0, 0.0, 0.0));
    }

    #[test]
    fn overfitting_examples() {
        assert_eq!(detect_overfitting(&series(&[1.0, 0.8, 0.6, 0.7, 0.8]), 2), Some(5));
        assert_eq!(detect_overfitting(&series(&[1.0, 0.8, 0.6, 0.5]), 2), None);
        assert_eq!(detect_overfitting(&series(&[1.0, 0.9, 0.95]), 2), None);
        assert_eq!(detect_overfitting(&series(&[1.0, 1.1, 1.0, 1.1, 1.2, 1.3]), 3), Some(6));
    }

    #[test]
    fn sig6_matches_printf_g() {
        let cases = [
            (0.5108256237659907, "0.510826"),
            (1.0, "1"),
            (30.0, "30"),
            (0.000123456789, "0.000123457"),
            (1.5e-7, "1.5e-07"),
            (1234567.0, "1.23457e+06"),
            (0.0, "0"),
            (-2.5, "-2.5"),
            (f64::NAN, "nan"),
        ];
        for (v, want) in cases {
            assert_eq!(sig6(v), want, "{v}");
        }
    }

    #[test]
    fn curves_csv_round_trip() {
        let s = series(&[1.0, 0.5, 0.25]);
        let csv = s.to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("epoch,train_loss,train_accuracy,val_loss,val_accuracy\n1,1,0.5,1,0.5\n"));
        assert_eq!(CurveSeries::parse_csv("m", &csv).unwrap(), s);
        let merged = merge_curves_csv(&[s.clone(), CurveSeries { model_name: "n".into(), ..s }]);
        assert_eq!(merged.lines().count(), 7);
        assert!(merged.lines().nth(4).unwrap().starts_with("n,1,"));
    }

    #[test]
    fn metrics_csv_shape() {
        let cm = confusion(&[Hq, LqEdit], &[Hq, LqClose]).unwrap();
        let r = precision_recall_f1(&cm).unwrap();
        let csv = metrics_csv(&[("nb".into(), r)]);
        let mut lines = csv.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(header.len(), row.len());
        assert_eq!(row[0], "nb");
        assert_eq!(row[1], "0.5000");
    }
}
