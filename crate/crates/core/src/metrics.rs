//! Quality of a cleaned dataset relative to its ground truth.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::jsd_slices;
use crate::pdb::{AttributeKind, Dataset};
use crate::quantize::expected_value;

fn check_same_shape(a: &Dataset, b: &Dataset, what: &str) -> Result<()> {
    if a.schema() != b.schema() {
        return Err(Error::SchemaMismatch(format!("{what}: schemas differ")));
    }
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
            context: format!("{what}: record count"),
        });
    }
    Ok(())
}

/// Sum over records and attributes of the cell JSD.
pub fn dataset_jsd(x: &Dataset, y: &Dataset) -> Result<f64> {
    check_same_shape(x, y, "dataset_jsd")?;
    Ok(x.records()
        .iter()
        .zip(y.records())
        .flat_map(|(a, b)| a.cells.iter().zip(&b.cells))
        .map(|(p, q)| jsd_slices(p.probs(), q.probs()))
        .sum())
}

/// Sum over records and continuous attributes of the squared difference of
/// expected values, scaled by the distance between the outer bin centers.
pub fn dataset_rescaled_mse(x: &Dataset, y: &Dataset) -> Result<f64> {
    check_same_shape(x, y, "dataset_rescaled_mse")?;
    let mut total = 0.0;
    for (j, attr) in x.schema().attributes().iter().enumerate() {
        let Some(rule) = attr.bins.as_ref().filter(|_| attr.kind == AttributeKind::Continuous) else {
            continue;
        };
        let span = rule.center_span();
        for i in 0..x.len() {
            let d = (expected_value(x.cell(i, j), rule) - expected_value(y.cell(i, j), rule)) / span;
            total += d * d;
        }
    }
    Ok(total)
}

pub fn has_continuous(ds: &Dataset) -> bool {
    ds.schema().attributes().iter().any(|a| a.kind == AttributeKind::Continuous)
}

/// `100 − 100 · after / before`. Negative when cleaning made things worse.
pub fn quality_improvement(before: f64, after: f64) -> Result<f64> {
    if before == 0.0 {
        return Err(Error::UndefinedImprovement);
    }
    Ok(100.0 - 100.0 * after / before)
}

/// Cleaning outcomes on categorical cells.
///
/// A cell whose noisy argmax already matched the ground truth is a true
/// negative if cleaning kept it and a false positive if cleaning flipped it.
/// A cell whose noisy argmax was wrong is a true positive if cleaning flipped
/// it and a false negative otherwise. A flip counts as a true positive even if
/// it lands on a different wrong category.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn accuracy(&self) -> Option<f64> {
        let total = self.total();
        (total > 0).then(|| (self.tp + self.tn) as f64 / total as f64)
    }

    pub fn f1(&self) -> Option<f64> {
        let denom = 2 * self.tp + self.fp + self.fn_;
        (denom > 0).then(|| 2.0 * self.tp as f64 / denom as f64)
    }
}

pub fn flip_confusion(gt: &Dataset, before: &Dataset, after: &Dataset) -> Result<Confusion> {
    check_same_shape(gt, before, "flip_confusion (before)")?;
    check_same_shape(gt, after, "flip_confusion (after)")?;
    let mut c = Confusion::default();
    for (j, attr) in gt.schema().attributes().iter().enumerate() {
        if attr.kind != AttributeKind::Categorical {
            continue;
        }
        for i in 0..gt.len() {
            let truth = gt.cell(i, j).argmax();
            let was = before.cell(i, j).argmax();
            let flipped = after.cell(i, j).argmax() != was;
            match (was == truth, flipped) {
                (true, false) => c.tn += 1,
                (true, true) => c.fp += 1,
                (false, true) => c.tp += 1,
                (false, false) => c.fn_ += 1,
            }
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub q_before: f64,
    pub q_after: f64,
    /// `None` when the noisy data already equals the ground truth.
    pub improvement_pct: Option<f64>,
    pub mse_before: Option<f64>,
    pub mse_after: Option<f64>,
    pub mse_improvement_pct: Option<f64>,
    pub confusion: Confusion,
    pub accuracy: Option<f64>,
    pub f1: Option<f64>,
}

/// Compares noisy and cleaned data against the ground truth.
pub fn evaluate(gt: &Dataset, before: &Dataset, after: &Dataset) -> Result<EvalReport> {
    let q_before = dataset_jsd(gt, before)?;
    let q_after = dataset_jsd(gt, after)?;
    let (mse_before, mse_after, mse_improvement_pct) = if has_continuous(gt) {
        let b = dataset_rescaled_mse(gt, before)?;
        let a = dataset_rescaled_mse(gt, after)?;
        (Some(b), Some(a), quality_improvement(b, a).ok())
    } else {
        (None, None, None)
    };
    let confusion = flip_confusion(gt, before, after)?;
    Ok(EvalReport {
        q_before,
        q_after,
        improvement_pct: quality_improvement(q_before, q_after).ok(),
        mse_before,
        mse_after,
        mse_improvement_pct,
        confusion,
        accuracy: confusion.accuracy(),
        f1: confusion.f1(),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl EvalReport {
    pub const CSV_HEADER: [&'static str; 13] = [
        "q_before",
        "q_after",
        "improvement_pct",
        "mse_before",
        "mse_after",
        "mse_improvement_pct",
        "tp",
        "tn",
        "fp",
        "fn",
        "accuracy",
        "f1",
        "cells",
    ];

    /// Flat CSV fields in [`EvalReport::CSV_HEADER`] order; undefined values are empty.
    pub fn csv_row(&self) -> Vec<String> {
        let c = &self.confusion;
        vec![
            self.q_before.to_string(),
            self.q_after.to_string(),
            opt(self.improvement_pct),
            opt(self.mse_before),
            opt(self.mse_after),
            opt(self.mse_improvement_pct),
            c.tp.to_string(),
            c.tn.to_string(),
            c.fp.to_string(),
            c.fn_.to_string(),
            opt(self.accuracy),
            opt(self.f1),
            c.total().to_string(),
        ]
    }
}

fn pct(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.2}%")).unwrap_or_else(|| "undefined".into())
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "JSD before:   {:.6}", self.q_before)?;
        writeln!(f, "JSD after:    {:.6}", self.q_after)?;
        writeln!(f, "improvement:  {}", pct(self.improvement_pct))?;
        if let (Some(b), Some(a)) = (self.mse_before, self.mse_after) {
            writeln!(f, "MSE before:   {b:.6}")?;
            writeln!(f, "MSE after:    {a:.6}")?;
            writeln!(f, "MSE improvement: {}", pct(self.mse_improvement_pct))?;
        }
        let c = &self.confusion;
        writeln!(f, "flips: TP {} TN {} FP {} FN {}", c.tp, c.tn, c.fp, c.fn_)?;
        let show = |v: Option<f64>| v.map(|v| format!("{v:.4}")).unwrap_or_else(|| "undefined".into());
        write!(f, "accuracy {}  F1 {}", show(self.accuracy), show(self.f1))
    }
}
