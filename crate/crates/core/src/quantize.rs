//! Binning of continuous attributes into categorical distributions, and the
//! bin-count rule used when ingesting numeric columns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pdb::Pmf;

/// Bin edges `L_0 < … < L_K` and centers `B_k = (L_{k-1} + L_k) / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningRule {
    edges: Vec<f64>,
    centers: Vec<f64>,
}

impl BinningRule {
    pub fn from_edges(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 3 {
            return Err(Error::InvalidBinning(format!(
                "need at least 2 bins, got {} edges",
                edges.len()
            )));
        }
        if edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidBinning("edges must be finite".into()));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidBinning("edges must be strictly increasing".into()));
        }
        let centers = edges.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
        Ok(BinningRule { edges, centers })
    }

    /// Number of bins.
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn low(&self) -> f64 {
        self.edges[0]
    }

    pub fn high(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }

    /// Distance between the outermost bin centers, `B_K - B_1`.
    pub fn center_span(&self) -> f64 {
        self.centers[self.centers.len() - 1] - self.centers[0]
    }

    /// Bin containing `x`. Bins are left-closed; the last bin is closed on both sides.
    pub fn bin_index(&self, x: f64) -> Result<usize> {
        if !(self.low()..=self.high()).contains(&x) {
            return Err(Error::OutOfRange {
                value: x,
                low: self.low(),
                high: self.high(),
            });
        }
        // number of interior edges <= x
        let interior = &self.edges[1..self.edges.len() - 1];
        Ok(interior.partition_point(|&e| e <= x))
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let rebuilt = BinningRule::from_edges(self.edges.clone())?;
        if rebuilt.centers != self.centers {
            return Err(Error::InvalidBinning("centers are not bin midpoints".into()));
        }
        Ok(())
    }
}

/// `K` equal-width bins spanning `[a, b]`.
pub fn uniform_bins(a: f64, b: f64, k: usize) -> Result<BinningRule> {
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return Err(Error::InvalidBinning(format!("need a < b, got [{a}, {b}]")));
    }
    if k < 2 {
        return Err(Error::InvalidBinning(format!("need at least 2 bins, got {k}")));
    }
    let width = (b - a) / k as f64;
    let mut edges: Vec<f64> = (0..=k).map(|i| a + i as f64 * width).collect();
    edges[k] = b;
    BinningRule::from_edges(edges)
}

/// Bin masses `F(L_k) - F(L_{k-1})` of a distribution given by its CDF.
///
/// Mass outside `[L_0, L_K]` is discarded and the remainder renormalized, so a
/// CDF of an untruncated distribution yields its truncation to the binning range.
pub fn pmf_from_cdf<F: Fn(f64) -> f64>(cdf: F, rule: &BinningRule) -> Result<Pmf> {
    let at_edges: Vec<f64> = rule.edges().iter().map(|&e| cdf(e)).collect();
    if let Some(edge) = at_edges.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonMonotoneCdf { edge });
    }
    let mut masses = Vec::with_capacity(rule.len());
    for (k, w) in at_edges.windows(2).enumerate() {
        let mass = w[1] - w[0];
        if mass < -1e-12 {
            return Err(Error::NonMonotoneCdf { edge: k + 1 });
        }
        masses.push(mass.max(0.0));
    }
    Pmf::from_weights(masses)
}

/// One-hot pmf on the bin holding `x`.
pub fn pmf_from_value(x: f64, rule: &BinningRule) -> Result<Pmf> {
    Pmf::one_hot(rule.bin_index(x)?, rule.len())
}

/// Expected value in bin-center units, `Σ_k B_k p(k)`.
pub fn expected_value(pmf: &Pmf, rule: &BinningRule) -> f64 {
    pmf.probs()
        .iter()
        .zip(rule.centers())
        .map(|(p, c)| p * c)
        .sum()
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 1]`.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Freedman–Diaconis bin count; 1 when the interquartile range vanishes.
pub fn freedman_diaconis_bins(sorted: &[f64]) -> usize {
    let m = sorted.len() as f64;
    let iqr = percentile(sorted, 0.75) - percentile(sorted, 0.25);
    if iqr <= 0.0 {
        return 1;
    }
    let width = 2.0 * iqr * m.powf(-1.0 / 3.0);
    let range = sorted[sorted.len() - 1] - sorted[0];
    ((range / width).ceil() as usize).max(1)
}

pub fn sturges_bins(sample_count: usize) -> usize {
    (sample_count as f64).log2().ceil() as usize + 1
}

/// `min{n, max(fd, sturges)}` with `n` the number of distinct values.
pub fn choose_bin_count(values: &[f64]) -> Result<usize> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidBinning("values must be finite".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::InvalidBinning(format!(
            "need at least 2 distinct values, got {}",
            distinct.len()
        )));
    }
    let fd = freedman_diaconis_bins(&sorted);
    let sturges = sturges_bins(sorted.len());
    Ok(distinct.len().min(fd.max(sturges)))
}
