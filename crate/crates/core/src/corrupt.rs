//! Corruption of ground-truth data: cell-wise Gaussian noise and missing entries.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pdb::{Dataset, MissingMask, Pmf, Record};
use crate::rng::seeded;

/// Gaussian noise standard deviation, either fixed or scaled by `100 / K_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLevel {
    Absolute(f64),
    /// `c` such that `σ_j = c · 100 / K_j`.
    PerCategory(f64),
}

impl NoiseLevel {
    pub fn sigma_for(&self, cardinality: usize) -> f64 {
        match *self {
            NoiseLevel::Absolute(s) => s,
            NoiseLevel::PerCategory(c) => c * 100.0 / cardinality as f64,
        }
    }

    pub fn coefficient(&self) -> f64 {
        match *self {
            NoiseLevel::Absolute(s) | NoiseLevel::PerCategory(s) => s,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coefficient() == 0.0
    }

    fn validate(&self) -> Result<()> {
        let c = self.coefficient();
        if !c.is_finite() || c < 0.0 {
            return Err(Error::InvalidConfig(format!("noise level must be >= 0, got {c}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub sigma: NoiseLevel,
    pub missing_prob: f64,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        self.sigma.validate()?;
        if !(0.0..=1.0).contains(&self.missing_prob) {
            return Err(Error::InvalidConfig(format!(
                "missing probability must lie in [0, 1], got {}",
                self.missing_prob
            )));
        }
        Ok(())
    }
}

fn noisy_cell<R: Rng + ?Sized>(cell: &Pmf, sigma: f64, rng: &mut R) -> Pmf {
    let normal = Normal::new(0.0, sigma).expect("finite non-negative sigma");
    loop {
        let perturbed: Vec<f64> = cell
            .probs()
            .iter()
            .map(|&p| (p + normal.sample(rng)).clamp(0.0, 1.0))
            .collect();
        // an all-zero slice has no normalization; redraw it
        if perturbed.iter().any(|&p| p > 0.0) {
            return Pmf::from_weights(perturbed).expect("positive clamped mass");
        }
    }
}

/// Adds `N(0, σ_j)` to every entry, clamps to `[0, 1]` and renormalizes each cell.
/// Cells flagged in `skip` are copied unchanged.
pub fn add_gaussian_noise<R: Rng + ?Sized>(
    ds: &Dataset,
    level: NoiseLevel,
    skip: Option<&MissingMask>,
    rng: &mut R,
) -> Result<Dataset> {
    level.validate()?;
    if let Some(mask) = skip {
        mask.check_shape(ds)?;
    }
    if level.is_zero() {
        return Ok(ds.clone());
    }
    let schema = ds.schema();
    let records = ds
        .records()
        .iter()
        .enumerate()
        .map(|(i, record)| {
            let cells = record
                .cells
                .iter()
                .enumerate()
                .map(|(j, cell)| {
                    if skip.is_some_and(|m| m.get(i, j)) {
                        cell.clone()
                    } else {
                        noisy_cell(cell, level.sigma_for(schema.attribute(j).cardinality()), rng)
                    }
                })
                .collect();
            Record::new(cells)
        })
        .collect();
    Dataset::new(schema.clone(), records)
}

/// Replaces each cell with the uniform pmf with probability `prob`.
pub fn add_missing_entries<R: Rng + ?Sized>(
    ds: &Dataset,
    prob: f64,
    rng: &mut R,
) -> Result<(Dataset, MissingMask)> {
    if !(0.0..=1.0).contains(&prob) {
        return Err(Error::InvalidConfig(format!(
            "missing probability must lie in [0, 1], got {prob}"
        )));
    }
    let mut mask = MissingMask::for_dataset(ds);
    if prob == 0.0 {
        return Ok((ds.clone(), mask));
    }
    let records = ds
        .records()
        .iter()
        .enumerate()
        .map(|(i, record)| {
            let cells = record
                .cells
                .iter()
                .enumerate()
                .map(|(j, cell)| {
                    if rng.random::<f64>() < prob {
                        mask.set(i, j, true);
                        Pmf::uniform(cell.len())
                    } else {
                        cell.clone()
                    }
                })
                .collect();
            Record::new(cells)
        })
        .collect();
    Ok((Dataset::new(ds.schema().clone(), records)?, mask))
}

/// Missing entries first, then Gaussian noise on every cell that is not missing.
pub fn corrupt(ds: &Dataset, cfg: &NoiseConfig) -> Result<(Dataset, MissingMask)> {
    corrupt_masked(ds, &MissingMask::for_dataset(ds), cfg)
}

/// As [`corrupt`], for data that already has missing entries flagged in `existing`.
/// The returned mask is the union of `existing` and the newly blanked cells.
pub fn corrupt_masked(
    ds: &Dataset,
    existing: &MissingMask,
    cfg: &NoiseConfig,
) -> Result<(Dataset, MissingMask)> {
    cfg.validate()?;
    existing.check_shape(ds)?;
    let mut rng = seeded(cfg.seed);
    let (blanked, mut mask) = add_missing_entries(ds, cfg.missing_prob, &mut rng)?;
    for i in 0..mask.n_records() {
        for j in 0..mask.n_attributes() {
            if existing.get(i, j) {
                mask.set(i, j, true);
            }
        }
    }
    let noisy = add_gaussian_noise(&blanked, cfg.sigma, Some(&mask), &mut rng)?;
    Ok((noisy, mask))
}
