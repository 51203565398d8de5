//! Ground-truth generation from a Bayesian-network chain `A → B → C → …`.
//!
//! The root is a standard normal truncated to `[-2, 2]`. Each child, given its
//! parent's 0-based category `a`, is `Gamma(30a/K + 1, 1)` truncated to
//! `[4, 5 + 30a/K]`, quantized over the shared child support
//! `[4, 5 + 30(K-1)/K]`. The same kernel is reused on every edge.

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Gamma, Normal};

use crate::error::{Error, Result};
use crate::pdb::{lift_indices, AttributeKind, AttributeSpec, Dataset, Pmf, Schema};
use crate::quantize::{pmf_from_cdf, uniform_bins, BinningRule};
use crate::rng::seeded;

pub const ROOT_LOW: f64 = -2.0;
pub const ROOT_HIGH: f64 = 2.0;
pub const CHILD_LOW: f64 = 4.0;
const GAMMA_SLOPE: f64 = 30.0;

fn default_kind() -> AttributeKind {
    AttributeKind::Categorical
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    /// Chain length N.
    pub attributes: usize,
    /// Sampling density K shared by all attributes.
    pub categories: usize,
    /// Record count M.
    pub records: usize,
    pub seed: u64,
    /// Whether the generated attributes are treated as binned continuous values.
    #[serde(default = "default_kind")]
    pub kind: AttributeKind,
}

impl ChainSpec {
    pub fn new(attributes: usize, categories: usize, records: usize, seed: u64) -> Self {
        ChainSpec {
            attributes,
            categories,
            records,
            seed,
            kind: AttributeKind::Categorical,
        }
    }

    pub fn with_kind(mut self, kind: AttributeKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.attributes < 2 {
            return Err(Error::InvalidConfig(format!(
                "chain needs at least 2 attributes, got {}",
                self.attributes
            )));
        }
        if self.categories < 2 {
            return Err(Error::InvalidConfig(format!(
                "sampling density must be at least 2, got {}",
                self.categories
            )));
        }
        if self.records < 1 {
            return Err(Error::InvalidConfig("need at least one record".into()));
        }
        Ok(())
    }

    /// Schema of the generated table: attributes `A`, `B`, … in chain order.
    pub fn schema(&self) -> Result<Schema> {
        let attributes = (0..self.attributes)
            .map(|j| {
                let name = attribute_name(j);
                match self.kind {
                    AttributeKind::Categorical => AttributeSpec::categorical_indexed(name, self.categories),
                    AttributeKind::Continuous => {
                        let rule = if j == 0 {
                            root_bins(self.categories)?
                        } else {
                            child_bins(self.categories)?
                        };
                        AttributeSpec::continuous(name, rule)
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Schema::new(attributes)
    }
}

/// `A`…`Z`, then `X26`, `X27`, … for longer chains.
pub fn attribute_name(j: usize) -> String {
    if j < 26 {
        char::from(b'A' + j as u8).to_string()
    } else {
        format!("X{j}")
    }
}

pub fn root_bins(k: usize) -> Result<BinningRule> {
    uniform_bins(ROOT_LOW, ROOT_HIGH, k)
}

/// Upper truncation bound of the child given parent category `a`.
pub fn child_upper(a: usize, k: usize) -> f64 {
    5.0 + GAMMA_SLOPE * a as f64 / k as f64
}

/// Union of all conditional truncation intervals, split into `k` equal bins.
pub fn child_bins(k: usize) -> Result<BinningRule> {
    uniform_bins(CHILD_LOW, child_upper(k - 1, k), k)
}

/// Bin masses of the truncated standard normal root.
pub fn root_pmf(k: usize) -> Result<Pmf> {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    pmf_from_cdf(|x| normal.cdf(x), &root_bins(k)?)
}

/// Gamma shape for parent category `a`.
pub fn child_shape(a: usize, k: usize) -> f64 {
    GAMMA_SLOPE * a as f64 / k as f64 + 1.0
}

/// Bin masses of the child given parent category `a`.
pub fn conditional_pmf(a: usize, k: usize) -> Result<Pmf> {
    if a >= k {
        return Err(Error::CategoryOutOfRange {
            index: a,
            cardinality: k,
        });
    }
    let gamma = Gamma::new(child_shape(a, k), 1.0).expect("positive shape and rate");
    let (lo, hi) = (CHILD_LOW, child_upper(a, k));
    // Work in the survival tail when the interval sits above the median.
    let upper_tail = gamma.cdf(lo) > 0.5;
    let truncated = |x: f64| {
        let x = x.clamp(lo, hi);
        if upper_tail {
            (gamma.sf(lo) - gamma.sf(x)) / (gamma.sf(lo) - gamma.sf(hi))
        } else {
            (gamma.cdf(x) - gamma.cdf(lo)) / (gamma.cdf(hi) - gamma.cdf(lo))
        }
    };
    pmf_from_cdf(truncated, &child_bins(k)?)
}

/// Precomputed root distribution and conditional kernel for one sampling density.
#[derive(Debug, Clone)]
pub struct ChainSampler {
    categories: usize,
    root: Pmf,
    kernel: Vec<Pmf>,
    root_index: WeightedIndex<f64>,
    kernel_index: Vec<WeightedIndex<f64>>,
}

impl ChainSampler {
    pub fn new(categories: usize) -> Result<Self> {
        if categories < 2 {
            return Err(Error::InvalidConfig(format!(
                "sampling density must be at least 2, got {categories}"
            )));
        }
        let root = root_pmf(categories)?;
        let kernel = (0..categories)
            .map(|a| conditional_pmf(a, categories))
            .collect::<Result<Vec<_>>>()?;
        let weighted = |p: &Pmf| WeightedIndex::new(p.probs().iter().copied()).expect("valid pmf weights");
        Ok(ChainSampler {
            categories,
            root_index: weighted(&root),
            kernel_index: kernel.iter().map(weighted).collect(),
            root,
            kernel,
        })
    }

    pub fn categories(&self) -> usize {
        self.categories
    }

    pub fn root(&self) -> &Pmf {
        &self.root
    }

    /// Conditional pmf of a child given parent category `a`.
    pub fn kernel(&self, a: usize) -> &Pmf {
        &self.kernel[a]
    }

    pub fn sample_root<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.root_index.sample(rng)
    }

    pub fn sample_conditional<R: Rng + ?Sized>(&self, parent: usize, rng: &mut R) -> usize {
        self.kernel_index[parent].sample(rng)
    }

    /// One row: the root, then each attribute conditioned on its predecessor.
    pub fn sample_row<R: Rng + ?Sized>(&self, attributes: usize, rng: &mut R) -> Vec<usize> {
        let mut row = Vec::with_capacity(attributes);
        let mut parent = self.sample_root(rng);
        row.push(parent);
        for _ in 1..attributes {
            parent = self.sample_conditional(parent, rng);
            row.push(parent);
        }
        row
    }
}

/// M × N table of 0-based category indices.
pub fn sample_chain(spec: &ChainSpec) -> Result<Vec<Vec<usize>>> {
    spec.validate()?;
    let sampler = ChainSampler::new(spec.categories)?;
    let mut rng = seeded(spec.seed);
    Ok((0..spec.records)
        .map(|_| sampler.sample_row(spec.attributes, &mut rng))
        .collect())
}

/// Sampled chain lifted to one-hot probabilistic records.
pub fn generate_ground_truth(spec: &ChainSpec) -> Result<Dataset> {
    let rows = sample_chain(spec)?;
    lift_indices(&rows, &spec.schema()?)
}
