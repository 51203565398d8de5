use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pdb::Schema;

use super::activation::DEFAULT_CHANNELS;

/// Shape and fixed hyperparameters of the autoencoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    /// Category count per attribute, in schema order.
    pub cardinalities: Vec<usize>,
    /// Activation name per channel.
    pub channels: Vec<String>,
    /// Train-time input noise: `σ_j = noise_coef · 100 / K_j`.
    pub noise_coef: f64,
    /// L2 activity penalty on each channel's code layer.
    pub activity_l2: f64,
}

pub const DEFAULT_NOISE_COEF: f64 = 0.01;
pub const DEFAULT_ACTIVITY_L2: f64 = 1e-4;

impl Architecture {
    pub fn for_schema(schema: &Schema) -> Self {
        Architecture {
            cardinalities: schema.cardinalities(),
            channels: DEFAULT_CHANNELS.iter().map(|s| s.to_string()).collect(),
            noise_coef: DEFAULT_NOISE_COEF,
            activity_l2: DEFAULT_ACTIVITY_L2,
        }
    }

    pub fn with_noise_coef(mut self, coef: f64) -> Self {
        self.noise_coef = coef;
        self
    }

    pub fn with_activity_l2(mut self, l2: f64) -> Self {
        self.activity_l2 = l2;
        self
    }

    /// Width of the input, channel and output layers.
    pub fn width(&self) -> usize {
        self.cardinalities.iter().sum()
    }

    /// Width of each channel's code layer, one unit per attribute.
    pub fn code_width(&self) -> usize {
        self.cardinalities.len()
    }

    pub fn spans(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.cardinalities
            .iter()
            .map(|&k| {
                let span = start..start + k;
                start += k;
                span
            })
            .collect()
    }

    /// Per-column standard deviation of the train-time noise layer.
    pub fn noise_sigmas(&self) -> Vec<f64> {
        self.cardinalities
            .iter()
            .flat_map(|&k| std::iter::repeat_n(self.noise_coef * 100.0 / k as f64, k))
            .collect()
    }

    pub fn matches(&self, schema: &Schema) -> bool {
        self.cardinalities == schema.cardinalities()
    }

    pub fn validate(&self) -> Result<()> {
        if self.cardinalities.is_empty() || self.cardinalities.iter().any(|&k| k < 2) {
            return Err(Error::InvalidConfig(
                "architecture needs at least one attribute with K >= 2".into(),
            ));
        }
        if self.channels.is_empty() {
            return Err(Error::InvalidConfig("architecture needs at least one channel".into()));
        }
        if !(self.noise_coef >= 0.0 && self.activity_l2 >= 0.0) {
            return Err(Error::InvalidConfig("noise and activity penalty must be >= 0".into()));
        }
        Ok(())
    }
}

/// Every weight and bias of the network. Also used for gradients and Adam moments.
///
/// Per channel `c`: `w_in[c]` (D×D), `w_code[c]` (D×N), `w_out[c]` (N×D).
/// `w_merge` (C·D × D) stacks one D×D block per channel, in channel order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub w_in: Vec<Array2<f64>>,
    pub b_in: Vec<Array1<f64>>,
    pub w_code: Vec<Array2<f64>>,
    pub b_code: Vec<Array1<f64>>,
    pub w_out: Vec<Array2<f64>>,
    pub b_out: Vec<Array1<f64>>,
    pub w_merge: Array2<f64>,
    pub b_merge: Array1<f64>,
}

impl ParamSet {
    pub fn zeros(arch: &Architecture) -> Self {
        let d = arch.width();
        let n = arch.code_width();
        let c = arch.channels.len();
        ParamSet {
            w_in: vec![Array2::zeros((d, d)); c],
            b_in: vec![Array1::zeros(d); c],
            w_code: vec![Array2::zeros((d, n)); c],
            b_code: vec![Array1::zeros(n); c],
            w_out: vec![Array2::zeros((n, d)); c],
            b_out: vec![Array1::zeros(d); c],
            w_merge: Array2::zeros((c * d, d)),
            b_merge: Array1::zeros(d),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(arch: &Architecture, rng: &mut R) -> Self {
        let mut p = ParamSet::zeros(arch);
        let fill = |m: &mut Array2<f64>, rng: &mut R| {
            let (fan_in, fan_out) = m.dim();
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
            m.iter_mut().for_each(|w| *w = dist.sample(rng));
        };
        for c in 0..arch.channels.len() {
            fill(&mut p.w_in[c], rng);
            fill(&mut p.w_code[c], rng);
            fill(&mut p.w_out[c], rng);
        }
        fill(&mut p.w_merge, rng);
        p
    }

    /// `(name, shape)` of every tensor in traversal order.
    pub fn layout(&self, channels: &[String]) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        for (c, ch) in channels.iter().enumerate() {
            out.push((format!("{ch}/w_in"), self.w_in[c].shape().to_vec()));
            out.push((format!("{ch}/b_in"), self.b_in[c].shape().to_vec()));
            out.push((format!("{ch}/w_code"), self.w_code[c].shape().to_vec()));
            out.push((format!("{ch}/b_code"), self.b_code[c].shape().to_vec()));
            out.push((format!("{ch}/w_out"), self.w_out[c].shape().to_vec()));
            out.push((format!("{ch}/b_out"), self.b_out[c].shape().to_vec()));
        }
        out.push(("merge/w".into(), self.w_merge.shape().to_vec()));
        out.push(("merge/b".into(), self.b_merge.shape().to_vec()));
        out
    }

    /// Row-major storage of every tensor, in [`ParamSet::layout`] order.
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for c in 0..self.w_in.len() {
            out.push(self.w_in[c].as_slice().expect("standard layout"));
            out.push(self.b_in[c].as_slice().expect("standard layout"));
            out.push(self.w_code[c].as_slice().expect("standard layout"));
            out.push(self.b_code[c].as_slice().expect("standard layout"));
            out.push(self.w_out[c].as_slice().expect("standard layout"));
            out.push(self.b_out[c].as_slice().expect("standard layout"));
        }
        out.push(self.w_merge.as_slice().expect("standard layout"));
        out.push(self.b_merge.as_slice().expect("standard layout"));
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        let channels = self
            .w_in
            .iter_mut()
            .zip(self.b_in.iter_mut())
            .zip(self.w_code.iter_mut())
            .zip(self.b_code.iter_mut())
            .zip(self.w_out.iter_mut())
            .zip(self.b_out.iter_mut());
        for (((((wi, bi), wc), bc), wo), bo) in channels {
            out.push(wi.as_slice_mut().expect("standard layout"));
            out.push(bi.as_slice_mut().expect("standard layout"));
            out.push(wc.as_slice_mut().expect("standard layout"));
            out.push(bc.as_slice_mut().expect("standard layout"));
            out.push(wo.as_slice_mut().expect("standard layout"));
            out.push(bo.as_slice_mut().expect("standard layout"));
        }
        out.push(self.w_merge.as_slice_mut().expect("standard layout"));
        out.push(self.b_merge.as_slice_mut().expect("standard layout"));
        out
    }

    pub fn len(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    pub fn fill(&mut self, value: f64) {
        for s in self.slices_mut() {
            s.fill(value);
        }
    }

    /// Flattened copy in layout order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.slices().concat()
    }

    pub fn max_abs_diff(&self, other: &ParamSet) -> f64 {
        self.slices()
            .iter()
            .zip(other.slices())
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}
