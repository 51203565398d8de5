use std::sync::Arc;

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{jsd_grad_q, jsd_slices};
use crate::pdb::{Dataset, MissingMask};
use crate::rng::seeded;

use super::activation::{Activation, ActivationRegistry};
use super::adam::{AdamConfig, AdamState};
use super::params::{Architecture, ParamSet};

/// A named seed that contributed to a model, e.g. `("init", 42)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedUse {
    pub stage: String,
    pub seed: u64,
}

/// Cached activations of one channel for one batch.
#[derive(Debug, Clone)]
pub struct ChannelTrace {
    pub z_in: Array2<f64>,
    pub h_in: Array2<f64>,
    pub z_code: Array2<f64>,
    pub h_code: Array2<f64>,
    pub z_out: Array2<f64>,
    pub h_out: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Network input after the train-time noise layer.
    pub input: Array2<f64>,
    pub channels: Vec<ChannelTrace>,
    /// Softmax inputs.
    pub logits: Array2<f64>,
    /// Per-attribute softmax outputs.
    pub output: Array2<f64>,
}

/// Value of the training objective on one batch.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Objective {
    /// Summed JSD over records and unmasked attributes.
    pub data_loss: f64,
    /// `λ · Σ ‖code activations‖²` over channels and records.
    pub activity_penalty: f64,
}

impl Objective {
    pub fn total(&self) -> f64 {
        self.data_loss + self.activity_penalty
    }
}

/// Network weights, optimizer state and provenance of a data-cleaning autoencoder.
#[derive(Debug, Clone)]
pub struct DcaeParams {
    arch: Architecture,
    activations: Vec<Arc<dyn Activation>>,
    pub weights: ParamSet,
    pub adam: AdamState,
    pub lineage: Vec<SeedUse>,
}

impl PartialEq for DcaeParams {
    fn eq(&self, other: &Self) -> bool {
        self.arch == other.arch
            && self.weights == other.weights
            && self.adam == other.adam
            && self.lineage == other.lineage
    }
}

fn ensure_finite(m: &Array2<f64>, layer: &'static str, channel: Option<&str>) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite {
            layer,
            channel: channel.map(str::to_string),
        })
    }
}

fn dense(x: &ArrayView2<f64>, w: &Array2<f64>, b: &Array1<f64>) -> Array2<f64> {
    let mut z = x.dot(w);
    z += b;
    z
}

fn activate(z: &Array2<f64>, act: &dyn Activation) -> Array2<f64> {
    z.mapv(|v| act.apply(v))
}

/// Multiplies `grad` element-wise by the activation derivative at `z`.
fn through_activation(grad: &mut Array2<f64>, z: &Array2<f64>, act: &dyn Activation) {
    Zip::from(grad).and(z).for_each(|g, &z| *g *= act.derivative(z));
}

impl DcaeParams {
    /// Glorot-initialized network using the built-in activations.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self> {
        Self::init_with(arch, seed, &ActivationRegistry::default())
    }

    pub fn init_with(arch: Architecture, seed: u64, registry: &ActivationRegistry) -> Result<Self> {
        arch.validate()?;
        let activations = registry.resolve(&arch.channels)?;
        let weights = ParamSet::glorot(&arch, &mut seeded(seed));
        Ok(DcaeParams {
            adam: AdamState::new(&arch),
            activations,
            weights,
            arch,
            lineage: vec![SeedUse {
                stage: "init".into(),
                seed,
            }],
        })
    }

    /// Reassembles a model from stored parts, resolving channel activations by name.
    pub fn from_parts(
        arch: Architecture,
        weights: ParamSet,
        adam: AdamState,
        lineage: Vec<SeedUse>,
        registry: &ActivationRegistry,
    ) -> Result<Self> {
        arch.validate()?;
        let activations = registry.resolve(&arch.channels)?;
        let expected = ParamSet::zeros(&arch).layout(&arch.channels);
        for (what, set) in [("weights", &weights), ("adam m", &adam.m), ("adam v", &adam.v)] {
            if set.w_in.len() != arch.channels.len() || set.layout(&arch.channels) != expected {
                return Err(Error::Checkpoint(format!("{what} do not match the architecture")));
            }
        }
        Ok(DcaeParams {
            arch,
            activations,
            weights,
            adam,
            lineage,
        })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn record_seed(&mut self, stage: impl Into<String>, seed: u64) {
        self.lineage.push(SeedUse {
            stage: stage.into(),
            seed,
        });
    }

    fn check_batch(&self, batch: &ArrayView2<f64>, what: &str) -> Result<()> {
        if batch.ncols() != self.arch.width() {
            return Err(Error::DimensionMismatch {
                expected: self.arch.width(),
                actual: batch.ncols(),
                context: format!("{what} width"),
            });
        }
        Ok(())
    }

    /// Runs the network on a batch of vectorized records.
    ///
    /// With `training` set, Gaussian noise with per-attribute standard deviation
    /// `noise_coef · 100 / K_j` is added to the input first.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        batch: ArrayView2<f64>,
        training: bool,
        rng: &mut R,
    ) -> Result<ForwardTrace> {
        self.check_batch(&batch, "batch")?;
        let input = if training && self.arch.noise_coef > 0.0 {
            let sigmas = self.arch.noise_sigmas();
            let unit = Normal::<f64>::new(0.0, 1.0).expect("unit normal");
            let mut noisy = batch.to_owned();
            for mut row in noisy.rows_mut() {
                for (x, &sigma) in row.iter_mut().zip(&sigmas) {
                    *x += sigma * unit.sample(rng);
                }
            }
            noisy
        } else {
            batch.to_owned()
        };
        self.forward_from(input)
    }

    /// Forward pass without the noise layer.
    pub fn infer(&self, batch: ArrayView2<f64>) -> Result<ForwardTrace> {
        self.check_batch(&batch, "batch")?;
        self.forward_from(batch.to_owned())
    }

    fn forward_from(&self, input: Array2<f64>) -> Result<ForwardTrace> {
        let w = &self.weights;
        let d = self.arch.width();
        let mut logits = Array2::zeros((input.nrows(), d));
        logits += &w.b_merge;
        let mut channels = Vec::with_capacity(self.activations.len());
        for (c, act) in self.activations.iter().enumerate() {
            let name = Some(act.name());
            let z_in = dense(&input.view(), &w.w_in[c], &w.b_in[c]);
            let h_in = activate(&z_in, act.as_ref());
            ensure_finite(&h_in, "channel input", name)?;
            let z_code = dense(&h_in.view(), &w.w_code[c], &w.b_code[c]);
            let h_code = activate(&z_code, act.as_ref());
            ensure_finite(&h_code, "code", name)?;
            let z_out = dense(&h_code.view(), &w.w_out[c], &w.b_out[c]);
            let h_out = activate(&z_out, act.as_ref());
            ensure_finite(&h_out, "channel output", name)?;
            let block = w.w_merge.slice(s![c * d..(c + 1) * d, ..]);
            general_mat_mul(1.0, &h_out, &block, 1.0, &mut logits);
            channels.push(ChannelTrace {
                z_in,
                h_in,
                z_code,
                h_code,
                z_out,
                h_out,
            });
        }
        ensure_finite(&logits, "merge", None)?;
        let output = self.softmax(&logits);
        Ok(ForwardTrace {
            input,
            channels,
            logits,
            output,
        })
    }

    /// Softmax applied separately to every attribute's slice of each row.
    pub fn softmax(&self, logits: &Array2<f64>) -> Array2<f64> {
        let spans = self.arch.spans();
        let mut out = logits.clone();
        for mut row in out.rows_mut() {
            for span in &spans {
                let mut slice = row.slice_mut(s![span.clone()]);
                let max = slice.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                slice.mapv_inplace(|v| (v - max).exp());
                let total = slice.sum();
                slice.mapv_inplace(|v| v / total);
            }
        }
        out
    }

    /// Objective of a traced batch against `targets` without computing gradients.
    pub fn objective(
        &self,
        trace: &ForwardTrace,
        targets: ArrayView2<f64>,
        skip: Option<&MissingMask>,
    ) -> Result<Objective> {
        self.check_targets(trace, &targets, skip)?;
        let spans = self.arch.spans();
        let mut data_loss = 0.0;
        for (b, (p, q)) in targets.rows().into_iter().zip(trace.output.rows()).enumerate() {
            for (j, span) in spans.iter().enumerate() {
                if skip.is_some_and(|m| m.get(b, j)) {
                    continue;
                }
                let p = p.slice(s![span.clone()]);
                let q = q.slice(s![span.clone()]);
                data_loss += jsd_slices(
                    p.as_slice().expect("contiguous row"),
                    q.as_slice().expect("contiguous row"),
                );
            }
        }
        Ok(Objective {
            data_loss,
            activity_penalty: self.activity_penalty(trace),
        })
    }

    fn activity_penalty(&self, trace: &ForwardTrace) -> f64 {
        self.arch.activity_l2
            * trace
                .channels
                .iter()
                .map(|ch| ch.h_code.iter().map(|v| v * v).sum::<f64>())
                .sum::<f64>()
    }

    fn check_targets(
        &self,
        trace: &ForwardTrace,
        targets: &ArrayView2<f64>,
        skip: Option<&MissingMask>,
    ) -> Result<()> {
        if targets.dim() != trace.output.dim() {
            return Err(Error::DimensionMismatch {
                expected: trace.output.len(),
                actual: targets.len(),
                context: "targets vs. batch output".into(),
            });
        }
        if trace.channels.len() != self.activations.len() {
            return Err(Error::DimensionMismatch {
                expected: self.activations.len(),
                actual: trace.channels.len(),
                context: "traced channels".into(),
            });
        }
        if let Some(m) = skip {
            if m.n_records() != targets.nrows() || m.n_attributes() != self.arch.code_width() {
                return Err(Error::DimensionMismatch {
                    expected: targets.nrows() * self.arch.code_width(),
                    actual: m.n_records() * m.n_attributes(),
                    context: "loss mask".into(),
                });
            }
        }
        Ok(())
    }

    /// Gradient of the summed JSD plus activity penalty, written into `grads`.
    pub fn backward_into(
        &self,
        trace: &ForwardTrace,
        targets: ArrayView2<f64>,
        skip: Option<&MissingMask>,
        grads: &mut ParamSet,
    ) -> Result<Objective> {
        self.check_targets(trace, &targets, skip)?;
        if grads.w_in.len() != self.activations.len() {
            return Err(Error::DimensionMismatch {
                expected: self.activations.len(),
                actual: grads.w_in.len(),
                context: "gradient channels".into(),
            });
        }
        let d = self.arch.width();
        let spans = self.arch.spans();
        let w = &self.weights;

        // dL/dlogits through the per-attribute softmax
        let mut g_logits = Array2::<f64>::zeros(trace.output.dim());
        let mut data_loss = 0.0;
        let mut g_q = vec![0.0; spans.iter().map(|s| s.len()).max().unwrap_or(0)];
        for (b, ((p, q), mut g)) in targets
            .rows()
            .into_iter()
            .zip(trace.output.rows())
            .zip(g_logits.rows_mut())
            .enumerate()
        {
            for (j, span) in spans.iter().enumerate() {
                if skip.is_some_and(|m| m.get(b, j)) {
                    continue;
                }
                let p = p.slice(s![span.clone()]);
                let q = q.slice(s![span.clone()]);
                let (p, q) = (p.as_slice().expect("contiguous"), q.as_slice().expect("contiguous"));
                data_loss += jsd_slices(p, q);
                let gq = &mut g_q[..span.len()];
                jsd_grad_q(p, q, gq);
                let mean: f64 = q.iter().zip(gq.iter()).map(|(q, g)| q * g).sum();
                for (k, col) in span.clone().enumerate() {
                    g[col] = q[k] * (gq[k] - mean);
                }
            }
        }

        grads.b_merge.assign(&g_logits.sum_axis(Axis(0)));
        let two_lambda = 2.0 * self.arch.activity_l2;
        for (c, (act, ch)) in self.activations.iter().zip(&trace.channels).enumerate() {
            let act = act.as_ref();
            let block = w.w_merge.slice(s![c * d..(c + 1) * d, ..]);
            let mut g_merge = grads.w_merge.slice_mut(s![c * d..(c + 1) * d, ..]);
            general_mat_mul(1.0, &ch.h_out.t(), &g_logits, 0.0, &mut g_merge);

            let mut g_out = g_logits.dot(&block.t());
            through_activation(&mut g_out, &ch.z_out, act);
            general_mat_mul(1.0, &ch.h_code.t(), &g_out, 0.0, &mut grads.w_out[c]);
            grads.b_out[c].assign(&g_out.sum_axis(Axis(0)));

            let mut g_code = g_out.dot(&w.w_out[c].t());
            g_code.scaled_add(two_lambda, &ch.h_code);
            through_activation(&mut g_code, &ch.z_code, act);
            general_mat_mul(1.0, &ch.h_in.t(), &g_code, 0.0, &mut grads.w_code[c]);
            grads.b_code[c].assign(&g_code.sum_axis(Axis(0)));

            let mut g_in = g_code.dot(&w.w_code[c].t());
            through_activation(&mut g_in, &ch.z_in, act);
            general_mat_mul(1.0, &trace.input.t(), &g_in, 0.0, &mut grads.w_in[c]);
            grads.b_in[c].assign(&g_in.sum_axis(Axis(0)));
        }

        Ok(Objective {
            data_loss,
            activity_penalty: self.activity_penalty(trace),
        })
    }

    pub fn backward(
        &self,
        trace: &ForwardTrace,
        targets: ArrayView2<f64>,
        skip: Option<&MissingMask>,
    ) -> Result<(Objective, ParamSet)> {
        let mut grads = ParamSet::zeros(&self.arch);
        let objective = self.backward_into(trace, targets, skip, &mut grads)?;
        Ok((objective, grads))
    }

    pub fn adam_step(&mut self, grads: &ParamSet, cfg: &AdamConfig) {
        self.adam.step(&mut self.weights, grads, cfg);
    }

    /// Runs every record through the network without input noise.
    pub fn clean(&self, ds: &Dataset) -> Result<Dataset> {
        if !self.arch.matches(ds.schema()) {
            return Err(Error::SchemaMismatch(format!(
                "model expects cardinalities {:?}, dataset has {:?}",
                self.arch.cardinalities,
                ds.schema().cardinalities()
            )));
        }
        if ds.is_empty() {
            return Ok(Dataset::empty(ds.schema().clone()));
        }
        let input = ds.to_matrix();
        let mut output = Array2::zeros(input.dim());
        const CHUNK: usize = 512;
        for (x, mut y) in input
            .axis_chunks_iter(Axis(0), CHUNK)
            .zip(output.axis_chunks_iter_mut(Axis(0), CHUNK))
        {
            y.assign(&self.infer(x)?.output);
        }
        Dataset::from_matrix(ds.schema().clone(), &output)
    }
}
