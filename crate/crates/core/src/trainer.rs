//! Training schedules: plain denoising on corrupted data, and a semi-supervised
//! variant that follows up with a pass over a small labeled subset.

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dcae::{AdamConfig, Architecture, DcaeParams, ParamSet, DEFAULT_ACTIVITY_L2, DEFAULT_CHANNELS, DEFAULT_NOISE_COEF};
use crate::error::{Error, Result};
use crate::pdb::{Dataset, MissingMask};
use crate::rng::{derive_seed, seeded, StageRng};

fn default_epochs() -> usize {
    100
}
fn default_batch_size() -> usize {
    32
}
fn default_labeled_fraction() -> f64 {
    0.02
}
fn default_true() -> bool {
    true
}
fn default_noise_coef() -> f64 {
    DEFAULT_NOISE_COEF
}
fn default_activity_l2() -> f64 {
    DEFAULT_ACTIVITY_L2
}
fn default_channels() -> Vec<String> {
    DEFAULT_CHANNELS.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_epochs")]
    pub epochs_unsupervised: usize,
    /// Only used by the semi-supervised schedule.
    #[serde(default = "default_epochs")]
    pub epochs_supervised: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_labeled_fraction")]
    pub labeled_fraction: f64,
    #[serde(default)]
    pub seed: u64,
    /// Leave cells blanked by the corruptor out of the unsupervised loss.
    #[serde(default = "default_true")]
    pub mask_missing_in_unsupervised_loss: bool,
    #[serde(default)]
    pub adam: AdamConfig,
    #[serde(default = "default_noise_coef")]
    pub noise_coef: f64,
    #[serde(default = "default_activity_l2")]
    pub activity_l2: f64,
    #[serde(default = "default_channels")]
    pub channels: Vec<String>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs_unsupervised: default_epochs(),
            epochs_supervised: default_epochs(),
            batch_size: default_batch_size(),
            labeled_fraction: default_labeled_fraction(),
            seed: 0,
            mask_missing_in_unsupervised_loss: true,
            adam: AdamConfig::default(),
            noise_coef: DEFAULT_NOISE_COEF,
            activity_l2: DEFAULT_ACTIVITY_L2,
            channels: default_channels(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.labeled_fraction) {
            return Err(Error::InvalidConfig(format!(
                "labeled_fraction {} outside [0, 1]",
                self.labeled_fraction
            )));
        }
        let a = &self.adam;
        if !(a.learning_rate > 0.0 && (0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2) && a.epsilon > 0.0) {
            return Err(Error::InvalidConfig("bad Adam hyperparameters".into()));
        }
        Ok(())
    }

    pub fn architecture(&self, cardinalities: Vec<usize>) -> Architecture {
        Architecture {
            cardinalities,
            channels: self.channels.clone(),
            noise_coef: self.noise_coef,
            activity_l2: self.activity_l2,
        }
    }

    fn stage_seed(&self, stage: u64) -> u64 {
        derive_seed(self.seed, &[stage])
    }
}

const STAGE_INIT: u64 = 0;
const STAGE_UNSUP_ORDER: u64 = 1;
const STAGE_UNSUP_NOISE: u64 = 2;
const STAGE_SUP_ORDER: u64 = 3;
const STAGE_SUP_NOISE: u64 = 4;

/// Records with ground truth available versus the rest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemiSupSplit {
    pub labeled: Vec<usize>,
    pub unlabeled: Vec<usize>,
}

/// Uniformly random split with `round(records · fraction)` labeled records.
pub fn make_split(records: usize, labeled_fraction: f64, seed: u64) -> Result<SemiSupSplit> {
    if !(0.0..=1.0).contains(&labeled_fraction) {
        return Err(Error::InvalidConfig(format!(
            "labeled_fraction {labeled_fraction} outside [0, 1]"
        )));
    }
    let n_labeled = ((records as f64) * labeled_fraction).round() as usize;
    let mut order: Vec<usize> = (0..records).collect();
    order.shuffle(&mut seeded(seed));
    let mut labeled = order[..n_labeled].to_vec();
    let mut unlabeled = order[n_labeled..].to_vec();
    labeled.sort_unstable();
    unlabeled.sort_unstable();
    Ok(SemiSupSplit { labeled, unlabeled })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Unsupervised,
    Supervised,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Unsupervised => "unsupervised",
            Phase::Supervised => "supervised",
        }
    }
}

/// Summed training objective over one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub phase: Phase,
    pub loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub params: DcaeParams,
    pub log: Vec<EpochLoss>,
}

struct Phased<'a> {
    phase: Phase,
    inputs: &'a Array2<f64>,
    targets: &'a Array2<f64>,
    mask: Option<&'a MissingMask>,
    epochs: usize,
}

fn run_phase(
    model: &mut DcaeParams,
    job: Phased<'_>,
    cfg: &TrainConfig,
    order_rng: &mut StageRng,
    noise_rng: &mut StageRng,
    log: &mut Vec<EpochLoss>,
) -> Result<()> {
    let rows = job.inputs.nrows();
    if rows == 0 {
        return Ok(());
    }
    let mut grads = ParamSet::zeros(model.architecture());
    let mut order: Vec<usize> = (0..rows).collect();
    for epoch in 0..job.epochs {
        order.shuffle(order_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let x = job.inputs.select(Axis(0), batch);
            let y = job.targets.select(Axis(0), batch);
            let mask = job.mask.map(|m| m.subset(batch));
            let trace = model.forward(x.view(), true, noise_rng)?;
            let objective = model.backward_into(&trace, y.view(), mask.as_ref(), &mut grads)?;
            epoch_loss += objective.total();
            model.adam_step(&grads, &cfg.adam);
        }
        if !model.weights.is_finite() {
            return Err(Error::NonFinite {
                layer: "parameters after update",
                channel: None,
            });
        }
        log.push(EpochLoss {
            epoch,
            phase: job.phase,
            loss: epoch_loss,
        });
    }
    Ok(())
}

fn fresh_model(data: &Dataset, cfg: &TrainConfig) -> Result<DcaeParams> {
    cfg.validate()?;
    DcaeParams::init(cfg.architecture(data.schema().cardinalities()), cfg.stage_seed(STAGE_INIT))
}

fn unsupervised_phase(
    model: &mut DcaeParams,
    corrupted: &Dataset,
    mask: Option<&MissingMask>,
    cfg: &TrainConfig,
    log: &mut Vec<EpochLoss>,
) -> Result<()> {
    if let Some(m) = mask {
        m.check_shape(corrupted)?;
    }
    let inputs = corrupted.to_matrix();
    let (order_seed, noise_seed) = (cfg.stage_seed(STAGE_UNSUP_ORDER), cfg.stage_seed(STAGE_UNSUP_NOISE));
    model.record_seed("unsupervised shuffle", order_seed);
    model.record_seed("unsupervised noise", noise_seed);
    let job = Phased {
        phase: Phase::Unsupervised,
        inputs: &inputs,
        targets: &inputs,
        mask: mask.filter(|_| cfg.mask_missing_in_unsupervised_loss),
        epochs: cfg.epochs_unsupervised,
    };
    run_phase(model, job, cfg, &mut seeded(order_seed), &mut seeded(noise_seed), log)
}

/// Trains the network to reproduce its own (noisy) inputs.
pub fn train_unsupervised(corrupted: &Dataset, mask: Option<&MissingMask>, cfg: &TrainConfig) -> Result<TrainedModel> {
    let mut params = fresh_model(corrupted, cfg)?;
    let mut log = Vec::new();
    unsupervised_phase(&mut params, corrupted, mask, cfg, &mut log)?;
    Ok(TrainedModel { params, log })
}

/// Unsupervised epochs on every record, then supervised epochs mapping the
/// labeled records' corrupted versions to their clean ground truth.
///
/// `labeled_truth` holds the ground truth of `split.labeled`, in that order.
pub fn train_semi_supervised(
    corrupted: &Dataset,
    labeled_truth: &Dataset,
    split: &SemiSupSplit,
    mask: Option<&MissingMask>,
    cfg: &TrainConfig,
) -> Result<TrainedModel> {
    if labeled_truth.len() != split.labeled.len() {
        return Err(Error::DimensionMismatch {
            expected: split.labeled.len(),
            actual: labeled_truth.len(),
            context: "labeled ground-truth records".into(),
        });
    }
    if labeled_truth.schema() != corrupted.schema() {
        return Err(Error::SchemaMismatch("ground truth and corrupted data differ".into()));
    }
    if split.labeled.iter().chain(&split.unlabeled).any(|&i| i >= corrupted.len())
        || split.labeled.len() + split.unlabeled.len() != corrupted.len()
    {
        return Err(Error::InvalidConfig("split does not cover the dataset".into()));
    }
    let mut params = fresh_model(corrupted, cfg)?;
    let mut log = Vec::new();
    unsupervised_phase(&mut params, corrupted, mask, cfg, &mut log)?;

    let inputs = corrupted.subset(&split.labeled).to_matrix();
    let targets = labeled_truth.to_matrix();
    let (order_seed, noise_seed) = (cfg.stage_seed(STAGE_SUP_ORDER), cfg.stage_seed(STAGE_SUP_NOISE));
    params.record_seed("supervised shuffle", order_seed);
    params.record_seed("supervised noise", noise_seed);
    let job = Phased {
        phase: Phase::Supervised,
        inputs: &inputs,
        targets: &targets,
        mask: None,
        epochs: cfg.epochs_supervised,
    };
    run_phase(&mut params, job, cfg, &mut seeded(order_seed), &mut seeded(noise_seed), &mut log)?;
    Ok(TrainedModel { params, log })
}
