//! Repeated, seeded experiment sweeps: generate (or ingest) ground truth,
//! corrupt it, train, clean, evaluate.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use log::{info, warn};
use pdbclean_core::corrupt::{corrupt_masked, NoiseConfig, NoiseLevel};
use pdbclean_core::dcae::{checkpoint, DcaeParams};
use pdbclean_core::metrics::{evaluate, EvalReport};
use pdbclean_core::pdb::{AttributeKind, Dataset, MissingMask};
use pdbclean_core::pipeline::{PipelineRegistry, TrainingData};
use pdbclean_core::rng::derive_seed;
use pdbclean_core::synth::{generate_ground_truth, ChainSpec};
use pdbclean_core::trainer::{EpochLoss, TrainConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::formats::{save_dataset, save_mask, write_atomic};
use crate::ingest::{ingest_csv, IngestionRules};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    /// Chain-structured synthetic data. The `seed` field is replaced per repeat.
    Synthetic(ChainSpec),
    /// A crisp CSV used as its own ground truth.
    Csv {
        path: PathBuf,
        #[serde(default)]
        rules: IngestionRules,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Gaussian noise level (coefficient or absolute, following `noise.sigma`).
    Sigma,
    MissingProb,
    Records,
    Categories,
    Attributes,
    LabeledFraction,
}

impl SweepParameter {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParameter::Sigma => "sigma",
            SweepParameter::MissingProb => "missing_prob",
            SweepParameter::Records => "records",
            SweepParameter::Categories => "categories",
            SweepParameter::Attributes => "attributes",
            SweepParameter::LabeledFraction => "labeled_fraction",
        }
    }

    fn needs_synthetic(self) -> bool {
        matches!(
            self,
            SweepParameter::Records | SweepParameter::Categories | SweepParameter::Attributes
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSettings {
    pub sigma: NoiseLevel,
    #[serde(default)]
    pub missing_prob: f64,
}

fn default_repeats() -> usize {
    1
}
fn default_true() -> bool {
    true
}

/// Everything needed to reproduce a batch of runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    /// Registered training pipeline names, e.g. `unsupervised`, `semi-supervised`.
    pub pipelines: Vec<String>,
    pub data: DataSource,
    pub noise: NoiseSettings,
    pub sweep: Sweep,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    /// Master seed; every stage of every run derives its own seed from it.
    #[serde(default)]
    pub seed: u64,
    /// Where run artifacts go. Nothing is written when unset.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Also persist the noisy and cleaned tables of each run.
    #[serde(default = "default_true")]
    pub save_datasets: bool,
}

impl ExperimentSpec {
    pub fn validate(&self, registry: &PipelineRegistry) -> Result<()> {
        ensure!(self.repeats >= 1, "repeats must be at least 1");
        ensure!(!self.sweep.values.is_empty(), "sweep needs at least one value");
        ensure!(!self.pipelines.is_empty(), "at least one pipeline is required");
        for p in &self.pipelines {
            registry.get(p)?;
        }
        if self.sweep.parameter.needs_synthetic() && !matches!(self.data, DataSource::Synthetic(_)) {
            bail!("sweeping `{}` needs synthetic data", self.sweep.parameter.as_str());
        }
        for &v in &self.sweep.values {
            self.point(v)?;
        }
        self.train.validate()?;
        Ok(())
    }

    /// Data source, noise and training settings at one sweep value.
    fn point(&self, value: f64) -> Result<(DataSource, NoiseSettings, TrainConfig)> {
        let (mut data, mut noise, mut train) = (self.data.clone(), self.noise.clone(), self.train.clone());
        let count = || -> Result<usize> {
            ensure!(value >= 1.0 && value.fract() == 0.0, "sweep value {value} is not a positive integer");
            Ok(value as usize)
        };
        match (self.sweep.parameter, &mut data) {
            (SweepParameter::Sigma, _) => {
                noise.sigma = match noise.sigma {
                    NoiseLevel::Absolute(_) => NoiseLevel::Absolute(value),
                    NoiseLevel::PerCategory(_) => NoiseLevel::PerCategory(value),
                }
            }
            (SweepParameter::MissingProb, _) => noise.missing_prob = value,
            (SweepParameter::LabeledFraction, _) => train.labeled_fraction = value,
            (SweepParameter::Records, DataSource::Synthetic(c)) => c.records = count()?,
            (SweepParameter::Categories, DataSource::Synthetic(c)) => c.categories = count()?,
            (SweepParameter::Attributes, DataSource::Synthetic(c)) => c.attributes = count()?,
            (p, _) => bail!("sweeping `{}` needs synthetic data", p.as_str()),
        }
        NoiseConfig {
            sigma: noise.sigma,
            missing_prob: noise.missing_prob,
            seed: 0,
        }
        .validate()?;
        if let DataSource::Synthetic(c) = &data {
            c.validate()?;
        }
        Ok((data, noise, train))
    }
}

const STAGE_DATA: u64 = 1;
const STAGE_NOISE: u64 = 2;
const STAGE_TRAIN: u64 = 3;

/// Seeds of one run. The ground truth depends only on the repeat, so every
/// sweep point of a repeat sees the same clean data. Noise and training seeds
/// also depend on the sweep value (not its position), so sweep order does not
/// matter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSeeds {
    pub data: u64,
    pub noise: u64,
    pub train: u64,
}

impl RunSeeds {
    pub fn derive(master: u64, value: f64, repeat: usize) -> Self {
        let (r, v) = (repeat as u64, value.to_bits());
        RunSeeds {
            data: derive_seed(master, &[r, STAGE_DATA]),
            noise: derive_seed(master, &[r, v, STAGE_NOISE]),
            train: derive_seed(master, &[r, v, STAGE_TRAIN]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub pipeline: String,
    pub value: f64,
    pub repeat: usize,
    pub seeds: RunSeeds,
    pub report: Option<EvalReport>,
    pub final_loss: Option<f64>,
    /// Cause of failure when the run aborted.
    pub error: Option<String>,
}

/// Mean and 95% normal-approximation confidence half-width over repeats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub ci95: f64,
    pub n: usize,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let ci95 = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            1.96 * var.sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        Some(Aggregate { mean, ci95, n })
    }
}

pub const METRICS: [&str; 4] = ["jsd_improvement_pct", "mse_improvement_pct", "accuracy", "f1"];

fn metric(report: &EvalReport, name: &str) -> Option<f64> {
    match name {
        "jsd_improvement_pct" => report.improvement_pct,
        "mse_improvement_pct" => report.mse_improvement_pct,
        "accuracy" => report.accuracy,
        "f1" => report.f1,
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub pipeline: String,
    pub value: f64,
    pub metric: String,
    pub stats: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub name: String,
    pub parameter: SweepParameter,
    /// Human-readable data kind, used to label plot series.
    pub data_kind: String,
    pub runs: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentOutcome {
    pub fn failures(&self) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().filter(|r| r.error.is_some())
    }
}

pub fn summarize(runs: &[RunRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, u64), Vec<&EvalReport>> = BTreeMap::new();
    let mut order: Vec<(String, u64, f64)> = Vec::new();
    for r in runs {
        let key = (r.pipeline.clone(), r.value.to_bits());
        if !groups.contains_key(&key) {
            order.push((r.pipeline.clone(), key.1, r.value));
        }
        let entry = groups.entry(key).or_default();
        if let Some(rep) = &r.report {
            entry.push(rep);
        }
    }
    let mut out = Vec::new();
    for (pipeline, bits, value) in order {
        let reports = &groups[&(pipeline.clone(), bits)];
        for m in METRICS {
            let values: Vec<f64> = reports.iter().filter_map(|r| metric(r, m)).collect();
            if let Some(stats) = Aggregate::of(&values) {
                out.push(SummaryRow {
                    pipeline: pipeline.clone(),
                    value,
                    metric: m.to_string(),
                    stats,
                });
            }
        }
    }
    out
}

/// Ingested CSV data shared by all runs.
struct Prepared {
    ground_truth: Dataset,
    mask: MissingMask,
}

struct RunArtifacts {
    noisy: Dataset,
    mask: MissingMask,
    cleaned: Dataset,
    model: DcaeParams,
    log: Vec<EpochLoss>,
    report: EvalReport,
}

fn run_one(
    spec: &ExperimentSpec,
    registry: &PipelineRegistry,
    csv: Option<&Prepared>,
    pipeline: &str,
    value: f64,
    seeds: RunSeeds,
) -> Result<RunArtifacts> {
    let (data, noise, mut train) = spec.point(value)?;
    let generated;
    let (gt, existing) = match (&data, csv) {
        (DataSource::Synthetic(chain), _) => {
            let chain = ChainSpec {
                seed: seeds.data,
                ..chain.clone()
            };
            generated = generate_ground_truth(&chain)?;
            (&generated, MissingMask::for_dataset(&generated))
        }
        (DataSource::Csv { .. }, Some(p)) => (&p.ground_truth, p.mask.clone()),
        (DataSource::Csv { .. }, None) => bail!("CSV source was not ingested"),
    };
    let noise_cfg = NoiseConfig {
        sigma: noise.sigma,
        missing_prob: noise.missing_prob,
        seed: seeds.noise,
    };
    let (noisy, mask) = corrupt_masked(gt, &existing, &noise_cfg)?;
    train.seed = seeds.train;
    let input = TrainingData {
        corrupted: &noisy,
        mask: Some(&mask),
        ground_truth: Some(gt),
    };
    let trained = registry.get(pipeline)?.train(&input, &train)?;
    let mut model = trained.params;
    model.record_seed("ground truth", seeds.data);
    model.record_seed("corruption", seeds.noise);
    let cleaned = model.clean(&noisy)?;
    let report = evaluate(gt, &noisy, &cleaned)?;
    Ok(RunArtifacts {
        noisy,
        mask,
        cleaned,
        model,
        log: trained.log,
        report,
    })
}

fn fmt_value(v: f64) -> String {
    format!("{v}")
}

pub fn run_dir(root: &Path, pipeline: &str, parameter: SweepParameter, value: f64, repeat: usize) -> PathBuf {
    root.join(pipeline)
        .join(format!("{}={}", parameter.as_str(), fmt_value(value)))
        .join(format!("repeat-{repeat}"))
}

fn persist_run(dir: &Path, spec: &ExperimentSpec, record: &RunRecord, art: &RunArtifacts) -> Result<()> {
    write_atomic(&dir.join("report.json"), &serde_json::to_vec_pretty(record)?)?;
    let mut log = String::from("epoch,phase,loss\n");
    for e in &art.log {
        writeln!(log, "{},{},{}", e.epoch, e.phase.as_str(), e.loss)?;
    }
    write_atomic(&dir.join("loss.csv"), log.as_bytes())?;
    write_atomic(&dir.join("model.ckpt"), &checkpoint::to_bytes(&art.model))?;
    if spec.save_datasets {
        save_dataset(&art.noisy, &dir.join("noisy.csv"))?;
        save_mask(&art.mask, art.noisy.schema(), &dir.join("mask.csv"))?;
        save_dataset(&art.cleaned, &dir.join("cleaned.csv"))?;
    }
    Ok(())
}

fn data_kind(spec: &ExperimentSpec) -> String {
    match &spec.data {
        DataSource::Synthetic(c) => match c.kind {
            AttributeKind::Categorical => "categorical".into(),
            AttributeKind::Continuous => "continuous".into(),
        },
        DataSource::Csv { path, .. } => path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "csv".into()),
    }
}

/// Runs every (pipeline, sweep value, repeat) combination on the current rayon
/// pool. A failing run is recorded with its cause and does not stop the others.
pub fn run_pipeline(spec: &ExperimentSpec, registry: &PipelineRegistry) -> Result<ExperimentOutcome> {
    spec.validate(registry)?;
    let csv = match &spec.data {
        DataSource::Csv { path, rules } => {
            let ing = ingest_csv(path, rules)?.with_context(|| format!("{} has no records", path.display()))?;
            Some(Prepared {
                ground_truth: ing.dataset,
                mask: ing.mask,
            })
        }
        DataSource::Synthetic(_) => None,
    };
    let root = spec.output_dir.as_ref().map(|d| d.join(&spec.name));
    if let Some(root) = &root {
        // The saved spec reruns into whatever directory the caller picks.
        let portable = ExperimentSpec { output_dir: None, ..spec.clone() };
        write_atomic(&root.join("spec.json"), &serde_json::to_vec_pretty(&portable)?)?;
    }

    let mut jobs = Vec::new();
    for p in &spec.pipelines {
        for &v in &spec.sweep.values {
            for r in 0..spec.repeats {
                jobs.push((p.as_str(), v, r));
            }
        }
    }
    let runs: Vec<RunRecord> = jobs
        .par_iter()
        .map(|&(pipeline, value, repeat)| {
            let seeds = RunSeeds::derive(spec.seed, value, repeat);
            let label = format!("{pipeline} {}={value} repeat {repeat}", spec.sweep.parameter.as_str());
            let mut record = RunRecord {
                pipeline: pipeline.to_string(),
                value,
                repeat,
                seeds,
                report: None,
                final_loss: None,
                error: None,
            };
            match run_one(spec, registry, csv.as_ref(), pipeline, value, seeds) {
                Ok(art) => {
                    record.final_loss = art.log.last().map(|e| e.loss);
                    record.report = Some(art.report.clone());
                    if let Some(root) = &root {
                        let dir = run_dir(root, pipeline, spec.sweep.parameter, value, repeat);
                        if let Err(e) = persist_run(&dir, spec, &record, &art) {
                            warn!("{label}: could not save artifacts: {e:#}");
                        }
                    }
                    info!("{label}: improvement {:?}", art.report.improvement_pct);
                }
                Err(e) => {
                    warn!("{label} failed: {e:#}");
                    record.error = Some(format!("{e:#}"));
                }
            }
            record
        })
        .collect();

    let outcome = ExperimentOutcome {
        name: spec.name.clone(),
        parameter: spec.sweep.parameter,
        data_kind: data_kind(spec),
        summary: summarize(&runs),
        runs,
    };
    if let Some(root) = &root {
        write_outcome(&outcome, root)?;
    }
    Ok(outcome)
}

pub fn write_outcome(outcome: &ExperimentOutcome, root: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["pipeline", "parameter", "value", "repeat", "error"];
    header.extend(EvalReport::CSV_HEADER);
    w.write_record(&header)?;
    for r in &outcome.runs {
        let mut row = vec![
            r.pipeline.clone(),
            outcome.parameter.as_str().to_string(),
            fmt_value(r.value),
            r.repeat.to_string(),
            r.error.clone().unwrap_or_default(),
        ];
        match &r.report {
            Some(rep) => row.extend(rep.csv_row()),
            None => row.extend(std::iter::repeat_n(String::new(), EvalReport::CSV_HEADER.len())),
        }
        w.write_record(&row)?;
    }
    write_atomic(&root.join("runs.csv"), &w.into_inner()?)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["pipeline", "parameter", "value", "metric", "mean", "ci95", "n"])?;
    for s in &outcome.summary {
        w.write_record([
            s.pipeline.clone(),
            outcome.parameter.as_str().to_string(),
            fmt_value(s.value),
            s.metric.clone(),
            s.stats.mean.to_string(),
            s.stats.ci95.to_string(),
            s.stats.n.to_string(),
        ])?;
    }
    write_atomic(&root.join("summary.csv"), &w.into_inner()?)?;
    write_atomic(&root.join("outcome.json"), &serde_json::to_vec_pretty(outcome)?)?;
    Ok(())
}

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    build: fn() -> ExperimentSpec,
}

impl Preset {
    pub fn spec(&self) -> ExperimentSpec {
        (self.build)()
    }
}

/// The default point: three chained categorical attributes with four
/// categories, 10 000 records, noise coefficient 0.02, 2% labeled records.
pub fn default_spec() -> ExperimentSpec {
    ExperimentSpec {
        name: "default".into(),
        pipelines: vec!["unsupervised".into(), "semi-supervised".into()],
        data: DataSource::Synthetic(ChainSpec::new(3, 4, 10_000, 0)),
        noise: NoiseSettings {
            sigma: NoiseLevel::PerCategory(0.02),
            missing_prob: 0.0,
        },
        sweep: Sweep {
            parameter: SweepParameter::Sigma,
            values: vec![0.02],
        },
        train: TrainConfig::default(),
        repeats: 3,
        seed: 0,
        output_dir: None,
        save_datasets: true,
    }
}

const MISSING_SWEEP: [f64; 7] = [0.001, 0.01, 0.05, 0.1, 0.2, 0.3, 0.5];
const SIGMA_SWEEP: [f64; 6] = [0.01, 0.02, 0.05, 0.1, 0.15, 0.2];

fn sweep(name: &str, parameter: SweepParameter, values: &[f64]) -> ExperimentSpec {
    ExperimentSpec {
        name: name.into(),
        sweep: Sweep {
            parameter,
            values: values.to_vec(),
        },
        ..default_spec()
    }
}

fn real_world(name: &str, parameter: SweepParameter, values: &[f64], sigma: f64) -> ExperimentSpec {
    let mut spec = sweep(name, parameter, values);
    spec.data = DataSource::Csv {
        path: PathBuf::from("data.csv"),
        rules: IngestionRules::default(),
    };
    spec.noise.sigma = NoiseLevel::PerCategory(sigma);
    spec
}

pub static PRESETS: &[Preset] = &[
    Preset {
        name: "exp1",
        description: "vary the Gaussian noise coefficient from 0.01 to 0.2",
        build: || sweep("exp1", SweepParameter::Sigma, &SIGMA_SWEEP),
    },
    Preset {
        name: "exp2",
        description: "vary the missing-entry rate from 0.1% to 50% without Gaussian noise",
        build: || {
            let mut s = sweep("exp2", SweepParameter::MissingProb, &MISSING_SWEEP);
            s.noise.sigma = NoiseLevel::PerCategory(0.0);
            s
        },
    },
    Preset {
        name: "exp3",
        description: "vary the missing-entry rate with default Gaussian noise",
        build: || sweep("exp3", SweepParameter::MissingProb, &MISSING_SWEEP),
    },
    Preset {
        name: "exp4",
        description: "vary the number of records",
        build: || sweep("exp4", SweepParameter::Records, &[1_000.0, 2_000.0, 5_000.0, 10_000.0, 20_000.0]),
    },
    Preset {
        name: "exp5",
        description: "vary the sampling density from 4 to 300",
        build: || sweep("exp5", SweepParameter::Categories, &[4.0, 10.0, 30.0, 100.0, 200.0, 300.0]),
    },
    Preset {
        name: "exp6",
        description: "vary the chain length from 2 to 30",
        build: || sweep("exp6", SweepParameter::Attributes, &[2.0, 3.0, 5.0, 10.0, 20.0, 30.0]),
    },
    Preset {
        name: "exp7",
        description: "vary the labeled fraction of semi-supervised training from 0% to 100%",
        build: || {
            let mut s = sweep(
                "exp7",
                SweepParameter::LabeledFraction,
                &[0.0, 0.001, 0.01, 0.02, 0.05, 0.1, 0.5, 1.0],
            );
            s.pipelines = vec!["semi-supervised".into()];
            s
        },
    },
    Preset {
        name: "exp8",
        description: "real-world CSV: vary the Gaussian noise coefficient",
        build: || real_world("exp8", SweepParameter::Sigma, &SIGMA_SWEEP, 0.02),
    },
    Preset {
        name: "exp9",
        description: "real-world CSV: vary the missing-entry rate with default Gaussian noise",
        build: || real_world("exp9", SweepParameter::MissingProb, &MISSING_SWEEP, 0.02),
    },
    Preset {
        name: "exp10",
        description: "real-world CSV: vary the missing-entry rate without Gaussian noise",
        build: || real_world("exp10", SweepParameter::MissingProb, &MISSING_SWEEP, 0.0),
    },
];

pub fn preset(name: &str) -> Result<ExperimentSpec> {
    PRESETS
        .iter()
        .find(|p| p.name == name)
        .map(Preset::spec)
        .with_context(|| {
            let names: Vec<_> = PRESETS.iter().map(|p| p.name).collect();
            format!("unknown preset `{name}` (available: {})", names.join(", "))
        })
}
