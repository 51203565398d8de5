use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use pdbclean_core::corrupt::{corrupt_masked, NoiseConfig, NoiseLevel};
use pdbclean_core::dcae::checkpoint;
use pdbclean_core::metrics::evaluate;
use pdbclean_core::pdb::{AttributeKind, MissingMask};
use pdbclean_core::pipeline::{PipelineRegistry, TrainingData};
use pdbclean_core::synth::{generate_ground_truth, ChainSpec};
use pdbclean_core::trainer::TrainConfig;

use pdbclean_cli::experiment::{preset, run_pipeline, DataSource, ExperimentSpec, PRESETS};
use pdbclean_cli::export::{export_cleaned, ExportMode};
use pdbclean_cli::formats::{load_dataset, load_mask, save_dataset, save_mask, write_atomic};
use pdbclean_cli::ingest::{ingest_csv, IngestionRules};
use pdbclean_cli::plot::emit_plots;

#[derive(Parser)]
#[command(name = "pdbclean", version, about = "Clean noisy probabilistic tables with a denoising autoencoder")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a clean synthetic table from a chain of dependent attributes.
    Synth(SynthArgs),
    /// Add Gaussian noise and missing entries to a table.
    Corrupt(CorruptArgs),
    /// Train a model on a corrupted table.
    Train(TrainArgs),
    /// Run a trained model over a table.
    Clean(CleanArgs),
    /// Compare noisy and cleaned tables against the ground truth.
    Eval(EvalArgs),
    /// Run a sweep of repeated experiments from a spec file or a preset.
    Experiment(ExperimentArgs),
    /// Convert a crisp CSV into a probabilistic table.
    Ingest(IngestArgs),
    /// Write a probabilistic table as a crisp CSV.
    Export(ExportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Categorical,
    Continuous,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 3)]
    attributes: usize,
    #[arg(long, default_value_t = 4)]
    categories: usize,
    #[arg(long, default_value_t = 10_000)]
    records: usize,
    #[arg(long, value_enum, default_value = "categorical")]
    kind: Kind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CorruptArgs {
    #[arg(long)]
    input: PathBuf,
    /// Noise level; scaled by 100 / K per attribute unless --absolute is given.
    #[arg(long, default_value_t = 0.02)]
    sigma: f64,
    #[arg(long)]
    absolute: bool,
    /// Probability of replacing a cell with a missing entry.
    #[arg(long, default_value_t = 0.0)]
    missing: f64,
    /// Existing missing-entry mask of the input.
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to the output path with a `.mask.csv` extension.
    #[arg(long)]
    mask_out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Clean table; required by the semi-supervised pipeline.
    #[arg(long)]
    ground_truth: Option<PathBuf>,
    #[arg(long, default_value = "semi-supervised")]
    pipeline: String,
    /// JSON training configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epochs_unsupervised: Option<usize>,
    #[arg(long)]
    epochs_supervised: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    labeled_fraction: Option<f64>,
    /// Let missing entries count in the unsupervised loss.
    #[arg(long)]
    no_mask_missing: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    loss_log: Option<PathBuf>,
}

#[derive(Args)]
struct CleanArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "probabilistic")]
    mode: ExportMode,
    /// Unused; accepted for interface uniformity (cleaning is deterministic).
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    ground_truth: PathBuf,
    #[arg(long)]
    before: PathBuf,
    #[arg(long)]
    after: PathBuf,
    #[arg(long)]
    json: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, conflicts_with = "preset")]
    spec: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// Data file for the real-world presets.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Master seed; overrides the spec's.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "PDBCLEAN_OUT_DIR", default_value = "runs")]
    out: PathBuf,
    /// Worker threads; defaults to one per core.
    #[arg(long, env = "PDBCLEAN_THREADS")]
    threads: Option<usize>,
    #[arg(long)]
    no_plots: bool,
    /// Print the resolved spec as JSON and exit.
    #[arg(long)]
    print_spec: bool,
    /// List the built-in presets and exit.
    #[arg(long)]
    list: bool,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    mask_out: Option<PathBuf>,
    #[arg(long, default_value = "CATEGORICAL")]
    marker: String,
    /// Cell values read as missing, in addition to the empty cell. Repeatable.
    #[arg(long = "null-token", default_values_t = vec!["NULL".to_string()])]
    null_tokens: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "argmax")]
    mode: ExportMode,
    /// Defaults to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn default_mask_path(data: &Path) -> PathBuf {
    data.with_extension("mask.csv")
}

fn load_optional_mask(path: Option<&Path>, ds: &pdbclean_core::pdb::Dataset) -> Result<MissingMask> {
    match path {
        Some(p) => {
            let mask = load_mask(p, ds.schema())?;
            mask.check_shape(ds)?;
            Ok(mask)
        }
        None => Ok(MissingMask::for_dataset(ds)),
    }
}

fn synth(a: SynthArgs) -> Result<()> {
    let kind = match a.kind {
        Kind::Categorical => AttributeKind::Categorical,
        Kind::Continuous => AttributeKind::Continuous,
    };
    let spec = ChainSpec::new(a.attributes, a.categories, a.records, a.seed).with_kind(kind);
    let ds = generate_ground_truth(&spec)?;
    save_dataset(&ds, &a.out)?;
    info!("wrote {} records to {}", ds.len(), a.out.display());
    Ok(())
}

fn corrupt(a: CorruptArgs) -> Result<()> {
    let ds = load_dataset(&a.input)?;
    let existing = load_optional_mask(a.mask.as_deref(), &ds)?;
    let cfg = NoiseConfig {
        sigma: if a.absolute {
            NoiseLevel::Absolute(a.sigma)
        } else {
            NoiseLevel::PerCategory(a.sigma)
        },
        missing_prob: a.missing,
        seed: a.seed,
    };
    let (noisy, mask) = corrupt_masked(&ds, &existing, &cfg)?;
    save_dataset(&noisy, &a.out)?;
    let mask_out = a.mask_out.unwrap_or_else(|| default_mask_path(&a.out));
    save_mask(&mask, noisy.schema(), &mask_out)?;
    info!("{} missing cells; mask at {}", mask.count(), mask_out.display());
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let mut cfg: TrainConfig = match &a.config {
        Some(p) => serde_json::from_slice(&fs::read(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => TrainConfig::default(),
    };
    cfg.seed = a.seed;
    if let Some(v) = a.epochs_unsupervised {
        cfg.epochs_unsupervised = v;
    }
    if let Some(v) = a.epochs_supervised {
        cfg.epochs_supervised = v;
    }
    if let Some(v) = a.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = a.labeled_fraction {
        cfg.labeled_fraction = v;
    }
    if a.no_mask_missing {
        cfg.mask_missing_in_unsupervised_loss = false;
    }
    let noisy = load_dataset(&a.input)?;
    let mask = load_optional_mask(a.mask.as_deref(), &noisy)?;
    let truth = a.ground_truth.as_deref().map(load_dataset).transpose()?;
    let pipeline = PipelineRegistry::default().get(&a.pipeline)?;
    let trained = pipeline.train(
        &TrainingData {
            corrupted: &noisy,
            mask: Some(&mask),
            ground_truth: truth.as_ref(),
        },
        &cfg,
    )?;
    checkpoint::save(&trained.params, &a.model)?;
    if let Some(path) = &a.loss_log {
        let mut csv = String::from("epoch,phase,loss\n");
        for e in &trained.log {
            csv.push_str(&format!("{},{},{}\n", e.epoch, e.phase.as_str(), e.loss));
        }
        write_atomic(path, csv.as_bytes())?;
    }
    if let Some(last) = trained.log.last() {
        info!("final {} loss {:.4}", last.phase.as_str(), last.loss);
    }
    Ok(())
}

fn clean(a: CleanArgs) -> Result<()> {
    let model = checkpoint::load(&a.model)?;
    let ds = load_dataset(&a.input)?;
    let cleaned = model.clean(&ds)?;
    match a.mode {
        ExportMode::Probabilistic => save_dataset(&cleaned, &a.out),
        mode => {
            let mut buf = Vec::new();
            export_cleaned(&cleaned, mode, &mut buf)?;
            write_atomic(&a.out, &buf)
        }
    }
}

fn eval(a: EvalArgs) -> Result<()> {
    let report = evaluate(&load_dataset(&a.ground_truth)?, &load_dataset(&a.before)?, &load_dataset(&a.after)?)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        println!("{report}");
    }
    Ok(())
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    if a.list {
        for p in PRESETS {
            println!("{:6} {}", p.name, p.description);
        }
        return Ok(());
    }
    let mut spec: ExperimentSpec = match (&a.spec, &a.preset) {
        (Some(path), _) => {
            serde_json::from_slice(&fs::read(path)?).with_context(|| format!("parsing {}", path.display()))?
        }
        (None, Some(name)) => preset(name)?,
        (None, None) => bail!("give --spec FILE or --preset NAME (see --list)"),
    };
    if let Some(csv) = a.csv {
        match &mut spec.data {
            DataSource::Csv { path, .. } => *path = csv,
            DataSource::Synthetic(_) => bail!("--csv only applies to specs with a CSV data source"),
        }
    }
    if let Some(r) = a.repeats {
        spec.repeats = r;
    }
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    spec.output_dir = Some(a.out);
    if a.print_spec {
        println!("{}", serde_json::to_string_pretty(&spec)?);
        return Ok(());
    }
    if let Some(n) = a.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let outcome = run_pipeline(&spec, &PipelineRegistry::default())?;
    let root = spec.output_dir.as_ref().expect("set above").join(&spec.name);
    for s in outcome.summary.iter().filter(|s| s.metric == "jsd_improvement_pct") {
        println!(
            "{:16} {}={:<8} JSD reduction {:7.2}% ± {:.2} (n={})",
            s.pipeline,
            outcome.parameter.as_str(),
            s.value,
            s.stats.mean,
            s.stats.ci95,
            s.stats.n
        );
    }
    if !a.no_plots && !outcome.summary.is_empty() {
        for f in emit_plots(&outcome, &root.join("plots"))? {
            info!("plot {}", f.display());
        }
    }
    let failed = outcome.failures().count();
    if failed > 0 {
        bail!("{failed} of {} runs failed; see {}", outcome.runs.len(), root.join("runs.csv").display());
    }
    Ok(())
}

fn ingest(a: IngestArgs) -> Result<()> {
    let mut null_tokens = vec![String::new()];
    null_tokens.extend(a.null_tokens);
    let rules = IngestionRules {
        categorical_marker: a.marker,
        null_tokens,
    };
    let Some(ing) = ingest_csv(&a.input, &rules)? else {
        bail!("{} has a header but no records", a.input.display());
    };
    save_dataset(&ing.dataset, &a.out)?;
    let mask_out = a.mask_out.unwrap_or_else(|| default_mask_path(&a.out));
    save_mask(&ing.mask, ing.schema(), &mask_out)?;
    for attr in ing.schema().attributes() {
        info!("{}: {:?} with {} categories", attr.name, attr.kind, attr.cardinality());
    }
    Ok(())
}

fn export(a: ExportArgs) -> Result<()> {
    let ds = load_dataset(&a.input)?;
    match a.out {
        Some(path) => {
            let mut buf = Vec::new();
            export_cleaned(&ds, a.mode, &mut buf)?;
            write_atomic(&path, &buf)
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            export_cleaned(&ds, a.mode, &mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Synth(a) => synth(a),
        Command::Corrupt(a) => corrupt(a),
        Command::Train(a) => train(a),
        Command::Clean(a) => clean(a),
        Command::Eval(a) => eval(a),
        Command::Experiment(a) => experiment(a),
        Command::Ingest(a) => ingest(a),
        Command::Export(a) => export(a),
    }
}
