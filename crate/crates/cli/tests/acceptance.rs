//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.
//!
//! The reproduction criteria train full-size models (10 000 records, 200
//! epochs) and take several minutes each on one core.

use std::f64::consts::LN_2;
use std::process::ExitCode;
use std::time::Instant;

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use pdbclean_cli::experiment::{default_spec, run_pipeline, DataSource, ExperimentOutcome, SweepParameter};
use pdbclean_cli::export::{export_cleaned, ExportMode};
use pdbclean_cli::ingest::{ingest_reader, IngestionRules};
use pdbclean_core::corrupt::{corrupt, NoiseConfig, NoiseLevel};
use pdbclean_core::dcae::{checkpoint, Architecture, DcaeParams, ParamSet, DEFAULT_CHANNELS};
use pdbclean_core::loss::jsd;
use pdbclean_core::metrics::{dataset_jsd, dataset_rescaled_mse, flip_confusion};
use pdbclean_core::pdb::{
    devectorize, vectorize, AttributeKind, AttributeSpec, Dataset, MissingMask, Pmf, Record, Schema,
};
use pdbclean_core::pipeline::PipelineRegistry;
use pdbclean_core::quantize::uniform_bins;
use pdbclean_core::rng::{seeded, StageRng};
use pdbclean_core::synth::{ChainSampler, ChainSpec};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_pmf(rng: &mut StageRng, k: usize) -> Vec<f64> {
    match rng.random_range(0..4) {
        0 => {
            let mut v = vec![0.0; k];
            v[rng.random_range(0..k)] = 1.0;
            v
        }
        _ => {
            let w: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|x| x / s).collect()
        }
    }
}

fn random_schema(rng: &mut StageRng, n: usize, ks: &[usize], continuous: bool) -> Schema {
    let attrs = (0..n)
        .map(|j| {
            let k = ks[rng.random_range(0..ks.len())];
            if continuous && rng.random_bool(0.5) {
                let lo = rng.random_range(-10.0..10.0);
                AttributeSpec::continuous(format!("a{j}"), uniform_bins(lo, lo + rng.random_range(1.0..50.0), k).unwrap())
                    .unwrap()
            } else {
                AttributeSpec::categorical_indexed(format!("a{j}"), k).unwrap()
            }
        })
        .collect();
    Schema::new(attrs).unwrap()
}

fn random_dataset(rng: &mut StageRng, schema: &Schema, m: usize) -> Dataset {
    let records = (0..m)
        .map(|_| {
            Record::new(
                schema
                    .cardinalities()
                    .iter()
                    .map(|&k| Pmf::new(random_pmf(rng, k)).unwrap())
                    .collect(),
            )
        })
        .collect();
    Dataset::new(schema.clone(), records).unwrap()
}

fn one_hot_dataset(rng: &mut StageRng, schema: &Schema, m: usize) -> Dataset {
    let records = (0..m)
        .map(|_| {
            Record::new(
                schema
                    .cardinalities()
                    .iter()
                    .map(|&k| Pmf::one_hot(rng.random_range(0..k), k).unwrap())
                    .collect(),
            )
        })
        .collect();
    Dataset::new(schema.clone(), records).unwrap()
}

// 1 -----------------------------------------------------------------------

fn set_flat(p: &mut ParamSet, mut idx: usize, value: f64) {
    for s in p.slices_mut() {
        if idx < s.len() {
            s[idx] = value;
            return;
        }
        idx -= s.len();
    }
    unreachable!()
}

fn gradient_oracle() -> Outcome {
    const CONFIGS: usize = 24;
    const H: f64 = 1e-5;
    // Relative error |a - n| / max(|a|, |n|, FLOOR); the floor keeps gradients
    // that are zero up to rounding from dividing by ~0.
    const FLOOR: f64 = 1e-6;
    let mut rng = seeded(101);
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for _ in 0..CONFIGS {
        let n = rng.random_range(2..=3);
        let cards: Vec<usize> = (0..n).map(|_| rng.random_range(3..=4)).collect();
        let d: usize = cards.iter().sum();
        let batch = rng.random_range(1..=8);
        let arch = Architecture {
            cardinalities: cards.clone(),
            channels: DEFAULT_CHANNELS.iter().map(|s| s.to_string()).collect(),
            noise_coef: 0.0,
            activity_l2: 10f64.powf(rng.random_range(-4.0..-1.0)),
        };
        let mut model = DcaeParams::init(arch, rng.random()).unwrap();
        for s in model.weights.slices_mut() {
            for v in s.iter_mut() {
                *v += rng.random_range(-0.3..0.3);
            }
        }
        let mut x = Array2::zeros((batch, d));
        let mut y = Array2::zeros((batch, d));
        for b in 0..batch {
            let mut col = 0;
            for &k in &cards {
                for (i, (px, py)) in random_pmf(&mut rng, k).into_iter().zip(random_pmf(&mut rng, k)).enumerate() {
                    x[[b, col + i]] = px;
                    y[[b, col + i]] = py;
                }
                col += k;
            }
        }
        let mut mask = MissingMask::new(batch, n);
        for b in 0..batch {
            for j in 0..n {
                mask.set(b, j, rng.random_bool(0.2));
            }
        }
        let mask = rng.random_bool(0.5).then_some(mask);

        let loss = |m: &DcaeParams| {
            let t = m.infer(x.view()).unwrap();
            m.objective(&t, y.view(), mask.as_ref()).unwrap().total()
        };
        let trace = model.infer(x.view()).unwrap();
        let (_, grads) = model.backward(&trace, y.view(), mask.as_ref()).unwrap();
        let analytic = grads.to_flat();
        let flat = model.weights.to_flat();
        for (idx, &theta) in flat.iter().enumerate() {
            set_flat(&mut model.weights, idx, theta + H);
            let plus = loss(&model);
            set_flat(&mut model.weights, idx, theta - H);
            let minus = loss(&model);
            set_flat(&mut model.weights, idx, theta);
            let numeric = (plus - minus) / (2.0 * H);
            let a = analytic[idx];
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(FLOOR));
            checked += 1;
        }
    }
    check(
        worst <= 1e-4,
        format!("{CONFIGS} configurations, {checked} parameters, max relative error {worst:.2e} (limit 1e-4)"),
    )
}

// 2 -----------------------------------------------------------------------

fn jsd_properties() -> Outcome {
    let p = |v: &[f64]| Pmf::new(v.to_vec()).unwrap();
    let mut rng = seeded(202);
    let mut failures = Vec::new();
    for _ in 0..20_000 {
        let k = rng.random_range(2..=12);
        let a = p(&random_pmf(&mut rng, k));
        let b = p(&random_pmf(&mut rng, k));
        let ab = jsd(&a, &b).unwrap();
        let ba = jsd(&b, &a).unwrap();
        if (ab - ba).abs() > 1e-9 {
            failures.push(format!("asymmetric {ab} vs {ba}"));
        }
        if !(-1e-9..=LN_2 + 1e-9).contains(&ab) {
            failures.push(format!("out of range {ab}"));
        }
        if jsd(&a, &a).unwrap().abs() > 1e-9 {
            failures.push("jsd(p, p) != 0".into());
        }
        let dist: f64 = a.probs().iter().zip(b.probs()).map(|(x, y)| (x - y).abs()).sum();
        if dist > 1e-6 && ab <= 1e-12 {
            failures.push("zero divergence between distinct pmfs".into());
        }
    }
    let examples = [
        (jsd(&p(&[0.2, 0.3, 0.5]), &p(&[0.2, 0.3, 0.5])).unwrap(), 0.0),
        (jsd(&p(&[1.0, 0.0]), &p(&[0.0, 1.0])).unwrap(), LN_2),
        (jsd(&p(&[1.0, 0.0]), &p(&[0.5, 0.5])).unwrap(), 1.5 * LN_2 - 0.75 * 3f64.ln()),
    ];
    for (got, want) in examples {
        if (got - want).abs() > 1e-9 {
            failures.push(format!("example: got {got}, want {want}"));
        }
    }
    check(
        failures.is_empty(),
        format!("20000 random pairs + 3 examples; {} violations {:?}", failures.len(), failures.first()),
    )
}

// 3 -----------------------------------------------------------------------

fn simplex_preservation() -> Outcome {
    let mut rng = seeded(303);
    let mut cells = [0usize; 3];
    let mut worst: f64 = 0.0;
    let mut note = |ds: &Dataset, slot: usize, worst: &mut f64| {
        for r in ds.records() {
            for c in &r.cells {
                *worst = worst.max((c.probs().iter().sum::<f64>() - 1.0).abs());
                if c.probs().iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                    *worst = f64::INFINITY;
                }
                cells[slot] += 1;
            }
        }
    };
    for round in 0..40 {
        let n = rng.random_range(2..=4);
        let schema = random_schema(&mut rng, n, &[2, 3, 4, 7, 20], true);
        let gt = one_hot_dataset(&mut rng, &schema, 100);
        let cfg = NoiseConfig {
            sigma: NoiseLevel::PerCategory(rng.random_range(0.0..0.3)),
            missing_prob: rng.random_range(0.0..0.5),
            seed: round,
        };
        let (noisy, _) = corrupt(&gt, &cfg).unwrap();
        note(&noisy, 0, &mut worst);

        let model = DcaeParams::init(Architecture::for_schema(&schema), round).unwrap();
        let input = random_dataset(&mut rng, &schema, 100);
        let trace = model.forward(input.to_matrix().view(), true, &mut rng).unwrap();
        let mut logits = trace.logits.clone();
        logits.mapv_inplace(|v| v * rng.random_range(1.0..50.0));
        let soft = Dataset::from_matrix(schema.clone(), &model.softmax(&logits)).unwrap();
        note(&soft, 1, &mut worst);
        note(&model.clean(&input).unwrap(), 2, &mut worst);
    }
    check(
        worst <= 1e-9 && cells.iter().all(|&c| c >= 10_000),
        format!(
            "cells checked: corruption {}, softmax {}, cleaning {}; max |sum - 1| = {worst:.1e}",
            cells[0], cells[1], cells[2]
        ),
    )
}

// 4 -----------------------------------------------------------------------

fn generator_fidelity() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    for k in [4usize, 10] {
        let sampler = ChainSampler::new(k).unwrap();
        let mut rng = seeded(400 + k as u64);
        let samples = 100_000;
        let mut counts = vec![0f64; k];
        for _ in 0..samples {
            counts[sampler.sample_root(&mut rng)] += 1.0;
        }
        let z = std_normal.cdf(2.0) - std_normal.cdf(-2.0);
        let chi2: f64 = (0..k)
            .map(|b| {
                let lo = -2.0 + 4.0 * b as f64 / k as f64;
                let hi = -2.0 + 4.0 * (b + 1) as f64 / k as f64;
                let expected = samples as f64 * (std_normal.cdf(hi) - std_normal.cdf(lo)) / z;
                (counts[b] - expected).powi(2) / expected
            })
            .sum();
        let critical = ChiSquared::new((k - 1) as f64).unwrap().inverse_cdf(0.99);
        ok &= chi2 < critical;
        details.push(format!("root K={k}: chi2 {chi2:.2} < {critical:.2}"));
    }

    // Rejection-sampling oracle: draw Gamma(30a/K + 1, 1), keep draws inside the
    // truncation interval, bin them on the global child support.
    let mut worst_tv: f64 = 0.0;
    for (k, parents) in [(4usize, vec![0usize, 1, 2, 3]), (100, vec![0, 37, 99])] {
        let sampler = ChainSampler::new(k).unwrap();
        let kf = k as f64;
        let high = 5.0 + 30.0 * (kf - 1.0) / kf;
        let width = (high - 4.0) / kf;
        for a in parents {
            let shape = 30.0 * a as f64 / kf + 1.0;
            let upper = 5.0 + 30.0 * a as f64 / kf;
            let gamma = Gamma::new(shape, 1.0).unwrap();
            let mut rng = seeded(4_000 + (k * 1000 + a) as u64);
            let target = 1_000_000;
            let mut hist = vec![0f64; k];
            let mut accepted = 0;
            while accepted < target {
                let x: f64 = gamma.sample(&mut rng);
                if (4.0..=upper).contains(&x) {
                    hist[(((x - 4.0) / width) as usize).min(k - 1)] += 1.0;
                    accepted += 1;
                }
            }
            let tv: f64 = 0.5
                * hist
                    .iter()
                    .zip(sampler.kernel(a).probs())
                    .map(|(h, p)| (h / target as f64 - p).abs())
                    .sum::<f64>();
            worst_tv = worst_tv.max(tv);
        }
    }
    ok &= worst_tv <= 0.01;
    details.push(format!("kernel vs rejection oracle: max TV {worst_tv:.4} <= 0.01"));
    check(ok, details.join("; "))
}

// 5, 6, 7 -------------------------------------------------------------------

fn mean_metric(outcome: &ExperimentOutcome, pipeline: &str, metric: &str) -> Option<(f64, Vec<f64>)> {
    let row = outcome.summary.iter().find(|s| s.pipeline == pipeline && s.metric == metric)?;
    let per_run = outcome
        .runs
        .iter()
        .filter(|r| r.pipeline == pipeline)
        .filter_map(|r| r.report.as_ref())
        .filter_map(|r| match metric {
            "jsd_improvement_pct" => r.improvement_pct,
            "mse_improvement_pct" => r.mse_improvement_pct,
            "accuracy" => r.accuracy,
            _ => r.f1,
        })
        .collect();
    Some((row.stats.mean, per_run))
}

fn floor_check(outcome: &ExperimentOutcome, pipeline: &str, metric: &str, floor: f64, strict: bool) -> (bool, String) {
    match mean_metric(outcome, pipeline, metric) {
        Some((mean, runs)) => {
            let ok = if strict { mean > floor } else { mean >= floor };
            let runs: Vec<String> = runs.iter().map(|v| format!("{v:.3}")).collect();
            let op = if strict { ">" } else { ">=" };
            (ok, format!("{pipeline} {metric} mean {mean:.3} {op} {floor} (runs {})", runs.join(", ")))
        }
        None => (false, format!("{pipeline} {metric}: no successful runs")),
    }
}

fn categorical_default() -> ExperimentOutcome {
    let mut spec = default_spec();
    spec.name = "acceptance-categorical".into();
    spec.pipelines = vec!["semi-supervised".into(), "unsupervised".into()];
    spec.repeats = 3;
    spec.seed = 5;
    run_pipeline(&spec, &PipelineRegistry::default()).unwrap()
}

fn reproduction(categorical: &ExperimentOutcome) -> Outcome {
    let mut spec = default_spec();
    spec.name = "acceptance-continuous".into();
    spec.pipelines = vec!["semi-supervised".into()];
    spec.data = DataSource::Synthetic(ChainSpec::new(3, 100, 10_000, 0).with_kind(AttributeKind::Continuous));
    spec.repeats = 3;
    spec.seed = 5;
    let continuous = run_pipeline(&spec, &PipelineRegistry::default()).unwrap();
    let checks = [
        floor_check(categorical, "semi-supervised", "jsd_improvement_pct", 15.0, false),
        floor_check(&continuous, "semi-supervised", "jsd_improvement_pct", 30.0, false),
        floor_check(&continuous, "semi-supervised", "mse_improvement_pct", 40.0, false),
    ];
    let ok = checks.iter().all(|c| c.0);
    let detail = checks.iter().map(|c| c.1.as_str()).collect::<Vec<_>>().join("; ");
    check(ok, format!("K=4: {detail}").replacen("; semi", "; K=100: semi", 1))
}

fn unsupervised_non_harm(categorical: &ExperimentOutcome) -> Outcome {
    let (ok, detail) = floor_check(categorical, "unsupervised", "jsd_improvement_pct", 0.0, true);
    check(ok, detail)
}

fn imputation() -> Outcome {
    let mut spec = default_spec();
    spec.name = "acceptance-imputation".into();
    spec.pipelines = vec!["unsupervised".into()];
    spec.noise.sigma = NoiseLevel::PerCategory(0.0);
    spec.sweep.parameter = SweepParameter::MissingProb;
    spec.sweep.values = vec![0.05];
    spec.repeats = 3;
    spec.seed = 7;
    let outcome = run_pipeline(&spec, &PipelineRegistry::default()).unwrap();
    let acc = floor_check(&outcome, "unsupervised", "accuracy", 0.9, false);
    let f1 = floor_check(&outcome, "unsupervised", "f1", 0.4, false);
    check(acc.0 && f1.0, format!("{}; {}", acc.1, f1.1))
}

// 8 -----------------------------------------------------------------------

fn brute_jsd(x: &Dataset, y: &Dataset) -> f64 {
    let mut total = 0.0;
    for i in 0..x.len() {
        for j in 0..x.schema().len() {
            let (p, q) = (x.cell(i, j).probs(), y.cell(i, j).probs());
            let r: Vec<f64> = p.iter().zip(q).map(|(a, b)| (a + b) / 2.0).collect();
            let kl = |a: &[f64]| -> f64 {
                a.iter().zip(&r).filter(|(v, _)| **v > 0.0).map(|(v, m)| v * (v / m).ln()).sum()
            };
            total += 0.5 * kl(p) + 0.5 * kl(q);
        }
    }
    total
}

fn brute_mse(x: &Dataset, y: &Dataset) -> f64 {
    let mut total = 0.0;
    for (j, attr) in x.schema().attributes().iter().enumerate() {
        if attr.kind != AttributeKind::Continuous {
            continue;
        }
        let centers = attr.bins.as_ref().unwrap().centers();
        let span = centers[centers.len() - 1] - centers[0];
        for i in 0..x.len() {
            let e = |d: &Dataset| -> f64 { d.cell(i, j).probs().iter().zip(centers).map(|(p, c)| p * c).sum() };
            total += ((e(x) - e(y)) / span).powi(2);
        }
    }
    total
}

fn first_max(v: &[f64]) -> usize {
    let mut best = 0;
    for k in 1..v.len() {
        if v[k] > v[best] {
            best = k;
        }
    }
    best
}

fn brute_confusion(gt: &Dataset, before: &Dataset, after: &Dataset) -> [u64; 4] {
    let mut c = [0u64; 4];
    for i in 0..gt.len() {
        for (j, attr) in gt.schema().attributes().iter().enumerate() {
            if attr.kind != AttributeKind::Categorical {
                continue;
            }
            let t = first_max(gt.cell(i, j).probs());
            let b = first_max(before.cell(i, j).probs());
            let a = first_max(after.cell(i, j).probs());
            let slot = match (b == t, a != b) {
                (false, true) => 0,
                (true, false) => 1,
                (true, true) => 2,
                (false, false) => 3,
            };
            c[slot] += 1;
        }
    }
    c
}

fn metric_oracles() -> Outcome {
    // Real-valued sums are compared to 1e-12 relative: the oracles associate
    // the floating-point additions differently. Counts must match exactly.
    let mut rng = seeded(808);
    let mut worst: f64 = 0.0;
    let mut count_mismatches = 0;
    let trials = 2_000;
    for _ in 0..trials {
        let n = rng.random_range(1..=3);
        let m = rng.random_range(1..=10);
        let schema = random_schema(&mut rng, n, &[2, 3, 4, 5], true);
        let gt = one_hot_dataset(&mut rng, &schema, m);
        let before = random_dataset(&mut rng, &schema, m);
        let after = if rng.random_bool(0.2) { before.clone() } else { random_dataset(&mut rng, &schema, m) };
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
        worst = worst.max(rel(dataset_jsd(&gt, &before).unwrap(), brute_jsd(&gt, &before)));
        worst = worst.max(rel(dataset_jsd(&before, &after).unwrap(), brute_jsd(&before, &after)));
        worst = worst.max(rel(dataset_rescaled_mse(&gt, &after).unwrap(), brute_mse(&gt, &after)));
        let c = flip_confusion(&gt, &before, &after).unwrap();
        if [c.tp, c.tn, c.fp, c.fn_] != brute_confusion(&gt, &before, &after) {
            count_mismatches += 1;
        }
    }
    check(
        worst <= 1e-12 && count_mismatches == 0,
        format!("{trials} random toy datasets: max relative deviation {worst:.1e}, confusion mismatches {count_mismatches}"),
    )
}

// 9 -----------------------------------------------------------------------

fn determinism() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut spec = default_spec();
    spec.name = "determinism".into();
    spec.data = DataSource::Synthetic(ChainSpec::new(3, 4, 300, 0));
    spec.noise.missing_prob = 0.05;
    spec.sweep.values = vec![0.02, 0.1];
    spec.repeats = 2;
    spec.train.epochs_unsupervised = 5;
    spec.train.epochs_supervised = 5;
    spec.train.labeled_fraction = 0.1;
    let runs: Vec<_> = dirs
        .iter()
        .map(|d| {
            let mut s = spec.clone();
            s.output_dir = Some(d.path().to_path_buf());
            run_pipeline(&s, &PipelineRegistry::default()).unwrap()
        })
        .collect();
    let same_reports = runs[0].runs == runs[1].runs && runs[0].summary == runs[1].summary;
    let mut files = 0;
    let mut identical = true;
    let root0 = dirs[0].path().join("determinism");
    for entry in walk(&root0) {
        let rel = entry.strip_prefix(dirs[0].path()).unwrap();
        let other = dirs[1].path().join(rel);
        identical &= std::fs::read(&entry).ok() == std::fs::read(&other).ok();
        files += 1;
    }
    check(
        same_reports && identical && files > 0,
        format!(
            "{} runs re-run: reports identical {same_reports}, {files} artifact files byte-identical {identical}",
            runs[0].runs.len()
        ),
    )
}

fn walk(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

// 10 ----------------------------------------------------------------------

fn round_trips() -> Outcome {
    let mut rng = seeded(1010);
    let mut vec_ok = true;
    for _ in 0..500 {
        let n = rng.random_range(1..=5);
        let schema = random_schema(&mut rng, n, &[2, 3, 4, 9], true);
        let ds = random_dataset(&mut rng, &schema, 3);
        for r in ds.records() {
            let v = vectorize(r, &schema).unwrap();
            vec_ok &= devectorize(&v, &schema).unwrap() == *r;
        }
    }

    let dir = tempfile::tempdir().unwrap();
    let schema = random_schema(&mut rng, 3, &[3, 4], false);
    let mut model = DcaeParams::init(Architecture::for_schema(&schema), 3).unwrap();
    let x = random_dataset(&mut rng, &schema, 16).to_matrix();
    for _ in 0..3 {
        let t = model.forward(x.view(), true, &mut rng).unwrap();
        let (_, g) = model.backward(&t, x.view(), None).unwrap();
        model.adam_step(&g, &Default::default());
    }
    let path = dir.path().join("model.ckpt");
    checkpoint::save(&model, &path).unwrap();
    let ckpt_ok = checkpoint::load(&path).unwrap() == model;

    let labels = ["red", "green", "blue", "teal"];
    let sizes = ["S", "M", "L"];
    let mut csv = String::from("Color CATEGORICAL,Size CATEGORICAL\n");
    for i in 0..200 {
        let c = if i < 4 { labels[i] } else { labels[rng.random_range(0..4)] };
        let s = if i < 3 { sizes[i] } else { sizes[rng.random_range(0..3)] };
        csv.push_str(&format!("{c},{s}\n"));
    }
    let ing = ingest_reader(csv.as_bytes(), &IngestionRules::default()).unwrap().unwrap();
    let mut out = Vec::new();
    export_cleaned(&ing.dataset, ExportMode::Argmax, &mut out).unwrap();
    let csv_ok = String::from_utf8(out).unwrap() == csv.replace(" CATEGORICAL", "");

    check(
        vec_ok && ckpt_ok && csv_ok,
        format!("vectorize/devectorize {vec_ok}, checkpoint save/load {ckpt_ok}, crisp CSV ingest/argmax export {csv_ok}"),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut failed = 0;
    let mut report = |id: &str, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let (status, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{status} [{id}] {name}: {detail} ({:.1}s)", t.elapsed().as_secs_f64());
    };
    report("1", "gradient oracle", &mut gradient_oracle);
    report("2", "JSD properties", &mut jsd_properties);
    report("3", "simplex preservation", &mut simplex_preservation);
    report("4", "generator fidelity", &mut generator_fidelity);
    report("8", "metric oracles", &mut metric_oracles);
    report("9", "determinism", &mut determinism);
    report("10", "round trips", &mut round_trips);
    report("7", "imputation with 5% missing entries", &mut imputation);
    let categorical = categorical_default();
    report("6", "unsupervised non-harm at default noise", &mut || unsupervised_non_harm(&categorical));
    report("5", "default-point reproduction", &mut || reproduction(&categorical));
    println!(
        "acceptance: {} criteria failed ({:.0}s total)",
        failed,
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
