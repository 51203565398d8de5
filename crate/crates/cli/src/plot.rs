//! SVG line charts of sweep summaries, one file per metric.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use plotters::prelude::*;

use crate::experiment::{ExperimentOutcome, SummaryRow, METRICS};

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
];

fn axis_label(metric: &str) -> &'static str {
    match metric {
        "jsd_improvement_pct" => "JSD reduction (%)",
        "mse_improvement_pct" => "MSE reduction (%)",
        "accuracy" => "flip accuracy",
        _ => "flip F1",
    }
}

type Series<'a> = BTreeMap<&'a str, Vec<&'a SummaryRow>>;

fn draw(path: &Path, outcome: &ExperimentOutcome, metric: &str, series: &Series<'_>) -> Result<()> {
    let rows = series.values().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for r in rows {
        x0 = x0.min(r.value);
        x1 = x1.max(r.value);
        y0 = y0.min(r.stats.mean - r.stats.ci95);
        y1 = y1.max(r.stats.mean + r.stats.ci95);
    }
    // A single point still needs a non-degenerate range.
    let pad = |lo: f64, hi: f64| {
        let d = if hi > lo { (hi - lo) * 0.05 } else { lo.abs().max(1.0) * 0.1 };
        (lo - d)..(hi + d)
    };

    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE)?;
    let title = format!("{}: {} vs {}", outcome.name, axis_label(metric), outcome.parameter.as_str());
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(15)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(pad(x0, x1), pad(y0, y1))?;
    chart
        .configure_mesh()
        .x_desc(outcome.parameter.as_str())
        .y_desc(axis_label(metric))
        .draw()?;

    for (idx, (pipeline, points)) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let mut band: Vec<(f64, f64)> = points.iter().map(|r| (r.value, r.stats.mean + r.stats.ci95)).collect();
        band.extend(points.iter().rev().map(|r| (r.value, r.stats.mean - r.stats.ci95)));
        chart.draw_series(std::iter::once(Polygon::new(band, color.mix(0.2).filled())))?;
        let line: Vec<(f64, f64)> = points.iter().map(|r| (r.value, r.stats.mean)).collect();
        chart
            .draw_series(LineSeries::new(line.clone(), color.stroke_width(2)))?
            .label(format!("{pipeline} ({})", outcome.data_kind))
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
        chart.draw_series(line.into_iter().map(|p| Circle::new(p, 4, color.filled())))?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()?;
    root.present()?;
    Ok(())
}

/// Writes `<metric>.svg` into `dir` for every metric with data. Returns the files written.
pub fn emit_plots(outcome: &ExperimentOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    if outcome.summary.is_empty() {
        bail!("no successful runs to plot");
    }
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for metric in METRICS {
        let mut series: Series<'_> = BTreeMap::new();
        for row in outcome.summary.iter().filter(|r| r.metric == metric) {
            series.entry(row.pipeline.as_str()).or_default().push(row);
        }
        if series.is_empty() {
            continue;
        }
        for points in series.values_mut() {
            points.sort_by(|a, b| a.value.total_cmp(&b.value));
        }
        let path = dir.join(format!("{metric}.svg"));
        draw(&path, outcome, metric, &series)?;
        written.push(path);
    }
    Ok(written)
}
