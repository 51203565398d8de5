use std::io::Write;

use anyhow::Result;
use pdbclean_core::pdb::Dataset;
use pdbclean_core::quantize::expected_value;
use serde::{Deserialize, Serialize};

use crate::formats::write_pdb;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExportMode {
    /// One column per category holding its probability.
    Probabilistic,
    /// The most likely label; the bin center for continuous attributes.
    Argmax,
    /// Expected bin center for continuous attributes, the most likely label otherwise.
    ExpectedValue,
}

pub fn export_cleaned<W: Write>(ds: &Dataset, mode: ExportMode, out: W) -> Result<()> {
    if mode == ExportMode::Probabilistic {
        return write_pdb(ds, out);
    }
    let schema = ds.schema();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(schema.attributes().iter().map(|a| a.name.as_str()))?;
    for record in ds.records() {
        let row = record.cells.iter().zip(schema.attributes()).map(|(cell, attr)| {
            match (&attr.bins, mode) {
                (Some(rule), ExportMode::ExpectedValue) => expected_value(cell, rule).to_string(),
                (Some(rule), _) => rule.centers()[cell.argmax()].to_string(),
                (None, _) => attr.labels[cell.argmax()].clone(),
            }
        });
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}
