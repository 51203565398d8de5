//! Turns an ordinary crisp CSV into a probabilistic table.
//!
//! Columns whose header contains the categorical marker become categorical
//! attributes over their distinct observed labels (sorted). All other columns
//! must be numeric; they are binned uniformly over their observed range with a
//! data-driven bin count. Null cells become uniform pmfs and are recorded in
//! the missing-entry mask.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use anyhow::{bail, Context, Result};
use pdbclean_core::pdb::{AttributeKind, AttributeSpec, Dataset, MissingMask, Pmf, Record, Schema};
use pdbclean_core::quantize::{choose_bin_count, pmf_from_value, uniform_bins};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestionRules {
    pub categorical_marker: String,
    pub null_tokens: Vec<String>,
}

impl Default for IngestionRules {
    fn default() -> Self {
        IngestionRules {
            categorical_marker: "CATEGORICAL".into(),
            null_tokens: vec![String::new(), "NULL".into()],
        }
    }
}

impl IngestionRules {
    fn is_null(&self, cell: &str) -> bool {
        self.null_tokens.iter().any(|t| t == cell)
    }

    /// Attribute name and kind implied by a column header.
    fn column(&self, header: &str) -> (String, AttributeKind) {
        let header = header.trim();
        if !self.categorical_marker.is_empty() && header.contains(&self.categorical_marker) {
            let name = header.replacen(&self.categorical_marker, "", 1);
            (name.trim().to_string(), AttributeKind::Categorical)
        } else {
            (header.to_string(), AttributeKind::Continuous)
        }
    }
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub dataset: Dataset,
    pub mask: MissingMask,
}

impl Ingested {
    pub fn schema(&self) -> &Schema {
        self.dataset.schema()
    }
}

/// `Ok(None)` for a file with a header but no records, since no attribute
/// can be resolved without observed values.
pub fn ingest_reader<R: Read>(input: R, rules: &IngestionRules) -> Result<Option<Ingested>> {
    let mut r = csv::Reader::from_reader(input);
    let columns: Vec<(String, AttributeKind)> = r.headers()?.iter().map(|h| rules.column(h)).collect();
    let mut rows: Vec<Vec<String>> = Vec::new();
    for row in r.records() {
        rows.push(row?.iter().map(|c| c.trim().to_string()).collect());
    }
    if rows.is_empty() {
        return Ok(None);
    }

    let mut attributes = Vec::with_capacity(columns.len());
    for (j, (name, kind)) in columns.iter().enumerate() {
        let observed = rows.iter().map(|r| r[j].as_str()).filter(|c| !rules.is_null(c));
        let spec = match kind {
            AttributeKind::Categorical => {
                let labels: BTreeSet<&str> = observed.collect();
                if labels.len() < 2 {
                    bail!("column `{name}` has fewer than 2 distinct values");
                }
                AttributeSpec::categorical(name.clone(), labels.into_iter().map(str::to_string).collect())?
            }
            AttributeKind::Continuous => {
                let values = observed
                    .enumerate()
                    .map(|(i, c)| {
                        c.parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .with_context(|| format!("column `{name}`, value {i}: `{c}` is not a number"))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                let k = choose_bin_count(&values).with_context(|| format!("column `{name}`"))?;
                let low = values.iter().copied().fold(f64::INFINITY, f64::min);
                let high = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                AttributeSpec::continuous(name.clone(), uniform_bins(low, high, k)?)?
            }
        };
        attributes.push(spec);
    }
    let schema = Schema::new(attributes)?;

    let mut mask = MissingMask::new(rows.len(), schema.len());
    let mut records = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let mut cells = Vec::with_capacity(schema.len());
        for (j, attr) in schema.attributes().iter().enumerate() {
            let cell = row[j].as_str();
            let pmf = if rules.is_null(cell) {
                mask.set(i, j, true);
                Pmf::uniform(attr.cardinality())
            } else if let Some(rule) = &attr.bins {
                pmf_from_value(cell.parse()?, rule)?
            } else {
                Pmf::one_hot(attr.label_index(cell).expect("label seen above"), attr.cardinality())?
            };
            cells.push(pmf);
        }
        records.push(Record::new(cells));
    }
    Ok(Some(Ingested {
        dataset: Dataset::new(schema, records)?,
        mask,
    }))
}

pub fn ingest_csv(path: &Path, rules: &IngestionRules) -> Result<Option<Ingested>> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    ingest_reader(file, rules).with_context(|| format!("ingesting {}", path.display()))
}
