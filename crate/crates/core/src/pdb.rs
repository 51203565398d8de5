//! Probabilistic table model: pmf-valued cells, schemas, and the flat record
//! layout consumed by the autoencoder.
//!
//! Category indices are 0-based everywhere in code. A record vectorizes to the
//! concatenation of its cell pmfs in attribute order.

use std::collections::HashSet;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantize::BinningRule;

/// Accepted deviation of a pmf's total mass from 1 without touching the entries.
pub const SUM_TOLERANCE: f64 = 1e-9;
/// Largest deviation that is repaired by renormalization instead of rejected.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-6;

/// A probability mass function over one attribute's categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Pmf(Vec<f64>);

impl Pmf {
    /// Validates `probs`, renormalizing small rounding drift.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPmf("empty pmf".into()));
        }
        for (k, p) in probs.iter_mut().enumerate() {
            if !p.is_finite() {
                return Err(Error::InvalidPmf(format!("entry {k} is not finite")));
            }
            if *p < -SUM_TOLERANCE || *p > 1.0 + RENORMALIZE_TOLERANCE {
                return Err(Error::InvalidPmf(format!("entry {k} = {p} outside [0, 1]")));
            }
            *p = p.clamp(0.0, 1.0);
        }
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidPmf("total mass is zero".into()));
        }
        let drift = (total - 1.0).abs();
        if drift > RENORMALIZE_TOLERANCE {
            return Err(Error::InvalidPmf(format!("total mass {total} is not 1")));
        }
        if drift > SUM_TOLERANCE {
            probs.iter_mut().for_each(|p| *p /= total);
        }
        Ok(Pmf(probs))
    }

    /// Builds a pmf from arbitrary non-negative mass by dividing through by the total.
    pub fn from_weights(mut weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidPmf("weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidPmf("total mass is zero".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Pmf::new(weights)
    }

    pub fn uniform(cardinality: usize) -> Self {
        assert!(cardinality > 0, "uniform pmf needs at least one category");
        Pmf(vec![1.0 / cardinality as f64; cardinality])
    }

    /// Point mass on the 0-based category `index`.
    pub fn one_hot(index: usize, cardinality: usize) -> Result<Self> {
        if index >= cardinality {
            return Err(Error::CategoryOutOfRange { index, cardinality });
        }
        let mut probs = vec![0.0; cardinality];
        probs[index] = 1.0;
        Ok(Pmf(probs))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Modal category; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &p) in self.0.iter().enumerate().skip(1) {
            if p > self.0[best] {
                best = k;
            }
        }
        best
    }

    pub fn is_uniform(&self) -> bool {
        let u = 1.0 / self.0.len() as f64;
        self.0.iter().all(|&p| (p - u).abs() <= SUM_TOLERANCE)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for Pmf {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        Pmf::new(value)
    }
}

impl From<Pmf> for Vec<f64> {
    fn from(value: Pmf) -> Self {
        value.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    Categorical,
    Continuous,
}

/// One column of a probabilistic table.
///
/// Every attribute carries a label per category. Continuous attributes also
/// carry the binning rule that maps values onto those categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttributeKind,
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<BinningRule>,
}

impl AttributeSpec {
    pub fn categorical(name: impl Into<String>, labels: Vec<String>) -> Result<Self> {
        let spec = AttributeSpec {
            name: name.into(),
            kind: AttributeKind::Categorical,
            labels,
            bins: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Categorical attribute labelled `0..cardinality`.
    pub fn categorical_indexed(name: impl Into<String>, cardinality: usize) -> Result<Self> {
        Self::categorical(name, (0..cardinality).map(|k| k.to_string()).collect())
    }

    pub fn continuous(name: impl Into<String>, bins: BinningRule) -> Result<Self> {
        let spec = AttributeSpec {
            name: name.into(),
            kind: AttributeKind::Continuous,
            labels: (0..bins.len()).map(|k| k.to_string()).collect(),
            bins: Some(bins),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn cardinality(&self) -> usize {
        self.labels.len()
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Error::InvalidAttribute {
            name: self.name.clone(),
            reason,
        };
        if self.cardinality() < 2 {
            return Err(fail(format!("needs at least 2 categories, has {}", self.cardinality())));
        }
        let unique: HashSet<&String> = self.labels.iter().collect();
        if unique.len() != self.labels.len() {
            return Err(fail("duplicate category labels".into()));
        }
        match (self.kind, &self.bins) {
            (AttributeKind::Continuous, None) => Err(fail("continuous attribute without bins".into())),
            (AttributeKind::Continuous, Some(bins)) => {
                bins.validate()?;
                if bins.len() != self.cardinality() {
                    return Err(fail(format!(
                        "{} bins but {} labels",
                        bins.len(),
                        self.cardinality()
                    )));
                }
                Ok(())
            }
            (AttributeKind::Categorical, Some(_)) => Err(fail("categorical attribute with bins".into())),
            (AttributeKind::Categorical, None) => Ok(()),
        }
    }
}

/// Ordered attribute list of a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SchemaRepr", into = "SchemaRepr")]
pub struct Schema {
    attributes: Vec<AttributeSpec>,
    offsets: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct SchemaRepr {
    attributes: Vec<AttributeSpec>,
}

impl TryFrom<SchemaRepr> for Schema {
    type Error = Error;

    fn try_from(value: SchemaRepr) -> Result<Self> {
        Schema::new(value.attributes)
    }
}

impl From<Schema> for SchemaRepr {
    fn from(value: Schema) -> Self {
        SchemaRepr {
            attributes: value.attributes,
        }
    }
}

impl Schema {
    pub fn new(attributes: Vec<AttributeSpec>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::InvalidSchema("schema needs at least one attribute".into()));
        }
        let mut seen = HashSet::new();
        for attr in &attributes {
            attr.validate()?;
            if !seen.insert(attr.name.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate attribute `{}`", attr.name)));
            }
        }
        let mut offsets = Vec::with_capacity(attributes.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for attr in &attributes {
            acc += attr.cardinality();
            offsets.push(acc);
        }
        Ok(Schema { attributes, offsets })
    }

    pub fn attributes(&self) -> &[AttributeSpec] {
        &self.attributes
    }

    pub fn attribute(&self, j: usize) -> &AttributeSpec {
        &self.attributes[j]
    }

    /// Number of attributes.
    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    /// Width of a vectorized record.
    pub fn width(&self) -> usize {
        *self.offsets.last().expect("offsets always hold a sentinel")
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.attributes.iter().map(AttributeSpec::cardinality).collect()
    }

    /// Index range of attribute `j` inside a vectorized record.
    pub fn span(&self, j: usize) -> std::ops::Range<usize> {
        self.offsets[j]..self.offsets[j + 1]
    }

    pub fn spans(&self) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        (0..self.len()).map(move |j| self.span(j))
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }
}

/// One row: a pmf per attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub cells: Vec<Pmf>,
}

impl Record {
    pub fn new(cells: Vec<Pmf>) -> Self {
        Record { cells }
    }

    pub fn validate(&self, schema: &Schema) -> Result<()> {
        if self.cells.len() != schema.len() {
            return Err(Error::DimensionMismatch {
                expected: schema.len(),
                actual: self.cells.len(),
                context: "cells per record".into(),
            });
        }
        for (j, (cell, attr)) in self.cells.iter().zip(schema.attributes()).enumerate() {
            if cell.len() != attr.cardinality() {
                return Err(Error::DimensionMismatch {
                    expected: attr.cardinality(),
                    actual: cell.len(),
                    context: format!("categories of attribute {j} (`{}`)", attr.name),
                });
            }
        }
        Ok(())
    }
}

/// Concatenates a record's pmfs in attribute order.
pub fn vectorize(record: &Record, schema: &Schema) -> Result<Vec<f64>> {
    record.validate(schema)?;
    let mut out = Vec::with_capacity(schema.width());
    for cell in &record.cells {
        out.extend_from_slice(cell.probs());
    }
    Ok(out)
}

/// Splits a flat vector back into per-attribute pmfs.
pub fn devectorize(v: &[f64], schema: &Schema) -> Result<Record> {
    if v.len() != schema.width() {
        return Err(Error::DimensionMismatch {
            expected: schema.width(),
            actual: v.len(),
            context: "vectorized record length".into(),
        });
    }
    let cells = schema
        .spans()
        .map(|span| Pmf::new(v[span].to_vec()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Record { cells })
}

/// Lifts 0-based category indices to one-hot pmfs.
pub fn lift_indices(rows: &[Vec<usize>], schema: &Schema) -> Result<Dataset> {
    let records = rows
        .iter()
        .map(|row| {
            if row.len() != schema.len() {
                return Err(Error::DimensionMismatch {
                    expected: schema.len(),
                    actual: row.len(),
                    context: "values per crisp row".into(),
                });
            }
            let cells = row
                .iter()
                .zip(schema.attributes())
                .map(|(&k, attr)| Pmf::one_hot(k, attr.cardinality()))
                .collect::<Result<Vec<_>>>()?;
            Ok(Record { cells })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        schema: schema.clone(),
        records,
    })
}

/// Lifts a crisp table of category labels to one-hot records.
pub fn lift_crisp_table<S: AsRef<str>>(rows: &[Vec<S>], schema: &Schema) -> Result<Dataset> {
    let indices = rows
        .iter()
        .map(|row| {
            if row.len() != schema.len() {
                return Err(Error::DimensionMismatch {
                    expected: schema.len(),
                    actual: row.len(),
                    context: "values per crisp row".into(),
                });
            }
            row.iter()
                .zip(schema.attributes())
                .map(|(label, attr)| {
                    attr.label_index(label.as_ref()).ok_or_else(|| Error::UnknownLabel {
                        attribute: attr.name.clone(),
                        label: label.as_ref().to_string(),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    lift_indices(&indices, schema)
}

/// M records over one schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    schema: Schema,
    records: Vec<Record>,
}

impl Dataset {
    pub fn new(schema: Schema, records: Vec<Record>) -> Result<Self> {
        for (i, record) in records.iter().enumerate() {
            record.validate(&schema).map_err(|e| match e {
                Error::DimensionMismatch {
                    expected,
                    actual,
                    context,
                } => Error::DimensionMismatch {
                    expected,
                    actual,
                    context: format!("record {i}: {context}"),
                },
                other => other,
            })?;
        }
        Ok(Dataset { schema, records })
    }

    pub fn empty(schema: Schema) -> Self {
        Dataset {
            schema,
            records: Vec::new(),
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn record(&self, i: usize) -> &Record {
        &self.records[i]
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn cell(&self, i: usize, j: usize) -> &Pmf {
        &self.records[i].cells[j]
    }

    /// Records `indices` in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }

    /// M × width matrix of vectorized records.
    pub fn to_matrix(&self) -> Array2<f64> {
        let width = self.schema.width();
        let mut out = Array2::zeros((self.len(), width));
        for (mut row, record) in out.rows_mut().into_iter().zip(&self.records) {
            let mut col = 0;
            for cell in &record.cells {
                for &p in cell.probs() {
                    row[col] = p;
                    col += 1;
                }
            }
        }
        out
    }

    /// Inverse of [`Dataset::to_matrix`].
    pub fn from_matrix(schema: Schema, matrix: &Array2<f64>) -> Result<Self> {
        let records = matrix
            .rows()
            .into_iter()
            .map(|row| match row.as_slice() {
                Some(s) => devectorize(s, &schema),
                None => devectorize(&row.to_vec(), &schema),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset { schema, records })
    }

    pub fn into_records(self) -> Vec<Record> {
        self.records
    }
}

/// Which cells hold a missing entry (uniform pmf standing in for an unknown value).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissingMask {
    n_attributes: usize,
    cells: Vec<bool>,
}

impl MissingMask {
    pub fn new(n_records: usize, n_attributes: usize) -> Self {
        MissingMask {
            n_attributes,
            cells: vec![false; n_records * n_attributes],
        }
    }

    pub fn for_dataset(ds: &Dataset) -> Self {
        Self::new(ds.len(), ds.schema().len())
    }

    pub fn n_records(&self) -> usize {
        if self.n_attributes == 0 {
            0
        } else {
            self.cells.len() / self.n_attributes
        }
    }

    pub fn n_attributes(&self) -> usize {
        self.n_attributes
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.n_attributes + j]
    }

    pub fn set(&mut self, i: usize, j: usize, missing: bool) {
        self.cells[i * self.n_attributes + j] = missing;
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.cells[i * self.n_attributes..(i + 1) * self.n_attributes]
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn subset(&self, indices: &[usize]) -> MissingMask {
        let mut out = MissingMask::new(indices.len(), self.n_attributes);
        for (r, &i) in indices.iter().enumerate() {
            for j in 0..self.n_attributes {
                out.set(r, j, self.get(i, j));
            }
        }
        out
    }

    pub fn check_shape(&self, ds: &Dataset) -> Result<()> {
        if self.n_records() != ds.len() || self.n_attributes != ds.schema().len() {
            return Err(Error::DimensionMismatch {
                expected: ds.len() * ds.schema().len(),
                actual: self.cells.len(),
                context: "missing-mask cells".into(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eye_hair() -> Schema {
        Schema::new(vec![
            AttributeSpec::categorical("eye colour", vec!["blue".into(), "brown".into()]).unwrap(),
            AttributeSpec::categorical("hair colour", vec!["light".into(), "dark".into()]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn vectorize_example_record() {
        let schema = eye_hair();
        let record = Record::new(vec![
            Pmf::new(vec![0.7, 0.3]).unwrap(),
            Pmf::new(vec![1.0, 0.0]).unwrap(),
        ]);
        let v = vectorize(&record, &schema).unwrap();
        assert_eq!(v, vec![0.7, 0.3, 1.0, 0.0]);
        assert_eq!(devectorize(&v, &schema).unwrap(), record);
    }

    #[test]
    fn vectorize_concatenates() {
        let single = Schema::new(vec![AttributeSpec::categorical_indexed("a", 3).unwrap()]).unwrap();
        let r = Record::new(vec![Pmf::one_hot(0, 3).unwrap()]);
        assert_eq!(vectorize(&r, &single).unwrap(), vec![1.0, 0.0, 0.0]);

        let two = Schema::new(vec![
            AttributeSpec::categorical_indexed("a", 2).unwrap(),
            AttributeSpec::categorical_indexed("b", 3).unwrap(),
        ])
        .unwrap();
        let r = Record::new(vec![
            Pmf::new(vec![0.5, 0.5]).unwrap(),
            Pmf::new(vec![0.2, 0.3, 0.5]).unwrap(),
        ]);
        assert_eq!(vectorize(&r, &two).unwrap(), vec![0.5, 0.5, 0.2, 0.3, 0.5]);
    }

    #[test]
    fn vectorize_rejects_wrong_shape() {
        let schema = eye_hair();
        let r = Record::new(vec![Pmf::new(vec![0.2, 0.3, 0.5]).unwrap(), Pmf::uniform(2)]);
        assert!(matches!(vectorize(&r, &schema), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn devectorize_renormalizes_small_drift() {
        let schema = Schema::new(vec![AttributeSpec::categorical_indexed("a", 2).unwrap()]).unwrap();
        let r = devectorize(&[0.5000001, 0.4999999], &schema).unwrap();
        let total: f64 = r.cells[0].probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-15);

        let r = devectorize(&[0.5000004, 0.5000002], &schema).unwrap();
        let total: f64 = r.cells[0].probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn devectorize_errors() {
        let schema = eye_hair();
        assert!(matches!(
            devectorize(&[0.5, 0.5, 1.0], &schema),
            Err(Error::DimensionMismatch { expected: 4, actual: 3, .. })
        ));
        assert!(devectorize(&[0.0, 0.0, 1.0, 0.0], &schema).is_err());
        assert!(devectorize(&[0.6, 0.6, 1.0, 0.0], &schema).is_err());
    }

    #[test]
    fn one_hot_positions() {
        // 1-based category 3 of 4 is index 2.
        assert_eq!(Pmf::one_hot(2, 4).unwrap().probs(), &[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(Pmf::one_hot(0, 2).unwrap().probs(), &[1.0, 0.0]);
        assert_eq!(Pmf::one_hot(3, 4).unwrap().probs(), &[0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            Pmf::one_hot(4, 4),
            Err(Error::CategoryOutOfRange { index: 4, cardinality: 4 })
        ));
    }

    #[test]
    fn lift_crisp_row() {
        let schema = Schema::new(
            ["A", "B", "C"]
                .iter()
                .map(|n| AttributeSpec::categorical_indexed(*n, 4).unwrap())
                .collect(),
        )
        .unwrap();
        let ds = lift_crisp_table(&[vec!["0", "0", "2"]], &schema).unwrap();
        assert_eq!(
            vectorize(ds.record(0), &schema).unwrap(),
            vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]
        );

        let empty: Vec<Vec<&str>> = vec![];
        assert!(lift_crisp_table(&empty, &schema).unwrap().is_empty());

        assert!(matches!(
            lift_crisp_table(&[vec!["0", "4", "2"]], &schema),
            Err(Error::UnknownLabel { .. })
        ));
        assert!(matches!(
            lift_crisp_table(&[vec!["0", "1"]], &schema),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn pmf_rejects_bad_input() {
        assert!(Pmf::new(vec![0.0, 0.0]).is_err());
        assert!(Pmf::new(vec![0.5, 0.6]).is_err());
        assert!(Pmf::new(vec![-0.5, 1.5]).is_err());
        assert!(Pmf::new(vec![f64::NAN, 1.0]).is_err());
        assert!(Pmf::new(vec![]).is_err());
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(Pmf::uniform(4).argmax(), 0);
        assert_eq!(Pmf::new(vec![0.1, 0.45, 0.45]).unwrap().argmax(), 1);
    }

    #[test]
    fn schema_rules() {
        assert!(Schema::new(vec![]).is_err());
        let a = AttributeSpec::categorical_indexed("a", 2).unwrap();
        assert!(Schema::new(vec![a.clone(), a]).is_err());
        assert!(AttributeSpec::categorical_indexed("x", 1).is_err());
    }

    #[test]
    fn matrix_round_trip() {
        let schema = eye_hair();
        let ds = Dataset::new(
            schema.clone(),
            vec![
                Record::new(vec![Pmf::new(vec![0.7, 0.3]).unwrap(), Pmf::new(vec![1.0, 0.0]).unwrap()]),
                Record::new(vec![Pmf::new(vec![0.8, 0.2]).unwrap(), Pmf::new(vec![0.9, 0.1]).unwrap()]),
                Record::new(vec![Pmf::new(vec![0.0, 1.0]).unwrap(), Pmf::new(vec![0.5, 0.5]).unwrap()]),
            ],
        )
        .unwrap();
        let m = ds.to_matrix();
        assert_eq!(m.dim(), (3, 4));
        assert_eq!(Dataset::from_matrix(schema, &m).unwrap(), ds);
    }
}
