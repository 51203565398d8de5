//! On-disk formats.
//!
//! A probabilistic table is a CSV with one column per `(attribute, category)`
//! pair, headed `<attribute>#<label>`, plus a JSON schema sidecar next to it
//! (`data.csv` → `data.schema.json`) holding kinds, labels and bin edges.
//! Missing-entry masks are CSVs of 0/1 flags with one column per attribute.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use pdbclean_core::pdb::{Dataset, MissingMask, Pmf, Record, Schema};

pub fn sidecar_path(data: &Path) -> PathBuf {
    data.with_extension("schema.json")
}

pub fn column_headers(schema: &Schema) -> Vec<String> {
    schema
        .attributes()
        .iter()
        .flat_map(|a| a.labels.iter().map(move |l| format!("{}#{}", a.name, l)))
        .collect()
}

pub fn write_pdb<W: Write>(ds: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(column_headers(ds.schema()))?;
    for record in ds.records() {
        w.write_record(record.cells.iter().flat_map(|c| c.probs().iter().map(f64::to_string)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_pdb<R: Read>(input: R, schema: &Schema) -> Result<Dataset> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let expected = column_headers(schema);
    ensure!(
        header == expected,
        "CSV header does not match the schema (expected {} columns starting {:?})",
        expected.len(),
        expected.first()
    );
    let mut records = Vec::new();
    for (line, row) in r.records().enumerate() {
        let row = row?;
        let values: Vec<f64> = row
            .iter()
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .with_context(|| format!("record {line}: non-numeric probability"))?;
        let mut cells = Vec::with_capacity(schema.len());
        for span in schema.spans() {
            cells.push(Pmf::new(values[span].to_vec()).with_context(|| format!("record {line}"))?);
        }
        records.push(Record::new(cells));
    }
    Ok(Dataset::new(schema.clone(), records)?)
}

pub fn save_schema(schema: &Schema, path: &Path) -> Result<()> {
    write_atomic(path, &serde_json::to_vec_pretty(schema)?)
}

pub fn load_schema(path: &Path) -> Result<Schema> {
    let bytes = fs::read(path).with_context(|| format!("reading schema {}", path.display()))?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing schema {}", path.display()))
}

/// Writes the table and its schema sidecar.
pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_pdb(ds, &mut buf)?;
    write_atomic(path, &buf)?;
    save_schema(ds.schema(), &sidecar_path(path))
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let schema = load_schema(&sidecar_path(path))?;
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_pdb(file, &schema).with_context(|| format!("reading {}", path.display()))
}

pub fn write_mask<W: Write>(mask: &MissingMask, schema: &Schema, out: W) -> Result<()> {
    ensure!(mask.n_attributes() == schema.len(), "mask width differs from schema");
    let mut w = csv::Writer::from_writer(out);
    w.write_record(schema.attributes().iter().map(|a| a.name.as_str()))?;
    for i in 0..mask.n_records() {
        w.write_record(mask.row(i).iter().map(|&m| if m { "1" } else { "0" }))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_mask<R: Read>(input: R, schema: &Schema) -> Result<MissingMask> {
    let mut r = csv::Reader::from_reader(input);
    let names: Vec<&str> = schema.attributes().iter().map(|a| a.name.as_str()).collect();
    ensure!(r.headers()?.iter().eq(names.iter().copied()), "mask header does not match the schema");
    let mut rows = Vec::new();
    for row in r.records() {
        let row = row?;
        let flags = row
            .iter()
            .map(|v| match v.trim() {
                "0" => Ok(false),
                "1" => Ok(true),
                other => bail!("mask entries must be 0 or 1, got `{other}`"),
            })
            .collect::<Result<Vec<bool>>>()?;
        rows.push(flags);
    }
    let mut mask = MissingMask::new(rows.len(), schema.len());
    for (i, flags) in rows.iter().enumerate() {
        for (j, &m) in flags.iter().enumerate() {
            mask.set(i, j, m);
        }
    }
    Ok(mask)
}

pub fn save_mask(mask: &MissingMask, schema: &Schema, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_mask(mask, schema, &mut buf)?;
    write_atomic(path, &buf)
}

pub fn load_mask(path: &Path, schema: &Schema) -> Result<MissingMask> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_mask(file, schema).with_context(|| format!("reading mask {}", path.display()))
}

/// Writes to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use pdbclean_core::pdb::{lift_indices, AttributeSpec};
    use pdbclean_core::quantize::uniform_bins;

    fn schema() -> Schema {
        Schema::new(vec![
            AttributeSpec::categorical("color", vec!["red".into(), "blue".into()]).unwrap(),
            AttributeSpec::continuous("x", uniform_bins(0.0, 3.0, 3).unwrap()).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn table_round_trip_is_exact() {
        let s = schema();
        let records = vec![
            Record::new(vec![
                Pmf::new(vec![0.1, 0.9]).unwrap(),
                Pmf::new(vec![1.0 / 3.0, 0.2, 1.0 - 1.0 / 3.0 - 0.2]).unwrap(),
            ]),
            Record::new(vec![Pmf::one_hot(0, 2).unwrap(), Pmf::uniform(3)]),
        ];
        let ds = Dataset::new(s.clone(), records).unwrap();
        let mut buf = Vec::new();
        write_pdb(&ds, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("color#red,color#blue,x#0,x#1,x#2\n"));
        assert_eq!(read_pdb(buf.as_slice(), &s).unwrap(), ds);
    }

    #[test]
    fn header_mismatch_is_rejected() {
        let s = schema();
        assert!(read_pdb("a#0,a#1\n1,0\n".as_bytes(), &s).is_err());
    }

    #[test]
    fn mask_round_trip() {
        let s = schema();
        let mut mask = MissingMask::new(3, 2);
        mask.set(1, 1, true);
        mask.set(2, 0, true);
        let mut buf = Vec::new();
        write_mask(&mask, &s, &mut buf).unwrap();
        assert_eq!(read_mask(buf.as_slice(), &s).unwrap(), mask);
    }

    #[test]
    fn files_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/data.csv");
        let ds = lift_indices(&[vec![1, 2], vec![0, 0]], &schema()).unwrap();
        save_dataset(&ds, &path).unwrap();
        assert!(dir.path().join("sub/data.schema.json").exists());
        assert_eq!(load_dataset(&path).unwrap(), ds);
    }
}
