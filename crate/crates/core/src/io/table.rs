//! In-memory CSV tables with digests that can ignore timing columns.

use std::path::Path;

use crate::error::{LabError, Result};
use crate::io::digest::{sha256_hex, write_atomic};
use crate::pde::GridDensity;

/// Columns that hold measurements of the machine rather than of the
/// experiment; they are left out of content digests.
pub const TIMING_COLUMNS: [&str; 1] = ["wallclock_ms"];

/// Shortest text that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

/// A CSV file held in memory until it is written.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    /// File name relative to the output directory.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn with_header(name: &str, header: Vec<String>) -> Self {
        Table { name: name.into(), header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(LabError::Shape(format!(
                "{}: row of {} cells for {} columns",
                self.name,
                row.len(),
                self.header.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k].as_str()).collect())
    }

    fn encode(&self, keep: impl Fn(usize) -> bool) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let pick = |r: &[String]| r.iter().enumerate().filter(|(k, _)| keep(*k)).map(|(_, v)| v.clone()).collect::<Vec<_>>();
        w.write_record(pick(&self.header))?;
        for r in &self.rows {
            w.write_record(pick(r))?;
        }
        w.into_inner().map_err(|e| LabError::Io(e.into_error()))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.encode(|_| true)
    }

    /// Timing columns present in this table.
    pub fn masked_columns(&self) -> Vec<String> {
        self.header.iter().filter(|h| TIMING_COLUMNS.contains(&h.as_str())).cloned().collect()
    }

    /// SHA-256 of the CSV encoding without the timing columns.
    pub fn digest(&self) -> Result<String> {
        let masked = self.masked_columns();
        let bytes = self.encode(|k| !masked.contains(&self.header[k]))?;
        Ok(sha256_hex(&bytes))
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join(&self.name), &self.to_bytes()?)
    }
}

/// Digest of CSV bytes with the named columns removed; used to check files
/// already on disk.
pub fn masked_digest_of_csv(bytes: &[u8], masked: &[String]) -> Result<String> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(bytes);
    let mut rows: Vec<Vec<String>> = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    let Some(header) = rows.first().cloned() else {
        return Ok(sha256_hex(bytes));
    };
    let table = Table { name: String::new(), header: header.clone(), rows: rows[1..].to_vec() };
    let bytes = table.encode(|k| !masked.contains(&header[k]))?;
    Ok(sha256_hex(&bytes))
}

/// Columns `cell, x1..xd, mass`.
pub fn density_table(name: &str, density: &GridDensity) -> Result<Table> {
    let d = density.spec.dim;
    let mut header = vec!["cell".to_string()];
    header.extend((1..=d).map(|a| format!("x{a}")));
    header.push("mass".into());
    let mut t = Table::with_header(name, header);
    let mut c = vec![0.0; d];
    for (k, m) in density.masses.iter().enumerate() {
        density.spec.center_of(k, &mut c);
        let mut row = vec![k.to_string()];
        row.extend(c.iter().map(|v| fmt_f64(*v)));
        row.push(fmt_f64(*m));
        t.push(row)?;
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::GridSpec;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 1e21, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(f64::NAN), "NaN");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
    }

    #[test]
    fn timing_columns_do_not_change_the_digest() {
        let mut a = Table::new("raw.csv", &["N", "sup_stat", "wallclock_ms"]);
        a.push(vec!["128".into(), "0.5".into(), "17".into()]).unwrap();
        let mut b = a.clone();
        b.rows[0][2] = "9000".into();
        assert_eq!(a.digest().unwrap(), b.digest().unwrap());
        b.rows[0][1] = "0.6".into();
        assert_ne!(a.digest().unwrap(), b.digest().unwrap());
        assert!(a.push(vec!["1".into()]).is_err());
    }

    #[test]
    fn digest_from_disk_bytes_matches() {
        let mut a = Table::new("raw.csv", &["x", "wallclock_ms"]);
        a.push(vec!["1.5".into(), "3".into()]).unwrap();
        a.push(vec!["a,b".into(), "4".into()]).unwrap();
        let bytes = a.to_bytes().unwrap();
        assert_eq!(masked_digest_of_csv(&bytes, &a.masked_columns()).unwrap(), a.digest().unwrap());
    }

    #[test]
    fn density_rows() {
        let g = GridDensity::new(GridSpec::new(1, 1.0, 2).unwrap(), vec![0.25, 0.75]).unwrap();
        let t = density_table("f.csv", &g).unwrap();
        assert_eq!(t.header, vec!["cell", "x1", "mass"]);
        assert_eq!(t.rows[1], vec!["1", "0.5", "0.75"]);
    }
}
