//! Tab-separated descriptor, outcome and ground-truth files.
//!
//! Descriptor files start with a header `unit<TAB>f0<TAB>f1...`, outcome
//! files with `unit<TAB>score`. Rows with non-finite or unparseable numbers
//! are dropped; repeated unit identifiers keep their first occurrence.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::pool::{AlignedDataset, DescriptorTable, OutcomeTable};

/// Counts of rows skipped while loading a table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub rows_read: usize,
    pub duplicates: usize,
    pub non_finite: usize,
    pub unparseable: usize,
}

impl LoadReport {
    pub fn dropped(&self) -> usize {
        self.duplicates + self.non_finite + self.unparseable
    }
}

enum Cell {
    Ok(f64),
    NonFinite,
    Unparseable,
}

fn parse_cell(s: &str) -> Cell {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Cell::Ok(v),
        Ok(_) => Cell::NonFinite,
        Err(_) => Cell::Unparseable,
    }
}

struct Rows {
    units: Vec<String>,
    values: Vec<f64>,
    width: usize,
    report: LoadReport,
}

fn read_rows(path: &Path, expect_width: Option<usize>) -> Result<Rows> {
    let text = fs::read_to_string(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::parse(path, 1, "file is empty"))?;
    let header: Vec<&str> = header.trim_end_matches('\r').split('\t').collect();
    if header.len() < 2 || header[0].trim().is_empty() {
        return Err(Error::parse(
            path,
            1,
            "header must be `unit<TAB>column...` with at least one value column",
        ));
    }
    let width = header.len() - 1;
    if let Some(w) = expect_width {
        if width != w {
            return Err(Error::parse(
                path,
                1,
                format!("expected {w} value column(s) in header, found {width}"),
            ));
        }
    }

    let mut rows = Rows {
        units: Vec::new(),
        values: Vec::new(),
        width,
        report: LoadReport::default(),
    };
    let mut seen = std::collections::HashSet::new();
    let mut row = Vec::with_capacity(width);
    for (lineno, line) in lines {
        let fields: Vec<&str> = line.trim_end_matches('\r').split('\t').collect();
        if fields.len() != width + 1 {
            return Err(Error::parse(
                path,
                lineno + 1,
                format!("expected {} columns, found {}", width + 1, fields.len()),
            ));
        }
        rows.report.rows_read += 1;
        let unit = fields[0].trim();
        if unit.is_empty() {
            return Err(Error::parse(path, lineno + 1, "empty unit identifier"));
        }
        row.clear();
        let mut bad = None;
        for f in &fields[1..] {
            match parse_cell(f) {
                Cell::Ok(v) => row.push(v),
                Cell::NonFinite => bad = bad.or(Some(false)),
                Cell::Unparseable => bad = Some(true),
            }
        }
        match bad {
            Some(true) => {
                rows.report.unparseable += 1;
                continue;
            }
            Some(false) => {
                rows.report.non_finite += 1;
                continue;
            }
            None => {}
        }
        if !seen.insert(unit.to_string()) {
            rows.report.duplicates += 1;
            continue;
        }
        rows.units.push(unit.to_string());
        rows.values.extend_from_slice(&row);
    }
    if rows.units.is_empty() {
        return Err(Error::parse(path, 1, "no usable rows"));
    }
    if rows.report.dropped() > 0 {
        log::warn!(
            "{}: dropped {} row(s) ({} duplicate, {} non-finite, {} unparseable)",
            path.display(),
            rows.report.dropped(),
            rows.report.duplicates,
            rows.report.non_finite,
            rows.report.unparseable
        );
    }
    Ok(rows)
}

pub fn load_descriptor_table(path: impl AsRef<Path>) -> Result<(DescriptorTable, LoadReport)> {
    let path = path.as_ref();
    let rows = read_rows(path, None)?;
    let features =
        Array2::from_shape_vec((rows.units.len(), rows.width), rows.values).expect("row width checked while parsing");
    let table = DescriptorTable::new(rows.units, features)?.with_source(path);
    Ok((table, rows.report))
}

pub fn load_outcome_table(path: impl AsRef<Path>) -> Result<(OutcomeTable, LoadReport)> {
    let path = path.as_ref();
    let rows = read_rows(path, Some(1))?;
    let table = OutcomeTable::new(rows.units, Array1::from(rows.values))?.with_source(path);
    Ok((table, rows.report))
}

/// 17 significant digits: enough to round-trip any f64.
fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_descriptor_table(path: impl AsRef<Path>, units: &[String], features: &Array2<f64>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write!(w, "unit")?;
    for k in 0..features.ncols() {
        write!(w, "\tf{k}")?;
    }
    writeln!(w)?;
    for (unit, row) in units.iter().zip(features.rows()) {
        write!(w, "{unit}")?;
        for v in row {
            write!(w, "\t{}", fmt_real(*v))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_outcome_table(path: impl AsRef<Path>, units: &[String], outcomes: &Array1<f64>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "unit\tscore")?;
    for (unit, y) in units.iter().zip(outcomes) {
        writeln!(w, "{unit}\t{}", fmt_real(*y))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_truth_table(path: impl AsRef<Path>, units: &[String], is_hit: &[bool], y_clean: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "unit\tis_hit\ty_clean")?;
    for ((unit, hit), y) in units.iter().zip(is_hit).zip(y_clean) {
        writeln!(w, "{unit}\t{}\t{}", u8::from(*hit), fmt_real(*y))?;
    }
    w.flush()?;
    Ok(())
}

/// Write a dataset as a descriptor file and an outcome file.
pub fn write_dataset(
    dataset: &AlignedDataset,
    descriptors: impl AsRef<Path>,
    outcomes: impl AsRef<Path>,
) -> Result<()> {
    write_descriptor_table(descriptors, &dataset.units, &dataset.features)?;
    write_outcome_table(outcomes, &dataset.units, &dataset.outcomes)
}
