//! Percentile-threshold tables in the comma-separated layout used for
//! wealth and income tabulations.
//!
//! ```text
//! percentile,value,variable,year,unit
//! 0.5,24000,thweal992j,2010,EUR
//! ```
//!
//! `percentile` and `value` are required. The remaining columns are optional
//! metadata and are taken from the first data row.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::distributions::WeightFunction;
use crate::error::{Error, IngestError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PercentScale {
    /// Percents if any percentile exceeds 1, fractions otherwise.
    #[default]
    Auto,
    Fraction,
    Percent,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub scale: PercentScale,
}

/// Validated (percentile, threshold) rows: percentiles in (0, 1) strictly
/// increasing, thresholds non-decreasing, at least 3 rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentileTable {
    rows: Vec<(f64, f64)>,
    pub variable_code: Option<String>,
    pub year: Option<i32>,
    pub unit: Option<String>,
}

impl PercentileTable {
    /// Sorts `rows` by percentile and validates them. Line numbers in errors
    /// are 1-based row positions after sorting.
    pub fn new(rows: Vec<(f64, f64)>) -> Result<Self> {
        let lines: Vec<usize> = (1..=rows.len()).collect();
        Ok(Self { rows: validate(rows, lines)?, variable_code: None, year: None, unit: None })
    }

    pub fn rows(&self) -> &[(f64, f64)] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn percentiles(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r.0)
    }

    pub fn thresholds(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r.1)
    }

    pub fn with_metadata(mut self, variable_code: Option<String>, year: Option<i32>, unit: Option<String>) -> Self {
        self.variable_code = variable_code;
        self.year = year;
        self.unit = unit;
        self
    }

    /// Multiplies every threshold by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut t = self.clone();
        t.rows.iter_mut().for_each(|r| r.1 *= factor);
        t
    }

    /// Canonical text form: sorted fractional percentiles, shortest
    /// round-tripping float representation, metadata repeated per row.
    pub fn to_csv(&self) -> String {
        let mut header = vec!["percentile", "value"];
        if self.variable_code.is_some() {
            header.push("variable");
        }
        if self.year.is_some() {
            header.push("year");
        }
        if self.unit.is_some() {
            header.push("unit");
        }
        let mut out = header.join(",");
        out.push('\n');
        for (p, q) in &self.rows {
            let mut cells = vec![p.to_string(), q.to_string()];
            cells.extend(self.variable_code.clone());
            cells.extend(self.year.map(|y| y.to_string()));
            cells.extend(self.unit.clone());
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn load_percentile_table<R: Read>(source: R, options: LoadOptions) -> Result<PercentileTable> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(source);
    let headers = reader.headers().map_err(csv_error)?.clone();
    let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let p_col = find("percentile").ok_or(IngestError::MissingColumn("percentile"))?;
    let q_col = find("value").ok_or(IngestError::MissingColumn("value"))?;
    let (var_col, year_col, unit_col) = (find("variable"), find("year"), find("unit"));

    let mut rows = Vec::new();
    let mut lines = Vec::new();
    let mut meta: Option<(Option<String>, Option<i32>, Option<String>)> = None;
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let cell = |c: usize| record.get(c).unwrap_or("");
        let number = |c: usize| -> std::result::Result<f64, IngestError> {
            let text = cell(c);
            text.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| IngestError::Unparseable { line, text: text.to_string() })
        };
        rows.push((number(p_col)?, number(q_col)?));
        lines.push(line);
        if meta.is_none() {
            let text = |c: Option<usize>| c.map(cell).filter(|s| !s.is_empty()).map(str::to_string);
            let year = match year_col.map(cell).filter(|s| !s.is_empty()) {
                Some(y) => Some(y.parse::<i32>().map_err(|_| IngestError::Unparseable { line, text: y.to_string() })?),
                None => None,
            };
            meta = Some((text(var_col), year, text(unit_col)));
        }
    }

    let percent = match options.scale {
        PercentScale::Fraction => false,
        PercentScale::Percent => true,
        PercentScale::Auto => rows.iter().any(|r| r.0 > 1.0),
    };
    if percent {
        rows.iter_mut().for_each(|r| r.0 /= 100.0);
    }
    let rows = validate(rows, lines)?;
    let (variable_code, year, unit) = meta.unwrap_or_default();
    Ok(PercentileTable { rows, variable_code, year, unit })
}

pub fn load_percentile_file(path: &std::path::Path, options: LoadOptions) -> Result<PercentileTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::Domain(format!("{}: {e}", path.display())))?;
    load_percentile_table(std::io::BufReader::new(file), options)
}

/// Rows `(p, quantile(f, p))` for each `p` of `grid`.
pub fn synthesize_table(f: &WeightFunction, grid: &[f64]) -> Result<PercentileTable> {
    let rows = grid.iter().map(|&p| Ok((p, f.quantile(p)?))).collect::<Result<Vec<_>>>()?;
    PercentileTable::new(rows)
}

fn csv_error(e: csv::Error) -> IngestError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    IngestError::Csv { line, message: e.to_string() }
}

fn validate(rows: Vec<(f64, f64)>, lines: Vec<usize>) -> std::result::Result<Vec<(f64, f64)>, IngestError> {
    let mut tagged: Vec<(f64, f64, usize)> = rows.into_iter().zip(lines).map(|((p, q), l)| (p, q, l)).collect();
    if let Some(&(p, _, line)) = tagged.iter().find(|r| !(r.0 > 0.0 && r.0 < 1.0)) {
        return Err(IngestError::PercentileRange { line, value: p });
    }
    tagged.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in tagged.windows(2) {
        if w[1].0 == w[0].0 {
            return Err(IngestError::DuplicatePercentile { line: w[1].2, value: w[1].0 });
        }
        if w[1].1 < w[0].1 {
            return Err(IngestError::NonMonotone { line: w[1].2 });
        }
    }
    if tagged.len() < 3 {
        return Err(IngestError::TooFewRows(tagged.len()));
    }
    Ok(tagged.into_iter().map(|(p, q, _)| (p, q)).collect())
}
