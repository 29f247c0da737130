//! Text encodings for points, lattice functions, fits and scan tables.
//!
//! Every decoder accepts arbitrary input and reports malformed data as
//! [`Error::Parse`]; none of them panic.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::PrimeSphere;
use crate::norms::RateFit;
use crate::operators::LatticeFunction;

/// Largest coordinate count accepted by the decoders.
pub const MAX_DIM: usize = 64;

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// A CSV table with `#` comment lines above the header.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { comments: Vec::new(), header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn comment(&mut self, line: impl Into<String>) -> &mut Self {
        self.comments.push(line.into());
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    /// Renders the table; fails on a non-finite float or a ragged row.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        for c in &self.comments {
            for line in c.lines() {
                out.push_str("# ");
                out.push_str(line);
                out.push('\n');
            }
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).map_err(|e| parse_err(e.to_string()))?;
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.header.len() {
                return Err(Error::Domain(format!("row {i} has {} cells, header has {}", row.len(), self.header.len())));
            }
            let mut rec = Vec::with_capacity(row.len());
            for (cell, name) in row.iter().zip(&self.header) {
                rec.push(match cell {
                    Cell::Int(v) => v.to_string(),
                    Cell::Float(v) if v.is_finite() => format_float(*v),
                    Cell::Float(v) => {
                        return Err(Error::Domain(format!("non-finite value {v} in column {name}, row {i}")))
                    }
                    Cell::Bool(b) => u8::from(*b).to_string(),
                    Cell::Text(s) => s.clone(),
                });
            }
            w.write_record(&rec).map_err(|e| parse_err(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| parse_err(e.to_string()))?;
        out.push_str(&String::from_utf8(bytes).map_err(|e| parse_err(e.to_string()))?);
        Ok(out)
    }
}

/// Shortest round-trip decimal, with `-0` normalized to `0`.
pub fn format_float(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if (1e-4..1e15).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Header and records of a `#`-commented CSV document.
fn read_records(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> =
        r.headers().map_err(|e| parse_err(e.to_string()))?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| parse_err(e.to_string()))?;
        if rec.len() != header.len() {
            return Err(parse_err(format!("record has {} fields, header has {}", rec.len(), header.len())));
        }
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

fn coordinate_header(header: &[String], trailing: &[&str]) -> Result<usize> {
    let n = header
        .len()
        .checked_sub(trailing.len())
        .filter(|&n| n >= 1 && n <= MAX_DIM)
        .ok_or_else(|| parse_err("unexpected column count"))?;
    for (i, h) in header[..n].iter().enumerate() {
        if *h != format!("x{}", i + 1) {
            return Err(parse_err(format!("column {} should be x{}, found {h:?}", i + 1, i + 1)));
        }
    }
    if header[n..].iter().zip(trailing).any(|(h, t)| h != t) {
        return Err(parse_err(format!("trailing columns should be {trailing:?}")));
    }
    Ok(n)
}

fn float_cell(s: &str) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| parse_err(format!("not a number: {s:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(format!("non-finite number {s:?}")));
    }
    Ok(v)
}

fn int_cell<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| parse_err(format!("not an integer: {s:?}")))
}

/// Points CSV: `x1..xn,weight`.
pub fn points_table(sphere: &PrimeSphere) -> Table {
    let n = sphere.spec.n;
    let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    header.push("weight".into());
    let mut t = Table::new(header);
    for (p, &w) in sphere.points.iter().zip(&sphere.weights) {
        let mut row: Vec<Cell> = p.iter().map(|&x| Cell::from(x)).collect();
        row.push(w.into());
        t.push(row);
    }
    t
}

/// A decoded point list.
#[derive(Debug, Clone, PartialEq)]
pub struct PointRecords {
    pub dim: usize,
    pub points: Vec<Vec<u64>>,
    pub weights: Vec<f64>,
}

pub fn parse_points_csv(text: &str) -> Result<PointRecords> {
    let (header, rows) = read_records(text)?;
    let dim = coordinate_header(&header, &["weight"])?;
    let mut points = Vec::with_capacity(rows.len());
    let mut weights = Vec::with_capacity(rows.len());
    for row in rows {
        points.push(row[..dim].iter().map(|s| int_cell::<u64>(s)).collect::<Result<Vec<_>>>()?);
        weights.push(float_cell(&row[dim])?);
    }
    Ok(PointRecords { dim, points, weights })
}

#[derive(Serialize, Deserialize)]
struct FunctionDoc {
    dim: usize,
    values: Vec<FunctionEntry>,
}

#[derive(Serialize, Deserialize)]
struct FunctionEntry {
    x: Vec<i64>,
    re: f64,
    im: f64,
}

pub fn function_to_json(f: &LatticeFunction) -> Result<String> {
    let values = f.iter().map(|(x, v)| FunctionEntry { x: x.clone(), re: v.re, im: v.im }).collect();
    serde_json::to_string_pretty(&FunctionDoc { dim: f.dim(), values }).map_err(|e| parse_err(e.to_string()))
}

pub fn function_from_json(text: &str) -> Result<LatticeFunction> {
    let doc: FunctionDoc = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    if doc.dim == 0 || doc.dim > MAX_DIM {
        return Err(parse_err(format!("dimension {} out of range", doc.dim)));
    }
    let pairs = doc.values.into_iter().map(|e| (e.x, Complex64::new(e.re, e.im)));
    LatticeFunction::from_pairs(doc.dim, pairs).map_err(|e| parse_err(e.to_string()))
}

pub fn function_table(f: &LatticeFunction) -> Table {
    let mut header: Vec<String> = (1..=f.dim()).map(|i| format!("x{i}")).collect();
    header.extend(["re".to_string(), "im".to_string()]);
    let mut t = Table::new(header);
    for (x, v) in f.iter() {
        let mut row: Vec<Cell> = x.iter().map(|&c| Cell::from(c)).collect();
        row.extend([Cell::from(v.re), Cell::from(v.im)]);
        t.push(row);
    }
    t
}

pub fn function_from_csv(text: &str) -> Result<LatticeFunction> {
    let (header, rows) = read_records(text)?;
    let dim = coordinate_header(&header, &["re", "im"])?;
    let mut pairs = Vec::with_capacity(rows.len());
    for row in rows {
        let x = row[..dim].iter().map(|s| int_cell::<i64>(s)).collect::<Result<Vec<_>>>()?;
        pairs.push((x, Complex64::new(float_cell(&row[dim])?, float_cell(&row[dim + 1])?)));
    }
    LatticeFunction::from_pairs(dim, pairs).map_err(|e| parse_err(e.to_string()))
}

pub fn rate_fit_to_json(fit: &RateFit) -> Result<String> {
    serde_json::to_string_pretty(fit).map_err(|e| parse_err(e.to_string()))
}

pub fn rate_fit_from_json(text: &str) -> Result<RateFit> {
    let fit: RateFit = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    if ![fit.alpha, fit.beta, fit.log_c, fit.rms].iter().all(|v| v.is_finite()) || fit.rms < 0.0 {
        return Err(parse_err("fit fields must be finite with rms >= 0"));
    }
    if fit.n_samples < 4 {
        return Err(parse_err("a fit needs at least 4 samples"));
    }
    Ok(fit)
}

/// One row of a multiplier scan.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierRow {
    pub xi: Vec<f64>,
    pub raw: Complex64,
    pub main: Complex64,
    pub error: Complex64,
    pub overlap: bool,
}

pub const MULTIPLIER_COLUMNS: [&str; 7] = ["re_raw", "im_raw", "re_main", "im_main", "re_err", "im_err", "overlap_flag"];

pub fn multiplier_table(n: usize, rows: &[MultiplierRow]) -> Table {
    let mut header: Vec<String> = (1..=n).map(|i| format!("xi_{i}")).collect();
    header.extend(MULTIPLIER_COLUMNS.iter().map(|s| s.to_string()));
    let mut t = Table::new(header);
    for r in rows {
        let mut row: Vec<Cell> = r.xi.iter().map(|&x| Cell::from(x)).collect();
        for v in [r.raw, r.main, r.error] {
            row.extend([Cell::from(v.re), Cell::from(v.im)]);
        }
        row.push(r.overlap.into());
        t.push(row);
    }
    t
}

pub fn parse_multiplier_csv(text: &str) -> Result<Vec<MultiplierRow>> {
    let (header, rows) = read_records(text)?;
    let n = header
        .len()
        .checked_sub(MULTIPLIER_COLUMNS.len())
        .filter(|&n| n >= 1 && n <= MAX_DIM)
        .ok_or_else(|| parse_err("unexpected column count"))?;
    for (i, h) in header[..n].iter().enumerate() {
        if *h != format!("xi_{}", i + 1) {
            return Err(parse_err(format!("column {} should be xi_{}", i + 1, i + 1)));
        }
    }
    if header[n..].iter().zip(MULTIPLIER_COLUMNS).any(|(h, t)| h != t) {
        return Err(parse_err("unexpected multiplier columns"));
    }
    rows.into_iter()
        .map(|row| {
            let xi = row[..n].iter().map(|s| float_cell(s)).collect::<Result<Vec<_>>>()?;
            let v: Vec<f64> = row[n..n + 6].iter().map(|s| float_cell(s)).collect::<Result<_>>()?;
            let overlap = match row[n + 6].as_str() {
                "0" => false,
                "1" => true,
                other => return Err(parse_err(format!("overlap flag must be 0 or 1, got {other:?}"))),
            };
            Ok(MultiplierRow {
                xi,
                raw: Complex64::new(v[0], v[1]),
                main: Complex64::new(v[2], v[3]),
                error: Complex64::new(v[4], v[5]),
                overlap,
            })
        })
        .collect()
}
