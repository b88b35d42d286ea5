//! CSV input and output.
//!
//! Tabulated laws and quantizers are two-column files; an optional
//! non-numeric first row is treated as a header. All writers emit a header
//! row, `.` decimals and newline-terminated rows.

use std::io::Read;
use std::path::Path;

use crate::error::{invalid, Result};
use crate::fisher::FisherReport;
use crate::pbpo::Strategy;
use crate::quantizer::{BinaryKind, BinaryQuantizer, ResponseCurve};
use crate::rate::RankedCandidate;
use crate::simulate::SimResult;

/// Reads `(x, value)` pairs.
pub fn read_two_column<R: Read>(reader: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return invalid(format!(
                "row {} has {} columns, expected 2",
                line + 1,
                rec.len()
            ));
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(x), Ok(y)) => {
                xs.push(x);
                ys.push(y);
            }
            _ if line == 0 => continue,
            _ => return invalid(format!("row {} is not numeric", line + 1)),
        }
    }
    Ok((xs, ys))
}

pub fn load_two_column(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    read_two_column(std::fs::File::open(path)?)
}

fn to_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

pub fn two_column_csv(header: [&str; 2], xs: &[f64], ys: &[f64]) -> Result<String> {
    let mut w = writer();
    w.write_record(header)?;
    for (x, y) in xs.iter().zip(ys) {
        w.write_record([x.to_string(), y.to_string()])?;
    }
    to_string(w)
}

/// `(y, response)` table of a quantizer; closed forms are sampled on `ys`.
pub fn quantizer_csv(q: &BinaryQuantizer, ys: &[f64]) -> Result<String> {
    match q.kind() {
        BinaryKind::Tabulated { ys, responses } => two_column_csv(["y", "response"], ys, responses),
        _ => {
            let r: Vec<f64> = ys.iter().map(|&y| q.response(y)).collect();
            two_column_csv(["y", "response"], ys, &r)
        }
    }
}

pub fn load_quantizer(path: &Path) -> Result<BinaryQuantizer> {
    let (ys, r) = load_two_column(path)?;
    BinaryQuantizer::tabulated(ys, r)
}

pub fn curve_csv(c: &ResponseCurve) -> Result<String> {
    let mut w = writer();
    w.write_record(["theta", "g", "dg"])?;
    for (i, t) in c.grid().points().iter().enumerate() {
        w.write_record([
            t.to_string(),
            c.values()[i].to_string(),
            c.slopes()[i].to_string(),
        ])?;
    }
    to_string(w)
}

pub fn fisher_csv(r: &FisherReport) -> String {
    format!("{}\n{}\n", r.csv_header(), r.csv_row())
}

pub fn simulation_csv(r: &SimResult) -> Result<String> {
    let mut w = writer();
    w.write_record(["N", "mse", "stderr", "pcrlb_limit"])?;
    for row in &r.rows {
        w.write_record([
            row.sensors.to_string(),
            row.mse.to_string(),
            row.stderr.to_string(),
            row.pcrlb_limit.to_string(),
        ])?;
    }
    to_string(w)
}

/// One row per `(sensor, y-index)`, all 1-based.
pub fn strategy_csv(s: &Strategy) -> Result<String> {
    let mut w = writer();
    w.write_record(["sensor", "y_index", "symbol"])?;
    for (i, rule) in s.rules.iter().enumerate() {
        for (y, d) in rule.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                (y + 1).to_string(),
                (d + 1).to_string(),
            ])?;
        }
    }
    to_string(w)
}

pub fn rate_csv(ranked: &[RankedCandidate]) -> Result<String> {
    let mut w = writer();
    w.write_record([
        "candidate",
        "levels",
        "count",
        "bits_used",
        "F_D",
        "pcrlb",
        "rank",
    ])?;
    for r in ranked {
        w.write_record([
            (r.index + 1).to_string(),
            r.candidate.levels.to_string(),
            r.candidate.count.to_string(),
            r.bits_used.to_string(),
            r.report.f_d.to_string(),
            r.report.pcrlb.to_string(),
            r.rank.to_string(),
        ])?;
    }
    to_string(w)
}
