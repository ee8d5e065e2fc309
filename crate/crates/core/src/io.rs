//! CSV and JSON file formats.
//!
//! Inputs:
//! - potential table: header `y1,y0`, one row per unit;
//! - matched pairs: header `y11_t,y11_c,y12_t,y12_c`, one row per pair
//!   (first unit treated/control, then second unit treated/control);
//! - factorial table: header `y_1,...,y_J` plus a JSON sidecar
//!   `{"k": K, "r": r, "column_order": [[+1,-1,...], ...]}`;
//! - observed data: header `yobs,t`.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! value read back is bit-identical to the one written.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{VarianceReport, VARIANCE_REPORT_HEADER};
use crate::inference::{IntervalResult, TestResult, INTERVAL_RESULT_HEADER, TEST_RESULT_HEADER};
use crate::population::{factor_level, FactorialTable, MatchedPairTable, ObservedData, PotentialTable};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Rows of numbers under an exact expected header. Line numbers in errors
/// are 1-based file lines.
fn read_numeric<R: Read>(input: R, expected: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).flexible(true).from_reader(input);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(parse_err(1, "empty input")),
        Some(h) => h.map_err(|e| parse_err(1, e.to_string()))?,
    };
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(parse_err(1, format!("expected header `{}`, got `{}`", expected.join(","), got.join(","))));
    }
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if rec.len() != expected.len() {
            return Err(parse_err(line, format!("expected {} fields, got {}", expected.len(), rec.len())));
        }
        let row = rec
            .iter()
            .map(|field| {
                let v: f64 = field.parse().map_err(|_| parse_err(line, format!("not a number: `{field}`")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(parse_err(line, format!("non-finite value `{field}`")))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(2, "no data rows"));
    }
    Ok(rows)
}

pub fn read_potential_table_from<R: Read>(input: R) -> Result<PotentialTable> {
    let rows = read_numeric(input, &["y1", "y0"])?;
    PotentialTable::new(rows.iter().map(|r| r[0]).collect(), rows.iter().map(|r| r[1]).collect())
}

pub fn read_potential_table(path: &Path) -> Result<PotentialTable> {
    read_potential_table_from(File::open(path)?)
}

pub fn read_pair_table_from<R: Read>(input: R) -> Result<MatchedPairTable> {
    let rows = read_numeric(input, &["y11_t", "y11_c", "y12_t", "y12_c"])?;
    MatchedPairTable::new(rows.iter().map(|r| [[r[1], r[0]], [r[3], r[2]]]).collect())
}

pub fn read_pair_table(path: &Path) -> Result<MatchedPairTable> {
    read_pair_table_from(File::open(path)?)
}

/// Sidecar describing a factorial CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorialSidecar {
    pub k: usize,
    pub r: usize,
    /// Level vector of each CSV column. Omitted means canonical order.
    #[serde(default)]
    pub column_order: Option<Vec<Vec<i8>>>,
}

/// Read a factorial table, reordering columns into canonical order.
pub fn read_factorial_table_from<R: Read>(input: R, sidecar: &FactorialSidecar) -> Result<FactorialTable> {
    let (k, r) = (sidecar.k, sidecar.r);
    if k == 0 || k > 20 {
        return Err(Error::InvalidParameter(format!("number of factors must be in 1..=20, got {k}")));
    }
    let j = 1usize << k;
    let header: Vec<String> = (1..=j).map(|c| format!("y_{c}")).collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = read_numeric(input, &header_refs)?;
    // canonical_of[csv column] = canonical cell index
    let canonical_of: Vec<usize> = match &sidecar.column_order {
        None => (0..j).collect(),
        Some(order) => {
            if order.len() != j {
                return Err(Error::InvalidParameter(format!("column_order lists {} columns, need {j}", order.len())));
            }
            let mut seen = vec![false; j];
            let mut out = Vec::with_capacity(j);
            for levels in order {
                if levels.len() != k || levels.iter().any(|&l| l != 1 && l != -1) {
                    return Err(Error::InvalidParameter(format!("bad level vector {levels:?}")));
                }
                let cell = levels.iter().fold(0usize, |acc, &l| (acc << 1) | (l == -1) as usize);
                debug_assert!((0..k).all(|f| factor_level(cell, f, k) == levels[f]));
                if std::mem::replace(&mut seen[cell], true) {
                    return Err(Error::InvalidParameter(format!("level vector {levels:?} listed twice")));
                }
                out.push(cell);
            }
            out
        }
    };
    let mut y = vec![0.0; rows.len() * j];
    for (i, row) in rows.iter().enumerate() {
        for (col, &v) in row.iter().enumerate() {
            y[i * j + canonical_of[col]] = v;
        }
    }
    FactorialTable::new(k, r, y)
}

pub fn read_factorial_table(csv_path: &Path, sidecar_path: &Path) -> Result<FactorialTable> {
    let sidecar: FactorialSidecar = serde_json::from_reader(File::open(sidecar_path)?)?;
    read_factorial_table_from(File::open(csv_path)?, &sidecar)
}

pub fn read_observed_from<R: Read>(input: R) -> Result<ObservedData> {
    let rows = read_numeric(input, &["yobs", "t"])?;
    let mut t = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        if r[1] != 0.0 && r[1] != 1.0 {
            return Err(parse_err(i + 2, format!("treatment label must be 0 or 1, got {}", r[1])));
        }
        t.push(r[1] as u8);
    }
    ObservedData::new(rows.iter().map(|r| r[0]).collect(), t)
}

pub fn read_observed(path: &Path) -> Result<ObservedData> {
    read_observed_from(File::open(path)?)
}

pub fn write_observed<W: Write>(out: W, d: &ObservedData) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["yobs", "t"])?;
    for (y, t) in d.yobs().iter().zip(d.labels()) {
        w.write_record([y.to_string(), t.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_potential_table<W: Write>(out: W, pop: &PotentialTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["y1", "y0"])?;
    for (a, b) in pop.y1().iter().zip(pop.y0()) {
        w.write_record([a.to_string(), b.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn header_fields(h: &str) -> Vec<&str> {
    h.split(',').collect()
}

pub fn write_variance_reports<W: Write>(out: W, rows: &[VarianceReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header_fields(VARIANCE_REPORT_HEADER))?;
    for v in rows {
        w.write_record(
            [v.tau_hat, v.v_neyman, v.v_fisher, v.v_ols, v.v_hw, v.v_score, v.v_improved, v.s1sq, v.s0sq, v.ssq]
                .iter()
                .map(f64::to_string),
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_variance_reports<R: Read>(input: R) -> Result<Vec<VarianceReport>> {
    let rows = read_numeric(input, &header_fields(VARIANCE_REPORT_HEADER))?;
    Ok(rows
        .into_iter()
        .map(|r| VarianceReport {
            tau_hat: r[0],
            v_neyman: r[1],
            v_fisher: r[2],
            v_ols: r[3],
            v_hw: r[4],
            v_score: r[5],
            v_improved: r[6],
            s1sq: r[7],
            s0sq: r[8],
            ssq: r[9],
        })
        .collect())
}

pub fn write_test_results<W: Write>(out: W, rows: &[TestResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header_fields(TEST_RESULT_HEADER))?;
    for t in rows {
        w.write_record([t.method.to_string(), t.statistic.to_string(), t.p_value.to_string(), t.m_draws.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `(method, statistic, p_value, m_draws)` rows.
pub fn read_test_results<R: Read>(input: R) -> Result<Vec<(String, f64, f64, u64)>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let num = |i: usize| -> Result<f64> {
            rec.get(i).and_then(|s| s.parse().ok()).ok_or_else(|| parse_err(line, format!("bad field {i}")))
        };
        let m: u64 = rec.get(3).and_then(|s| s.parse().ok()).ok_or_else(|| parse_err(line, "bad m_draws"))?;
        out.push((rec.get(0).unwrap_or("").to_string(), num(1)?, num(2)?, m));
    }
    Ok(out)
}

pub fn write_intervals<W: Write>(out: W, rows: &[IntervalResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header_fields(INTERVAL_RESULT_HEADER))?;
    for iv in rows {
        w.write_record([
            iv.method.as_str().to_string(),
            iv.level.to_string(),
            iv.lower.to_string(),
            iv.upper.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_potential_table() {
        let pop = read_potential_table_from("y1,y0\n2,1\n4,2\n6,3\n".as_bytes()).unwrap();
        assert_eq!(pop.y1(), &[2.0, 4.0, 6.0]);
        assert_eq!(pop.y0(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match read_observed_from("yobs,t\n1,1\n2,0\nx,1\n".as_bytes()) {
            Err(Error::Parse { line: 4, .. }) => {}
            other => panic!("{other:?}"),
        }
        match read_observed_from("".as_bytes()) {
            Err(Error::Parse { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        match read_observed_from("y,t\n1,1\n".as_bytes()) {
            Err(Error::Parse { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        match read_observed_from("yobs,t\n1,1\n2,3\n".as_bytes()) {
            Err(Error::Parse { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reads_pairs() {
        let pt = read_pair_table_from("y11_t,y11_c,y12_t,y12_c\n10,0,11,1\n12,2,13,3\n".as_bytes()).unwrap();
        assert_eq!(pt.pairs()[0], [[0.0, 10.0], [1.0, 11.0]]);
    }

    #[test]
    fn factorial_columns_are_reordered() {
        let csv = "y_1,y_2,y_3,y_4\n0,2,3,5\n0,2,3,5\n0,2,3,5\n0,2,3,5\n0,2,3,5\n0,2,3,5\n0,2,3,5\n0,2,3,5\n";
        // columns given as (-,-), (-,+), (+,-), (+,+)
        let sidecar = FactorialSidecar {
            k: 2,
            r: 2,
            column_order: Some(vec![vec![-1, -1], vec![-1, 1], vec![1, -1], vec![1, 1]]),
        };
        let ft = read_factorial_table_from(csv.as_bytes(), &sidecar).unwrap();
        assert_eq!(ft.cell_means(), vec![5.0, 3.0, 2.0, 0.0]);
        let canonical = FactorialSidecar { k: 2, r: 2, column_order: None };
        assert_eq!(
            read_factorial_table_from(csv.as_bytes(), &canonical).unwrap().cell_means(),
            vec![0.0, 2.0, 3.0, 5.0]
        );
    }

    #[test]
    fn variance_rows_round_trip_exactly() {
        let d = ObservedData::new(vec![0.1, 0.7, 1.0 / 3.0, 2.2, -0.9], vec![1, 0, 1, 0, 1]).unwrap();
        let d2 = ObservedData::new(vec![0.1, 0.7, 1.0 / 3.0, 2.2, -0.9, 4.4], vec![1, 0, 1, 0, 1, 0]).unwrap();
        let rows = vec![crate::estimators::variance_report(&d2).unwrap()];
        let mut buf = Vec::new();
        write_variance_reports(&mut buf, &rows).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with(VARIANCE_REPORT_HEADER));
        assert_eq!(read_variance_reports(buf.as_slice()).unwrap(), rows);
        let mut obuf = Vec::new();
        write_observed(&mut obuf, &d).unwrap();
        assert_eq!(read_observed_from(obuf.as_slice()).unwrap(), d);
    }
}
