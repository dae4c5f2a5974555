//! Text formats for event logs and parameter sets.
//!
//! Event logs are comma-separated with a dimension comment line:
//!
//! ```text
//! # n_users=3 n_products=2 horizon=10
//! time,user,product
//! 0.25,1,0
//! ```
//!
//! Parameter sets are JSON documents with `mu` as an `N x M` nested array and
//! `alpha` as `N x N` (row = source). Floats are written in shortest round-trip
//! form, so write-then-read reproduces every value bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Event, EventLog, MarkModel, ModelParams};

pub const EVENT_HEADER: &str = "time,user,product";

pub fn format_event_log(log: &EventLog) -> String {
    let mut out = String::with_capacity(32 * (log.len() + 2));
    let _ = writeln!(
        out,
        "# n_users={} n_products={} horizon={}",
        log.n_users(),
        log.n_products(),
        log.horizon()
    );
    out.push_str(EVENT_HEADER);
    out.push('\n');
    for e in log.events() {
        let _ = writeln!(out, "{},{},{}", e.time, e.user, e.product);
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn parse_event_log(text: &str) -> Result<EventLog> {
    let mut dims: Option<(usize, usize, f64)> = None;
    let mut header_seen = false;
    let mut events = Vec::new();
    let mut prev = f64::NEG_INFINITY;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if dims.is_none() && comment.contains("n_users=") {
                dims = Some(parse_dims(comment, line_no)?);
            }
            continue;
        }
        if !header_seen {
            if line.replace(' ', "") != EVENT_HEADER {
                return Err(parse_err(line_no, format!("expected header '{EVENT_HEADER}', found '{line}'")));
            }
            header_seen = true;
            continue;
        }
        let (n, m, horizon) = dims.ok_or_else(|| parse_err(line_no, "missing '# n_users=.. n_products=.. horizon=..' line"))?;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(parse_err(line_no, format!("expected 3 fields, found {}", fields.len())));
        }
        let time: f64 = fields[0]
            .parse()
            .map_err(|_| parse_err(line_no, format!("invalid time '{}'", fields[0])))?;
        let user: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(line_no, format!("invalid user '{}'", fields[1])))?;
        let product: usize = fields[2]
            .parse()
            .map_err(|_| parse_err(line_no, format!("invalid product '{}'", fields[2])))?;
        if !time.is_finite() || time < 0.0 {
            return Err(parse_err(line_no, format!("time {time} must be finite and nonnegative")));
        }
        if time < prev {
            return Err(parse_err(line_no, format!("events not sorted: {time} after {prev}")));
        }
        if time > horizon {
            return Err(parse_err(line_no, format!("time {time} exceeds horizon {horizon}")));
        }
        if user >= n {
            return Err(parse_err(line_no, format!("user {user} out of range (n_users={n})")));
        }
        if product >= m {
            return Err(parse_err(line_no, format!("product {product} out of range (n_products={m})")));
        }
        prev = time;
        events.push(Event::new(time, user, product));
    }
    let (n, m, horizon) = dims.ok_or_else(|| parse_err(1, "missing dimension comment line"))?;
    if !header_seen {
        return Err(parse_err(1, format!("missing header '{EVENT_HEADER}'")));
    }
    EventLog::new(n, m, horizon, events)
}

fn parse_dims(comment: &str, line: usize) -> Result<(usize, usize, f64)> {
    let (mut n, mut m, mut horizon) = (None, None, None);
    for token in comment.split_whitespace() {
        let Some((key, value)) = token.split_once('=') else {
            continue;
        };
        let bad = || parse_err(line, format!("invalid value in '{token}'"));
        match key {
            "n_users" => n = Some(value.parse::<usize>().map_err(|_| bad())?),
            "n_products" => m = Some(value.parse::<usize>().map_err(|_| bad())?),
            "horizon" => horizon = Some(value.parse::<f64>().map_err(|_| bad())?),
            _ => {}
        }
    }
    match (n, m, horizon) {
        (Some(n), Some(m), Some(h)) => Ok((n, m, h)),
        _ => Err(parse_err(line, "dimension line needs n_users, n_products and horizon")),
    }
}

pub fn read_event_log(path: &Path) -> Result<EventLog> {
    parse_event_log(&fs::read_to_string(path)?)
}

pub fn write_event_log(path: &Path, log: &EventLog) -> Result<()> {
    fs::write(path, format_event_log(log))?;
    Ok(())
}

/// On-disk shape of a parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsFile {
    pub n_users: usize,
    pub n_products: usize,
    pub mark_model: MarkModel,
    pub mu: Vec<Vec<f64>>,
    pub alpha: Vec<Vec<f64>>,
}

impl From<&ModelParams> for ParamsFile {
    fn from(p: &ModelParams) -> Self {
        Self {
            n_users: p.n_users(),
            n_products: p.n_products(),
            mark_model: p.mark(),
            mu: p.mu_matrix().chunks(p.n_products()).map(<[f64]>::to_vec).collect(),
            alpha: p.alpha_matrix().chunks(p.n_users()).map(<[f64]>::to_vec).collect(),
        }
    }
}

impl TryFrom<ParamsFile> for ModelParams {
    type Error = Error;

    fn try_from(f: ParamsFile) -> Result<Self> {
        if f.mu.len() != f.n_users || f.mu.iter().any(|r| r.len() != f.n_products) {
            return Err(Error::ShapeMismatch(format!(
                "mu must be {} rows of {} values",
                f.n_users, f.n_products
            )));
        }
        if f.alpha.len() != f.n_users || f.alpha.iter().any(|r| r.len() != f.n_users) {
            return Err(Error::ShapeMismatch(format!(
                "alpha must be {} rows of {} values",
                f.n_users, f.n_users
            )));
        }
        ModelParams::new(
            f.n_users,
            f.n_products,
            f.mu.concat(),
            f.alpha.concat(),
            f.mark_model,
        )
    }
}

pub fn format_params(params: &ModelParams) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&ParamsFile::from(params))?;
    s.push('\n');
    Ok(s)
}

pub fn parse_params(text: &str) -> Result<ModelParams> {
    let file: ParamsFile = serde_json::from_str(text)?;
    ModelParams::try_from(file)
}

pub fn read_params(path: &Path) -> Result<ModelParams> {
    parse_params(&fs::read_to_string(path)?)
}

pub fn write_params(path: &Path, params: &ModelParams) -> Result<()> {
    fs::write(path, format_params(params)?)?;
    Ok(())
}

/// Writes a CSV with a header row. Values are formatted with `{}` (dot decimal,
/// shortest round-trip); `None` becomes an empty field.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<CsvField>]) -> Result<()> {
    fs::write(path, format_csv(header, rows))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum CsvField {
    Text(String),
    Int(usize),
    Num(Option<f64>),
}

impl From<f64> for CsvField {
    fn from(v: f64) -> Self {
        CsvField::Num(Some(v))
    }
}

impl From<Option<f64>> for CsvField {
    fn from(v: Option<f64>) -> Self {
        CsvField::Num(v)
    }
}

impl From<usize> for CsvField {
    fn from(v: usize) -> Self {
        CsvField::Int(v)
    }
}

impl From<&str> for CsvField {
    fn from(v: &str) -> Self {
        CsvField::Text(v.to_string())
    }
}

impl From<String> for CsvField {
    fn from(v: String) -> Self {
        CsvField::Text(v)
    }
}

pub fn format_csv(header: &[&str], rows: &[Vec<CsvField>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .map(|c| match c {
                CsvField::Text(s) => s.clone(),
                CsvField::Int(i) => i.to_string(),
                CsvField::Num(Some(v)) => v.to_string(),
                CsvField::Num(None) => String::new(),
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_log_is_header_only() {
        let log = EventLog::empty(2, 3, 5.0).unwrap();
        let text = format_event_log(&log);
        assert_eq!(text, "# n_users=2 n_products=3 horizon=5\ntime,user,product\n");
        assert_eq!(parse_event_log(&text).unwrap(), log);
    }

    #[test]
    fn unsorted_rows_report_line_number() {
        let text = "# n_users=1 n_products=1 horizon=5\ntime,user,product\n1.0,0,0\n0.5,0,0\n";
        match parse_event_log(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_rows_are_rejected() {
        let head = "# n_users=2 n_products=2 horizon=5\ntime,user,product\n";
        for row in ["1.0,2,0", "1.0,0,2", "x,0,0", "1.0,0", "6.0,0,0", "-1,0,0"] {
            assert!(parse_event_log(&format!("{head}{row}\n")).is_err(), "{row}");
        }
        assert!(parse_event_log("time,user,product\n1,0,0\n").is_err());
        assert!(parse_event_log("# n_users=1 n_products=1 horizon=2\n1,0,0\n").is_err());
    }

    #[test]
    fn silent_dimensions_survive() {
        let log = EventLog::new(10, 4, 3.0, vec![Event::new(1.0, 0, 0)]).unwrap();
        let back = parse_event_log(&format_event_log(&log)).unwrap();
        assert_eq!(back.n_users(), 10);
        assert_eq!(back.n_products(), 4);
    }

    #[test]
    fn params_shape_errors() {
        let text = r#"{"n_users":2,"n_products":1,"mark_model":{"type":"linear"},"mu":[[0.1]],"alpha":[[0,0],[0,0]]}"#;
        assert!(matches!(parse_params(text), Err(Error::ShapeMismatch(_))));
        let text = r#"{"n_users":1,"n_products":1,"mark_model":{"type":"softmax","beta":2.5},"mu":[[-0.1]],"alpha":[[0]]}"#;
        assert!(matches!(parse_params(text), Err(Error::InvalidParams(_))));
        let text = r#"{"n_users":1,"n_products":1,"mark_model":{"type":"softmax","beta":2.5},"mu":[[0.1]],"alpha":[[0]]}"#;
        assert_eq!(parse_params(text).unwrap().mark(), MarkModel::SoftMax { beta: 2.5 });
    }

    #[test]
    fn csv_formatting() {
        let rows = vec![vec![CsvField::from("a"), 1usize.into(), 0.5.into(), None.into()]];
        assert_eq!(format_csv(&["k", "i", "v", "w"], &rows), "k,i,v,w\na,1,0.5,\n");
    }
}
