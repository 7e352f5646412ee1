//! Text and image formats: catalogs, sample manifests, coefficient tables,
//! observation CSVs, PGM renders and correlation reports.

use std::fmt::Write as _;

use lflow_core::catalog::{CurveRecord, Label};
use lflow_core::dynamics::{Escape, EscapeField};
use lflow_core::lseries::AnTable;
use lflow_core::stats::CorrelationReport;

use crate::error::{Error, Result};

/// Shortest decimal that parses back to the same `f64`; infinities are
/// `inf` / `-inf`.
pub fn format_f64(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v:?}")
    }
}

pub fn parse_f64(s: &str) -> Option<f64> {
    match s {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

pub fn serialize_catalog(records: &[CurveRecord]) -> String {
    records.iter().map(|r| format!("{r}\n")).collect()
}

pub fn manifest_text(records: &[CurveRecord]) -> String {
    records.iter().map(|r| format!("{}\n", r.label())).collect()
}

pub fn parse_manifest(text: &str) -> Result<Vec<Label>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse().map_err(|e: lflow_core::catalog::CatalogError| Error::Format {
                what: "manifest",
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

/// Coefficient cache body: `# label=<label> N=<N> M=<M>`, then `n a_n` lines.
pub fn an_table_text(table: &AnTable) -> String {
    let mut out = String::with_capacity(table.len() * 8 + 48);
    writeln!(out, "# label={} N={} M={}", table.label, table.conductor, table.len()).unwrap();
    for (i, a) in table.coefficients.iter().enumerate() {
        writeln!(out, "{} {}", i + 1, a).unwrap();
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnHeader {
    pub label: String,
    pub conductor: u64,
    pub len: usize,
}

pub fn parse_an_header(line: &str) -> Option<AnHeader> {
    let mut fields = line.strip_prefix("# ")?.split(' ');
    let label = fields.next()?.strip_prefix("label=")?.to_string();
    let conductor = fields.next()?.strip_prefix("N=")?.parse().ok()?;
    let len = fields.next()?.strip_prefix("M=")?.parse().ok()?;
    if fields.next().is_some() {
        return None;
    }
    Some(AnHeader { label, conductor, len })
}

/// Parse a coefficient table; the reason string describes the first defect.
pub fn parse_an_table(text: &str) -> std::result::Result<AnTable, String> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .and_then(parse_an_header)
        .ok_or_else(|| "missing or malformed header".to_string())?;
    let mut coefficients = Vec::with_capacity(header.len);
    for (i, line) in lines.enumerate() {
        let n = i + 1;
        let (idx, value) = line
            .split_once(' ')
            .ok_or_else(|| format!("line {}: expected `n a_n`", n + 1))?;
        if idx.parse::<usize>().ok() != Some(n) {
            return Err(format!("line {}: expected index {n}", n + 1));
        }
        coefficients.push(value.parse().map_err(|_| format!("line {}: bad coefficient", n + 1))?);
    }
    if coefficients.len() != header.len {
        return Err(format!("header says M={} but {} coefficients follow", header.len, coefficients.len()));
    }
    if !text.ends_with('\n') {
        return Err("truncated final line".to_string());
    }
    Ok(AnTable::from_coefficients(header.label, header.conductor, coefficients))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservationRow {
    pub label: String,
    pub conductor: u64,
    pub l_at_one: f64,
    pub tau: f64,
    pub survivors: Vec<u64>,
}

pub fn observations_csv(rows: &[ObservationRow], max_iter: u32) -> String {
    let mut out = String::from("label,conductor,l1,tau");
    for k in 0..=max_iter {
        write!(out, ",s{k}").unwrap();
    }
    out.push('\n');
    for r in rows {
        write!(out, "{},{},{},{}", r.label, r.conductor, format_f64(r.l_at_one), format_f64(r.tau)).unwrap();
        for s in &r.survivors {
            write!(out, ",{s}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_observations(text: &str) -> Result<Vec<ObservationRow>> {
    let err = |line: usize, reason: &str| Error::Format {
        what: "observations",
        line,
        reason: reason.to_string(),
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| err(1, "empty file"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 5 || cols[..4] != ["label", "conductor", "l1", "tau"] {
        return Err(err(1, "expected header label,conductor,l1,tau,s0,..."));
    }
    for (k, c) in cols[4..].iter().enumerate() {
        if *c != format!("s{k}") {
            return Err(err(1, "survivor columns must be s0,s1,..."));
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != cols.len() {
            return Err(err(line_no, "wrong number of fields"));
        }
        rows.push(ObservationRow {
            label: f[0].to_string(),
            conductor: f[1].parse().map_err(|_| err(line_no, "bad conductor"))?,
            l_at_one: parse_f64(f[2]).ok_or_else(|| err(line_no, "bad l1"))?,
            tau: parse_f64(f[3]).ok_or_else(|| err(line_no, "bad tau"))?,
            survivors: f[4..]
                .iter()
                .map(|s| s.parse().map_err(|_| err(line_no, "bad survivor count")))
                .collect::<Result<_>>()?,
        });
    }
    Ok(rows)
}

/// Gray level of one pixel: black for orbits that never escape, otherwise
/// `55 + ⌊200 (K − k)/(K − 1)⌋`, brightest for the earliest escape.
pub fn gray_level(e: Escape, max_iter: u32) -> u8 {
    match e {
        Escape::Never => 0,
        Escape::At(_) if max_iter <= 1 => 255,
        Escape::At(k) => {
            let k = k.min(max_iter);
            (55 + 200 * (max_iter - k) / (max_iter - 1)) as u8
        }
    }
}

/// Binary PGM (P5, maxval 255), rows top to bottom.
pub fn pgm_bytes(field: &EscapeField) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", field.width, field.height).into_bytes();
    out.extend(field.cells.iter().map(|&e| gray_level(e, field.max_iter)));
    out
}

/// Human-readable summary followed by a `key=value` block.
pub fn report_text(report: &CorrelationReport, excluded_inf: usize, critical_two_sided: f64) -> String {
    let mut out = String::new();
    writeln!(out, "Spearman rank correlation between L(1) and escape rate tau").unwrap();
    writeln!(out, "  pairs used:           {} ({} excluded with tau = inf)", report.n, excluded_inf).unwrap();
    writeln!(out, "  r_s:                  {:.6}", report.r_s).unwrap();
    writeln!(out, "  t ({} df):            {:.6}", report.df, report.t_stat).unwrap();
    writeln!(out, "  p (one-sided):        {:.6e}", report.p_one_sided).unwrap();
    writeln!(out, "  p (two-sided):        {:.6e}", report.p_two_sided).unwrap();
    writeln!(out, "  critical |r_s|:       {:.6} (two-sided, alpha = {})", critical_two_sided, report.alpha).unwrap();
    writeln!(
        out,
        "  decision:             {}",
        if report.reject_null { "reject H0 (no rank correlation)" } else { "do not reject H0" }
    )
    .unwrap();
    out.push('\n');
    writeln!(out, "[report]").unwrap();
    for (k, v) in [
        ("n", report.n.to_string()),
        ("excluded_inf", excluded_inf.to_string()),
        ("r_s", format_f64(report.r_s)),
        ("t", format_f64(report.t_stat)),
        ("df", report.df.to_string()),
        ("p_one_sided", format_f64(report.p_one_sided)),
        ("p_two_sided", format_f64(report.p_two_sided)),
        ("alpha", format_f64(report.alpha)),
        ("critical_rs_two_sided", format_f64(critical_two_sided)),
        ("reject_null", report.reject_null.to_string()),
    ] {
        writeln!(out, "{k}={v}").unwrap();
    }
    out
}

/// The `key=value` pairs after `[report]`.
pub fn parse_report_block(text: &str) -> Vec<(String, String)> {
    text.lines()
        .skip_while(|l| l.trim() != "[report]")
        .skip(1)
        .filter_map(|l| l.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
        .collect()
}
