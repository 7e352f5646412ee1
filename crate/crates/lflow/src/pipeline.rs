//! The experiment commands. Each `cmd_*` function returns the bytes it
//! would emit, so callers decide where they go.

use std::collections::HashMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::ThreadPool;

use lflow_core::catalog::{eligible_classes, parse_catalog, select_sample, CurveRecord, Label};
use lflow_core::dynamics::{EscapeField, MapSpec};
use lflow_core::formal::{formal_group_coefficients, nonic_integer_coefficients, nonic_polynomial, FormalExpansion};
use lflow_core::lseries::{build_an_table, l_at_one, l_at_one_smoothed, AnTable};
use lflow_core::stats::{correlation_report, critical_rs, CorrelationReport, Sides};
use lflow_core::Complex64;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::formats::{
    an_table_text, format_f64, manifest_text, observations_csv, parse_an_header, parse_an_table, parse_manifest,
    parse_observations, pgm_bytes, report_text, ObservationRow,
};
use crate::parallel;

pub fn read_catalog(path: &Path) -> Result<Vec<CurveRecord>> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    Ok(parse_catalog(&text)?)
}

/// The catalog named by the config, or [`Error::NoCatalog`].
pub fn load_catalog(config: &RunConfig) -> Result<Vec<CurveRecord>> {
    let path = config.catalog_path.as_deref().ok_or(Error::NoCatalog)?;
    read_catalog(path)
}

/// Label lookup over a parsed catalog.
pub struct CatalogIndex<'a> {
    by_label: HashMap<String, &'a CurveRecord>,
}

impl<'a> CatalogIndex<'a> {
    pub fn new(catalog: &'a [CurveRecord]) -> Self {
        CatalogIndex { by_label: catalog.iter().map(|r| (r.label().to_string(), r)).collect() }
    }

    pub fn get(&self, label: &str) -> Result<&'a CurveRecord> {
        self.by_label
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleOutcome {
    pub eligible: usize,
    pub records: Vec<CurveRecord>,
}

impl SampleOutcome {
    pub fn manifest(&self) -> String {
        manifest_text(&self.records)
    }
}

pub fn cmd_sample(config: &RunConfig, catalog: &[CurveRecord]) -> Result<SampleOutcome> {
    let plan = config.sample_plan();
    let eligible = eligible_classes(&plan, catalog).len();
    let records = select_sample(&plan, catalog)?;
    Ok(SampleOutcome { eligible, records })
}

pub fn cache_path(cache_dir: &Path, label: &str, len: usize) -> PathBuf {
    cache_dir.join(format!("{label}.M{len}.an"))
}

/// Coefficient table through the on-disk cache. An entry whose header does
/// not match `(label, N, M)` is rebuilt; a matching header over a damaged
/// body is an error.
pub fn coefficient_table(cache_dir: &Path, record: &CurveRecord, len: usize) -> Result<AnTable> {
    let label = record.label().to_string();
    let path = cache_path(cache_dir, &label, len);
    if let Ok(text) = fs::read_to_string(&path) {
        let header = text.lines().next().and_then(parse_an_header);
        if header.is_some_and(|h| h.label == label && h.conductor == record.conductor && h.len == len) {
            return parse_an_table(&text).map_err(|reason| Error::CacheCorrupt { path, reason });
        }
    }
    let table = build_an_table(label, &record.a_invariants, record.conductor, len)?;
    write_atomic(&path, an_table_text(&table).as_bytes())?;
    Ok(table)
}

/// Write through a temporary sibling and rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(Error::io(dir))?;
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(Error::io(&tmp))?;
    f.write_all(bytes).map_err(Error::io(&tmp))?;
    drop(f);
    fs::rename(&tmp, path).map_err(Error::io(path))
}

pub fn cmd_coeffs(config: &RunConfig, catalog: &[CurveRecord], label: &str) -> Result<String> {
    let record = CatalogIndex::new(catalog).get(label)?;
    Ok(an_table_text(&coefficient_table(&config.cache_dir, record, config.num_coefficients)?))
}

fn l_value(config: &RunConfig, table: &AnTable) -> Result<f64> {
    if config.smoothed {
        Ok(l_at_one_smoothed(table))
    } else {
        Ok(l_at_one(table)?)
    }
}

/// One observation row per record, in the given order.
pub fn observe_records(config: &RunConfig, records: &[&CurveRecord], pool: &ThreadPool) -> Result<Vec<ObservationRow>> {
    let params = config.escape_params();
    records
        .iter()
        .map(|record| {
            let table = coefficient_table(&config.cache_dir, record, config.num_coefficients)?;
            let l1 = l_value(config, &table)?;
            let spec = MapSpec::dirichlet(&table);
            let est = parallel::estimate_escape_rate(pool, &spec, &config.window, config.n_seeds, &params, config.master_seed)?;
            Ok(ObservationRow {
                label: table.label.clone(),
                conductor: record.conductor,
                l_at_one: l1,
                tau: est.tau,
                survivors: est.survivors,
            })
        })
        .collect()
}

pub fn observe_labels(config: &RunConfig, catalog: &[CurveRecord], labels: &[Label]) -> Result<Vec<ObservationRow>> {
    let index = CatalogIndex::new(catalog);
    let records = labels
        .iter()
        .map(|l| index.get(&l.to_string()))
        .collect::<Result<Vec<_>>>()?;
    let pool = parallel::thread_pool(config.threads)?;
    observe_records(config, &records, &pool)
}

/// Observations CSV for the labels in a manifest.
pub fn cmd_observe(config: &RunConfig, catalog: &[CurveRecord], manifest: &str) -> Result<String> {
    let labels = parse_manifest(manifest)?;
    let rows = observe_labels(config, catalog, &labels)?;
    Ok(observations_csv(&rows, config.max_iter))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelateOutcome {
    pub report: CorrelationReport,
    pub excluded_inf: usize,
    pub critical_two_sided: f64,
}

impl CorrelateOutcome {
    pub fn text(&self) -> String {
        report_text(&self.report, self.excluded_inf, self.critical_two_sided)
    }
}

/// Spearman test of `l1` against `tau`, leaving out rows with `tau = inf`.
pub fn correlate_rows(rows: &[ObservationRow], alpha: f64) -> Result<CorrelateOutcome> {
    let (finite, infinite): (Vec<_>, Vec<_>) = rows.iter().partition(|r| r.tau.is_finite());
    if finite.len() < 3 {
        return Err(Error::TooFewRows { usable: finite.len(), excluded: infinite.len() });
    }
    let l1: Vec<f64> = finite.iter().map(|r| r.l_at_one).collect();
    let tau: Vec<f64> = finite.iter().map(|r| r.tau).collect();
    let report = correlation_report(&l1, &tau, alpha)?;
    let critical_two_sided = critical_rs(report.n, alpha, Sides::Two)?;
    Ok(CorrelateOutcome { report, excluded_inf: infinite.len(), critical_two_sided })
}

pub fn cmd_correlate(csv: &str, alpha: f64) -> Result<String> {
    Ok(correlate_rows(&parse_observations(csv)?, alpha)?.text())
}

#[derive(Clone, Debug, PartialEq)]
pub enum MapSelector {
    Curve(String),
    Nonic(String),
    Exp(Complex64),
    Zeta,
}

impl std::str::FromStr for MapSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Selector(s.to_string());
        if s == "zeta" {
            Ok(MapSelector::Zeta)
        } else if let Some(label) = s.strip_prefix("nonic:") {
            label.parse::<Label>().map_err(|_| bad())?;
            Ok(MapSelector::Nonic(label.to_string()))
        } else if let Some(lambda) = s.strip_prefix("exp:") {
            Ok(MapSelector::Exp(parse_complex(lambda).ok_or_else(bad)?))
        } else if s.parse::<Label>().is_ok() {
            Ok(MapSelector::Curve(s.to_string()))
        } else {
            Err(bad())
        }
    }
}

/// `a`, `bi`, `a+bi`, `a-bi` (also `i`, `-i`).
pub fn parse_complex(s: &str) -> Option<Complex64> {
    let s = s.trim();
    let Some(body) = s.strip_suffix('i') else {
        return s.parse().ok().map(|re| Complex64::new(re, 0.0));
    };
    let split = body
        .char_indices()
        .skip(1)
        .filter(|&(i, c)| (c == '+' || c == '-') && !matches!(body.as_bytes()[i - 1], b'e' | b'E'))
        .map(|(i, _)| i)
        .last();
    let (re, im) = match split {
        Some(i) => (body[..i].parse().ok()?, &body[i..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        _ => im.parse().ok()?,
    };
    Some(Complex64::new(re, im))
}

pub fn nonic_expansion(record: &CurveRecord) -> Result<FormalExpansion> {
    Ok(formal_group_coefficients(record.label().to_string(), &record.a_invariants)?)
}

pub fn build_map(config: &RunConfig, catalog: &[CurveRecord], selector: &MapSelector) -> Result<MapSpec> {
    Ok(match selector {
        MapSelector::Zeta => MapSpec::dirichlet(&AnTable::zeta(config.num_coefficients)),
        MapSelector::Exp(lambda) => MapSpec::ScaledExp(*lambda),
        MapSelector::Curve(label) => {
            let record = CatalogIndex::new(catalog).get(label)?;
            MapSpec::dirichlet(&coefficient_table(&config.cache_dir, record, config.num_coefficients)?)
        }
        MapSelector::Nonic(label) => {
            let record = CatalogIndex::new(catalog).get(label)?;
            MapSpec::polynomial(nonic_polynomial(&nonic_expansion(record)?))?
        }
    })
}

pub fn render_field(config: &RunConfig, catalog: &[CurveRecord], selector: &MapSelector) -> Result<EscapeField> {
    let spec = build_map(config, catalog, selector)?;
    let pool = parallel::thread_pool(config.threads)?;
    parallel::escape_time_field(&pool, &spec, &config.window, config.width, config.height, &config.escape_params())
}

/// PGM bytes of the escape-time field for `selector`.
pub fn cmd_render(config: &RunConfig, catalog: &[CurveRecord], selector: &MapSelector) -> Result<Vec<u8>> {
    Ok(pgm_bytes(&render_field(config, catalog, selector)?))
}

pub fn cmd_nonic(catalog: &[CurveRecord], label: &str) -> Result<String> {
    let record = CatalogIndex::new(catalog).get(label)?;
    let e = nonic_expansion(record)?;
    let mut out = format!("label={label}\na_invariants={}\n", record.a_invariants);
    for (i, a) in e.coefficients.iter().enumerate() {
        out += &format!("A{}={a}\n", i + 1);
    }
    let terms: Vec<String> = nonic_integer_coefficients(&e)
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0)
        .map(|(d, c)| format!("{c}*z^{d}"))
        .collect();
    out += &format!("polynomial={}\n", terms.join(" + "));
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ReproduceOutcome {
    pub dir: PathBuf,
    pub sample: SampleOutcome,
    pub rows: Vec<ObservationRow>,
    pub correlation: CorrelateOutcome,
    pub wall_seconds: f64,
}

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const OBSERVATIONS_FILE: &str = "observations.csv";
pub const REPORT_FILE: &str = "report.txt";
pub const SUMMARY_FILE: &str = "summary.txt";

/// sample → observe → correlate into `config.output_dir`.
pub fn cmd_reproduce(config: &RunConfig) -> Result<ReproduceOutcome> {
    let start = Instant::now();
    let catalog = load_catalog(config)?;
    let sample = cmd_sample(config, &catalog)?;
    let dir = config.output_dir.clone();
    fs::create_dir_all(&dir).map_err(Error::io(&dir))?;
    write_atomic(&dir.join(MANIFEST_FILE), sample.manifest().as_bytes())?;

    let pool = parallel::thread_pool(config.threads)?;
    let records: Vec<&CurveRecord> = sample.records.iter().collect();
    let rows = observe_records(config, &records, &pool)?;
    write_atomic(&dir.join(OBSERVATIONS_FILE), observations_csv(&rows, config.max_iter).as_bytes())?;

    let correlation = correlate_rows(&rows, config.alpha)?;
    write_atomic(&dir.join(REPORT_FILE), correlation.text().as_bytes())?;

    let wall_seconds = start.elapsed().as_secs_f64();
    let mut summary = config.to_config_text();
    summary += &format!("eligible_classes={}\n", sample.eligible);
    summary += &format!("sampled={}\n", sample.records.len());
    summary += &format!("r_s={}\n", format_f64(correlation.report.r_s));
    summary += &format!("p_two_sided={}\n", format_f64(correlation.report.p_two_sided));
    summary += &format!("reject_null={}\n", correlation.report.reject_null);
    summary += &format!("wall_seconds={wall_seconds:.3}\n");
    write_atomic(&dir.join(SUMMARY_FILE), summary.as_bytes())?;

    Ok(ReproduceOutcome { dir, sample, rows, correlation, wall_seconds })
}
