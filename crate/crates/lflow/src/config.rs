//! Run configuration: defaults, presets, `key=value` config files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lflow_core::catalog::SamplePlan;
use lflow_core::dynamics::{ComplexWindow, EscapeMode, EscapeParams};

use crate::error::{Error, Result};
use crate::formats::format_f64;

pub const DEFAULT_MASTER_SEED: u64 = 20_101_231;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub catalog_path: Option<PathBuf>,
    pub bad_prime: u64,
    pub conductor_lo: u64,
    pub conductor_hi: u64,
    pub sample_size: usize,
    /// Conductor bins for sampling; 0 means one bin per sampled class.
    pub strata: usize,
    /// Number of Dirichlet coefficients `M`.
    pub num_coefficients: usize,
    pub window: ComplexWindow,
    pub n_seeds: u64,
    pub radius: f64,
    pub max_iter: u32,
    pub escape_mode: EscapeMode,
    pub master_seed: u64,
    pub alpha: f64,
    /// Use the exponentially smoothed `L(1)` sum instead of the plain truncation.
    pub smoothed: bool,
    pub output_dir: PathBuf,
    pub cache_dir: PathBuf,
    /// 0 = one thread per available core.
    pub threads: usize,
    pub width: usize,
    pub height: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            catalog_path: None,
            bad_prime: 3,
            conductor_lo: 11,
            conductor_hi: 1000,
            sample_size: 30,
            strata: 0,
            num_coefficients: 1000,
            window: ComplexWindow::DEFAULT,
            n_seeds: 25_000,
            radius: 100_000.0,
            max_iter: 10,
            escape_mode: EscapeMode::FirstCrossing,
            master_seed: DEFAULT_MASTER_SEED,
            alpha: 0.001,
            smoothed: false,
            output_dir: PathBuf::from("lflow-out"),
            cache_dir: PathBuf::from("an-cache"),
            threads: 0,
            width: 600,
            height: 1200,
        }
    }
}

pub const PRESETS: [&str; 4] = ["sample1", "sample2", "sample3", "smoke"];

const KEYS: [&str; 21] = [
    "catalog",
    "bad_prime",
    "conductor_lo",
    "conductor_hi",
    "size",
    "strata",
    "m",
    "window",
    "n_seeds",
    "radius",
    "max_iter",
    "escape_mode",
    "master_seed",
    "alpha",
    "smoothed",
    "output_dir",
    "cache_dir",
    "threads",
    "width",
    "height",
    "preset",
];

impl RunConfig {
    pub fn preset(name: &str) -> Result<RunConfig> {
        let mut c = RunConfig::default();
        c.apply_preset(name)?;
        Ok(c)
    }

    /// Overwrite the sampling-scale fields with a named preset.
    pub fn apply_preset(&mut self, name: &str) -> Result<()> {
        let (size, hi, seeds) = match name {
            "sample1" => (30, 1000, 25_000),
            "sample2" => (70, 10_000, 25_000),
            "sample3" => (325, 60_000, 25_000),
            "smoke" => (3, 1000, 100),
            _ => return Err(Error::Config(format!("unknown preset {name:?} (expected one of {})", PRESETS.join(", ")))),
        };
        self.sample_size = size;
        self.conductor_lo = 11;
        self.conductor_hi = hi;
        self.n_seeds = seeds;
        if name == "smoke" {
            self.num_coefficients = 200;
        }
        Ok(())
    }

    /// Set one field from its textual form, as used in config files.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
        }
        match key {
            "catalog" => self.catalog_path = Some(PathBuf::from(value)),
            "bad_prime" => self.bad_prime = num(key, value)?,
            "conductor_lo" => self.conductor_lo = num(key, value)?,
            "conductor_hi" => self.conductor_hi = num(key, value)?,
            "size" => self.sample_size = num(key, value)?,
            "strata" => self.strata = num(key, value)?,
            "m" => self.num_coefficients = num(key, value)?,
            "window" => self.window = parse_window(value)?,
            "n_seeds" => self.n_seeds = num(key, value)?,
            "radius" => self.radius = num(key, value)?,
            "max_iter" => self.max_iter = num(key, value)?,
            "escape_mode" => self.escape_mode = parse_escape_mode(value)?,
            "master_seed" => self.master_seed = num(key, value)?,
            "alpha" => self.alpha = num(key, value)?,
            "smoothed" => self.smoothed = num(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "cache_dir" => self.cache_dir = PathBuf::from(value),
            "threads" => self.threads = num(key, value)?,
            "width" => self.width = num(key, value)?,
            "height" => self.height = num(key, value)?,
            "preset" => self.apply_preset(value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Apply a `key=value` config file. A `preset` line is applied before
    /// the other keys regardless of position.
    pub fn apply_config_text(&mut self, text: &str) -> Result<()> {
        let mut pairs = parse_config_pairs(text)?;
        pairs.sort_by_key(|(k, _)| k != "preset");
        for (k, v) in pairs {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    /// Layer the configuration sources, lowest precedence first: defaults,
    /// preset (the flag wins over a config-file `preset` line), config file,
    /// environment, flags.
    pub fn resolve(
        preset: Option<&str>,
        config_text: Option<&str>,
        env: &[(&str, String)],
        flags: &[(&str, String)],
    ) -> Result<RunConfig> {
        let file_pairs = config_text.map(parse_config_pairs).transpose()?.unwrap_or_default();
        let file_preset = file_pairs.iter().find(|(k, _)| k == "preset").map(|(_, v)| v.as_str());
        let mut c = RunConfig::default();
        if let Some(name) = preset.or(file_preset) {
            c.apply_preset(name)?;
        }
        for (k, v) in file_pairs.iter().filter(|(k, _)| k != "preset") {
            c.set(k, v)?;
        }
        for (k, v) in env.iter().chain(flags) {
            c.set(k, v)?;
        }
        Ok(c)
    }

    pub fn apply_config_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        self.apply_config_text(&text)
    }

    pub fn escape_params(&self) -> EscapeParams {
        EscapeParams { radius: self.radius, max_iter: self.max_iter, mode: self.escape_mode }
    }

    pub fn sample_plan(&self) -> SamplePlan {
        SamplePlan {
            bad_prime: self.bad_prime,
            conductor_lo: self.conductor_lo,
            conductor_hi: self.conductor_hi,
            sample_size: self.sample_size,
            strata: self.strata,
            master_seed: self.master_seed,
        }
    }

    /// Every field as `key=value`, in a form [`RunConfig::apply_config_text`] accepts.
    pub fn to_config_text(&self) -> String {
        let w = &self.window;
        let mut out = String::new();
        if let Some(p) = &self.catalog_path {
            writeln!(out, "catalog={}", p.display()).unwrap();
        }
        let lines: [(&str, String); 19] = [
            ("bad_prime", self.bad_prime.to_string()),
            ("conductor_lo", self.conductor_lo.to_string()),
            ("conductor_hi", self.conductor_hi.to_string()),
            ("size", self.sample_size.to_string()),
            ("strata", self.strata.to_string()),
            ("m", self.num_coefficients.to_string()),
            (
                "window",
                format!("{},{},{},{}", format_f64(w.re_min), format_f64(w.re_max), format_f64(w.im_min), format_f64(w.im_max)),
            ),
            ("n_seeds", self.n_seeds.to_string()),
            ("radius", format_f64(self.radius)),
            ("max_iter", self.max_iter.to_string()),
            ("escape_mode", escape_mode_name(self.escape_mode).to_string()),
            ("master_seed", self.master_seed.to_string()),
            ("alpha", format_f64(self.alpha)),
            ("smoothed", self.smoothed.to_string()),
            ("output_dir", self.output_dir.display().to_string()),
            ("cache_dir", self.cache_dir.display().to_string()),
            ("threads", self.threads.to_string()),
            ("width", self.width.to_string()),
            ("height", self.height.to_string()),
        ];
        for (k, v) in lines {
            writeln!(out, "{k}={v}").unwrap();
        }
        out
    }
}

/// `key=value` lines; blank lines and lines starting with `#` are skipped.
pub fn parse_config_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(Error::Config(format!("line {}: unknown key {k:?}", i + 1)));
        }
        pairs.push((k.to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

/// `re_min,re_max,im_min,im_max`.
pub fn parse_window(s: &str) -> Result<ComplexWindow> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("window: cannot parse {s:?}")))?;
    match parts[..] {
        [a, b, c, d] => ComplexWindow::new(a, b, c, d).map_err(|e| Error::Config(format!("window: {e}"))),
        _ => Err(Error::Config("window needs four comma-separated numbers re_min,re_max,im_min,im_max".into())),
    }
}

pub fn parse_escape_mode(s: &str) -> Result<EscapeMode> {
    match s {
        "first" | "first-crossing" => Ok(EscapeMode::FirstCrossing),
        "final" => Ok(EscapeMode::Final),
        _ => Err(Error::Config(format!("escape_mode: expected first or final, got {s:?}"))),
    }
}

pub fn escape_mode_name(m: EscapeMode) -> &'static str {
    match m {
        EscapeMode::FirstCrossing => "first",
        EscapeMode::Final => "final",
    }
}
