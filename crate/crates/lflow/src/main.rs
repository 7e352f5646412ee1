use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use lflow::pipeline::{self, MapSelector};
use lflow::RunConfig;

#[derive(Parser)]
#[command(name = "lflow", version, about = "Escape rates of truncated elliptic-curve L-series and their rank correlation with L(1)")]
struct Cli {
    #[command(flatten)]
    run: RunArgs,
    #[command(subcommand)]
    command: Command,
}

/// Flags mirroring the run configuration. Precedence: flag, then
/// environment, then `--config` file, then `--preset`, then defaults.
#[derive(Args)]
struct RunArgs {
    /// `key=value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// sample1, sample2, sample3 or smoke.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Cremona-format curve catalog [env: LFLOW_CATALOG].
    #[arg(long, global = true)]
    catalog: Option<String>,
    /// Coefficient cache directory [env: LFLOW_CACHE].
    #[arg(long, global = true)]
    cache_dir: Option<String>,
    #[arg(long, global = true)]
    bad_prime: Option<String>,
    #[arg(long, global = true)]
    conductor_lo: Option<String>,
    #[arg(long, global = true)]
    conductor_hi: Option<String>,
    /// Number of isogeny classes to sample.
    #[arg(long, global = true)]
    size: Option<String>,
    /// Conductor bins used for sampling (0 = sample size).
    #[arg(long, global = true)]
    strata: Option<String>,
    /// Number of Dirichlet coefficients M.
    #[arg(short = 'm', long = "num-coefficients", global = true)]
    m: Option<String>,
    /// re_min,re_max,im_min,im_max
    #[arg(long, global = true, allow_hyphen_values = true)]
    window: Option<String>,
    #[arg(long, global = true)]
    n_seeds: Option<String>,
    /// Escape radius R.
    #[arg(long, global = true)]
    radius: Option<String>,
    /// Iteration cap K.
    #[arg(long, global = true)]
    max_iter: Option<String>,
    /// `first` (first crossing of R) or `final` (test only z_K).
    #[arg(long, global = true)]
    escape_mode: Option<String>,
    #[arg(long, global = true)]
    master_seed: Option<String>,
    #[arg(long, global = true)]
    alpha: Option<String>,
    /// Use the smoothed L(1) sum.
    #[arg(long, global = true)]
    smoothed: bool,
    #[arg(long, global = true)]
    output_dir: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<String>,
    #[arg(long, global = true)]
    width: Option<String>,
    #[arg(long, global = true)]
    height: Option<String>,
}

impl RunArgs {
    fn flag_pairs(&self) -> Vec<(&'static str, String)> {
        let opts = [
            ("catalog", &self.catalog),
            ("cache_dir", &self.cache_dir),
            ("bad_prime", &self.bad_prime),
            ("conductor_lo", &self.conductor_lo),
            ("conductor_hi", &self.conductor_hi),
            ("size", &self.size),
            ("strata", &self.strata),
            ("m", &self.m),
            ("window", &self.window),
            ("n_seeds", &self.n_seeds),
            ("radius", &self.radius),
            ("max_iter", &self.max_iter),
            ("escape_mode", &self.escape_mode),
            ("master_seed", &self.master_seed),
            ("alpha", &self.alpha),
            ("output_dir", &self.output_dir),
            ("threads", &self.threads),
            ("width", &self.width),
            ("height", &self.height),
        ];
        let mut pairs: Vec<_> = opts.into_iter().filter_map(|(k, v)| v.clone().map(|v| (k, v))).collect();
        if self.smoothed {
            pairs.push(("smoothed", "true".into()));
        }
        pairs
    }

    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let text = match &self.config {
            Some(p) => Some(fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?),
            None => None,
        };
        let env: Vec<(&str, String)> = [("catalog", "LFLOW_CATALOG"), ("cache_dir", "LFLOW_CACHE")]
            .into_iter()
            .filter_map(|(k, var)| std::env::var(var).ok().filter(|v| !v.is_empty()).map(|v| (k, v)))
            .collect();
        Ok(RunConfig::resolve(self.preset.as_deref(), text.as_deref(), &env, &self.flag_pairs())?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Draw a stratified sample of eligible isogeny classes and write its manifest.
    Sample {
        /// Manifest path (default: stdout).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Print (and cache) the Dirichlet coefficients a_1..a_M of a curve.
    Coeffs {
        label: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Measure L(1) and the escape rate for every curve in a manifest.
    Observe {
        manifest: PathBuf,
        /// CSV path (default: stdout).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Spearman rank test between the l1 and tau columns of an observations CSV.
    Correlate {
        observations: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Render an escape-time image: <label>, nonic:<label>, exp:<lambda> or zeta.
    Render {
        selector: String,
        #[arg(short, long, default_value = "render.pgm")]
        out: PathBuf,
    },
    /// Print the formal-group coefficients and nonic polynomial of a curve.
    Nonic {
        label: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run sample, observe and correlate into the output directory.
    Reproduce,
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(path) => pipeline::write_atomic(path, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = cli.run.resolve()?;
    match cli.command {
        Command::Sample { out } => {
            let catalog = pipeline::load_catalog(&config)?;
            let sample = pipeline::cmd_sample(&config, &catalog)?;
            eprintln!("eligible classes: {}", sample.eligible);
            emit(out.as_deref(), sample.manifest().as_bytes())?;
        }
        Command::Coeffs { label, out } => {
            let catalog = pipeline::load_catalog(&config)?;
            emit(out.as_deref(), pipeline::cmd_coeffs(&config, &catalog, &label)?.as_bytes())?;
        }
        Command::Observe { manifest, out } => {
            let catalog = pipeline::load_catalog(&config)?;
            let text = fs::read_to_string(&manifest).with_context(|| format!("reading {}", manifest.display()))?;
            emit(out.as_deref(), pipeline::cmd_observe(&config, &catalog, &text)?.as_bytes())?;
        }
        Command::Correlate { observations, out } => {
            let csv = fs::read_to_string(&observations).with_context(|| format!("reading {}", observations.display()))?;
            emit(out.as_deref(), pipeline::cmd_correlate(&csv, config.alpha)?.as_bytes())?;
        }
        Command::Render { selector, out } => {
            let selector: MapSelector = selector.parse()?;
            let catalog = match selector {
                MapSelector::Curve(_) | MapSelector::Nonic(_) => pipeline::load_catalog(&config)?,
                _ => Vec::new(),
            };
            emit(Some(&out), &pipeline::cmd_render(&config, &catalog, &selector)?)?;
        }
        Command::Nonic { label, out } => {
            let catalog = pipeline::load_catalog(&config)?;
            emit(out.as_deref(), pipeline::cmd_nonic(&catalog, &label)?.as_bytes())?;
        }
        Command::Reproduce => {
            let outcome = pipeline::cmd_reproduce(&config)?;
            print!("{}", outcome.correlation.text());
            eprintln!("artifacts in {} ({:.1} s)", outcome.dir.display(), outcome.wall_seconds);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lflow: {e:#}");
            ExitCode::FAILURE
        }
    }
}
