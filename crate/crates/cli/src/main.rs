//! `twospin`: configuration-driven decoherence experiments.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use twospin::config::RunConfig;
use twospin::{runner, Error};

#[derive(Parser)]
#[command(name = "twospin", version, about = "Nuclear-bath decoherence of two exchange-coupled electron spins")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the site table of every bath configuration.
    GenerateBath(Common),
    /// Ensemble-averaged gCCE coherences and decay fits.
    Run(Common),
    /// Fits over the Cartesian product of the [sweep] axes.
    Sweep(Common),
    /// gCCE against the pair-correlation (echo) and Gaussian (FID) closed forms.
    Compare(Common),
    /// Secular hyperfine field and its gradient on a plane.
    FieldMap(Common),
    /// Flip-flop pairs contributing to the echo decay, with an angle histogram.
    PairStats(Common),
    /// Single-pair decoherence f_k and g_k over a (C, E) grid.
    PairMap(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding `simulation.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory, overriding `OUTPUT_DIR` and `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Log progress to stderr.
    #[arg(short, long)]
    verbose: bool,
}

impl Common {
    fn load(&self) -> Result<(RunConfig, PathBuf), Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.simulation.seed = seed;
        }
        let out = self
            .out
            .clone()
            .or_else(|| std::env::var_os("OUTPUT_DIR").map(PathBuf::from))
            .unwrap_or_else(|| cfg.output.dir.clone());
        cfg.output.dir = out.clone();
        Ok((cfg, out))
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidParameter(_) => "invalid_parameter",
        Error::ZeroDistance => "zero_distance",
        Error::Infeasible { .. } => "infeasible",
        Error::Capacity { .. } => "capacity",
        Error::Labeling(_) => "labeling",
        Error::UnsupportedRegime => "unsupported_regime",
        Error::UndefinedNormalization(_) => "undefined_normalization",
        Error::NoDecay { .. } => "no_decay",
        Error::FitFailure(_) => "fit_failure",
        Error::TooManyExclusions { .. } => "too_many_exclusions",
        Error::Parse(_) => "parse",
        Error::Io(_) => "io",
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_usage() {
        2
    } else {
        1
    }
}

fn report(command: &str, e: &Error) -> ExitCode {
    let code = exit_code(e);
    let record = serde_json::json!({
        "command": command,
        "error": error_kind(e),
        "message": e.to_string(),
        "exit_code": code,
    });
    eprintln!("{record}");
    ExitCode::from(code)
}

fn print_files(files: &[PathBuf]) {
    for f in files {
        println!("{}", f.display());
    }
}

fn execute(command: &Command, cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, Error> {
    match command {
        Command::GenerateBath(_) => runner::generate_baths(cfg, out),
        Command::Run(_) => {
            let results = runner::run(cfg)?;
            for r in &results {
                if !r.ensemble.excluded.is_empty() {
                    log::warn!("N = {}: excluded configurations {:?}", r.pulses, r.ensemble.excluded);
                }
            }
            runner::write_run(cfg, &results, out)
        }
        Command::Sweep(_) => {
            let points = runner::sweep(cfg)?;
            let files = runner::write_sweep(&points, out)?;
            let failed: Vec<_> = points.iter().filter(|p| p.results.is_err()).collect();
            if !failed.is_empty() {
                eprintln!("{} of {} sweep points failed:", failed.len(), points.len());
                for p in &failed {
                    let (param, value) = p.labels();
                    if let Err(e) = &p.results {
                        eprintln!("  {param}={value}: {e}");
                    }
                }
            }
            if failed.len() == points.len() {
                let first = points[0].results.as_ref().err();
                return Err(Error::InvalidParameter(format!(
                    "every sweep point failed (first: {})",
                    first.map(|e| e.to_string()).unwrap_or_default()
                )));
            }
            Ok(files)
        }
        Command::Compare(_) => runner::write_compare(&runner::compare(cfg)?, out),
        Command::FieldMap(_) => runner::write_field_map(&runner::field_map(cfg)?, out),
        Command::PairStats(_) => runner::write_pair_stats(&runner::pair_stats(cfg)?, out),
        Command::PairMap(_) => Ok(vec![runner::write_file(out, "pair_map.csv", &runner::pair_map_csv(cfg)?)?]),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::GenerateBath(c) => ("generate-bath", c),
        Command::Run(c) => ("run", c),
        Command::Sweep(c) => ("sweep", c),
        Command::Compare(c) => ("compare", c),
        Command::FieldMap(c) => ("field-map", c),
        Command::PairStats(c) => ("pair-stats", c),
        Command::PairMap(c) => ("pair-map", c),
    };
    let level = if common.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = common.workers {
        if n == 0 {
            return report(name, &Error::InvalidParameter("--workers must be at least 1".into()));
        }
        if let Err(e) = twospin::set_worker_threads(n) {
            return report(name, &e);
        }
    }
    let (cfg, out) = match common.load() {
        Ok(v) => v,
        Err(e) => return report(name, &e),
    };
    match execute(&cli.command, &cfg, &out) {
        Ok(files) => {
            print_files(&files);
            ExitCode::SUCCESS
        }
        Err(e) => report(name, &e),
    }
}
