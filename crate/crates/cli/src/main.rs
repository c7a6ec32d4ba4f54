use std::error::Error as _;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use robust_capon_core::csv_io::{write_dispersion_table, write_records, write_spectrum};
use robust_capon_core::experiment::{
    run_monte_carlo, spectrum_command, ExperimentConfig, MethodSpec, SpectrumSource, TablePreset,
};
use robust_capon_core::oracle;
use robust_capon_core::BeamformError;

#[derive(Parser)]
#[command(name = "robust-capon", version, about = "Robust Capon beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Master seed; overrides `master_seed` from the config file
    #[arg(long)]
    seed: Option<u64>,
    /// TOML experiment config (defaults to the reference scenario)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Peak-normalized spectrum of one method
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Method, e.g. `capon`, `music`, `dl=0.01`, `udl=3,0.01`, `thr=0.1`
        /// (defaults to the first method of the config)
        #[arg(long)]
        method: Option<String>,
        /// Use the exact covariance instead of snapshots
        #[arg(long, conflicts_with = "averaged")]
        exact_r0: bool,
        /// Average normalized patterns over all trials
        #[arg(long)]
        averaged: bool,
    },
    /// Monte-Carlo run of every method in the config
    Montecarlo {
        #[command(flatten)]
        common: Common,
        /// Also write per-trial patterns (long form) to this path
        #[arg(long)]
        patterns: Option<PathBuf>,
    },
    /// Diagonal-loading dispersion table
    Table1 {
        #[command(flatten)]
        common: Common,
    },
    /// Capon vs UDL dispersion, delta2 = 0.01
    Table2 {
        #[command(flatten)]
        common: Common,
    },
    /// Capon vs UDL dispersion, delta2 = 0.025
    Table3 {
        #[command(flatten)]
        common: Common,
    },
    /// Brute-force property suites
    Oracle {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Small sample sizes for a fast smoke run
        #[arg(long)]
        quick: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the reference config as TOML
    Config,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    let io_of = |c: &(dyn std::error::Error + 'static)| -> Option<io::ErrorKind> {
        if let Some(io) = c.downcast_ref::<io::Error>() {
            return Some(io.kind());
        }
        match c.downcast_ref::<BeamformError>()? {
            BeamformError::Io(io) => Some(io.kind()),
            BeamformError::Csv(csv) => csv.source()?.downcast_ref::<io::Error>().map(|io| io.kind()),
            _ => None,
        }
    };
    e.chain().any(|c| io_of(c) == Some(io::ErrorKind::BrokenPipe))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Spectrum { common, method, exact_r0, averaged } => {
            let config = load_config(&common, default_methods())?;
            let method = match method {
                Some(s) => parse_method(&s)?,
                None => config.methods[0],
            };
            let source = if exact_r0 {
                SpectrumSource::ExactCovariance
            } else if averaged {
                SpectrumSource::Averaged
            } else {
                SpectrumSource::SingleTrial
            };
            let report = spectrum_command(&config, method, source)?;
            write_spectrum(output(common.out.as_deref())?, &report.spectrum, "normalized_value")?;
        }
        Command::Montecarlo { common, patterns } => {
            let config = load_config(&common, default_methods())?;
            let result = run_monte_carlo(&config)?;
            write_dispersion_table(output(common.out.as_deref())?, &result.dispersion_table())?;
            if let Some(path) = patterns {
                let records: Vec<_> = result.methods.iter().flat_map(|m| m.records.iter().cloned()).collect();
                write_records(output(Some(&path))?, &result.grid, &records)?;
            }
            for m in &result.methods {
                if m.failures() > 0 {
                    eprintln!("warning: {} ({}) failed in {} trials", m.spec.name(), m.spec.parameter(), m.failures());
                }
            }
        }
        Command::Table1 { common } => table(TablePreset::Table1, &common)?,
        Command::Table2 { common } => table(TablePreset::Table2, &common)?,
        Command::Table3 { common } => table(TablePreset::Table3, &common)?,
        Command::Oracle { seed, quick, out } => {
            let reports = if quick { oracle::run_quick(seed)? } else { oracle::run_all(seed)? };
            let mut w = output(out.as_deref())?;
            writeln!(w, "suite,cases,worst,tolerance,passed")?;
            for r in &reports {
                writeln!(w, "{},{},{:e},{:e},{}", r.name, r.cases, r.worst, r.tolerance, r.passed())?;
            }
            w.flush()?;
            if reports.iter().any(|r| !r.passed()) {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Config => {
            print!("{}", ExperimentConfig::reference(0, default_methods()).to_toml()?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn table(preset: TablePreset, common: &Common) -> Result<()> {
    let mut config = load_config(common, preset.methods())?;
    config.methods = preset.methods();
    let result = run_monte_carlo(&config)?;
    write_dispersion_table(output(common.out.as_deref())?, &result.dispersion_table())?;
    Ok(())
}

fn default_methods() -> Vec<MethodSpec> {
    vec![
        MethodSpec::Capon,
        MethodSpec::CaponDl { eps: 0.01 },
        MethodSpec::CaponUdl { delta_signal: 3.0, delta_noise: 0.01 },
    ]
}

fn load_config(common: &Common, methods: Vec<MethodSpec>) -> Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ExperimentConfig::from_toml(&text).with_context(|| format!("invalid config {}", path.display()))?
        }
        None => ExperimentConfig::reference(0, methods),
    };
    if let Some(seed) = common.seed {
        config.master_seed = seed;
    }
    if config.methods.is_empty() {
        bail!("config lists no methods");
    }
    config.validate()?;
    Ok(config)
}

fn parse_method(s: &str) -> Result<MethodSpec> {
    let (name, args) = s.split_once('=').unwrap_or((s, ""));
    let nums = args
        .split(',')
        .filter(|a| !a.is_empty())
        .map(|a| a.trim().parse::<f64>().with_context(|| format!("bad number `{a}` in method `{s}`")))
        .collect::<Result<Vec<f64>>>()?;
    let spec = match (name.to_ascii_lowercase().as_str(), nums.as_slice()) {
        ("capon", []) => MethodSpec::Capon,
        ("music", []) => MethodSpec::Music,
        ("dl", [eps]) => MethodSpec::CaponDl { eps: *eps },
        ("udl", [d1, d2]) => MethodSpec::CaponUdl { delta_signal: *d1, delta_noise: *d2 },
        ("thr", [mu]) => MethodSpec::EigThreshold { mu: *mu },
        _ => bail!("unknown method `{s}`; expected capon, music, dl=EPS, udl=D1,D2 or thr=MU"),
    };
    spec.validate()?;
    Ok(spec)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}
