use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hfma::scenario::{
    compare, load_config, load_config_str, power_sweep, to_toml, write_csv, write_plot_data, write_summary,
    write_trace_csv, Experiment, Method, RunReport, ScenarioConfig, Timing,
};
use hfma::{Error, Result};

#[derive(Parser)]
#[command(name = "hfma", version, about = "Uplink capacity simulator and rotation optimizer for hybrid fixed/rotatable base-station arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Scenario file (TOML). Without it, `--preset` is used.
    config: Option<PathBuf>,
    /// Built-in preset, used when no config file is given.
    #[arg(long, default_value = "paper-default")]
    preset: String,
    /// Override any key by dotted path, e.g. `--set rf.p0_dbm=10`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct OutputArgs {
    /// Results CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON summary of the full reports.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Leave the runtime column empty so repeated runs are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check a configuration and print its canonical form.
    Validate {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run one method.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// amcmc, esm, scheme1, scheme2, scheme3 or fixed.
        #[arg(long, default_value = "amcmc")]
        method: String,
        /// Degrees, comma separated; required by `--method fixed`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        rotations_deg: Vec<f64>,
        /// Per-iteration AMCMC trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run one method over a list of transmit powers.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        output: OutputArgs,
        #[arg(long, default_value = "amcmc")]
        method: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        rotations_deg: Vec<f64>,
        /// Transmit powers in dBm, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        powers_dbm: Vec<f64>,
        /// Plot-data CSV grouped by method.
        #[arg(long)]
        plot_data: Option<PathBuf>,
    },
    /// Run every applicable method on one scenario.
    Compare {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Transmit powers in dBm; the configured power when absent.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        powers_dbm: Vec<f64>,
        #[arg(long)]
        plot_data: Option<PathBuf>,
    },
}

fn load(args: &ConfigArgs) -> Result<ScenarioConfig> {
    let overrides = args
        .overrides
        .iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::InvalidArgument(format!("override `{kv}` is not KEY=VALUE")))
        })
        .collect::<Result<Vec<_>>>()?;
    match &args.config {
        Some(path) => load_config(path, &overrides),
        None => load_config_str(&format!("preset = {:?}", args.preset), &overrides),
    }
}

fn method(label: &str, rotations_deg: &[f64]) -> Result<Method> {
    if label == "fixed" {
        if rotations_deg.is_empty() {
            return Err(Error::InvalidArgument("--method fixed needs --rotations-deg".into()));
        }
        return Ok(Method::Fixed(rotations_deg.iter().map(|d| d.to_radians()).collect()));
    }
    label.parse()
}

fn watts(dbm: &[f64]) -> Vec<f64> {
    dbm.iter().map(|d| 10f64.powf((d - 30.0) / 10.0)).collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn emit(reports: &[RunReport], output: &OutputArgs) -> Result<()> {
    let timing = if output.no_timing { Timing::Omit } else { Timing::Record };
    match &output.out {
        Some(path) => write_csv(reports, create(path)?, timing)?,
        None => write_csv(reports, io::stdout().lock(), timing)?,
    }
    if let Some(path) = &output.summary {
        let mut reports = reports.to_vec();
        if output.no_timing {
            reports.iter_mut().for_each(|r| r.runtime_s = 0.0);
        }
        write_summary(&reports, create(path)?)?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { config } => {
            let sc = load(&config)?;
            let mut out = io::stdout().lock();
            out.write_all(to_toml(&sc).as_bytes())?;
        }
        Command::Run {
            config,
            output,
            method: label,
            rotations_deg,
            trace,
        } => {
            let sc = load(&config)?;
            let m = method(&label, &rotations_deg)?;
            let report = Experiment::new(sc)?.run(&m)?;
            if let Some(path) = trace {
                write_trace_csv(&report.trace, create(&path)?)?;
            }
            emit(&[report], &output)?;
        }
        Command::Sweep {
            config,
            output,
            method: label,
            rotations_deg,
            powers_dbm,
            plot_data,
        } => {
            let sc = load(&config)?;
            let m = method(&label, &rotations_deg)?;
            let reports = power_sweep(&sc, &m, &watts(&powers_dbm))?;
            if let Some(path) = plot_data {
                write_plot_data(&reports, create(&path)?)?;
            }
            emit(&reports, &output)?;
        }
        Command::Compare {
            config,
            output,
            powers_dbm,
            plot_data,
        } => {
            let sc = load(&config)?;
            let powers = watts(&powers_dbm);
            let reports = compare(&sc, (!powers.is_empty()).then_some(powers.as_slice()))?;
            if let Some(path) = plot_data {
                write_plot_data(&reports, create(&path)?)?;
            }
            emit(&reports, &output)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
