use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use ddjcs_core::config::ConfigFile;
use ddjcs_core::experiments::{emit_csv, log_beta_grid, run_trial_detailed};
use ddjcs_core::waveform::PulseAmplitude;
use ddjcs_core::{
    resolutions, run_sweep, validate, Case, ComplexGrid, SweepSpec, SystemConfig, TrialOptions, UserScenario,
};

/// Dual-domain joint communication and sensing simulator.
#[derive(Debug, Parser)]
#[command(name = "ddjcs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo sweep over the power split and grid sizes, written as CSV.
    Sweep(SweepArgs),
    /// A single trial, printed as JSON, with optional grid dumps.
    Trial(TrialArgs),
    /// Delay, Doppler, range and velocity resolution per grid size.
    Resolutions(ResolutionArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON file with optional `system` and `scenario` sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Transmit the sensing pulse with unit amplitude instead of a random one.
    #[arg(long)]
    unit_pulse: bool,
    /// Give every echo exactly its mean path gain instead of Rayleigh fading.
    #[arg(long)]
    no_echo_fading: bool,
}

impl Common {
    fn load(&self) -> Result<(SystemConfig, UserScenario)> {
        let (mut system, scenario) = match &self.config {
            Some(path) => {
                let file = ConfigFile::load(path).with_context(|| format!("reading {}", path.display()))?;
                (file.system, file.scenario)
            }
            None => (SystemConfig::default(), UserScenario::default()),
        };
        if let Some(seed) = self.seed {
            system.rng_seed = seed;
        }
        Ok((system, scenario))
    }

    fn options(&self) -> TrialOptions {
        TrialOptions {
            pulse_amplitude: if self.unit_pulse {
                PulseAmplitude::Unit
            } else {
                PulseAmplitude::Random
            },
            echo_fading: !self.no_echo_fading,
            ..TrialOptions::default()
        }
    }
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated grid sizes such as `1024x128,2048x256`.
    #[arg(long, value_delimiter = ',', default_value = "1024x128,2048x256,4096x512")]
    cases: Vec<Case>,
    #[arg(long, default_value_t = -5e-3, allow_hyphen_values = true)]
    beta_min: f64,
    #[arg(long, default_value_t = -1e-4, allow_hyphen_values = true)]
    beta_max: f64,
    #[arg(long, default_value_t = 12)]
    beta_points: usize,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrialArgs {
    #[command(flatten)]
    common: Common,
    /// Grid size; the configured one when omitted.
    #[arg(long)]
    case: Option<Case>,
    #[arg(long, default_value_t = -1e-3, allow_hyphen_values = true)]
    beta: f64,
    /// Trial index within the seed.
    #[arg(long, default_value_t = 0)]
    index: u64,
    /// Transmitted FT grid. `.csv` paths get `|x|^2`, anything else the binary dump.
    #[arg(long)]
    dump_txft: Option<PathBuf>,
    /// Received DD map, same formats as `--dump-txft`.
    #[arg(long)]
    dump_ydd: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ResolutionArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "1024x128,2048x256,4096x512")]
    cases: Vec<Case>,
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let (config, scenario) = args.common.load()?;
    let betas = log_beta_grid(args.beta_min, args.beta_max, args.beta_points)?;
    let spec = SweepSpec {
        betas,
        cases: args.cases.clone(),
        trials: args.trials,
        scenario,
        options: args.common.options(),
    };
    let result = run_sweep(&config, &spec)?;
    for f in &result.failures {
        eprintln!("warning: trial {} at beta {:e}, {} failed: {}", f.trial, f.beta, f.case, f.message);
    }
    match &args.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            emit_csv(&result, BufWriter::new(file))?;
            eprintln!("wrote {} points to {}", result.points.len(), path.display());
        }
        None => emit_csv(&result, io::stdout().lock())?,
    }
    Ok(())
}

fn dump(grid: &ComplexGrid, path: &Path) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        grid.write_power_csv(&mut w)?;
    } else {
        grid.write_binary(&mut w)?;
    }
    w.flush()?;
    Ok(())
}

fn trial(args: &TrialArgs) -> Result<()> {
    let (mut config, scenario) = args.common.load()?;
    if let Some(case) = args.case {
        config = case.apply(&config);
    }
    let artifacts = run_trial_detailed(&config, &scenario, args.beta, args.index, &args.common.options())?;
    if let Some(path) = &args.dump_txft {
        dump(&artifacts.tx_ft, path)?;
    }
    if let Some(path) = &args.dump_ydd {
        dump(&artifacts.y_dd, path)?;
    }
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &artifacts.result)?;
    writeln!(out)?;
    Ok(())
}

fn print_resolutions(args: &ResolutionArgs) -> Result<()> {
    let config = match &args.config {
        Some(path) => ConfigFile::load(path).with_context(|| format!("reading {}", path.display()))?.system,
        None => SystemConfig::default(),
    };
    validate(&config, &UserScenario::empty())?;
    let mut out = io::stdout().lock();
    writeln!(out, "case\tdelta_tau_ns\tdelta_nu_hz\tdelta_r_m\tdelta_v_ms\tmax_r_m\tmax_v_ms")?;
    for case in &args.cases {
        let r = resolutions(&case.apply(&config));
        writeln!(
            out,
            "{case}\t{:.4}\t{:.2}\t{:.4}\t{:.4}\t{:.2}\t{:.2}",
            r.delta_tau_s * 1e9,
            r.delta_nu_hz,
            r.delta_range_m,
            r.delta_velocity_ms,
            r.max_range_m,
            r.max_velocity_ms,
        )?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Sweep(args) => sweep(args),
        Command::Trial(args) => trial(args),
        Command::Resolutions(args) => print_resolutions(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
