use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use satqkd::adversary::IrudParams;
use satqkd::cli::{self, SweepMode, SweepRequest, THREADS_ENV};
use satqkd::{ProtocolKind, Scenario, ScenarioConfig, ScenarioPreset};

#[derive(Parser)]
#[command(name = "satqkd", version, about = "Satellite QKD link and key-rate simulator")]
struct Cli {
    /// TOML scenario file; its keys override the chosen preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,

    /// Information per two-photon conclusive copy in the SARG04 attack.
    #[arg(long, global = true)]
    i2: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long, default_value = "downlink")]
    scenario: String,
}

#[derive(Subcommand)]
enum Command {
    /// Rate and Eve information versus distance, as CSV.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// `all` or comma-separated: bb84, sarg04, bb84-decoy, sarg04-decoy.
        #[arg(long, default_value = "all")]
        protocol: String,
        #[arg(long)]
        lmin: Option<f64>,
        #[arg(long)]
        lmax: Option<f64>,
        #[arg(long, default_value_t = 10.0)]
        step: f64,
        /// `optimized` or `fixed-mu`.
        #[arg(long, default_value = "optimized")]
        mode: String,
        /// Pinned signal intensity for fixed-mu mode.
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        pulse_rate_hz: Option<f64>,
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
    },
    /// Critical distances and maximum rates next to the reference values.
    Tables,
    /// Loss at which Eve's information reaches one.
    Crossing,
    /// Largest secure distance for one scenario and protocol.
    CriticalDistance {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "bb84")]
        protocol: String,
    },
}

fn scenario(name: &str, config: Option<&PathBuf>) -> satqkd::Result<Scenario> {
    let preset = ScenarioPreset::from_name(name)?;
    match config {
        Some(path) => {
            let mut c = ScenarioConfig::load(path)?;
            c.base.get_or_insert_with(|| preset.name().to_string());
            c.resolve()
        }
        None => Ok(preset.scenario()),
    }
}

fn run(args: Cli) -> satqkd::Result<()> {
    if let Some(n) = args.threads {
        std::env::set_var(THREADS_ENV, n.to_string());
    }
    cli::init_thread_pool()?;
    let mut irud = IrudParams::default();
    if let Some(i2) = args.i2 {
        irud.i2 = i2;
    }
    match args.command {
        Command::Sweep {
            scenario: s,
            protocol,
            lmin,
            lmax,
            step,
            mode,
            mu,
            pulse_rate_hz,
            out,
        } => {
            let mut sc = scenario(&s.scenario, args.config.as_ref())?;
            if let Some(v) = lmin {
                sc.distance_min_km = v;
            }
            if let Some(v) = lmax {
                sc.distance_max_km = v;
            }
            let mut req = SweepRequest::new(sc, cli::parse_protocols(&protocol)?);
            req.mode = SweepMode::from_name(&mode)?;
            req.mu = mu;
            req.step_km = step;
            req.pulse_rate_hz = pulse_rate_hz;
            req.irud = irud;
            cli::cmd_sweep(&req, &out)?;
        }
        Command::Tables => print!("{}", cli::cmd_tables(&irud)?),
        Command::Crossing => print!("{}", cli::cmd_crossing(&irud)?),
        Command::CriticalDistance { scenario: s, protocol } => {
            let sc = scenario(&s.scenario, args.config.as_ref())?;
            println!("{}", cli::cmd_critical_distance(&sc, ProtocolKind::from_name(&protocol)?, &irud)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
