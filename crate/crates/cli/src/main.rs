use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kerrnoise_cli::commands::{self, Context};
use kerrnoise_cli::config::{parse_axis, Axis, RunConfig};
use kerrnoise_cli::CliError;

#[derive(Parser)]
#[command(name = "kerrnoise", version, about = "Noise-driven Kerr oscillator: steady states, photon statistics, spectra")]
struct Cli {
    /// TOML run configuration
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Bundled configuration
    #[arg(long, global = true, value_parser = ["paper_fig1", "paper_fig3"])]
    preset: Option<String>,

    /// Output directory (overrides output.dir)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Also write SVG figures
    #[arg(long, global = true)]
    plot: bool,

    /// Worker threads for sweeps
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    /// Assert that no random numbers are used (always true)
    #[arg(long, global = true)]
    seedless: bool,

    /// Override oscillator.omega
    #[arg(long, global = true)]
    omega: Option<f64>,

    /// Override oscillator.chi
    #[arg(long, global = true)]
    chi: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral functions, bath correlation and memory time
    NoiseShow,
    /// Steady-state populations, g2(0) and currents
    Ness,
    /// g2(0) and currents over a (chi, omega) grid
    Sweep {
        /// min:max:points, log spaced
        #[arg(long = "chi-range", value_parser = parse_axis)]
        chi_range: Option<Axis>,
        /// min:max:points, log spaced
        #[arg(long = "omega-range", value_parser = parse_axis)]
        omega_range: Option<Axis>,
    },
    /// Intensity correlation g2(tau)
    G2tau {
        #[arg(long)]
        tau_max: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Emission spectrum with sum rule and peaks
    Spectrum {
        #[arg(long)]
        lo: Option<f64>,
        #[arg(long)]
        hi: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Reduced equations against the dense Liouvillian
    OracleCheck {
        #[arg(long)]
        n_max: Option<usize>,
    },
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match (&cli.config, &cli.preset) {
        (Some(path), _) => RunConfig::from_path(path)?,
        (None, Some(name)) => RunConfig::preset(name)?,
        (None, None) => return Err(CliError::Config("one of --config or --preset is required".into())),
    };
    if let Some(w) = cli.omega {
        cfg.oscillator.omega = w;
    }
    if let Some(c) = cli.chi {
        cfg.oscillator.chi = c;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.seedless {
        log::info!("seedless run: no random numbers are drawn anywhere in this program");
    }
    let cfg = load(&cli)?;
    let ctx = Context::new(cfg, cli.out.clone(), cli.plot, cli.threads)?;
    match cli.command {
        Command::NoiseShow => commands::noise_show(&ctx)?,
        Command::Ness => commands::ness(&ctx)?,
        Command::Sweep { chi_range, omega_range } => commands::sweep(&ctx, chi_range, omega_range)?,
        Command::G2tau { tau_max, steps } => commands::g2tau(&ctx, tau_max, steps)?,
        Command::Spectrum { lo, hi, points } => commands::spectrum_cmd(&ctx, lo, hi, points)?,
        Command::OracleCheck { n_max } => commands::oracle_check(&ctx, n_max)?,
    };
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
