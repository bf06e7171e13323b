use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use sampled_modal::decay::{DecayModel, FitWindow};
use sampled_modal_cli::pipeline::fit_row;
use sampled_modal_cli::report::read_trajectory;
use sampled_modal_cli::{run_pipeline, CliError, Config, OutputSink, Overrides, Request, RunReport, WAVE_DEMO};

#[derive(Parser)]
#[command(name = "smodal", version, about = "Sampled-data feedback certificates for modal systems")]
struct Cli {
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized scans.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the spectral and coupling assumptions.
    Audit { config: PathBuf },
    /// Continuous margin and discrete margins over a period grid.
    Margins {
        config: PathBuf,
        #[arg(long, value_name = "a:b:n")]
        tau_grid: Option<String>,
    },
    /// Largest certified sampling period on the configured grid.
    TauStar { config: PathBuf },
    /// Continuous-time trajectory of the sampled loop plus decay fits.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        tend: Option<f64>,
        #[arg(long)]
        substeps: Option<usize>,
    },
    /// Scaled circle integrals of the sampled resolvent as r -> 1.
    ResolventScan {
        config: PathBuf,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Fit a decay law to a (t, norm) table.
    Fit {
        trajectory: PathBuf,
        #[arg(long, value_enum, default_value = "power")]
        model: Model,
        /// Last fraction of the log-time span used for the fit.
        #[arg(long, default_value_t = 0.5)]
        window_fraction: f64,
    },
    /// Full pipeline on the modeled perturbed wave family.
    WaveDemo {
        /// Replace the built-in configuration.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Power,
    Powerlog,
}

fn print_summary(report: &RunReport) {
    for c in &report.certificates {
        println!("{:<16} {:<4} {}", c.name, if c.pass { "ok" } else { "FAIL" }, c.detail);
    }
    for f in &report.fits {
        println!("fit {:<16} p = {:.4} rms = {:.4e}", f.model, f.exponent, f.residual);
    }
}

fn run_config(cfg_path: Option<&PathBuf>, request: Request, ov: Overrides, out: Option<PathBuf>) -> Result<bool, CliError> {
    let mut cfg = match cfg_path {
        Some(p) => Config::load(p)?,
        None => Config::parse(WAVE_DEMO)?,
    };
    ov.apply(&mut cfg)?;
    let sink = OutputSink::new(out.unwrap_or_else(|| PathBuf::from(&cfg.output.dir)))?;
    let report = run_pipeline(&cfg, request)?;
    sink.write_run(&report)?;
    print_summary(&report);
    println!("wrote {}", sink.dir().display());
    Ok(report.all_pass())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let base = Overrides { seed: cli.seed, ..Default::default() };
    match cli.cmd {
        Cmd::Audit { config } => run_config(Some(&config), Request::Audit, base, cli.out),
        Cmd::Margins { config, tau_grid } => {
            run_config(Some(&config), Request::Margins, Overrides { tau_grid, ..base }, cli.out)
        }
        Cmd::TauStar { config } => run_config(Some(&config), Request::TauStar, base, cli.out),
        Cmd::Simulate { config, tau, tend, substeps } => run_config(
            Some(&config),
            Request::Simulate,
            Overrides { tau, t_end: tend, substeps, ..base },
            cli.out,
        ),
        Cmd::ResolventScan { config, tau, delta } => {
            run_config(Some(&config), Request::ResolventScan, Overrides { tau, delta, ..base }, cli.out)
        }
        Cmd::WaveDemo { config } => run_config(config.as_ref(), Request::Full, base, cli.out),
        Cmd::Fit { trajectory, model, window_fraction } => {
            let (t, n) = read_trajectory(&trajectory)?;
            let model = match model {
                Model::Power => DecayModel::PurePower,
                Model::Powerlog => DecayModel::PowerSqrtLog,
            };
            let row = fit_row(&t, &n, model, FitWindow::Fraction(window_fraction))?;
            let sink = OutputSink::new(cli.out.unwrap_or_else(|| PathBuf::from(".")))?;
            sink.write_table(
                "fits.csv",
                &["model", "exponent", "residual"],
                &[vec![row.model.clone(), format!("{:?}", row.exponent), format!("{:?}", row.residual)]],
            )?;
            println!("fit {:<16} p = {:.4} rms = {:.4e}", row.model, row.exponent, row.residual);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
