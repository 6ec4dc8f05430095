use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use photonet_cli::compare::compare_files;
use photonet_cli::config::{Method, RunConfig};
use photonet_cli::runner::{run, Manifest};
use photonet_cli::scenario::TwoCrowOptions;

#[derive(Parser)]
#[command(name = "photonet", version, about = "Photon transport through driven resonator networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a JSON config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        exec: Exec,
    },
    /// Per-column relative deviations of trace A from reference B.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Relative L2 deviation above which a column is flagged; flagged runs exit with status 2.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run a built-in scenario.
    Scenario {
        #[command(subcommand)]
        scenario: Scenario,
    },
}

#[derive(Args)]
struct Exec {
    /// Maximum number of sweep points solved in parallel.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    Bm,
}

#[derive(Subcommand)]
enum Scenario {
    /// Cavity between two coupled-resonator waveguides, swept over η, drive frequency and temperature.
    TwoCrow {
        #[command(flatten)]
        exec: Exec,
        /// End of the time window in ns (default 40).
        #[arg(long)]
        t_end: Option<f64>,
        /// Solver steps over the window (default 8000).
        #[arg(long)]
        n_steps: Option<usize>,
        /// Write every k-th step to the traces (default 4).
        #[arg(long)]
        output_every: Option<usize>,
        /// Comma-separated coupling ratios.
        #[arg(long, value_delimiter = ',')]
        eta: Option<Vec<f64>>,
        /// Comma-separated drive frequencies in rad/ns.
        #[arg(long, value_delimiter = ',')]
        drive_frequency: Option<Vec<f64>>,
        /// Comma-separated temperatures in K.
        #[arg(long, value_delimiter = ',')]
        temperature: Option<Vec<f64>>,
        /// Comma-separated methods (default exact).
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<MethodArg>>,
        /// Also write matplotlib scripts next to the traces.
        #[arg(long)]
        emit_plots: bool,
    },
}

fn execute(config: RunConfig, exec: &Exec) -> Result<ExitCode> {
    let resolved = config.resolve()?;
    let manifest = run(&resolved, exec.out.as_deref(), exec.jobs)?;
    Ok(report(&manifest))
}

fn report(manifest: &Manifest) -> ExitCode {
    for p in &manifest.points {
        for w in &p.warnings {
            eprintln!("warning: point {}: {w}", p.index);
        }
    }
    for f in &manifest.failures {
        eprintln!("error: {}: {}", f.description, f.error);
    }
    eprintln!("wrote {} files", manifest.files.len());
    if manifest.succeeded() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main_inner() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run { config, exec } => execute(RunConfig::load(&config)?, &exec),
        Command::Compare { a, b, tolerance, json } => {
            let report = compare_files(&a, &b, tolerance)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.render());
            }
            Ok(if report.diverged { ExitCode::from(2) } else { ExitCode::SUCCESS })
        }
        Command::Scenario {
            scenario:
                Scenario::TwoCrow {
                    exec,
                    t_end,
                    n_steps,
                    output_every,
                    eta,
                    drive_frequency,
                    temperature,
                    methods,
                    emit_plots,
                },
        } => {
            let mut opts = TwoCrowOptions::default();
            if let Some(v) = t_end {
                opts.t_end = v;
            }
            if let Some(v) = n_steps {
                opts.n_steps = v;
            }
            if let Some(v) = output_every {
                opts.output_every = v;
            }
            if let Some(v) = eta {
                opts.coupling_ratios = v;
            }
            if let Some(v) = drive_frequency {
                opts.drive_frequencies = v;
            }
            if let Some(v) = temperature {
                opts.temperatures = v;
            }
            if let Some(v) = methods {
                opts.methods = v
                    .into_iter()
                    .map(|m| match m {
                        MethodArg::Exact => Method::Exact,
                        MethodArg::Bm => Method::Bm,
                    })
                    .collect();
            }
            opts.emit_plots = emit_plots;
            execute(opts.config(PathBuf::from("two-crow")), &exec)
        }
    }
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
