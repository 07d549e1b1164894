use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use uplink_outage::experiments::ExperimentPlan;
use uplink_outage_cli::commands::{self, FitReport, KnownTerms};
use uplink_outage_cli::output::{write_file, write_json, Csv, RunManifest};
use uplink_outage_cli::{exit, parse_config, CliError};

/// Unknown-interference outage simulator for a MU-MIMO uplink.
#[derive(Debug, Parser)]
#[command(name = "uplink-outage", version)]
struct Cli {
    /// JSON experiment configuration; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory receiving every output file.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads for the drop loop (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Held-out empirical SINR CDF against the fitted model CDF.
    SinrCdf,
    /// ε-outage spectral efficiency and its empirical outage.
    OutageCurve,
    /// Fixed-margin baseline spectral efficiency and its empirical outage.
    BaselineCurve,
    /// Per-drop UatF terms, SINR and SE.
    Drops,
    /// Fit an Inverse-Gamma model to interference power samples (watts).
    Fit {
        /// One positive value per line; '#' starts a comment.
        samples: PathBuf,
    },
    /// ε-outage rate from a fit and the quasi-static SINR terms.
    Rate {
        /// JSON written by `fit`.
        #[arg(long)]
        fit: PathBuf,
        /// JSON with ds_sq, iusi_n and noise_eff.
        #[arg(long)]
        terms: PathBuf,
        /// Target outage probability in (0, 1).
        #[arg(long, allow_negative_numbers = true)]
        epsilon: f64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SinrCdf => "sinr-cdf",
            Command::OutageCurve => "outage-curve",
            Command::BaselineCurve => "baseline-curve",
            Command::Drops => "drops",
            Command::Fit { .. } => "fit",
            Command::Rate { .. } => "rate",
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                exit::USAGE as u8
            } else {
                exit::OK as u8
            });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_plan(cli: &Cli) -> Result<ExperimentPlan, CliError> {
    let mut plan = match &cli.config {
        Some(path) => parse_config(path)?,
        None => ExperimentPlan::default(),
    };
    if let Some(seed) = cli.seed {
        plan.cfg.seed = seed;
    }
    Ok(plan)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if cli.threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let started = Instant::now();
    let plan = load_plan(cli)?;
    std::fs::create_dir_all(&cli.out).map_err(|e| CliError::io(&cli.out, e))?;
    let name = cli.command.name();

    let outputs = match &cli.command {
        Command::Fit { samples } => {
            let text = std::fs::read_to_string(samples).map_err(|e| CliError::io(samples, e))?;
            let fit = commands::fit_samples(&text)?;
            emit_json(&cli.out, "fit.json", &fit)?
        }
        Command::Rate { fit, terms, epsilon } => {
            let fit: FitReport = commands::read_json(fit)?;
            let terms: KnownTerms = commands::read_json(terms)?;
            let decision = commands::rate_decision(&fit, &terms, *epsilon, &plan.cfg)?;
            emit_json(&cli.out, "rate.json", &decision)?
        }
        experiment => {
            let split = with_threads(cli.threads, || commands::simulate(&plan))?;
            let csv: Csv = match experiment {
                Command::SinrCdf => commands::sinr_cdf_csv(&split)?,
                Command::OutageCurve => commands::outage_curve_csv(&split, &plan)?,
                Command::BaselineCurve => commands::baseline_curve_csv(&split, &plan)?,
                _ => commands::drops_csv(&split),
            };
            let file = format!("{name}.csv");
            write_file(&cli.out.join(&file), csv.as_str())?;
            log::info!("wrote {}", cli.out.join(&file).display());
            vec![file]
        }
    };

    let manifest = RunManifest {
        config_path: cli.config.clone(),
        command: name.to_string(),
        seed: (!matches!(cli.command, Command::Fit { .. } | Command::Rate { .. })).then_some(plan.cfg.seed),
        output_dir: cli.out.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        duration_s: started.elapsed().as_secs_f64(),
        outputs,
    };
    write_json(&cli.out.join(RunManifest::file_name(name)), &manifest)
}

fn emit_json<T: serde::Serialize>(out: &Path, file: &str, value: &T) -> Result<Vec<String>, CliError> {
    write_json(&out.join(file), value)?;
    println!("{}", serde_json::to_string(value).expect("plain data serializes"));
    Ok(vec![file.to_string()])
}

fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError> {
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} worker threads: {e}")))?
            .install(f),
    }
}
