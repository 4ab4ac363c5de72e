use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use tagsr::benchmarks::{generate_bouc_wen, generate_cstr, generate_planted, CstrProtocol, InputSpec, PlantedSystem};
use tagsr_cli::{run_evaluate, run_identification, RunConfig, TEMPLATE};

#[derive(Parser)]
#[command(name = "tagsr", version, about = "Grammar-guided identification of polynomial NARMAX models")]
struct Cli {
    /// Worker threads for population evaluation; results do not depend on it.
    #[arg(long, global = true, env = "TAGSR_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve models on the configured data and write the Pareto front.
    Identify {
        #[arg(long)]
        config: PathBuf,
        /// Output directory, overriding [output] dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a benchmark data set and its ground-truth sidecar.
    Gen {
        #[arg(long, value_enum)]
        system: System,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Output noise standard deviation of the planted system.
        #[arg(long, default_value_t = 0.0)]
        noise_std: f64,
    },
    /// Score a stored model (exported model or pareto.json) on a data file.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Front member of a pareto.json; defaults to the headline model.
        #[arg(long)]
        index: Option<usize>,
    },
    /// Print an annotated configuration with all defaults.
    InitConfig {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum System {
    Planted,
    Boucwen,
    Cstr,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            bail!("--workers must be at least 1");
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("starting worker pool")?;
    pool.install(|| dispatch(cli.command))
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Identify { config, out } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(dir) = out {
                cfg.output.dir = dir;
            }
            let run = run_identification(&cfg)?;
            let head = run.report.headline_model();
            println!(
                "{} models on the first front; headline model {} (validation E_s {}):",
                run.report.models.len(),
                head.rank,
                show(head.validation.e_s)
            );
            for eq in &head.equations {
                println!("  {eq}");
            }
            println!("reports in {}", run.out_dir.display());
        }
        Command::Gen { system, n, seed, out, noise_std } => {
            let generated = match system {
                System::Planted => {
                    let sys = PlantedSystem { noise_std: vec![noise_std], ..Default::default() };
                    generate_planted(&sys, n, seed)?
                }
                System::Boucwen => generate_bouc_wen(n, &InputSpec::bouc_wen_default(), seed)?,
                System::Cstr => generate_cstr(n, &CstrProtocol::default(), seed)?,
            };
            if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            generated.write(&out)?;
        }
        Command::Eval { model, data, index } => {
            let m = run_evaluate(&model, &data, index)?;
            println!("{}", serde_json::to_string_pretty(&m)?);
        }
        Command::InitConfig { out } => match out {
            Some(path) => std::fs::write(&path, TEMPLATE).with_context(|| format!("writing {}", path.display()))?,
            None => print!("{TEMPLATE}"),
        },
    }
    Ok(())
}

fn show(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |x| format!("{x:.6e}"))
}
