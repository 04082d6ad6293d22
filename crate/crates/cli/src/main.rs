//! `changeprop`: run change propagation on model files and write a report.
//!
//! Exit status: 0 when a plan was found, 2 when no plan exists within the
//! depth bound, 1 on any input error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use changeprop::dsl::parse_constraint_file;
use changeprop::harness::{check_postulates, random_instance, RandomParams, RunInputs};
use changeprop::model::{script_from_json, Metamodel, Model};
use changeprop::report::{Metric, RunReport};
use changeprop::search::{propagate, PropagateError, Strategy};
use changeprop::{ExactConfig, ExactCosts};
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(
    name = "changeprop",
    version,
    about = "Propagate a primary model change to a consistent state",
    args_conflicts_with_subcommands = true,
    subcommand_negates_reqs = true
)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded random instance as input files plus a manifest.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, required = true)]
    metamodel: Option<PathBuf>,
    #[arg(long, required = true)]
    constraints: Option<PathBuf>,
    #[arg(long, required = true)]
    model: Option<PathBuf>,
    /// Primary change script (JSON list of actions).
    #[arg(long, required = true)]
    changes: Option<PathBuf>,
    /// ucs, astar, greedy or exhaustive.
    #[arg(long, default_value = "astar")]
    strategy: Strategy,
    /// Per-kind costs, e.g. `create=1,delete=3,setattr=1`; `inf` disables a kind.
    #[arg(long)]
    costs: Option<String>,
    #[arg(long, default_value_t = 8)]
    max_depth: usize,
    /// Number of plans to return.
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long)]
    check_postulates: bool,
    /// Depth of the brute-force search used for the minimality check.
    #[arg(long, default_value_t = 4)]
    oracle_bound: usize,
    /// structural, semantic or none.
    #[arg(long, default_value = "structural")]
    metric: Metric,
    /// Directory for report.json and repaired_model.json; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(1..=5))]
    max_classes: u8,
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u8).range(1..=12))]
    max_entities: u8,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u8).range(1..=8))]
    max_constraints: u8,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=4))]
    mutations: u8,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{message}", path.display())]
    Input { path: PathBuf, message: String },
    #[error("--costs: {0}")]
    Costs(String),
    #[error("{0}")]
    Usage(String),
}

/// Prefixes a located error (`line:col: ...`) with its file.
fn located(path: &Path, err: impl ToString) -> CliError {
    let message = err.to_string();
    let sep = if message.starts_with(|c: char| c.is_ascii_digit()) {
        ""
    } else {
        " "
    };
    CliError::Input {
        path: path.to_owned(),
        message: format!("{sep}{message}"),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn run(args: RunArgs) -> Result<ExitCode, CliError> {
    let (Some(mm_path), Some(cs_path), Some(model_path), Some(changes_path)) = (
        &args.metamodel,
        &args.constraints,
        &args.model,
        &args.changes,
    ) else {
        return Err(CliError::Usage(
            "--metamodel, --constraints, --model and --changes are required".into(),
        ));
    };
    if args.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    if args.threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let mm = Metamodel::from_json(&read(mm_path)?).map_err(|e| located(mm_path, e))?;
    let model = Model::from_json(&read(model_path)?, &mm).map_err(|e| located(model_path, e))?;
    let cs = parse_constraint_file(&read(cs_path)?, &mm).map_err(|e| located(cs_path, e))?;
    let primary = script_from_json(&read(changes_path)?).map_err(|e| located(changes_path, e))?;
    let costs = match &args.costs {
        Some(spec) => ExactCosts::parse(spec).map_err(|e| CliError::Costs(e.to_string()))?,
        None => ExactCosts::default(),
    };
    let cfg = ExactConfig::default()
        .with_strategy(args.strategy)
        .with_costs(costs)
        .with_max_depth(args.max_depth)
        .with_k(args.k)
        .with_threads(args.threads);

    let start = Instant::now();
    let outcome = propagate(&model, &primary, &cs, &mm, &cfg);
    let search_time = start.elapsed();
    let postulates = args.check_postulates.then(|| {
        let inputs = RunInputs {
            original: &model,
            primary: &primary,
            cs: &cs,
            mm: &mm,
            cfg: &cfg,
        };
        check_postulates(inputs, &outcome, args.oracle_bound)
    });
    eprintln!(
        "search: {:.3} ms, total: {:.3} ms",
        search_time.as_secs_f64() * 1e3,
        start.elapsed().as_secs_f64() * 1e3
    );

    let report = RunReport::build(&model, &outcome, &cfg, args.metric, args.seed, postulates);
    let repaired = outcome
        .as_ref()
        .ok()
        .and_then(|res| res.result_models.first())
        .map(Model::to_json);
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|source| CliError::Io {
                path: dir.clone(),
                source,
            })?;
            write(&dir.join("report.json"), &report.to_json())?;
            if let Some(m) = &repaired {
                write(&dir.join("repaired_model.json"), m)?;
            }
        }
        None => print!("{}", report.to_json()),
    }

    match outcome {
        Ok(_) => Ok(ExitCode::SUCCESS),
        Err(e @ PropagateError::NoPlanWithinBound { .. }) => {
            eprintln!("{e}");
            Ok(ExitCode::from(2))
        }
        Err(PropagateError::Primary(e)) => Err(located(changes_path, e)),
    }
}

fn generate(args: GenerateArgs) -> Result<ExitCode, CliError> {
    let params = RandomParams {
        max_classes: args.max_classes.into(),
        max_entities: args.max_entities.into(),
        max_constraints: args.max_constraints.into(),
        mutations: args.mutations.into(),
    };
    random_instance(args.seed, params)
        .write_to(&args.out)
        .map_err(|source| CliError::Io {
            path: args.out.clone(),
            source,
        })?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::FAILURE;
        }
    };
    let result = match cli.command {
        Some(Command::Generate(g)) => generate(g),
        None => run(cli.run),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::FAILURE
    })
}
