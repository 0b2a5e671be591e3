use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pipe_rating::ingest::ColumnMap;
use pipe_rating::knn::{SplitSpec, TieBreak};
use pipe_rating::pipeline::{self, ReportFormat, RunConfig, RunOutcome, Stage, OUT_DIR_ENV, PREDICTIONS_CSV};
use pipe_rating::synthgen::GenSpec;
use pipe_rating::Result;

#[derive(Parser)]
#[command(name = "pipe-rating", version, about = "Condition rating for wastewater pipes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic record file from a generator spec.
    Generate {
        /// Generator spec (TOML).
        #[arg(long)]
        spec: PathBuf,
        /// Output CSV.
        #[arg(long)]
        output: PathBuf,
    },
    /// Load and clean records.
    Ingest(RunArgs),
    /// Ingest, encode and screen factors for normality.
    Screen(RunArgs),
    /// Everything up to the K sweep.
    Sweep(RunArgs),
    /// Everything up to fitting and saving the models.
    Train(RunArgs),
    /// Score a labeled file with a saved model.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        columns: Option<PathBuf>,
        #[arg(long, default_value = "out", env = OUT_DIR_ENV)]
        out_dir: PathBuf,
    },
    /// Metrics from confusion-matrix CSVs, given as NAME=PATH.
    ScoreMatrix {
        #[arg(required = true, value_parser = parse_named)]
        matrices: Vec<(String, PathBuf)>,
        #[arg(long, env = OUT_DIR_ENV)]
        out_dir: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Rate records with a saved model, worst first.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        columns: Option<PathBuf>,
        /// Also write predictions.csv here.
        #[arg(long, env = OUT_DIR_ENV)]
        out_dir: Option<PathBuf>,
    },
    /// Full pipeline with all artifacts.
    #[command(alias = "pipeline")]
    Report(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    input: PathBuf,
    /// Column-name overrides (TOML).
    #[arg(long)]
    columns: Option<PathBuf>,
    /// Factor schema (TOML); the built-in schema when absent.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Cleaning rules (TOML); the built-in rules when absent.
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.75)]
    train_fraction: f64,
    #[arg(long)]
    stratify: bool,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Sweep K = 1..=k-max.
    #[arg(long, default_value_t = pipeline::DEFAULT_K_MAX)]
    k_max: usize,
    /// Fixed K for the final model (default: best K of the sweep).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum, default_value_t = Tie::Nearest)]
    tie_break: Tie,
    #[arg(long, default_value_t = 1.0)]
    smoothing: f64,
    #[arg(long, default_value = "out", env = OUT_DIR_ENV)]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Tie {
    Nearest,
    Smaller,
    Larger,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

impl RunArgs {
    fn config(&self) -> RunConfig {
        RunConfig {
            input: self.input.clone(),
            columns: self.columns.clone(),
            schema: self.schema.clone(),
            rules: self.rules.clone(),
            split: SplitSpec {
                train_fraction: self.train_fraction,
                seed: self.seed,
                stratified: self.stratify,
            },
            alpha: self.alpha,
            k_max: self.k_max,
            k: self.k,
            tie_break: match self.tie_break {
                Tie::Nearest => TieBreak::NearestMember,
                Tie::Smaller => TieBreak::SmallerRating,
                Tie::Larger => TieBreak::LargerRating,
            },
            smoothing: self.smoothing,
            out_dir: self.out_dir.clone(),
            format: match self.format {
                Format::Text => ReportFormat::Text,
                Format::Json => ReportFormat::Json,
            },
        }
    }
}

fn parse_named(s: &str) -> std::result::Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok((name.to_string(), path.into())),
        _ => Err(format!("expected NAME=PATH, got '{s}'")),
    }
}

fn columns(path: Option<&Path>) -> Result<ColumnMap> {
    path.map_or_else(|| Ok(ColumnMap::default()), ColumnMap::load)
}

fn print_outcome(outcome: &RunOutcome, format: ReportFormat) -> Result<()> {
    match format {
        ReportFormat::Text => {
            print!("{}", outcome.summary());
            if let Some(c) = &outcome.comparison {
                print!("\n{}", c.render_text());
            }
        }
        ReportFormat::Json => {
            let artifacts: Vec<String> = outcome.artifacts.iter().map(|p| p.display().to_string()).collect();
            let value = serde_json::json!({
                "cleaning": {
                    "total_in": outcome.cleaning.total_in,
                    "dropped_missing": outcome.cleaning.dropped_missing,
                    "dropped_inconsistent": outcome.cleaning.dropped_inconsistent,
                    "retained": outcome.cleaning.retained,
                },
                "retained_factors": outcome.screening.as_ref().map(|s| &s.retained),
                "best_k": outcome.sweep.as_ref().map(|s| s.best_k),
                "chosen_k": outcome.chosen_k,
                "report": outcome.comparison,
                "artifacts": artifacts,
            });
            println!("{}", serde_json::to_string_pretty(&value)?);
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { spec, output } => {
            let spec = GenSpec::load(&spec)?;
            let n = pipeline::cmd_generate(&spec, &output, &ColumnMap::default())?;
            println!("wrote {n} records to {}", output.display());
        }
        Command::Ingest(args) => stage(&args, Stage::Ingest)?,
        Command::Screen(args) => stage(&args, Stage::Screen)?,
        Command::Sweep(args) => stage(&args, Stage::Sweep)?,
        Command::Train(args) => stage(&args, Stage::Train)?,
        Command::Report(args) => stage(&args, Stage::Report)?,
        Command::Evaluate { model, input, columns: map, out_dir } => {
            let (report, written) = pipeline::cmd_evaluate(&model, &input, &columns(map.as_deref())?, &out_dir)?;
            print!("{}", report.render_text());
            for p in written {
                println!("wrote {}", p.display());
            }
        }
        Command::ScoreMatrix { matrices, out_dir, format } => {
            let (report, _) = pipeline::cmd_score_matrix(&matrices, out_dir.as_deref())?;
            match format {
                Format::Text => print!("{}", report.render_text()),
                Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
            }
        }
        Command::Predict { model, input, columns: map, out_dir } => {
            let predictions = pipeline::cmd_predict(&model, &input, &columns(map.as_deref())?)?;
            let mut buf = Vec::new();
            pipeline::write_predictions(&mut buf, &predictions)?;
            if let Some(dir) = out_dir {
                pipeline::write_atomic(&dir.join(PREDICTIONS_CSV), &buf)?;
            }
            print!("{}", String::from_utf8_lossy(&buf));
        }
    }
    Ok(())
}

fn stage(args: &RunArgs, until: Stage) -> Result<()> {
    let config = args.config();
    let outcome = pipeline::run(&config, until)?;
    print_outcome(&outcome, config.format)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
