use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use dga_core::dataset::{discretize, load_csv, write_categorical_csv, write_csv, SynthSpec};
use dga_core::dtree::tree_reduce;
use dga_core::granular::{incremental_rank_reduce, incremental_rank_reduce_shuffled};
use dga_core::pca::fit_pca;
use dga_core::pipeline::{
    emit_report, run_cell, run_matrix, Classifier, ExperimentConfig, ExperimentReport, Preprocessor, ReportFormat,
};
use dga_core::roughset::{reduct_search, InformationSystem};
use dga_core::{Error, Gas, GasTable, ReductionResult};

#[derive(Parser)]
#[command(name = "dga", version, about = "Attribute reduction and fault classification for dissolved-gas tables")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic gas table.
    Synth(SynthArgs),
    /// Map a gas table to IEEE categories 1..4.
    Discretize {
        /// Gas table CSV.
        data: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run one reducer on a table and print what it keeps.
    Reduce {
        #[arg(long, value_enum)]
        method: Method,
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Print the full reduction record as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Cross-validate one classifier, optionally behind a preprocessor.
    Train {
        #[arg(long)]
        clf: Classifier,
        #[arg(long, default_value = "none")]
        pre: Preprocessor,
        #[command(flatten)]
        exp: ExperimentArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run every configured preprocessor x classifier cell.
    Matrix {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Re-render a saved JSON report.
    Report {
        input: PathBuf,
        #[arg(short, long, default_value = "table")]
        format: ReportFormat,
    },
    /// Print the default experiment configuration.
    Config,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 2000)]
    rows: usize,
    #[arg(long, default_value_t = 0.5)]
    fault_ratio: f64,
    #[arg(long, default_value_t = 0.2)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated gases that carry the fault signal.
    #[arg(long, value_delimiter = ',')]
    informative: Vec<String>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment configuration (TOML).
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Gas table CSV, overriding the configured data source.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Refit preprocessors on every training fold.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(short, long, default_value = "table")]
    format: ReportFormat,
    /// Also save the report as JSON.
    #[arg(long)]
    save: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Pca,
    Rs,
    Gr,
    Dt,
}

enum Failure {
    Config(String),
    FailedCells,
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::Config(_) => Failure::Config(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("dga: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::FailedCells) => ExitCode::from(3),
        Err(Failure::Other(msg)) => {
            eprintln!("dga: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Synth(args) => synth(args),
        Command::Discretize { data, out } => {
            let table = load_csv(&data)?.table;
            let codes = discretize(&table);
            write_out(out.as_deref(), |w| write_categorical_csv(&codes, w))
        }
        Command::Reduce { method, exp, json } => {
            let (cfg, table) = experiment(&exp)?;
            let result = reduce(&cfg, &table, method)?;
            if json {
                let text = result.to_json().map_err(|e| Failure::Other(e.to_string()))?;
                println!("{text}");
            } else {
                println!("{}", result.label().join(","));
                for w in &result.warnings {
                    eprintln!("warning: {w}");
                }
            }
            Ok(())
        }
        Command::Train { clf, pre, exp, output } => {
            let (cfg, table) = experiment(&exp)?;
            let cell = run_cell(&cfg, &table, pre, clf)?;
            let report = ExperimentReport {
                seed: cfg.seed,
                strict: cfg.strict,
                rows: table.len(),
                cells: vec![cell],
            };
            finish(&report, &output)
        }
        Command::Matrix { exp, output } => {
            let (cfg, table) = experiment(&exp)?;
            info!("running {} cells on {} rows", cfg.cells().len(), table.len());
            let report = run_matrix(&cfg, &table)?;
            finish(&report, &output)
        }
        Command::Report { input, format } => {
            let text = fs::read_to_string(&input).map_err(|e| Error::io(&input, e))?;
            let report = ExperimentReport::from_json(&text)?;
            print!("{}", emit_report(&report, format)?);
            Ok(())
        }
        Command::Config => {
            print!("{}", ExperimentConfig::default().to_toml());
            Ok(())
        }
    }
}

fn synth(args: SynthArgs) -> Result<(), Failure> {
    let mut spec = SynthSpec::new(args.rows, args.fault_ratio, args.noise, args.seed);
    if !args.informative.is_empty() {
        let gases = args
            .informative
            .iter()
            .map(|name| Gas::from_name(name).ok_or_else(|| Failure::Config(format!("unknown gas {name:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        spec = spec.with_informative(&gases);
    }
    let table = spec.generate()?;
    write_out(args.out.as_deref(), |w| write_csv(&table, w))
}

fn experiment(args: &ExperimentArgs) -> Result<(ExperimentConfig, GasTable), Failure> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path).map_err(|e| match e {
            Error::Io { .. } => Failure::Config(e.to_string()),
            e => e.into(),
        })?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.strict |= args.strict;
    let table = match &args.data {
        Some(path) => load_csv(path)?.table,
        None => {
            let base = args.config.as_deref().and_then(Path::parent);
            cfg.data.load(cfg.seed, base)?
        }
    };
    Ok((cfg, table))
}

fn reduce(cfg: &ExperimentConfig, table: &GasTable, method: Method) -> Result<ReductionResult, Error> {
    if let Method::Pca = method {
        return Ok(fit_pca(&table.to_samples(), cfg.pca.policy)?.reduction());
    }
    let codes = discretize(table);
    match method {
        Method::Pca => unreachable!(),
        Method::Rs => reduct_search(&InformationSystem::new(&codes)),
        Method::Gr if cfg.gr.shuffle => incremental_rank_reduce_shuffled(&codes, cfg.gr.chunk, cfg.gr.carry, cfg.seed),
        Method::Gr => incremental_rank_reduce(&codes, cfg.gr.chunk, cfg.gr.carry),
        Method::Dt => tree_reduce(&codes, &cfg.dt, cfg.seed),
    }
}

fn finish(report: &ExperimentReport, output: &OutputArgs) -> Result<(), Failure> {
    print!("{}", emit_report(report, output.format)?);
    if let Some(path) = &output.save {
        let json = emit_report(report, ReportFormat::Json)?;
        fs::write(path, json).map_err(|e| Error::io(path, e))?;
    }
    if report.any_failed() {
        Err(Failure::FailedCells)
    } else {
        Ok(())
    }
}

fn write_out(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), Failure> {
    match path {
        Some(p) => {
            let mut file = fs::File::create(p).map_err(|e| Error::io(p, e))?;
            write(&mut file).map_err(|e| Error::io(p, e))?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock).map_err(|e| Failure::Other(e.to_string()))?;
        }
    }
    Ok(())
}
