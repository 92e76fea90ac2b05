use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use semiclassical_cli::output::Sink;
use semiclassical_cli::regress::{regress, render};
use semiclassical_cli::{run, CliError, CliResult, Command, RunConfig, RunFlags};

#[derive(Parser)]
#[command(name = "semiclassical", version, about = "Semi-classical spectral toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Fundamental solution and transport hierarchy (1-D), or trajectory data at points (N-D).
    Oscillator(RunArgs),
    /// Lattice field minimization and its identities.
    Field(RunArgs),
    /// Hierarchy against perturbation theory and direct diagonalization.
    Compare(RunArgs),
    /// Padé and Borel-Padé sums of the perturbation series.
    Resum(RunArgs),
    /// Check the potential hypotheses on the sampling box.
    Validate(RunArgs),
    /// Regenerate the cases of a golden directory and compare.
    Regress(RegressArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Skip potential validation.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct RegressArgs {
    golden: PathBuf,
    /// Where fresh outputs go; a scratch directory by default.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Overwrite the goldens with fresh outputs.
    #[arg(long)]
    bless: bool,
}

fn pool(threads: usize) -> CliResult<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))
}

fn execute(command: Command, args: RunArgs) -> CliResult<()> {
    pool(args.threads)?;
    let mut config = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let mut sink = Sink::new(&args.out, command, &config)?;
    let result = run(command, &config, &mut sink, RunFlags { force: args.force });
    for path in sink.written() {
        eprintln!("wrote {}", path.display());
    }
    result
}

fn execute_regress(args: RegressArgs) -> CliResult<()> {
    pool(args.threads)?;
    let work = args
        .out
        .unwrap_or_else(|| std::env::temp_dir().join(format!("semiclassical-regress-{}", std::process::id())));
    let reports = regress(&args.golden, &work, args.bless)?;
    print!("{}", render(&reports));
    let failed = reports.iter().filter(|r| !r.passed()).count();
    if failed > 0 {
        return Err(CliError::Regression(format!("{failed} of {} cases differ", reports.len())));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Sub::Oscillator(a) => execute(Command::Oscillator, a),
        Sub::Field(a) => execute(Command::Field, a),
        Sub::Compare(a) => execute(Command::Compare, a),
        Sub::Resum(a) => execute(Command::Resum, a),
        Sub::Validate(a) => execute(Command::Validate, a),
        Sub::Regress(a) => execute_regress(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
