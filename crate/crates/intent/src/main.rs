use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use intent::cmd::{self, CliError, Common};

/// Mine past-time LTL intentions from demonstrations.
#[derive(Parser)]
#[command(name = "intent", version)]
struct Cli {
    /// Seed for every random stream; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Scenario file (flat TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print whether each trace in a file satisfies a formula.
    Eval { formula: String, traces: PathBuf },
    /// Rank the concept class against the scenario's demonstrations.
    Mine,
    /// Plan a shortest trace satisfying a formula.
    Plan {
        formula: String,
        #[arg(long)]
        world: Option<PathBuf>,
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// Run the two-agent clarification protocol.
    Transfer,
    /// Generate demonstrations from the scenario's recipe.
    Demos,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let common = Common { seed: cli.seed, out: cli.out, config: cli.config };
    let result = match &cli.command {
        Command::Eval { formula, traces } => cmd::eval(&common, formula, traces),
        Command::Mine => cmd::mine(&common),
        Command::Plan { formula, world, max_len } => cmd::plan(&common, formula, world.as_deref(), *max_len),
        Command::Transfer => cmd::transfer(&common),
        Command::Demos => cmd::demos(&common),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => report_error(e),
    }
}

fn report_error(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code())
}
