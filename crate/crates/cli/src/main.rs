mod commands;
mod output;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "walkpot", version, about = "Potential theory of recurrent random walks on Z")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Law JSON file, or `corpus:NAME` for a built-in law.
    #[arg(long, global = true)]
    pub law: Option<String>,
    /// Output directory; CSV goes to stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 20)]
    pub xmax: i64,
    /// Slack added to every certified bound when verifying.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 10_000)]
    pub paths: u64,
    /// Interval lengths for exit problems, strictly increasing.
    #[arg(long = "N-ladder", global = true, value_delimiter = ',', default_values_t = [16i64, 64, 256])]
    pub n_ladder: Vec<i64>,
    /// Half-width of the potential and ladder tables.
    #[arg(long, global = true, default_value_t = 2048)]
    pub window: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Moments, ladder means and regime of a law (JSON).
    Describe,
    /// Run an identity suite and report residuals against budgets.
    Verify {
        /// half-line, entrance, ladder, exit or all.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Corrupt a table before checking: potential:X:DELTA or ladder:K:DELTA.
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
    /// Potential kernel a(x) for |x| <= xmax.
    Kernel,
    /// Ladder height laws and renewal functions up to xmax.
    Ladder,
    /// Green functions of the half-line and of the origin.
    Green,
    /// Two-sided exit probabilities for each N.
    Exit,
    /// Tail index, Spitzer average and boundedness criteria (JSON).
    Classify,
    /// Monte Carlo paths under a stopping rule.
    Simulate {
        #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
        start: i64,
        /// below:L, above:L, hit:P, exit:LO:HI or horizon:N.
        #[arg(long, default_value = "below:0", allow_hyphen_values = true)]
        rule: String,
        #[arg(long)]
        step_cap: Option<u64>,
        /// Record visits to LO..=HI, written as LO:HI.
        #[arg(long, allow_hyphen_values = true)]
        track: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let c = &cli.common;
    let res = match &cli.command {
        Command::Describe => commands::describe(c),
        Command::Verify { suite, inject_fault } => commands::verify(c, suite, inject_fault.as_deref()),
        Command::Kernel => commands::kernel(c),
        Command::Ladder => commands::ladder(c),
        Command::Green => commands::green(c),
        Command::Exit => commands::exit(c),
        Command::Classify => commands::classify(c),
        Command::Simulate {
            start,
            rule,
            step_cap,
            track,
        } => commands::simulate(c, *start, rule, *step_cap, track.as_deref()),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::CliError::Verification(names)) => {
            eprintln!("verification failed: {}", names.join(", "));
            ExitCode::from(1)
        }
        Err(commands::CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
