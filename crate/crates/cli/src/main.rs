//! `scbrauer`: classify supercuspidal primes, run the auxiliary-prime sieves
//! and decide local Brauer classes from fixture files.
//!
//! Exit codes: 0 success, 1 error, 2 undetermined verdict, 64 usage.

mod commands;
mod resolve;

use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(
    name = "scbrauer",
    version,
    about = "Local Brauer classes of newform endomorphism algebras"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Where labels are looked up as <label>.json, <label>.desc.json, <label>.err.json.
    #[arg(long, global = true, default_value = "fixtures")]
    fixture_dir: PathBuf,
    /// LMFDB cache root; defaults to $SCBRAUER_CACHE_DIR or ./cache.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Upper bound for auxiliary-prime searches (default: the coefficient bound).
    #[arg(long, global = true)]
    bound: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Download a newform from LMFDB and write it as a fixture.
    Fetch {
        label: String,
        /// Ignore any cached entry.
        #[arg(long)]
        refresh: bool,
        /// Output path (default: <fixture-dir>/<label>.json).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the primes dividing the level and which are supercuspidal.
    Classify { fixture: String },
    /// Find auxiliary primes of a given kind.
    Aux {
        fixture: String,
        #[arg(long)]
        p: u64,
        /// p' (prime), p'' (dprime), p''' (tprime) or p-dagger (dagger).
        #[arg(long, default_value = "prime")]
        kind: String,
        /// How many qualifying primes to list.
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// The companion slope m_v at each place above p.
    Slope {
        fixture: String,
        #[arg(long)]
        p: u64,
        /// Use the n-th qualifying p' (1-based).
        #[arg(long, default_value_t = 1)]
        nth: usize,
    },
    /// The Hilbert symbol (a, b) at p, or at the real place for p = inf.
    Symbol {
        #[arg(allow_hyphen_values = true)]
        a: String,
        #[arg(allow_hyphen_values = true)]
        b: String,
        #[arg(long)]
        p: String,
    },
    /// Decide the local class at the places above p.
    Verdict {
        fixture: String,
        #[arg(long)]
        p: u64,
        /// Inertial descriptor file (default: the <label>.desc.json sidecar).
        #[arg(long)]
        desc: Option<String>,
        /// Error-term data file (default: the <label>.err.json sidecar, if any).
        #[arg(long)]
        err: Option<String>,
        /// Only the place with this index among the places above p.
        #[arg(long)]
        place: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 64 } else { 0 });
        }
    };
    match commands::run(&cli.global, &cli.command) {
        Ok(report) => {
            let out = if cli.global.json {
                serde_json::to_string_pretty(&report.json).expect("JSON value serialises")
            } else {
                report.text.trim_end().to_string()
            };
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let _ = writeln!(std::io::stdout().lock(), "{out}");
            ExitCode::from(if report.undetermined { 2 } else { 0 })
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
