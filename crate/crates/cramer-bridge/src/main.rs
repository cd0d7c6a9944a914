//! Thin command-line front end; all computation lives in the library.

use clap::{Parser, Subcommand};

use cramer_bridge::cli;

#[derive(Parser)]
#[command(
    name = "cramer-bridge",
    version,
    about = "Max-entropy duals, fiber densities, and log-barrier LP/SDP bridges"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the dual max-entropy problem of a JSON problem file.
    Solve {
        /// Path to the problem file.
        file: String,
    },
    /// Sweep the barrier/perspective identity over epsilons, emitting CSV.
    Sweep {
        /// Path to the problem file (kind lp or sdp).
        file: String,
        /// Barrier parameters, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1.0,0.1,0.01")]
        eps: Vec<f64>,
        /// Maximum tolerated identity residual.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<String>,
    },
    /// Run a verification suite and print one line per invariant.
    Verify {
        /// Suite name: core, fiber, lp, sdp, oracles, or all.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Base seed; defaults to CRAMER_BRIDGE_SEED or 42.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn default_seed() -> u64 {
    std::env::var("CRAMER_BRIDGE_SEED")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(42)
}

fn main() {
    let args = Args::parse();
    let mut stdout = std::io::stdout();
    let outcome = match args.command {
        Command::Solve { file } => cli::run_solve(&file, &mut stdout),
        Command::Sweep {
            file,
            eps,
            tol,
            out,
        } => cli::run_sweep(&file, &eps, tol, out.as_deref(), &mut stdout),
        Command::Verify { suite, seed } => {
            cli::run_verify(&suite, seed.unwrap_or_else(default_seed), &mut stdout)
        }
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(cli::EXIT_INPUT);
        }
    }
}
