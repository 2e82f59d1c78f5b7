use std::process::ExitCode;

use helmadr_cli::config::{parse_args, ConfigError};
use helmadr_cli::run::{render_outcome, run_experiment, RunError};

fn main() -> ExitCode {
    helmadr::sparse::init_threads_from_env();
    let cfg = match parse_args(std::env::args_os()) {
        Ok(cfg) => cfg,
        Err(ConfigError::Args(e)) => e.exit(),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run_experiment(&cfg) {
        Ok(outcome) => {
            print!("{}", render_outcome(&outcome));
            if outcome.all_converged {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: at least one solve did not reach the tolerance");
                ExitCode::from(1)
            }
        }
        Err(RunError::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
