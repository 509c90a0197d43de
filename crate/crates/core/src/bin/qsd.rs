use std::process::ExitCode;

use clap::Parser;
use qsd_core::cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("QSD_MERIT_LOG")).init();
    let cli = Cli::parse();
    let result = cli.into_config().and_then(|cfg| run(&cfg));
    match result {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("qsd: {e}");
            ExitCode::from(2)
        }
    }
}
