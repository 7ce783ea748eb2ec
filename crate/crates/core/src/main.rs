use std::io;
use std::process::ExitCode;

use cryptoslice::cli::{dispatch, parse_args, Command, ExitStatus};
use cryptoslice::intake::SystemEnv;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args_os().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let cmd = match parse_args(&argv) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("cryptoslice: {e}");
            eprintln!("try --help for usage");
            std::process::exit(ExitStatus::ArgumentError.code().into());
        }
    };
    let (verbosity, no_exit) = match &cmd {
        Command::Scan(c) => (c.verbosity, c.no_exit),
        _ => (1, false),
    };
    let level = ["error", "warn", "info", "debug", "trace"][usize::from(verbosity.min(4))];
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let status = dispatch(cmd, &SystemEnv, &mut io::stdout(), &mut io::stderr());
    if no_exit {
        // Embedded use: return normally and let the host decide.
        ExitCode::from(status.code())
    } else {
        std::process::exit(status.code().into())
    }
}
