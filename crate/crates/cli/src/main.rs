mod args;
mod report;
mod run;

use std::process::ExitCode;

use clap::Parser;

use args::{expand_config, Cli, THREADS_ENV};
use report::{exit_code, Report, EXIT_INVALID};

fn main() -> ExitCode {
    let argv = match expand_config(std::env::args_os().collect()) {
        Ok(v) => v,
        Err(problems) => return invalid(&problems),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INVALID } else { 0 });
        }
    };
    let config = match cli.validate(std::env::var(THREADS_ENV).ok()) {
        Ok(c) => c,
        Err(problems) => return invalid(&problems),
    };
    for w in &config.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(n) = config.threads {
        if let Err(e) = mxchaos::set_threads(n) {
            return invalid(&[e.to_string()]);
        }
    }

    let outcome = run::run(&cli.command).map_err(|e| (e.to_string(), exit_code(&e)));
    if let Err((msg, _)) = &outcome {
        eprintln!("error: {msg}");
    }
    let report = Report::new(&config, outcome);
    if let Err(e) = report.write(config.output.as_deref()) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(EXIT_INVALID);
    }
    ExitCode::from(report.exit_code)
}

fn invalid(problems: &[String]) -> ExitCode {
    for p in problems {
        eprintln!("error: {p}");
    }
    ExitCode::from(EXIT_INVALID)
}
