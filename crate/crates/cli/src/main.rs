mod archive;
mod commands;
mod failure;
mod manifest;
mod options;
mod settings;

use std::process::ExitCode;

use clap::Parser;

use failure::{CliResult, Failure};
use options::{Cli, Command, ExperimentArgs};
use settings::FileConfig;

fn init_jobs(exp: &ExperimentArgs, file: &FileConfig) -> CliResult<()> {
    if let Some(n) = exp.jobs.or(file.jobs) {
        if n == 0 {
            return Err(Failure::input("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::internal(e.to_string()))?;
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Run(a) => {
            let file = FileConfig::load(a.exp.config.as_deref())?;
            init_jobs(&a.exp, &file)?;
            commands::run(a, &file)
        }
        Command::Featsel(a) => {
            let file = FileConfig::load(a.exp.config.as_deref())?;
            init_jobs(&a.exp, &file)?;
            commands::featsel(a, &file)
        }
        Command::Synth(a) => commands::synth(a),
        Command::Report(a) => commands::report(&a.path),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
