mod args;
mod commands;
mod report;

use std::process::ExitCode;

use clap::Parser;
use setar_core::{ErrorCategory, SetarError};

use args::{Cli, Command};

fn dispatch(command: &Command) -> anyhow::Result<()> {
    match command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Train(a) => commands::train(a),
        Command::TrainForest(a) => commands::train_forest_cmd(a),
        Command::Forecast(a) => commands::forecast_cmd(a),
        Command::Evaluate(a) => commands::evaluate_cmd(a),
        Command::Run(a) => commands::run(a),
    }
}

/// One line: `error[<tag>]: <message>`, exit 2 (usage), 3 (data) or 4 (numerical).
fn report_error(err: &anyhow::Error) -> ExitCode {
    let (tag, code) = match err.chain().find_map(|e| e.downcast_ref::<SetarError>()) {
        Some(e) => {
            let code = match e.category() {
                ErrorCategory::Usage => 2,
                ErrorCategory::Data => 3,
                ErrorCategory::Numerical => 4,
            };
            (e.tag(), code)
        }
        None => ("internal", 3),
    };
    let message = format!("{err:#}").replace('\n', " ");
    eprintln!("error[{tag}]: {message}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.threads {
        Some(0) => Err(SetarError::InvalidConfig("--threads must be at least 1".into()).into()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(anyhow::Error::from)
            .and_then(|pool| pool.install(|| dispatch(&cli.command))),
        None => dispatch(&cli.command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report_error(&e),
    }
}
