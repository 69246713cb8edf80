use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use fdtn_cli::commands::run_command;
use fdtn_cli::config::help_listing;
use fdtn_cli::RunConfig;

#[derive(Parser)]
#[command(
    name = "fdtn",
    version,
    about = "Frequency-domain transformer network for video prediction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the train and test datasets
    Gen(RunArgs),
    /// Train a model and write its checkpoint and log
    Train(RunArgs),
    /// Roll out one sequence and export seed and predicted frames
    Predict(RunArgs),
    /// Print the mean squared error table for a checkpoint
    Eval(RunArgs),
    /// Export the frames of one dataset sequence
    Export(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file of key=value lines
    #[arg(long)]
    config: PathBuf,
    /// Override a configuration key; repeatable, applied after the file
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn main() -> ExitCode {
    let listing = help_listing();
    let mut command = Cli::command().after_help(listing.clone());
    for sub in ["gen", "train", "predict", "eval", "export"] {
        command = command.mut_subcommand(sub, |c| c.after_help(listing.clone()));
    }
    let cli = match Cli::from_arg_matches(&command.get_matches()) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let (name, args) = match &cli.command {
        Command::Gen(a) => ("gen", a),
        Command::Train(a) => ("train", a),
        Command::Predict(a) => ("predict", a),
        Command::Eval(a) => ("eval", a),
        Command::Export(a) => ("export", a),
    };
    let result = RunConfig::load(&args.config, &args.set)
        .and_then(|cfg| run_command(name, &cfg, &mut std::io::stdout().lock()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fdtn {name}: {e}");
            ExitCode::FAILURE
        }
    }
}
