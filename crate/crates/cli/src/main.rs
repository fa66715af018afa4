use clap::Parser;

use assocmine_cli::commands::{run_bench, run_gen, run_mine};
use assocmine_cli::{Cli, Command};

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Mine(args) => run_mine(args),
        Command::Gen(args) => run_gen(args),
        Command::Bench(args) => run_bench(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
