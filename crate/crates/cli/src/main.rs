mod args;
mod commands;
mod error;

use clap::Parser;

use args::{Cli, Command};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let res = match &cli.command {
        Command::Inspect(a) => commands::inspect(a),
        Command::Check(a) => commands::check(a),
        Command::Geodesic(a) => commands::geodesic(a),
        Command::Export(a) => commands::export(a),
    };
    if let Err(e) = res {
        eprintln!("error [{}]: {e}", e.kind());
        std::process::exit(e.exit_code());
    }
}
