use clap::error::ErrorKind;
use clap::Parser;

use resform_cli::{run, write_artifacts, Cli};

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    match run(&cli, &argv).and_then(|artifacts| write_artifacts(&artifacts)) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("resform: {err}");
            std::process::exit(err.exit_code());
        }
    }
}
