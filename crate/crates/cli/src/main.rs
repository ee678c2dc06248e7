use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;

use hypermatch_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = run(&cli, &mut out);
    let flushed = out.flush();
    match (result, flushed) {
        (Ok(_), Ok(())) => ExitCode::SUCCESS,
        (Ok(_), Err(e)) => {
            eprintln!("hypermatch: {e}");
            ExitCode::from(2)
        }
        (Err(e), _) => {
            eprintln!("hypermatch: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
