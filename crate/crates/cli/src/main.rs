use std::process::ExitCode;

use clap::Parser;
use revival_cli::{run, Cli, EXIT_PARTIAL};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            let m = &report.manifest;
            for f in &m.files {
                println!("{}", report.out_dir.join(&f.path).display());
            }
            if let Some(o) = &m.oracle {
                println!("oracle: {} checks, max deviation {:e}", o.checks, o.max_deviation);
            }
            let code = report.exit_code();
            if code == EXIT_PARTIAL {
                eprintln!("{} of {} sweep cells failed; see manifest.json", m.cells.failed, m.cells.total);
            }
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("revival: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
