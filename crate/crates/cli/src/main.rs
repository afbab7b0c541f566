use std::process::ExitCode;

use bsq_cli::{thread_cap, Cli, CliError, Overrides, EXIT_PASS, EXIT_USAGE};
use clap::error::ErrorKind;
use clap::Parser;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_USAGE,
            };
            return ExitCode::from(code as u8);
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("bsq {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let threads = thread_cap(std::env::var("BSQ_THREADS").ok().as_deref())?;
    let config = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        None => cli.command.default_config().to_string(),
    };
    let overrides = Overrides { seed: cli.seed, tol: cli.tol };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = threads {
        pool = pool.num_threads(k);
    }
    let pool = pool.build().map_err(|e| CliError::Usage(e.to_string()))?;
    let report = pool.install(|| bsq_cli::run(cli.command, &config, overrides))?;
    report.write_to(&cli.out)?;
    for line in &report.summary {
        println!("{line}");
    }
    for (name, _) in &report.files {
        println!("wrote {}", cli.out.join(name).display());
    }
    if report.passed {
        println!("{}: pass", cli.command.name());
        Ok(bsq_cli::EXIT_PASS)
    } else {
        println!("{}: FAIL", cli.command.name());
        Ok(bsq_cli::EXIT_NUMERIC)
    }
}
