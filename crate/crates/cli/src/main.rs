use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hadamard_cli::config::parse_config_with_env;
use hadamard_cli::{execute, output, Failure};

/// Runs one experiment described by a TOML config.
#[derive(Parser)]
#[command(name = "hadamard", version)]
struct Args {
    /// Config document.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overrides `output_dir` from the config.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Print nothing on success.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut out_dir = args.output.clone();
    let result = (|| {
        let text = fs::read_to_string(&args.config).map_err(|e| Failure::io("cannot read", &args.config, e))?;
        let mut config = parse_config_with_env(&text, std::env::vars())?;
        if let Some(dir) = &out_dir {
            config.output_dir = dir.clone();
        }
        out_dir = Some(config.output_dir.clone());
        let done = execute(&config, &config.output_dir)?;
        if !args.quiet {
            let verdict = if done.exit_code == 0 { "pass" } else { "fail" };
            println!("{}: {verdict} -> {}", config.command.name(), done.report.display());
        }
        Ok::<_, Failure>(done.exit_code)
    })();
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(failure) => {
            let report = failure.to_json();
            eprintln!("{report}");
            if let Some(dir) = out_dir {
                if fs::create_dir_all(&dir).is_ok() {
                    let _ = output::write_json(&dir.join("error.json"), &report);
                }
            }
            ExitCode::from(failure.exit_code as u8)
        }
    }
}
