use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use poisson_zb::report::{parse_config, run, OutputFormat};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

/// Order-N Poisson expansion of E[h(W)] for a sum of independent integer variables.
#[derive(Debug, Parser)]
#[command(name = "poisson-zb", version)]
struct Args {
    /// Problem description (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output format; overrides the config's report.format.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Expansion order; overrides the config.
    #[arg(long)]
    order: Option<usize>,
    /// Skip the exact convolution oracle.
    #[arg(long)]
    no_oracle: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let mut config = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: invalid config: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(order) = args.order {
        config.order = order;
    }
    if args.no_oracle {
        config.report.include_oracle = false;
    }
    let format = match args.format {
        Some(Format::Json) => OutputFormat::Json,
        Some(Format::Text) => OutputFormat::Text,
        None => config.report.format,
    };
    match run(&config) {
        Ok(report) => {
            match format {
                OutputFormat::Json => print!("{}", report.to_json()),
                OutputFormat::Text => print!("{}", report.to_text()),
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
