//! `frackpz <kind> --config path [--out dir] [--seed n] [--lambdas a:b:n]`
//!
//! Exit codes: 0 success, 2 validation failure, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use frackpz::experiment::{parse_lambda_range, run, ExperimentConfig, ExperimentKind};
use frackpz::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Kind {
    SolvePoisson,
    OperatorValidate,
    CzProbe,
    Thresholds,
    Iterate,
    Sweep,
    NonexistKpz1,
    NonexistKpz3,
    Decomposition,
}

impl From<Kind> for ExperimentKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::SolvePoisson => ExperimentKind::SolvePoisson,
            Kind::OperatorValidate => ExperimentKind::OperatorValidate,
            Kind::CzProbe => ExperimentKind::CzProbe,
            Kind::Thresholds => ExperimentKind::Thresholds,
            Kind::Iterate => ExperimentKind::Iterate,
            Kind::Sweep => ExperimentKind::Sweep,
            Kind::NonexistKpz1 => ExperimentKind::NonexistKpz1,
            Kind::NonexistKpz3 => ExperimentKind::NonexistKpz3,
            Kind::Decomposition => ExperimentKind::Decomposition,
        }
    }
}

/// Runs one fractional KPZ experiment from a JSON configuration.
#[derive(Debug, Parser)]
#[command(name = "frackpz", version)]
struct Cli {
    /// Experiment kind; must agree with "kind" in the configuration if present there.
    kind: Kind,
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides "out" in the configuration; default "out").
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for random batteries (overrides "seed").
    #[arg(long)]
    seed: Option<u64>,
    /// Lambda values for sweeps as start:end:count (overrides "lambdas").
    #[arg(long)]
    lambdas: Option<String>,
}

fn load(cli: &Cli) -> Result<(ExperimentConfig, PathBuf), Error> {
    let text = std::fs::read_to_string(&cli.config).map_err(|source| Error::Io {
        path: cli.config.clone(),
        source,
    })?;
    let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    let kind = ExperimentKind::from(cli.kind);
    let obj = value
        .as_object_mut()
        .ok_or_else(|| Error::Config("configuration must be a JSON object".into()))?;
    match obj.get("kind") {
        None => {
            obj.insert("kind".into(), serde_json::to_value(kind)?);
        }
        Some(k) if *k == serde_json::to_value(kind)? => {}
        Some(k) => {
            return Err(Error::Config(format!(
                "command-line kind {} disagrees with configuration kind {k}",
                kind.name()
            )))
        }
    }
    let mut config: ExperimentConfig = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(range) = &cli.lambdas {
        config.lambdas = Some(parse_lambda_range(range)?);
    }
    let out = cli
        .out
        .clone()
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok((config, out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load(&cli).and_then(|(config, out)| run(&config, &out).map(|m| (m, out)));
    match result {
        Ok((manifest, out)) => {
            println!(
                "{}: wrote {} files to {}",
                manifest.kind.name(),
                manifest.files.len() + 1,
                out.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("frackpz: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
