//! Drives the experiment runner from an in-memory configuration, exactly as
//! the `frackpz` binary does from a file, and lists the emitted artifacts.
//!
//! Run with `cargo run --release --example run_experiment [out_dir]`.

use std::path::PathBuf;

use frackpz::experiment::{run, ExperimentConfig};

const CONFIG: &str = r#"{
    "kind": "iterate",
    "domain": {"shape": "disk", "center": [0, 0], "radius": 1},
    "h": 0.0625,
    "problem": {"s": 0.6, "t": 0.5, "q": 2, "m": 4, "mu": 1, "f": 1,
                "variant": "half_laplacian", "lambda_fraction": 0.5},
    "seed": 42
}"#;

fn main() -> frackpz::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("frackpz-example"));
    let config = ExperimentConfig::from_json(CONFIG)?;
    let manifest = run(&config, &out)?;
    println!("{} run, config hash {}", manifest.kind.name(), manifest.config_hash);
    for f in &manifest.files {
        println!("  {}  sha256 {}", out.join(&f.path).display(), &f.sha256[..16]);
    }
    for c in &manifest.constants {
        println!("  constant {} = {:.6e} ({})", c.name, c.value, c.provenance);
    }
    Ok(())
}
