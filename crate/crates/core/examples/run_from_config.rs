//! Config-driven runs: parse a JSON config, execute it into a directory
//! with a manifest, then re-run from the manifest and compare digests.
//!
//! ```text
//! cargo run --release --example run_from_config -- [out_dir]
//! ```

use std::path::PathBuf;

use chaoslab::io::{execute, parse_config_str, rerun_from_manifest};

const CONFIG: &str = r#"{
  "experiment": "chaos-rate",
  "kernel": { "family": "holder_power", "alpha": 0.5 },
  "particles": [32, 64, 128, 256],
  "seed_count": 4,
  "master_seed": 2024,
  "grid": { "cells": 512 },
  "metric": { "bootstrap": 50 }
}"#;

fn main() -> chaoslab::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "runs/example-config".into()));
    let config = parse_config_str(CONFIG)?;
    println!("config hash {}", config.hash()?);
    let manifest = execute(&config, &out.join("first"))?;
    for a in &manifest.artifacts {
        println!("{:<16} {}", a.path, &a.sha256[..16]);
    }
    let (_, checks) = rerun_from_manifest(&out.join("first/manifest.json"), &out.join("second"))?;
    let same = checks.iter().filter(|c| c.matches()).count();
    println!("re-run reproduced {same} of {} digests", checks.len());
    Ok(())
}
