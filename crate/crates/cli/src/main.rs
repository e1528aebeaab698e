mod config;
mod manifest;
mod run;

use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use config::{Cli, RunConfig};
use manifest::{RunManifest, MANIFEST_NAME};
use run::{dispatch, Outputs};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, options) = cli.command.split();
    let cfg = match RunConfig::resolve(kind, options) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    let start = Instant::now();
    let outputs = Outputs::default();
    let result = dispatch(&cfg, &outputs);

    let mut manifest = RunManifest::new(&cfg);
    manifest.duration_seconds = start.elapsed().as_secs_f64();
    manifest.outputs = outputs.files.into_inner().unwrap();
    manifest.outputs.sort();
    manifest.notes = outputs.notes.into_inner().unwrap();
    manifest.complete = result.is_ok();
    manifest.error = result.as_ref().err().map(|e| e.to_string());

    let written = fs::create_dir_all(&cfg.out).and_then(|_| {
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(cfg.out.join(MANIFEST_NAME), text + "\n")
    });
    if let Err(e) = written {
        eprintln!("error: cannot write {}: {e}", MANIFEST_NAME);
        return ExitCode::FAILURE;
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
