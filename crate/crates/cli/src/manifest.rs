use std::path::PathBuf;

use hypergame::lattice::RNG_ALGORITHM;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::RunConfig;

pub const MANIFEST_NAME: &str = "manifest.json";

/// Record written next to the outputs of every run, including failed ones.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub config: &'a RunConfig,
    pub rng_algorithm: &'static str,
    pub version: &'static str,
    pub duration_seconds: f64,
    /// Paths relative to the run directory.
    pub outputs: Vec<PathBuf>,
    pub complete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Map::is_empty")]
    pub notes: Map<String, Value>,
}

impl<'a> RunManifest<'a> {
    pub fn new(config: &'a RunConfig) -> Self {
        Self {
            config,
            rng_algorithm: RNG_ALGORITHM,
            version: env!("CARGO_PKG_VERSION"),
            duration_seconds: 0.0,
            outputs: Vec::new(),
            complete: false,
            error: None,
            notes: Map::new(),
        }
    }
}
