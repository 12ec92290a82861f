//! Run record written next to every command's outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use svd_ifa::estimator::StageTiming;

use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputChecksum {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub arguments: Vec<String>,
    pub version: String,
    pub config: Map<String, Value>,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<InputChecksum>,
    pub timings: Vec<Timing>,
    pub total_seconds: f64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            arguments: std::env::args().collect(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: Map::new(),
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            timings: Vec::new(),
            total_seconds: 0.0,
            outputs: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.config.insert(key.to_string(), value.into());
    }

    /// Stamps the timings from `laps` and writes `manifest.json` into `dir`.
    pub fn finish(mut self, laps: Laps, dir: &Path) -> Result<Self, CliError> {
        self.total_seconds = laps.start.elapsed().as_secs_f64();
        self.timings = laps.timings;
        self.outputs.push(MANIFEST_FILE.to_string());
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&self).map_err(|e| CliError::io(&path, e))?;
        fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(self)
    }

    #[cfg(test)]
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::io(path, e))
    }
}

/// Consecutive wall-clock laps; the laps partition the run, so they sum to
/// its total.
pub struct Laps {
    start: Instant,
    last: Instant,
    timings: Vec<Timing>,
}

impl Laps {
    pub fn start() -> Self {
        let now = Instant::now();
        Self { start: now, last: now, timings: Vec::new() }
    }

    pub fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.timings.push(Timing { stage: stage.to_string(), seconds: (now - self.last).as_secs_f64() });
        self.last = now;
    }

    /// Closes a lap that ran the estimator: its stages are recorded
    /// individually and the rest of the lap goes to `rest`.
    pub fn lap_with_stages(&mut self, stages: &[StageTiming], rest: &str) {
        let now = Instant::now();
        let elapsed = (now - self.last).as_secs_f64();
        let inner: f64 = stages.iter().map(|t| t.seconds).sum();
        self.timings.push(Timing { stage: rest.to_string(), seconds: (elapsed - inner).max(0.0) });
        self.timings.extend(stages.iter().map(|t| Timing { stage: t.stage.to_string(), seconds: t.seconds }));
        self.last = now;
    }
}
