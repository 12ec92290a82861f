pub mod bench;
pub mod estimate;
pub mod evaluate;
pub mod scree;
pub mod simulate;

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde_json::json;
use svd_ifa::{EstimationConfig, LinkFunction, ResponseMatrix, TruncationPolicy};

use crate::error::{flagged, CliError};
use crate::io;
use crate::manifest::{InputChecksum, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LinkArg {
    Logistic,
    Probit,
}

impl From<LinkArg> for LinkFunction {
    fn from(arg: LinkArg) -> Self {
        match arg {
            LinkArg::Logistic => LinkFunction::Logistic,
            LinkArg::Probit => LinkFunction::Probit,
        }
    }
}

/// Where the responses come from.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// Responses: headerless CSV of categories, `NA` for a missing cell
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Headerless 0/1 CSV, 1 where a response was observed
    #[arg(long, value_name = "FILE")]
    pub mask: Option<PathBuf>,
    /// Treat responses as ordinal with categories 0..=T
    #[arg(long, value_name = "T")]
    pub ordinal: Option<u16>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decay {
    pub gamma0: f64,
    pub gamma1: f64,
}

fn parse_decay(text: &str) -> Result<Decay, String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [g0, g1] => {
            let gamma0 = g0.parse().map_err(|e| format!("gamma0 {g0:?}: {e}"))?;
            let gamma1 = g1.parse().map_err(|e| format!("gamma1 {g1:?}: {e}"))?;
            Ok(Decay { gamma0, gamma1 })
        }
        _ => Err(format!("expected G0,G1, found {text:?}")),
    }
}

/// Estimator settings shared by `estimate` and `scree`.
#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = LinkArg::Logistic)]
    pub link: LinkArg,
    /// Constant truncation level for probabilities [default: 1e-4]
    #[arg(long, conflicts_with = "epsilon_decay")]
    pub epsilon: Option<f64>,
    /// Truncation level G0 * J^(-G1)
    #[arg(long, value_name = "G0,G1", value_parser = parse_decay)]
    pub epsilon_decay: Option<Decay>,
    /// Multiplier in the first-stage rank threshold, in (1, 1.5)
    #[arg(long, default_value_t = 1.01)]
    pub threshold_const: f64,
}

impl ModelArgs {
    fn truncation(&self) -> TruncationPolicy {
        match (self.epsilon, self.epsilon_decay) {
            (Some(eps), _) => TruncationPolicy::Constant(eps),
            (None, Some(Decay { gamma0, gamma1 })) => TruncationPolicy::PowerDecay { gamma0, gamma1 },
            (None, None) => TruncationPolicy::default(),
        }
    }

    /// Builds the configuration and checks it against the data, naming
    /// `factors_flag` when the factor count is at fault.
    pub fn config(
        &self,
        n_factors: usize,
        factors_flag: &'static str,
        data: &ResponseMatrix,
    ) -> Result<EstimationConfig, CliError> {
        let (n, j) = (data.n_persons(), data.n_items());
        EstimationConfig::new(n_factors).validate(n, j).map_err(flagged(factors_flag))?;
        let config =
            EstimationConfig::new(n_factors).with_link(self.link.into()).with_threshold_constant(self.threshold_const);
        config.validate(n, j).map_err(flagged("--threshold-const"))?;
        let config = config.with_truncation(self.truncation());
        let eps_flag = if self.epsilon_decay.is_some() { "--epsilon-decay" } else { "--epsilon" };
        config.validate(n, j).map_err(flagged(eps_flag))?;
        Ok(config)
    }

    pub fn record(&self, manifest: &mut RunManifest) {
        manifest.set("link", LinkFunction::from(self.link).name());
        let truncation = match self.truncation() {
            TruncationPolicy::Constant(eps) => json!({ "kind": "constant", "epsilon": eps }),
            TruncationPolicy::PowerDecay { gamma0, gamma1 } => {
                json!({ "kind": "power_decay", "gamma0": gamma0, "gamma1": gamma1 })
            }
        };
        manifest.set("truncation", truncation);
        manifest.set("threshold_constant", self.threshold_const);
    }
}

pub struct LoadedData {
    pub responses: ResponseMatrix,
    pub checksums: Vec<InputChecksum>,
    /// A mask file was given or the responses contain `NA`.
    pub has_missing_marker: bool,
}

pub fn load(args: &DataArgs) -> Result<LoadedData, CliError> {
    if args.mask.is_some() && args.ordinal.is_some() {
        return Err(CliError::config(
            "--mask: cannot be combined with --ordinal (ordinal estimation needs complete data)",
        ));
    }
    if args.ordinal == Some(0) {
        return Err(CliError::config("--ordinal: needs at least one level"));
    }
    let cells = io::read_responses(&args.input, "--input")?;
    let mut mask = cells.mapv(|c| c.is_some());
    let has_na = mask.iter().any(|&seen| !seen);
    if has_na && args.ordinal.is_some() {
        return Err(CliError::config(
            "--ordinal: responses contain NA cells, which ordinal estimation does not support",
        ));
    }
    let mut checksums = vec![io::checksum(&args.input, "--input")?];
    if let Some(path) = &args.mask {
        let given = io::read_mask(path, "--mask")?;
        if given.dim() != mask.dim() {
            return Err(CliError::input(format!(
                "--mask: mask is {}x{} but responses are {}x{}",
                given.nrows(),
                given.ncols(),
                mask.nrows(),
                mask.ncols()
            )));
        }
        mask.zip_mut_with(&given, |seen, &observed| *seen = *seen && observed);
        checksums.push(io::checksum(path, "--mask")?);
    }
    let values = cells.mapv(|c| c.unwrap_or(0));
    let responses = ResponseMatrix::new(values, mask, args.ordinal.unwrap_or(1)).map_err(flagged("--input"))?;
    Ok(LoadedData { responses, checksums, has_missing_marker: has_na || args.mask.is_some() })
}

pub fn record_data(manifest: &mut RunManifest, data: &LoadedData) {
    let r = &data.responses;
    manifest.set("n_persons", r.n_persons());
    manifest.set("n_items", r.n_items());
    manifest.set("n_categories", r.n_categories());
    manifest.set("observed_fraction", r.observed_count() as f64 / (r.n_persons() * r.n_items()) as f64);
    manifest.inputs = data.checksums.clone();
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_parsing() {
        assert_eq!(parse_decay("0.5, 0.01").unwrap(), Decay { gamma0: 0.5, gamma1: 0.01 });
        assert!(parse_decay("0.5").is_err());
        assert!(parse_decay("a,b").is_err());
    }
}
