use std::path::PathBuf;

use clap::Args;
use ndarray::{Array2, Axis};
use svd_ifa::simulate::{generate_items, generate_ordinal, generate_responses};
use svd_ifa::{LinkFunction, ResponseMatrix, SimulationScenario};

use super::LinkArg;
use crate::error::{flagged, CliError};
use crate::io::{self, MISSING};
use crate::manifest::{Laps, RunManifest};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of factors
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// Number of items
    #[arg(long, default_value_t = 200)]
    pub j: usize,
    /// Number of persons [default: 20 J]
    #[arg(long)]
    pub n: Option<usize>,
    /// Correlation between every pair of factors
    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,
    /// Probability that a cell is missing (completely at random)
    #[arg(long, value_name = "RATE", default_value_t = 0.0)]
    pub missing: f64,
    /// Draw graded responses with categories 0..=T
    #[arg(long, value_name = "T")]
    pub ordinal: Option<u16>,
    /// Gap between consecutive ordinal thresholds
    #[arg(long, default_value_t = 1.0)]
    pub spread: f64,
    #[arg(long, value_enum, default_value_t = LinkArg::Logistic)]
    pub link: LinkArg,
    /// Most factors any one item loads on [default: min(3, K)]
    #[arg(long)]
    pub q_max: Option<usize>,
    /// Draw every item independently instead of repeating a 200-item block
    #[arg(long)]
    pub no_tiling: bool,
    /// Seed for item parameters
    #[arg(long)]
    pub item_seed: u64,
    /// Seed for persons, responses and the missingness mask
    #[arg(long)]
    pub person_seed: u64,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

impl SimulateArgs {
    fn scenario(&self) -> Result<SimulationScenario, CliError> {
        let mut s = SimulationScenario::new(self.k, self.j)
            .with_correlation(self.rho)
            .with_link(self.link.into())
            .with_seeds(self.item_seed, self.person_seed);
        if let Some(n) = self.n {
            s = s.with_persons(n);
        }
        if let Some(q) = self.q_max {
            s.q_max_active = q;
        }
        if self.no_tiling {
            s = s.with_tiling(false);
        }
        s.validate().map_err(flagged("scenario"))?;
        Ok(s)
    }
}

fn response_rows(responses: &ResponseMatrix) -> Vec<Vec<String>> {
    let (values, mask) = (responses.values(), responses.mask());
    values
        .outer_iter()
        .zip(mask.outer_iter())
        .map(|(values, mask)| {
            values
                .iter()
                .zip(mask.iter())
                .map(|(&y, &seen)| if seen { y.to_string() } else { MISSING.to_string() })
                .collect()
        })
        .collect()
}

pub fn run(args: &SimulateArgs) -> Result<(), CliError> {
    let mut laps = Laps::start();
    let mut manifest = RunManifest::new("simulate");
    let scenario = args.scenario()?;
    if args.ordinal.is_some() && args.missing != 0.0 {
        return Err(CliError::config("--missing: not supported together with --ordinal"));
    }
    if !(0.0..1.0).contains(&args.missing) {
        return Err(CliError::config(format!("--missing: rate must lie in [0, 1), got {}", args.missing)));
    }
    let items = generate_items(&scenario).map_err(flagged("scenario"))?;
    let (responses, intercepts, thetas, probabilities) = match args.ordinal {
        Some(levels) => {
            let (truth, responses) =
                generate_ordinal(&scenario, &items, levels, args.spread).map_err(flagged("--ordinal"))?;
            (responses, truth.thresholds, truth.thetas, None)
        }
        None => {
            let sim = generate_responses(&scenario, &items, args.missing).map_err(flagged("--missing"))?;
            let intercepts = sim.truth.intercepts.clone().insert_axis(Axis(1));
            (sim.responses, intercepts, sim.truth.thetas, Some(sim.truth.probabilities))
        }
    };
    laps.lap("generate");

    io::create_dir(&args.out)?;
    let mut write = |name: &str, matrix: &Array2<f64>| -> Result<(), CliError> {
        io::write_matrix(&args.out.join(name), matrix.view())?;
        manifest.outputs.push(name.to_string());
        Ok(())
    };
    write("truth_loadings.csv", &items.loadings)?;
    write("truth_intercepts.csv", &intercepts)?;
    write("truth_thetas.csv", &thetas)?;
    if let Some(p) = &probabilities {
        write("truth_probabilities.csv", p)?;
    }
    io::write_rows(&args.out.join("responses.csv"), None, response_rows(&responses))?;
    let mask = responses.mask();
    let mask_rows = mask.outer_iter().map(|row| row.iter().map(|&m| u8::from(m).to_string()).collect::<Vec<_>>());
    io::write_rows(&args.out.join("mask.csv"), None, mask_rows)?;
    manifest.outputs.push("responses.csv".into());
    manifest.outputs.push("mask.csv".into());
    laps.lap("write_output");

    manifest.seeds.insert("item".into(), scenario.item_seed);
    manifest.seeds.insert("person".into(), scenario.person_seed);
    manifest.set("n_factors", scenario.n_factors);
    manifest.set("n_items", scenario.n_items);
    manifest.set("n_persons", scenario.n_persons);
    manifest.set("latent_correlation", scenario.latent_correlation);
    let covariance: Vec<Vec<f64>> = scenario.latent_covariance().outer_iter().map(|r| r.to_vec()).collect();
    manifest.set("latent_covariance", serde_json::to_value(covariance).unwrap_or_default());
    manifest.set("link", LinkFunction::from(args.link).name());
    manifest.set("q_max_active", scenario.q_max_active);
    manifest.set("tile_items", scenario.tile_items);
    manifest.set("missing_rate", args.missing);
    if let Some(levels) = args.ordinal {
        manifest.set("n_categories", levels);
        manifest.set("threshold_spread", args.spread);
    }
    manifest.finish(laps, &args.out)?;
    Ok(())
}
