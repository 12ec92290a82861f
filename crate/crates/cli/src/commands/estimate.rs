use std::path::PathBuf;

use clap::Args;
use serde_json::json;
use svd_ifa::lowrank::{RANDOMIZED_MIN_ENTRIES, RANDOMIZED_SEED};
use svd_ifa::{estimate_binary, estimate_missing, estimate_ordinal};

use super::{load, record_data, DataArgs, ModelArgs};
use crate::error::CliError;
use crate::io;
use crate::manifest::{Laps, RunManifest};

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Number of latent factors
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Output directory
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Print the random seeds the run depends on
    #[arg(long)]
    pub seed_report: bool,
}

pub fn run(args: &EstimateArgs) -> Result<(), CliError> {
    let mut laps = Laps::start();
    let mut manifest = RunManifest::new("estimate");
    let data = load(&args.data)?;
    io::create_dir(&args.out)?;
    laps.lap("read_input");

    let responses = &data.responses;
    let config = args.model.config(args.k, "--k", responses)?;
    let (algorithm, result) = if args.data.ordinal.is_some() {
        ("ordinal", estimate_ordinal(responses, &config))
    } else if data.has_missing_marker {
        ("missing", estimate_missing(responses, &config))
    } else {
        ("binary", estimate_binary(responses, &config))
    };
    let est = result?;
    laps.lap_with_stages(&est.timings, "validate");

    let outputs = [("loadings.csv", &est.loadings), ("scores.csv", &est.scores), ("intercepts.csv", &est.intercepts)];
    for (name, matrix) in outputs {
        io::write_matrix(&args.out.join(name), matrix.view())?;
        manifest.outputs.push(name.to_string());
    }
    io::write_column(&args.out.join("singular_values.csv"), est.singular_values_std.view())?;
    manifest.outputs.push("singular_values.csv".to_string());
    laps.lap("write_output");

    let randomized = responses.n_persons() * responses.n_items() > RANDOMIZED_MIN_ENTRIES;
    manifest.seeds.insert("randomized_svd".into(), RANDOMIZED_SEED);
    manifest.set("algorithm", algorithm);
    manifest.set("n_factors", args.k);
    args.model.record(&mut manifest);
    record_data(&mut manifest, &data);
    manifest.set("epsilon_used", est.epsilon_used);
    manifest.set("k_tilde", est.k_tilde.clone());
    manifest.set("svd_path", if randomized { "randomized" } else { "dense" });
    manifest.set("invariant_violation", est.invariant_violation());

    if args.seed_report {
        let report = json!({ "randomized_svd_seed": RANDOMIZED_SEED, "randomized_svd_used": randomized });
        println!("{report}");
    }
    manifest.finish(laps, &args.out)?;
    Ok(())
}
