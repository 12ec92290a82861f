use std::path::PathBuf;

use clap::Args;
use svd_ifa::alignment_loss;

use crate::error::{flagged, CliError};
use crate::io;
use crate::manifest::{Laps, RunManifest};

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Reference (true) loadings, J x K
    #[arg(long, value_name = "FILE")]
    pub reference: PathBuf,
    /// Estimated loadings, J x K
    #[arg(long, value_name = "FILE")]
    pub estimate: PathBuf,
    /// Output directory for the rotation and aligned loadings
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
}

pub fn run(args: &EvaluateArgs) -> Result<(), CliError> {
    let mut laps = Laps::start();
    let mut manifest = RunManifest::new("evaluate");
    let reference = io::read_reals(&args.reference, "--reference")?;
    let estimate = io::read_reals(&args.estimate, "--estimate")?;
    manifest.inputs.push(io::checksum(&args.reference, "--reference")?);
    manifest.inputs.push(io::checksum(&args.estimate, "--estimate")?);
    io::create_dir(&args.out)?;
    laps.lap("read_input");

    let result = alignment_loss(reference.view(), estimate.view()).map_err(flagged("--estimate"))?;
    laps.lap("align");

    io::write_matrix(&args.out.join("rotation.csv"), result.rotation.view())?;
    io::write_matrix(&args.out.join("aligned_loadings.csv"), result.aligned_loadings.view())?;
    manifest.outputs.extend(["rotation.csv".to_string(), "aligned_loadings.csv".to_string()]);
    laps.lap("write_output");

    println!("loss={}", io::format_real(result.loss));
    manifest.set("loss", result.loss);
    manifest.set("n_items", reference.nrows());
    manifest.set("n_factors", reference.ncols());
    manifest.finish(laps, &args.out)?;
    Ok(())
}
