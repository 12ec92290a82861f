use std::fs;
use std::path::PathBuf;

use clap::Args;
use svd_ifa::scree;

use super::{load, record_data, DataArgs, ModelArgs};
use crate::error::{flagged, CliError};
use crate::io::{self, format_real, MISSING};
use crate::manifest::{Laps, RunManifest};
use crate::svg;

#[derive(Debug, Args)]
pub struct ScreeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Input dimension: number of singular values to inspect (at least 2)
    #[arg(long)]
    pub kdag: usize,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Also draw the scree plot as SVG
    #[arg(long, value_name = "FILE")]
    pub svg: Option<PathBuf>,
    /// Output directory for scree.csv and the manifest
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
}

pub fn run(args: &ScreeArgs) -> Result<(), CliError> {
    let mut laps = Laps::start();
    let mut manifest = RunManifest::new("scree");
    if args.kdag < 2 {
        return Err(CliError::config(format!("--kdag: input dimension must be at least 2, got {}", args.kdag)));
    }
    let data = load(&args.data)?;
    io::create_dir(&args.out)?;
    laps.lap("read_input");

    let config = args.model.config(args.kdag, "--kdag", &data.responses)?.with_input_dim(args.kdag);
    let result = scree(&data.responses, &config).map_err(flagged("--kdag"))?;
    laps.lap("scree");

    let k_dagger = result.input_dim();
    let rows = (0..k_dagger).map(|i| {
        let gap = |series: &[f64]| series.get(i).map_or_else(|| MISSING.to_string(), |&x| format_real(x));
        vec![
            (i + 1).to_string(),
            format_real(result.standardized_values[i]),
            gap(&result.gap_ratios),
            gap(&result.gap_diffs),
            u8::from(i + 1 == result.suggested_k).to_string(),
        ]
    });
    let header = ["k", "sigma_std", "gap_ratio", "gap_diff", "suggested"];
    io::write_rows(&args.out.join("scree.csv"), Some(&header), rows)?;
    manifest.outputs.push("scree.csv".into());
    if let Some(path) = &args.svg {
        let plot = svg::scree_plot(&result.standardized_values, result.suggested_k);
        fs::write(path, plot).map_err(|e| CliError::io(path, e))?;
        manifest.outputs.push(path.display().to_string());
    }
    laps.lap("write_output");

    println!("suggested_k={}", result.suggested_k);
    manifest.set("input_dim", k_dagger);
    manifest.set("suggested_k", result.suggested_k);
    args.model.record(&mut manifest);
    record_data(&mut manifest, &data);
    manifest.finish(laps, &args.out)?;
    Ok(())
}
