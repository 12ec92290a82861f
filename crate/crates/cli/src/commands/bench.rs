//! Replicated simulation study over a scenario grid.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use rayon::prelude::*;
use svd_ifa::simulate::{generate_items, generate_responses, ItemParameters};
use svd_ifa::{
    alignment_loss, estimate, probability_mse, recover_probability_matrix, EstimationConfig, SimulationScenario,
};

use super::LinkArg;
use crate::error::{flagged, CliError};
use crate::io::{self, format_real};
use crate::manifest::{Laps, RunManifest};

pub const THREADS_VAR: &str = "SVD_IFA_THREADS";
const INVARIANT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Scenario grid, e.g. "k=4,8;j=200,400;rho=0,0.3" (keys k, j, rho, missing)
    #[arg(long)]
    pub grid: String,
    /// Replications per grid cell
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    /// Seed for item parameters, shared by all replications of a cell
    #[arg(long, default_value_t = 20_200_601)]
    pub item_seed: u64,
    /// Replication r uses person seed BASE + r
    #[arg(long, value_name = "BASE", default_value_t = 1000)]
    pub person_seed: u64,
    #[arg(long, value_enum, default_value_t = LinkArg::Logistic)]
    pub link: LinkArg,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub k: Vec<usize>,
    pub j: Vec<usize>,
    pub rho: Vec<f64>,
    pub missing: Vec<f64>,
}

fn parse_list<T: std::str::FromStr>(key: &str, text: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(|v| {
            let v = v.trim();
            v.parse().map_err(|_| CliError::config(format!("--grid: {key} has a malformed value {v:?}")))
        })
        .collect()
}

pub fn parse_grid(text: &str) -> Result<Grid, CliError> {
    let (mut k, mut j, mut rho, mut missing) = (None, None, None, None);
    for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, values) = part
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("--grid: expected key=values, found {part:?}")))?;
        let key = key.trim();
        let duplicate = match key {
            "k" => k.replace(parse_list(key, values)?).is_some(),
            "j" => j.replace(parse_list(key, values)?).is_some(),
            "rho" => rho.replace(parse_list(key, values)?).is_some(),
            "missing" => missing.replace(parse_list(key, values)?).is_some(),
            other => return Err(CliError::config(format!("--grid: unknown key {other:?}"))),
        };
        if duplicate {
            return Err(CliError::config(format!("--grid: key {key:?} given twice")));
        }
    }
    let k = k.ok_or_else(|| CliError::config("--grid: missing k"))?;
    let j = j.ok_or_else(|| CliError::config("--grid: missing j"))?;
    Ok(Grid { k, j, rho: rho.unwrap_or_else(|| vec![0.0]), missing: missing.unwrap_or_else(|| vec![0.0]) })
}

/// Sample quantile with linear interpolation between order statistics
/// (the usual "type 7" definition).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn quartiles(values: &[f64]) -> [f64; 3] {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    [quantile(&sorted, 0.25), quantile(&sorted, 0.5), quantile(&sorted, 0.75)]
}

struct Cell {
    scenario: SimulationScenario,
    missing: f64,
    items: ItemParameters,
}

struct Replication {
    cell: usize,
    rep: usize,
    person_seed: u64,
    loss: f64,
    probability_mse: f64,
    seconds: f64,
    invariant_violation: f64,
    stages: Vec<(&'static str, f64)>,
}

fn replicate(
    cells: &[Cell],
    cell: usize,
    rep: usize,
    person_base: u64,
    item_seed: u64,
) -> Result<Replication, CliError> {
    let c = &cells[cell];
    let person_seed = person_base + rep as u64;
    let scenario = c.scenario.clone().with_seeds(item_seed, person_seed);
    let sim = generate_responses(&scenario, &c.items, c.missing)?;
    let config = EstimationConfig::new(scenario.n_factors).with_link(scenario.link);
    let start = Instant::now();
    let est = estimate(&sim.responses, &config)?;
    let seconds = start.elapsed().as_secs_f64();
    let loss = alignment_loss(c.items.loadings.view(), est.loadings.view())?.loss;
    let probs = recover_probability_matrix(&est, scenario.link);
    let probability_mse = probability_mse(sim.truth.probabilities.view(), probs.view())?;
    Ok(Replication {
        cell,
        rep,
        person_seed,
        loss,
        probability_mse,
        seconds,
        invariant_violation: est.invariant_violation(),
        stages: est.timings.iter().map(|t| (t.stage, t.seconds)).collect(),
    })
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(text) = std::env::var(THREADS_VAR) {
        let threads: usize =
            text.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
                CliError::config(format!("{THREADS_VAR}: expected a positive integer, found {text:?}"))
            })?;
        builder = builder.num_threads(threads);
    }
    builder.build().map_err(|e| CliError::config(format!("{THREADS_VAR}: {e}")))
}

pub fn run(args: &BenchArgs) -> Result<(), CliError> {
    let mut laps = Laps::start();
    let mut manifest = RunManifest::new("bench");
    let grid = parse_grid(&args.grid)?;
    if args.reps == 0 {
        return Err(CliError::config("--reps: needs at least one replication"));
    }
    let pool = thread_pool()?;
    let mut cells = Vec::new();
    for &k in &grid.k {
        for &j in &grid.j {
            for &rho in &grid.rho {
                for &missing in &grid.missing {
                    if !(0.0..1.0).contains(&missing) {
                        return Err(CliError::config(format!("--grid: missing rate {missing} is outside [0, 1)")));
                    }
                    let scenario = SimulationScenario::new(k, j)
                        .with_correlation(rho)
                        .with_link(args.link.into())
                        .with_seeds(args.item_seed, args.person_seed);
                    scenario.validate().map_err(flagged("--grid"))?;
                    let items = generate_items(&scenario).map_err(flagged("--grid"))?;
                    cells.push(Cell { scenario, missing, items });
                }
            }
        }
    }
    io::create_dir(&args.out)?;
    laps.lap("setup");

    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..args.reps).map(move |r| (c, r))).collect();
    let results: Vec<Replication> = pool.install(|| {
        jobs.par_iter()
            .map(|&(c, r)| replicate(&cells, c, r, args.person_seed, args.item_seed))
            .collect::<Result<_, _>>()
    })?;
    laps.lap("run_grid");

    let describe = |c: &Cell| {
        let s = &c.scenario;
        vec![
            s.n_factors.to_string(),
            s.n_items.to_string(),
            s.n_persons.to_string(),
            format_real(s.latent_correlation),
            format_real(c.missing),
        ]
    };
    let rep_header = [
        "k",
        "j",
        "n",
        "rho",
        "missing",
        "rep",
        "person_seed",
        "loss",
        "probability_mse",
        "seconds",
        "invariant_violation",
    ];
    let rep_rows = results.iter().map(|r| {
        let mut row = describe(&cells[r.cell]);
        row.extend([
            r.rep.to_string(),
            r.person_seed.to_string(),
            format_real(r.loss),
            format_real(r.probability_mse),
            format_real(r.seconds),
            format_real(r.invariant_violation),
        ]);
        row
    });
    io::write_rows(&args.out.join("replications.csv"), Some(&rep_header), rep_rows)?;

    let stage_rows = results.iter().flat_map(|r| {
        let base = describe(&cells[r.cell]);
        r.stages.iter().map(move |&(stage, seconds)| {
            let mut row = base.clone();
            row.extend([r.rep.to_string(), stage.to_string(), format_real(seconds)]);
            row
        })
    });
    let stage_header = ["k", "j", "n", "rho", "missing", "rep", "stage", "seconds"];
    io::write_rows(&args.out.join("stages.csv"), Some(&stage_header), stage_rows)?;

    let summary_header = [
        "k",
        "j",
        "n",
        "rho",
        "missing",
        "reps",
        "loss_q25",
        "loss_median",
        "loss_q75",
        "probability_mse_q25",
        "probability_mse_median",
        "probability_mse_q75",
        "seconds_q25",
        "seconds_median",
        "seconds_q75",
        "max_invariant_violation",
    ];
    let mut summary = Vec::new();
    let mut worst_violation = 0.0_f64;
    for (index, cell) in cells.iter().enumerate() {
        let mine: Vec<&Replication> = results.iter().filter(|r| r.cell == index).collect();
        let pick = |f: fn(&Replication) -> f64| quartiles(&mine.iter().map(|r| f(r)).collect::<Vec<_>>());
        let violation = mine.iter().map(|r| r.invariant_violation).fold(0.0, f64::max);
        worst_violation = worst_violation.max(violation);
        let (loss, mse, seconds) = (pick(|r| r.loss), pick(|r| r.probability_mse), pick(|r| r.seconds));
        let s = &cell.scenario;
        println!(
            "k={} j={} rho={} missing={}: median loss {:.6}, median probability mse {:.6}, median {:.3}s",
            s.n_factors, s.n_items, s.latent_correlation, cell.missing, loss[1], mse[1], seconds[1]
        );
        let mut row = describe(cell);
        row.push(mine.len().to_string());
        for stat in [loss, mse, seconds] {
            row.extend(stat.iter().map(|&x| format_real(x)));
        }
        row.push(format_real(violation));
        summary.push(row);
    }
    io::write_rows(&args.out.join("summary.csv"), Some(&summary_header), summary)?;
    manifest.outputs.extend(["replications.csv", "stages.csv", "summary.csv"].map(String::from));
    laps.lap("write_output");

    manifest.seeds.insert("item".into(), args.item_seed);
    manifest.seeds.insert("person_base".into(), args.person_seed);
    manifest.set("grid", args.grid.clone());
    manifest.set("reps", args.reps);
    manifest.set("threads", pool.current_num_threads());
    manifest.set("max_invariant_violation", worst_violation);
    manifest.finish(laps, &args.out)?;
    if worst_violation > INVARIANT_TOLERANCE {
        return Err(CliError::numerical(format!(
            "estimate invariants violated: worst relative deviation {worst_violation:e}"
        )));
    }
    Ok(())
}
