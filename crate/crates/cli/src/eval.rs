use std::path::PathBuf;

use clap::Args;
use tsforge::io::read_csv_path;
use tsforge::metrics::{evaluate_with_holdout, Direction, EvalConfig, MetricReport};
use tsforge::stats::{Norm, StatConfig};
use tsforge::RngSeed;

use crate::{write_text, CliError, CliResult};

#[derive(Args)]
pub struct EvalArgs {
    /// Real training data CSV
    #[arg(long)]
    real_data: PathBuf,
    #[arg(long)]
    synth_data: PathBuf,
    /// Real test CSV [default: --real-data itself]
    #[arg(long)]
    real_test: Option<PathBuf>,
    /// Real series never shown to the generator. Without it privacy is skipped.
    #[arg(long)]
    real_holdout: Option<PathBuf>,
    #[arg(long, default_value = "report.json")]
    report: PathBuf,
    /// Also write the report as a one-row CSV
    #[arg(long)]
    report_csv: Option<PathBuf>,
    /// Full evaluation config JSON; the flags below override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Summary-statistic config JSON
    #[arg(long)]
    stat_config: Option<PathBuf>,
    /// l1, l2 or linf
    #[arg(long)]
    norm: Option<String>,
    /// Downstream-gain resamples
    #[arg(long)]
    n_splits: Option<usize>,
    /// Score raw values instead of values min-max scaled on the real training data
    #[arg(long)]
    no_scale: bool,
    #[arg(long, env = "TSFORGE_SEED", default_value_t = 0)]
    seed: u64,
}

fn read_text(p: &PathBuf) -> CliResult<String> {
    std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))
}

pub fn run(a: EvalArgs) -> CliResult {
    let real = read_csv_path(&a.real_data)?;
    let synth = read_csv_path(&a.synth_data)?;
    if synth.n_features() != real.n_features() || synth.len_t() != real.len_t() {
        return Err(CliError::Usage(format!(
            "shape mismatch: real is [T={}, D={}], synth is [T={}, D={}]",
            real.len_t(),
            real.n_features(),
            synth.len_t(),
            synth.n_features()
        )));
    }
    let seed = RngSeed(a.seed);
    let mut cfg = match &a.config {
        Some(p) => serde_json::from_str(&read_text(p)?).map_err(|e| CliError::Usage(format!("bad --config: {e}")))?,
        None => EvalConfig::for_len(real.len_t()),
    };
    cfg.seed = seed;
    if let Some(p) = &a.stat_config {
        cfg.stat_config = Some(StatConfig::from_json(&read_text(p)?)?);
    }
    if let Some(n) = &a.norm {
        cfg.norm = n.parse::<Norm>()?;
    }
    if let Some(n) = a.n_splits {
        cfg.n_splits = n;
    }
    if a.no_scale {
        cfg.scale = false;
    }
    let test = match &a.real_test {
        Some(p) => read_csv_path(p)?,
        None => real.clone(),
    };
    let holdout = a.real_holdout.as_ref().map(read_csv_path).transpose()?;
    let report = evaluate_with_holdout(&real, &test, &synth, holdout.as_ref(), &cfg)?;
    write_text(&a.report, &report.to_json()?)?;
    if let Some(p) = &a.report_csv {
        write_text(p, &format!("{}\n{}\n", MetricReport::csv_header(), report.csv_row()))?;
    }
    for (name, e) in &report.entries {
        match (e.score, &e.skipped) {
            (Some(s), _) => {
                let dir = match e.direction {
                    Direction::HigherBetter => "higher is better",
                    Direction::LowerBetter => "lower is better",
                };
                println!("{name:<16} {s:>12.6}  ({dir})");
            }
            (None, reason) => println!("{name:<16} {:>12}  ({})", "skipped", reason.as_deref().unwrap_or("no reason given")),
        }
    }
    Ok(())
}
