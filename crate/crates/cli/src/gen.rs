use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use rand::Rng;
use tsforge::abc::{calibrate_epsilon, rejection_sample, RejectionConfig};
use tsforge::generators::{priors_from_json, simulate, Prior, Priors, SimulatorSpec};
use tsforge::io::{fmt_f64, read_csv_path, read_labels_csv_path, write_csv_path};
use tsforge::neural::{
    gan_generate, gan_train, vae_generate, vae_train, AdamConfig, Checkpoint, Conditioning, GanConfig, GanModel,
    TrainConfig, VaeConfig, VaeModel,
};
use tsforge::stats::StatConfig;
use tsforge::{Error, RngSeed, ScalerState, TimeSeriesDataset};

use crate::{parse_list, write_text, CliError, CliResult};

#[derive(Args)]
pub struct GenArgs {
    /// vae, gan, cgan, simulator:sine_const or simulator:gp
    #[arg(long)]
    architecture_type: String,
    /// Real data CSV. Optional for simulators (prior sampling).
    #[arg(long)]
    source_data: Option<PathBuf>,
    /// Label CSV (`series_id,label` or `series_id,t,label`) overriding any label column.
    #[arg(long)]
    source_data_labels: Option<PathBuf>,
    #[arg(long)]
    dest_data: PathBuf,
    /// Series to generate [default: as many as the source, else 100]
    #[arg(long)]
    n_samples: Option<usize>,
    /// 0 writes the untrained model's output
    #[arg(long, default_value_t = 100)]
    n_epochs: usize,
    #[arg(long, default_value_t = 8)]
    latent_dim: usize,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    /// Adam learning rate
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    /// KL weight (vae)
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    /// Hidden layer widths, comma-separated
    #[arg(long, default_value = "64")]
    hidden: String,
    #[arg(long, env = "TSFORGE_SEED", default_value_t = 0)]
    seed: u64,
    /// Per-epoch losses (neural) or accepted ABC particles (simulators) [default: <dest-data>.loss.csv]
    #[arg(long)]
    loss_history: Option<PathBuf>,
    /// Trained model JSON (neural architectures only)
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Simulator priors JSON, e.g. {"max_scale": {"uniform": [9, 11]}}
    #[arg(long)]
    priors: Option<PathBuf>,
    /// Series length for simulators without source data
    #[arg(long, default_value_t = 100)]
    len_t: usize,
    /// Feature count for simulators without source data
    #[arg(long, default_value_t = 1)]
    n_features: usize,
    /// ABC particles to accept
    #[arg(long, default_value_t = 20)]
    abc_particles: usize,
    /// Share of pilot draws the ABC threshold accepts
    #[arg(long, default_value_t = 0.1)]
    abc_quantile: f64,
    /// Pilot draws used to calibrate the ABC threshold
    #[arg(long, default_value_t = 200)]
    abc_pilot: usize,
    #[arg(long, default_value_t = 10_000)]
    abc_max_attempts: usize,
}

fn load_source(a: &GenArgs) -> CliResult<Option<TimeSeriesDataset>> {
    let Some(path) = &a.source_data else { return Ok(None) };
    let mut ds = read_csv_path(path)?;
    if let Some(lp) = &a.source_data_labels {
        let labels = read_labels_csv_path(lp, ds.n_series(), ds.len_t())?;
        ds = ds.with_labels(labels)?;
    }
    Ok(Some(ds))
}

pub fn run(a: GenArgs) -> CliResult {
    let source = load_source(&a)?;
    let seed = RngSeed(a.seed);
    let n = a.n_samples.unwrap_or(source.as_ref().map_or(100, |s| s.n_series()));
    if n == 0 {
        return Err(CliError::Usage("--n-samples must be >= 1".into()));
    }
    let history = a.loss_history.clone().unwrap_or_else(|| a.dest_data.with_extension("loss.csv"));
    let arch = a.architecture_type.as_str();
    let (out, history_csv) = match arch {
        "vae" | "gan" | "cgan" => {
            let src = source.ok_or_else(|| CliError::Usage(format!("{arch} needs --source-data")))?;
            neural(&a, arch, &src, n, seed)?
        }
        _ => match arch.strip_prefix("simulator:") {
            Some(name) => simulator(&a, name, source.as_ref(), n, seed)?,
            None => {
                return Err(CliError::Usage(format!(
                    "unknown architecture {arch:?}; expected vae, gan, cgan, simulator:sine_const or simulator:gp"
                )))
            }
        },
    };
    write_csv_path(&out, &a.dest_data)?;
    write_text(&history, &history_csv)?;
    Ok(())
}

fn neural(a: &GenArgs, arch: &str, src: &TimeSeriesDataset, n: usize, seed: RngSeed) -> CliResult<(TimeSeriesDataset, String)> {
    let hidden: Vec<usize> = parse_list(&a.hidden, "hidden width")?;
    let scaler = ScalerState::fit(src);
    let scaled = scaler.transform(src)?;
    let (_, t, d) = src.dim();
    let train = TrainConfig { epochs: a.n_epochs, batch_size: a.batch_size, adam: AdamConfig { lr: a.lr, ..Default::default() } };
    let mut hist = String::new();
    let (generated, checkpoint) = if arch == "vae" {
        let cfg = VaeConfig { latent_dim: a.latent_dim, hidden, beta: a.beta };
        let model = VaeModel::new(t, d, &cfg, seed.derive(0))?;
        let (model, losses) = vae_train(&model, &scaled, &train, seed.derive(1))?;
        hist.push_str("epoch,loss\n");
        for (e, l) in losses.iter().enumerate() {
            writeln!(hist, "{e},{}", fmt_f64(*l)).expect("string write");
        }
        (vae_generate(&model, n, seed.derive(2))?, Checkpoint::Vae(model))
    } else {
        let cond = if arch == "cgan" {
            Conditioning::from_labels(scaled.labels())
                .map_err(|_| CliError::Usage("cgan needs labels: a label column or --source-data-labels".into()))?
        } else {
            Conditioning::None
        };
        let unlabelled;
        let train_set = if arch == "gan" && !scaled.labels().is_none() {
            unlabelled = TimeSeriesDataset::new(scaled.data().clone())?;
            &unlabelled
        } else {
            &scaled
        };
        let cfg = GanConfig { latent_dim: a.latent_dim, hidden, ..Default::default() };
        let model = GanModel::new(t, d, cond, &cfg, seed.derive(0))?;
        let (model, losses) = gan_train(&model, train_set, &train, seed.derive(1))?;
        hist.push_str("epoch,d_loss,g_loss\n");
        for (e, l) in losses.iter().enumerate() {
            writeln!(hist, "{e},{},{}", fmt_f64(l.d_loss), fmt_f64(l.g_loss)).expect("string write");
        }
        (gan_generate(&model, n, None, seed.derive(2))?, Checkpoint::Gan(model))
    };
    if let Some(path) = &a.checkpoint {
        write_text(path, &checkpoint.to_json()?)?;
    }
    let out = scaler.inverse(&generated)?.with_feature_names(src.feature_names().to_vec())?;
    Ok((out, hist))
}

fn default_priors(name: &str) -> Priors {
    match name {
        "gp" => {
            let mut p = Priors::new();
            p.insert("lengthscale".into(), Prior::uniform(1.0, 10.0));
            p.insert("variance".into(), Prior::uniform(0.5, 2.0));
            p
        }
        _ => SimulatorSpec::default_sine_const_priors(),
    }
}

fn simulator(
    a: &GenArgs,
    name: &str,
    source: Option<&TimeSeriesDataset>,
    n: usize,
    seed: RngSeed,
) -> CliResult<(TimeSeriesDataset, String)> {
    let priors = match &a.priors {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
            priors_from_json(&text)?
        }
        None => default_priors(name),
    };
    let (t, d) = source.map_or((a.len_t, a.n_features), |s| (s.len_t(), s.n_features()));
    let spec = match name {
        "sine_const" => SimulatorSpec::sine_const(t, d, priors, 0.1, false)?,
        "gp" => SimulatorSpec::gaussian_process(t, d, priors)?,
        other => return Err(CliError::Usage(format!("unknown simulator {other:?}; expected sine_const or gp"))),
    };
    let mut hist = Vec::new();
    let thetas: Vec<Vec<f64>> = match source {
        Some(obs) => {
            let mut cfg = RejectionConfig {
                n_particles: a.abc_particles,
                max_attempts: a.abc_max_attempts,
                sim_batch: obs.n_series().min(50),
                stat_cfg: StatConfig::default_for_len(t),
                ..Default::default()
            };
            cfg.epsilon = calibrate_epsilon(&spec, obs, &cfg, a.abc_quantile, a.abc_pilot, seed.derive(0))?;
            let post = match rejection_sample(&spec, obs, &cfg, seed.derive(1)) {
                Ok(p) => p,
                Err(Error::BudgetExhausted { partial, .. }) if !partial.particles.is_empty() => *partial,
                Err(e) => return Err(e.into()),
            };
            post.write_csv(&mut hist)?;
            let mut pick = seed.derive(2).rng();
            (0..n).map(|_| post.particles[pick.random_range(0..post.particles.len())].clone()).collect()
        }
        None => {
            let mut rng = seed.derive(1).rng();
            let thetas: Vec<Vec<f64>> = (0..n).map(|_| spec.draw_prior(&mut rng)).collect();
            let mut w = csv::Writer::from_writer(&mut hist);
            w.write_record(spec.param_names())?;
            for th in &thetas {
                w.write_record(th.iter().map(|v| fmt_f64(*v)))?;
            }
            w.flush()?;
            drop(w);
            thetas
        }
    };
    let parts = thetas
        .iter()
        .enumerate()
        .map(|(i, th)| simulate(&spec, th, 1, seed.derive(3).derive(i as u64)))
        .collect::<tsforge::Result<Vec<_>>>()?;
    let mut out = concat_all(parts)?;
    if let Some(s) = source {
        out = out.with_feature_names(s.feature_names().to_vec())?;
    }
    Ok((out, String::from_utf8(hist).expect("csv is utf-8")))
}

/// Pairwise concatenation, keeping the order of `parts`.
fn concat_all(mut parts: Vec<TimeSeriesDataset>) -> tsforge::Result<TimeSeriesDataset> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => a.concat(&b)?,
                None => a,
            });
        }
        parts = next;
    }
    Ok(parts.pop().expect("at least one part"))
}
