//! Evaluation battery for synthetic datasets.
//!
//! [`evaluate_all`] produces a [`MetricReport`] with exactly five entries:
//! `distance`, `diversity`, `consistency`, `downstream_gain` and `privacy`.

mod privacy;
mod ridge;

use indexmap::IndexMap;
use rand::seq::index;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use privacy::{privacy_mia, KnnOcc, KnnOccParams, PrivacyResult};
pub use ridge::{RidgeAutoregressor, RidgeSpec};

use crate::dataset::train_holdout_split;
use crate::io::fmt_f64;
use crate::stats::{stat_distance, summarize, Norm, StatConfig};
use crate::{Error, Result, RngSeed, ScalerState, TimeSeriesDataset};

fn same_features(a: &TimeSeriesDataset, b: &TimeSeriesDataset) -> Result<()> {
    if a.n_features() != b.n_features() {
        return Err(Error::Dimension(format!("{} features vs {}", a.n_features(), b.n_features())));
    }
    Ok(())
}

/// Distance between the statistic vectors of `real` and `synth`.
pub fn similarity_metric(real: &TimeSeriesDataset, synth: &TimeSeriesDataset, cfg: &StatConfig, norm: Norm) -> Result<f64> {
    same_features(real, synth)?;
    stat_distance(&summarize(real, cfg)?, &summarize(synth, cfg)?, norm)
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`, computed on
/// integer counts over the common denominator `|a| |b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("KS statistic needs two non-empty samples".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as u128, b.len() as u128);
    let (mut i, mut j, mut sup) = (0usize, 0usize, 0u128);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        sup = sup.max((i as u128 * nb).abs_diff(j as u128 * na));
    }
    Ok(sup as f64 / (na * nb) as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiversityMode {
    /// One test per feature over all values.
    #[default]
    Pooled,
    /// One test per (feature, timestep) over the series.
    PerTimestep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiversityResult {
    pub mean: f64,
    pub max: f64,
    pub statistics: Vec<f64>,
}

/// KS statistics between the marginals of `real` and `synth`, aggregated by
/// mean and max.
pub fn diversity_metric(real: &TimeSeriesDataset, synth: &TimeSeriesDataset, mode: DiversityMode) -> Result<DiversityResult> {
    same_features(real, synth)?;
    let column = |ds: &TimeSeriesDataset, f: usize, t: Option<usize>| -> Vec<f64> {
        let data = ds.data();
        match t {
            None => data.index_axis(ndarray::Axis(2), f).iter().copied().collect(),
            Some(t) => data.slice(ndarray::s![.., t, f]).to_vec(),
        }
    };
    let mut statistics = Vec::new();
    for f in 0..real.n_features() {
        match mode {
            DiversityMode::Pooled => statistics.push(ks_statistic(&column(real, f, None), &column(synth, f, None))?),
            DiversityMode::PerTimestep => {
                if real.len_t() != synth.len_t() {
                    return Err(Error::Dimension(format!("T = {} vs {}", real.len_t(), synth.len_t())));
                }
                for t in 0..real.len_t() {
                    statistics.push(ks_statistic(&column(real, f, Some(t)), &column(synth, f, Some(t)))?);
                }
            }
        }
    }
    let mean = statistics.iter().sum::<f64>() / statistics.len() as f64;
    let max = statistics.iter().copied().fold(0.0, f64::max);
    Ok(DiversityResult { mean, max, statistics })
}

/// Fraction of ordered model pairs ranked the same way by `real` and `synth`
/// scores. Differences within `tie_tol` count as ties.
pub fn consistency_from_scores(real: &[f64], synth: &[f64], tie_tol: f64) -> Result<f64> {
    let m = real.len();
    if m < 2 || synth.len() != m {
        return Err(Error::Precondition(format!("need >= 2 paired scores, got {} and {}", m, synth.len())));
    }
    let sign = |d: f64| if d.abs() <= tie_tol { 0 } else if d > 0.0 { 1 } else { -1 };
    let mut consistent = 0usize;
    for i in 0..m {
        for j in 0..m {
            if i != j && sign(real[i] - real[j]) == sign(synth[i] - synth[j]) {
                consistent += 1;
            }
        }
    }
    Ok(consistent as f64 / (m * (m - 1)) as f64)
}

/// Fits every model on real and on synth training data and compares the
/// rankings of their test MSEs.
pub fn predictive_consistency(
    models: &[RidgeSpec],
    real_train: &TimeSeriesDataset,
    real_test: &TimeSeriesDataset,
    synth_train: &TimeSeriesDataset,
    synth_test: &TimeSeriesDataset,
    tie_tol: f64,
) -> Result<f64> {
    if models.len() < 2 {
        return Err(Error::Precondition("predictive consistency needs at least two models".into()));
    }
    let mut real = Vec::with_capacity(models.len());
    let mut synth = Vec::with_capacity(models.len());
    for &spec in models {
        real.push(RidgeAutoregressor::fit(spec, &[real_train])?.mse(real_test)?);
        synth.push(RidgeAutoregressor::fit(spec, &[synth_train])?.mse(synth_test)?);
    }
    consistency_from_scores(&real, &synth, tie_tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainEstimate {
    pub mean: f64,
    /// Sample standard deviation over splits; 0 for a single split.
    pub std: f64,
    pub gains: Vec<f64>,
}

/// `MSE(real only) - MSE(real ∪ synth)` on `real_test`. With one split the
/// whole of `real_train` is used; otherwise each split draws 80% of its
/// series.
pub fn downstream_gain(
    real_train: &TimeSeriesDataset,
    real_test: &TimeSeriesDataset,
    synth: &TimeSeriesDataset,
    spec: RidgeSpec,
    n_splits: usize,
    seed: RngSeed,
) -> Result<GainEstimate> {
    if n_splits == 0 {
        return Err(Error::Precondition("n_splits must be >= 1".into()));
    }
    same_features(real_train, synth)?;
    let n = real_train.n_series();
    let mut gains = Vec::with_capacity(n_splits);
    for s in 0..n_splits {
        let subset = if n_splits == 1 {
            real_train.clone()
        } else {
            let k = ((0.8 * n as f64).round() as usize).clamp(1, n);
            let mut idx = index::sample(&mut seed.derive(s as u64).rng(), n, k).into_vec();
            idx.sort_unstable();
            real_train.select(&idx)?
        };
        let base = RidgeAutoregressor::fit(spec, &[&subset])?.mse(real_test)?;
        let aug = RidgeAutoregressor::fit(spec, &[&subset, synth])?.mse(real_test)?;
        gains.push(base - aug);
    }
    let mean = gains.iter().sum::<f64>() / gains.len() as f64;
    let std = if gains.len() > 1 {
        (gains.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (gains.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(GainEstimate { mean, std, gains })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherBetter,
    LowerBetter,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricEntry {
    /// `None` only when the metric was skipped.
    pub score: Option<f64>,
    pub direction: Direction,
    pub components: IndexMap<String, f64>,
    pub config_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MetricReport {
    pub entries: IndexMap<String, MetricEntry>,
}

impl MetricReport {
    pub const NAMES: [&'static str; 5] = ["distance", "diversity", "consistency", "downstream_gain", "privacy"];

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(s)?;
        for (name, e) in &r.entries {
            match (e.score, &e.skipped) {
                (Some(v), None) if v.is_finite() => {}
                (None, Some(_)) => {}
                _ => return Err(Error::Config(format!("metric {name} needs a finite score or a skip reason"))),
            }
        }
        Ok(r)
    }

    pub fn csv_header() -> String {
        let mut cols: Vec<&str> = Self::NAMES.to_vec();
        cols.push("config_digest");
        cols.join(",")
    }

    /// Scores in [`Self::NAMES`] order followed by the shared digest. Skipped
    /// metrics leave an empty cell.
    pub fn csv_row(&self) -> String {
        let mut cells: Vec<String> = Self::NAMES
            .iter()
            .map(|n| self.entries.get(*n).and_then(|e| e.score).map_or_else(String::new, fmt_f64))
            .collect();
        cells.push(self.entries.values().next().map_or_else(String::new, |e| e.config_digest.clone()));
        cells.join(",")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// `None`: the default statistic set sized to `T`.
    pub stat_config: Option<StatConfig>,
    pub norm: Norm,
    pub diversity_mode: DiversityMode,
    pub consistency_models: Vec<RidgeSpec>,
    pub tie_tol: f64,
    pub downstream_model: RidgeSpec,
    pub n_splits: usize,
    pub privacy: KnnOccParams,
    /// Min-max scale every dataset with ranges fitted on `real_train`.
    pub scale: bool,
    /// Share of synth held out as the synthetic test set for consistency.
    pub synth_test_fraction: f64,
    pub seed: RngSeed,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            stat_config: None,
            norm: Norm::L2,
            diversity_mode: DiversityMode::Pooled,
            consistency_models: [2, 4, 8].map(|w| RidgeSpec { window: w, lambda: 1e-3 }).to_vec(),
            tie_tol: 1e-9,
            downstream_model: RidgeSpec::default(),
            n_splits: 10,
            privacy: KnnOccParams::default(),
            scale: true,
            synth_test_fraction: 0.2,
            seed: RngSeed(0),
        }
    }
}

impl EvalConfig {
    /// Defaults with every ridge window shortened to fit series of length `t`.
    pub fn for_len(t: usize) -> Self {
        let mut cfg = Self::default();
        let max_w = t.saturating_sub(1).max(1);
        cfg.downstream_model.window = cfg.downstream_model.window.min(max_w);
        let mut windows: Vec<usize> = cfg.consistency_models.iter().map(|m| m.window.min(max_w)).collect();
        windows.dedup();
        if windows.len() < 2 && max_w >= 2 {
            windows = vec![1, max_w];
        }
        cfg.consistency_models = windows.into_iter().map(|w| RidgeSpec { window: w, lambda: 1e-3 }).collect();
        cfg
    }

    fn digest(&self, metric: &str) -> String {
        let mut h = Sha256::new();
        h.update(metric.as_bytes());
        h.update(serde_json::to_string(self).expect("config serializes").as_bytes());
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Runs all five metrics. `real_test` doubles as the privacy holdout.
pub fn evaluate_all(
    real_train: &TimeSeriesDataset,
    real_test: &TimeSeriesDataset,
    synth: &TimeSeriesDataset,
    cfg: &EvalConfig,
) -> Result<MetricReport> {
    evaluate_with_holdout(real_train, real_test, synth, Some(real_test), cfg)
}

/// [`evaluate_all`] with an explicit non-member set for the privacy attack;
/// without one the privacy entry is skipped.
pub fn evaluate_with_holdout(
    real_train: &TimeSeriesDataset,
    real_test: &TimeSeriesDataset,
    synth: &TimeSeriesDataset,
    real_holdout: Option<&TimeSeriesDataset>,
    cfg: &EvalConfig,
) -> Result<MetricReport> {
    let shape = |ds: &TimeSeriesDataset| (ds.len_t(), ds.n_features());
    for (name, ds) in [("real_test", Some(real_test)), ("synth", Some(synth)), ("real_holdout", real_holdout)] {
        if let Some(ds) = ds.filter(|ds| shape(ds) != shape(real_train)) {
            return Err(Error::Dimension(format!("{name} windows {:?} vs real_train {:?}", shape(ds), shape(real_train))));
        }
    }
    let scaler = cfg.scale.then(|| ScalerState::fit(real_train));
    let prep = |ds: &TimeSeriesDataset| match &scaler {
        Some(s) => s.transform(ds),
        None => Ok(ds.clone()),
    };
    let (train, test, synth) = (prep(real_train)?, prep(real_test)?, prep(synth)?);
    let holdout = real_holdout.map(prep).transpose()?;
    let scaled = f64::from(u8::from(cfg.scale));
    let stat_cfg = cfg.stat_config.clone().unwrap_or_else(|| StatConfig::default_for_len(train.len_t()));
    let mut entries = IndexMap::new();
    let mut push = |name: &str, score: f64, direction, mut components: IndexMap<String, f64>| -> Result<()> {
        if !score.is_finite() {
            return Err(Error::Numeric(format!("metric {name} evaluated to {score}")));
        }
        components.insert("minmax_scaled".into(), scaled);
        entries.insert(
            name.to_string(),
            MetricEntry { score: Some(score), direction, components, config_digest: cfg.digest(name), skipped: None },
        );
        Ok(())
    };

    let distance = similarity_metric(&train, &synth, &stat_cfg, cfg.norm)?;
    push("distance", distance, Direction::LowerBetter, IndexMap::new())?;

    let div = diversity_metric(&train, &synth, cfg.diversity_mode)?;
    push("diversity", div.mean, Direction::LowerBetter, IndexMap::from([("mean".into(), div.mean), ("max".into(), div.max)]))?;

    let (synth_train, synth_test) = train_holdout_split(&synth, cfg.synth_test_fraction, cfg.seed.derive(1))?;
    let pc = predictive_consistency(&cfg.consistency_models, &train, &test, &synth_train, &synth_test, cfg.tie_tol)?;
    push("consistency", pc, Direction::HigherBetter, IndexMap::from([("n_models".into(), cfg.consistency_models.len() as f64)]))?;

    let gain = downstream_gain(&train, &test, &synth, cfg.downstream_model, cfg.n_splits, cfg.seed.derive(2))?;
    push("downstream_gain", gain.mean, Direction::HigherBetter, IndexMap::from([("std".into(), gain.std), ("n_splits".into(), cfg.n_splits as f64)]))?;

    match holdout {
        Some(holdout) => {
            let p = privacy_mia(&train, &holdout, &synth, cfg.privacy, cfg.seed.derive(3))?;
            push(
                "privacy",
                p.score,
                Direction::HigherBetter,
                IndexMap::from([
                    ("precision".into(), p.precision),
                    ("n_declared".into(), p.n_declared as f64),
                    ("chance_level".into(), f64::from(u8::from(p.chance_level))),
                ]),
            )?;
        }
        None => {
            entries.insert(
                "privacy".into(),
                MetricEntry {
                    score: None,
                    direction: Direction::HigherBetter,
                    components: IndexMap::from([("minmax_scaled".into(), scaled)]),
                    config_digest: cfg.digest("privacy"),
                    skipped: Some("no real holdout set supplied".into()),
                },
            );
        }
    }
    Ok(MetricReport { entries })
}
