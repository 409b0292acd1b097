//! Likelihood-free simulator calibration.
//!
//! [`rejection_sample`] keeps prior draws whose simulated data lands within
//! `epsilon` of the observed data; [`fit_simulator`] is a random-search
//! minimiser of the same discrepancy.
//!
//! Candidate `k` always uses the stream `seed.derive(k)`: its prior draw
//! and its simulation depend only on `(seed, k)`. Two runs differing only in
//! `epsilon` see identical candidates, and a larger budget extends a smaller
//! one.

use std::io::Write;

use serde::{Deserialize, Deserializer, Serialize};

use crate::generators::{simulate, SimulatorSpec};
use crate::io::fmt_f64;
use crate::stats::{stat_distance, summarize, Norm, StatConfig, StatVector};
use crate::{Error, Result, RngSeed, TimeSeriesDataset};

/// What the discrepancy compares.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscrepancyMode {
    /// Norm of the difference of summary-statistic vectors.
    #[default]
    Stats,
    /// Norm of the elementwise difference of the raw tensors. Needs
    /// `sim_batch == N_observed`.
    Raw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RejectionConfig {
    /// Accept when discrepancy < epsilon. JSON accepts `"inf"`.
    #[serde(deserialize_with = "de_epsilon", serialize_with = "ser_epsilon")]
    pub epsilon: f64,
    pub n_particles: usize,
    pub max_attempts: usize,
    /// Series simulated per candidate.
    pub sim_batch: usize,
    #[serde(default)]
    pub stat_cfg: StatConfig,
    #[serde(default)]
    pub norm: Norm,
    #[serde(default)]
    pub discrepancy: DiscrepancyMode,
}

fn de_epsilon<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Eps {
        Num(f64),
        Text(String),
    }
    match Eps::deserialize(de)? {
        Eps::Num(v) => Ok(v),
        Eps::Text(s) if matches!(s.to_ascii_lowercase().as_str(), "inf" | "infinity" | "+inf") => Ok(f64::INFINITY),
        Eps::Text(s) => Err(serde::de::Error::custom(format!("bad epsilon {s:?}"))),
    }
}

fn ser_epsilon<S: serde::Serializer>(v: &f64, ser: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        ser.serialize_str("inf")
    } else {
        ser.serialize_f64(*v)
    }
}

impl Default for RejectionConfig {
    fn default() -> Self {
        RejectionConfig {
            epsilon: 0.5,
            n_particles: 10,
            max_attempts: 10_000,
            sim_batch: 10,
            stat_cfg: StatConfig::default(),
            norm: Norm::L2,
            discrepancy: DiscrepancyMode::Stats,
        }
    }
}

impl RejectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) {
            return Err(Error::Config(format!("epsilon {} must be >= 0", self.epsilon)));
        }
        if self.n_particles == 0 || self.sim_batch == 0 {
            return Err(Error::Config("n_particles and sim_batch must be >= 1".into()));
        }
        if self.max_attempts < self.n_particles {
            return Err(Error::Config("max_attempts must be >= n_particles".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSample {
    pub param_names: Vec<String>,
    /// One row per accepted particle.
    pub particles: Vec<Vec<f64>>,
    pub discrepancies: Vec<f64>,
    pub acceptance_rate: f64,
    pub attempts: usize,
}

impl PosteriorSample {
    /// Column `j` of the particle matrix.
    pub fn param(&self, j: usize) -> Vec<f64> {
        self.particles.iter().map(|p| p[j]).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.particles.len().max(1) as f64;
        (0..self.param_names.len()).map(|j| self.param(j).iter().sum::<f64>() / n).collect()
    }

    /// CSV with one column per parameter plus `discrepancy`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = self.param_names.clone();
        header.push("discrepancy".into());
        w.write_record(&header)?;
        for (p, d) in self.particles.iter().zip(&self.discrepancies) {
            let mut rec: Vec<String> = p.iter().map(|&v| fmt_f64(v)).collect();
            rec.push(fmt_f64(*d));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Pre-computed observed-side quantities for repeated discrepancy calls.
struct Target<'a> {
    observed: &'a TimeSeriesDataset,
    stats: Option<StatVector>,
    cfg: &'a StatConfig,
    norm: Norm,
}

impl<'a> Target<'a> {
    fn new(observed: &'a TimeSeriesDataset, cfg: &'a StatConfig, norm: Norm, mode: DiscrepancyMode) -> Result<Self> {
        let stats = match mode {
            DiscrepancyMode::Stats => Some(summarize(observed, cfg)?),
            DiscrepancyMode::Raw => None,
        };
        Ok(Target { observed, stats, cfg, norm })
    }

    fn discrepancy(&self, sim: &TimeSeriesDataset) -> Result<f64> {
        match &self.stats {
            Some(obs) => stat_distance(&summarize(sim, self.cfg)?, obs, self.norm),
            None => {
                if sim.dim() != self.observed.dim() {
                    return Err(Error::Dimension(format!(
                        "raw discrepancy needs equal shapes, got {:?} vs {:?}",
                        sim.dim(),
                        self.observed.dim()
                    )));
                }
                Ok(self.norm.apply(sim.as_flat().iter().zip(self.observed.as_flat()).map(|(a, b)| a - b)))
            }
        }
    }
}

/// Prior draw and its discrepancy for candidate `k`.
fn evaluate_candidate(spec: &SimulatorSpec, target: &Target<'_>, batch: usize, seed: RngSeed, k: usize) -> Result<(Vec<f64>, f64)> {
    let cand_seed = seed.derive(k as u64);
    let theta = spec.draw_prior(&mut cand_seed.rng());
    let sim = simulate(spec, &theta, batch, cand_seed.derive(0))?;
    Ok((theta, target.discrepancy(&sim)?))
}

fn check_observed(spec: &SimulatorSpec, observed: &TimeSeriesDataset) -> Result<()> {
    if observed.n_features() != spec.n_features {
        return Err(Error::Dimension(format!(
            "observed data has {} features, simulator produces {}",
            observed.n_features(),
            spec.n_features
        )));
    }
    Ok(())
}

/// Rejection-sampling ABC.
pub fn rejection_sample(
    spec: &SimulatorSpec,
    observed: &TimeSeriesDataset,
    cfg: &RejectionConfig,
    seed: RngSeed,
) -> Result<PosteriorSample> {
    cfg.validate()?;
    check_observed(spec, observed)?;
    let target = Target::new(observed, &cfg.stat_cfg, cfg.norm, cfg.discrepancy)?;
    let param_names: Vec<String> = spec.priors.keys().cloned().collect();
    let mut particles = Vec::with_capacity(cfg.n_particles);
    let mut discrepancies = Vec::with_capacity(cfg.n_particles);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut attempts = 0;
    while particles.len() < cfg.n_particles {
        if attempts == cfg.max_attempts {
            let accepted = particles.len();
            let partial = PosteriorSample {
                param_names,
                particles,
                discrepancies,
                acceptance_rate: accepted as f64 / attempts as f64,
                attempts,
            };
            return Err(Error::BudgetExhausted { attempts, accepted, partial: Box::new(partial), best });
        }
        let (theta, disc) = evaluate_candidate(spec, &target, cfg.sim_batch, seed, attempts)?;
        attempts += 1;
        if best.as_ref().is_none_or(|(_, b)| disc < *b) {
            best = Some((theta.clone(), disc));
        }
        if disc < cfg.epsilon {
            particles.push(theta);
            discrepancies.push(disc);
        }
    }
    Ok(PosteriorSample {
        param_names,
        acceptance_rate: particles.len() as f64 / attempts as f64,
        particles,
        discrepancies,
        attempts,
    })
}

/// Epsilon that accepts roughly `quantile` of prior draws: the empirical
/// quantile of `n_pilot` candidate discrepancies. Pilot candidates use a
/// stream independent of any later `rejection_sample` call with `seed`.
pub fn calibrate_epsilon(
    spec: &SimulatorSpec,
    observed: &TimeSeriesDataset,
    cfg: &RejectionConfig,
    quantile: f64,
    n_pilot: usize,
    seed: RngSeed,
) -> Result<f64> {
    if n_pilot == 0 || !(0.0..=1.0).contains(&quantile) {
        return Err(Error::Config("n_pilot >= 1 and quantile in [0, 1] required".into()));
    }
    check_observed(spec, observed)?;
    let target = Target::new(observed, &cfg.stat_cfg, cfg.norm, cfg.discrepancy)?;
    let pilot_seed = seed.derive(u64::MAX);
    let mut d = (0..n_pilot)
        .map(|k| evaluate_candidate(spec, &target, cfg.sim_batch, pilot_seed, k).map(|(_, d)| d))
        .collect::<Result<Vec<_>>>()?;
    d.sort_by(f64::total_cmp);
    Ok(crate::stats::quantile_sorted(&d, quantile))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub sim_batch: usize,
    #[serde(default)]
    pub stat_cfg: StatConfig,
    #[serde(default)]
    pub norm: Norm,
    #[serde(default)]
    pub discrepancy: DiscrepancyMode,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { sim_batch: 10, stat_cfg: StatConfig::default(), norm: Norm::L2, discrepancy: DiscrepancyMode::Stats }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub best_params: Vec<f64>,
    pub best_discrepancy: f64,
    /// Discrepancy of every candidate, in evaluation order.
    pub trace: Vec<f64>,
}

/// Random search over the prior: evaluates `budget` candidates and returns
/// the one with the smallest discrepancy (first one on ties).
pub fn fit_simulator(
    spec: &SimulatorSpec,
    observed: &TimeSeriesDataset,
    budget: usize,
    cfg: &FitConfig,
    seed: RngSeed,
) -> Result<FitResult> {
    if budget == 0 {
        return Err(Error::Precondition("budget must be >= 1".into()));
    }
    if cfg.sim_batch == 0 {
        return Err(Error::Config("sim_batch must be >= 1".into()));
    }
    check_observed(spec, observed)?;
    let target = Target::new(observed, &cfg.stat_cfg, cfg.norm, cfg.discrepancy)?;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut trace = Vec::with_capacity(budget);
    for k in 0..budget {
        let (theta, d) = evaluate_candidate(spec, &target, cfg.sim_batch, seed, k)?;
        trace.push(d);
        if best.as_ref().is_none_or(|(_, b)| d < *b) {
            best = Some((theta, d));
        }
    }
    let (best_params, best_discrepancy) = best.expect("budget >= 1");
    Ok(FitResult { best_params, best_discrepancy, trace })
}
