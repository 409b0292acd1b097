//! Parametric simulators.
//!
//! [`sine_const_generate`] is the temporally labelled sine/constant process,
//! [`gp_sample`] draws RBF-kernel Gaussian-process paths and
//! [`sines_generate`] builds the unlabelled random-sine benchmark set.
//! [`SimulatorSpec`] packages a sampler with named parameters and priors for
//! the ABC routines.
//!
//! Every series `i` is generated from its own stream `seed.derive(i)`, so
//! series can be produced in any order or in parallel.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, Array3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, RngSeed, TimeSeriesDataset};

/// Jitter ladder for the GP Cholesky, relative to the kernel variance.
pub const JITTER_LADDER: [f64; 3] = [1e-10, 1e-8, 1e-6];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Prior {
    /// `[lo, hi]`.
    Uniform([f64; 2]),
    /// `[mean, std]`.
    Normal([f64; 2]),
}

impl Prior {
    pub fn uniform(lo: f64, hi: f64) -> Self {
        Prior::Uniform([lo, hi])
    }

    pub fn normal(mu: f64, sigma: f64) -> Self {
        Prior::Normal([mu, sigma])
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Prior::Uniform([lo, hi]) if lo.is_finite() && hi.is_finite() && lo < hi => Ok(()),
            Prior::Normal([mu, s]) if mu.is_finite() && s.is_finite() && s > 0.0 => Ok(()),
            p => Err(Error::Config(format!("invalid prior {p:?}"))),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Prior::Uniform([lo, hi]) => lo + (hi - lo) * rng.random::<f64>(),
            Prior::Normal([mu, s]) => {
                let z: f64 = StandardNormal.sample(rng);
                mu + s * z
            }
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        match *self {
            Prior::Uniform([lo, hi]) => v >= lo && v <= hi,
            Prior::Normal(_) => v.is_finite(),
        }
    }
}

/// Ordered `name -> prior` map. JSON: `{"max_scale": {"uniform": [9, 11]}}`.
pub type Priors = IndexMap<String, Prior>;

pub fn priors_from_json(s: &str) -> Result<Priors> {
    let p: Priors = serde_json::from_str(s)?;
    for prior in p.values() {
        prior.validate()?;
    }
    Ok(p)
}

pub fn priors_to_json(p: &Priors) -> String {
    serde_json::to_string(p).expect("priors serialize")
}

type SampleFn = dyn Fn(&[f64], usize, RngSeed) -> Result<TimeSeriesDataset> + Send + Sync;

/// A parametric generator `params -> dataset`.
#[derive(Clone)]
pub struct SimulatorSpec {
    pub name: String,
    pub priors: Priors,
    pub len_t: usize,
    pub n_features: usize,
    sampler: Arc<SampleFn>,
}

impl fmt::Debug for SimulatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SimulatorSpec")
            .field("name", &self.name)
            .field("priors", &self.priors)
            .field("len_t", &self.len_t)
            .field("n_features", &self.n_features)
            .finish_non_exhaustive()
    }
}

impl SimulatorSpec {
    pub fn new<F>(name: impl Into<String>, priors: Priors, len_t: usize, n_features: usize, sampler: F) -> Result<Self>
    where
        F: Fn(&[f64], usize, RngSeed) -> Result<TimeSeriesDataset> + Send + Sync + 'static,
    {
        if priors.is_empty() {
            return Err(Error::Config("simulator needs at least one parameter".into()));
        }
        for p in priors.values() {
            p.validate()?;
        }
        Ok(SimulatorSpec { name: name.into(), priors, len_t, n_features, sampler: Arc::new(sampler) })
    }

    pub fn param_names(&self) -> Vec<&str> {
        self.priors.keys().map(String::as_str).collect()
    }

    pub fn n_params(&self) -> usize {
        self.priors.len()
    }

    /// One draw from the joint (independent) prior.
    pub fn draw_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.priors.values().map(|p| p.sample(rng)).collect()
    }

    /// Sine-const simulator over `(max_scale, max_const)`.
    pub fn sine_const(len_t: usize, n_features: usize, priors: Priors, switch_prob: f64, const_from_max_const: bool) -> Result<Self> {
        for key in ["max_scale", "max_const"] {
            if !priors.contains_key(key) {
                return Err(Error::Config(format!("sine_const priors need {key:?}")));
            }
        }
        let keys: Vec<String> = priors.keys().cloned().collect();
        let pos = move |k: &str| keys.iter().position(|x| x == k).expect("checked above");
        let (i_scale, i_const) = (pos("max_scale"), pos("max_const"));
        Self::new("sine_const", priors, len_t, n_features, move |params, n, seed| {
            let p = SineConstParams {
                max_scale: params[i_scale],
                max_const: params[i_const],
                switch_prob,
                const_from_max_const,
            };
            sine_const_generate(&p, n, len_t, n_features, seed)
        })
    }

    /// RBF Gaussian-process simulator over `(lengthscale, variance)`.
    pub fn gaussian_process(len_t: usize, n_features: usize, priors: Priors) -> Result<Self> {
        for key in ["lengthscale", "variance"] {
            if !priors.contains_key(key) {
                return Err(Error::Config(format!("gp priors need {key:?}")));
            }
        }
        let li = priors.get_index_of("lengthscale").expect("checked");
        let vi = priors.get_index_of("variance").expect("checked");
        Self::new("gp", priors, len_t, n_features, move |params, n, seed| {
            gp_sample(n, len_t, n_features, params[li], params[vi], seed).map(|(ds, _)| ds)
        })
    }

    /// Listing-style defaults: `max_scale ~ U(9, 11)`, `max_const ~ U(19, 21)`.
    pub fn default_sine_const_priors() -> Priors {
        let mut p = Priors::new();
        p.insert("max_scale".into(), Prior::uniform(9.0, 11.0));
        p.insert("max_const".into(), Prior::uniform(19.0, 21.0));
        p
    }
}

/// Runs the simulator at `params`, checking arity and prior support.
pub fn simulate(spec: &SimulatorSpec, params: &[f64], n: usize, seed: RngSeed) -> Result<TimeSeriesDataset> {
    if params.len() != spec.n_params() {
        return Err(Error::Dimension(format!(
            "{} parameters given, simulator {:?} takes {}",
            params.len(),
            spec.name,
            spec.n_params()
        )));
    }
    for ((name, prior), &v) in spec.priors.iter().zip(params) {
        if !prior.contains(v) {
            return Err(Error::Domain(format!("{name} = {v} outside prior support {prior:?}")));
        }
    }
    if n == 0 {
        return Err(Error::Empty("simulate called with n = 0".into()));
    }
    let ds = (spec.sampler)(params, n, seed)?;
    debug_assert_eq!(ds.dim(), (n, spec.len_t, spec.n_features));
    Ok(ds)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SineConstParams {
    pub max_scale: f64,
    pub max_const: f64,
    /// Per-step probability that the label flips.
    pub switch_prob: f64,
    /// When set, `y = 0` segments sit at an independent level
    /// `c ~ U(0, max_const]` instead of at the amplitude `s`.
    #[serde(default)]
    pub const_from_max_const: bool,
}

impl Default for SineConstParams {
    fn default() -> Self {
        SineConstParams { max_scale: 10.0, max_const: 20.0, switch_prob: 0.1, const_from_max_const: false }
    }
}

fn check_shape(n: usize, t: usize, d: usize) -> Result<()> {
    if n == 0 || t == 0 || d == 0 {
        return Err(Error::Precondition(format!("n, T, D must be >= 1, got ({n}, {t}, {d})")));
    }
    Ok(())
}

/// Uniform on `(0, hi]`.
fn uniform_open_closed<R: Rng + ?Sized>(rng: &mut R, hi: f64) -> f64 {
    hi * (1.0 - rng.random::<f64>())
}

/// Temporally labelled sine/constant series.
///
/// Labels follow a two-state Markov chain (fair-coin start, flip with
/// `switch_prob` each step). Per feature, `s ~ U(0, max_scale]` and
/// `C ~ U(0, 2pi)`; `x_t = s sin(t + C)` where `y_t = 1` and `x_t = s`
/// where `y_t = 0`.
pub fn sine_const_generate(p: &SineConstParams, n: usize, t: usize, d: usize, seed: RngSeed) -> Result<TimeSeriesDataset> {
    check_shape(n, t, d)?;
    if !(p.max_scale > 0.0 && p.max_const > 0.0) {
        return Err(Error::Precondition("max_scale and max_const must be positive".into()));
    }
    if !(0.0..=1.0).contains(&p.switch_prob) {
        return Err(Error::Precondition(format!("switch_prob {} not a probability", p.switch_prob)));
    }
    let mut data = Array3::zeros((n, t, d));
    let mut labels = Array2::zeros((n, t));
    for i in 0..n {
        let mut rng = seed.derive(i as u64).rng();
        let mut y = rng.random_bool(0.5);
        for step in 0..t {
            if step > 0 && rng.random_bool(p.switch_prob) {
                y = !y;
            }
            labels[[i, step]] = if y { 1.0 } else { 0.0 };
        }
        for j in 0..d {
            let s = uniform_open_closed(&mut rng, p.max_scale);
            let c = rng.random::<f64>() * 2.0 * PI;
            let level = if p.const_from_max_const { uniform_open_closed(&mut rng, p.max_const) } else { s };
            for step in 0..t {
                data[[i, step, j]] =
                    if labels[[i, step]] == 1.0 { s * (step as f64 + c).sin() } else { level };
            }
        }
    }
    TimeSeriesDataset::new(data)?.with_temporal_labels(labels)
}

/// Unlabelled sines `x_t = sin(omega t + phi)` with `omega ~ U(0.1, 1)`,
/// `phi ~ U(0, 2pi)` drawn per series and feature.
pub fn sines_generate(n: usize, t: usize, d: usize, seed: RngSeed) -> Result<TimeSeriesDataset> {
    check_shape(n, t, d)?;
    let mut data = Array3::zeros((n, t, d));
    for i in 0..n {
        let mut rng = seed.derive(i as u64).rng();
        for j in 0..d {
            let omega = 0.1 + 0.9 * rng.random::<f64>();
            let phi = 2.0 * PI * rng.random::<f64>();
            for step in 0..t {
                data[[i, step, j]] = (omega * step as f64 + phi).sin();
            }
        }
    }
    TimeSeriesDataset::new(data)
}

/// RBF kernel matrix on `t = 0..len`.
pub fn rbf_kernel(len: usize, lengthscale: f64, variance: f64) -> DMatrix<f64> {
    DMatrix::from_fn(len, len, |a, b| {
        let dt = a as f64 - b as f64;
        variance * (-dt * dt / (2.0 * lengthscale * lengthscale)).exp()
    })
}

/// Zero-mean GP paths with an RBF kernel, sampled as `L z` where
/// `L L^T = K + jitter * variance * I`. Returns the dataset and the jitter
/// actually used.
pub fn gp_sample(
    n: usize,
    t: usize,
    d: usize,
    lengthscale: f64,
    variance: f64,
    seed: RngSeed,
) -> Result<(TimeSeriesDataset, f64)> {
    check_shape(n, t, d)?;
    if !(lengthscale > 0.0 && variance > 0.0) || !lengthscale.is_finite() || !variance.is_finite() {
        return Err(Error::Precondition("lengthscale and variance must be positive and finite".into()));
    }
    let k = rbf_kernel(t, lengthscale, variance);
    let (chol, jitter) = JITTER_LADDER
        .iter()
        .find_map(|&j| {
            let kj = &k + DMatrix::identity(t, t) * (j * variance);
            kj.cholesky().map(|c| (c.l(), j))
        })
        .ok_or_else(|| Error::Numeric("GP kernel not positive definite at maximum jitter".into()))?;
    let mut data = Array3::zeros((n, t, d));
    for i in 0..n {
        let mut rng = seed.derive(i as u64).rng();
        for j in 0..d {
            let z = DVector::from_fn(t, |_, _| StandardNormal.sample(&mut rng));
            let x = &chol * z;
            for step in 0..t {
                data[[i, step, j]] = x[step];
            }
        }
    }
    Ok((TimeSeriesDataset::new(data)?, jitter))
}
