//! Membership inference with a k-NN one-class classifier fitted on synth.

use ndarray::{Array2, ArrayView1, Axis};
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::stats::quantile_sorted;
use crate::{Error, Result, RngSeed, TimeSeriesDataset};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnOccParams {
    pub k: usize,
    /// Quantile of reference self-distances used as the acceptance threshold.
    pub alpha: f64,
    /// Cap on reference points whose self-distance enters the quantile.
    pub max_threshold_queries: usize,
}

impl Default for KnnOccParams {
    fn default() -> Self {
        Self { k: 1, alpha: 0.95, max_threshold_queries: 2000 }
    }
}

/// Accepts a point when its distance to the `k`-th nearest reference row is
/// at most `threshold`.
#[derive(Clone, Debug, PartialEq)]
pub struct KnnOcc {
    pub reference: Array2<f64>,
    pub k: usize,
    pub threshold: f64,
}

fn kth_smallest(mut d: Vec<f64>, k: usize) -> f64 {
    let (_, v, _) = d.select_nth_unstable_by(k - 1, f64::total_cmp);
    *v
}

fn dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

impl KnnOcc {
    pub fn fit(reference: Array2<f64>, params: KnnOccParams, seed: RngSeed) -> Result<Self> {
        let m = reference.nrows();
        if params.k == 0 || params.k >= m {
            return Err(Error::Precondition(format!("k = {} must be in 1..{m} (reference size)", params.k)));
        }
        if !(0.0..=1.0).contains(&params.alpha) {
            return Err(Error::Precondition(format!("alpha {} not in [0, 1]", params.alpha)));
        }
        let queries: Vec<usize> = if m > params.max_threshold_queries.max(1) {
            let mut q = index::sample(&mut seed.rng(), m, params.max_threshold_queries.max(1)).into_vec();
            q.sort_unstable();
            q
        } else {
            (0..m).collect()
        };
        let mut self_d: Vec<f64> = queries
            .iter()
            .map(|&i| {
                let row = reference.row(i);
                let d = reference
                    .axis_iter(Axis(0))
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, r)| dist(row, r))
                    .collect();
                kth_smallest(d, params.k)
            })
            .collect();
        self_d.sort_by(f64::total_cmp);
        let threshold = quantile_sorted(&self_d, params.alpha);
        Ok(Self { reference, k: params.k, threshold })
    }

    pub fn score(&self, x: ArrayView1<'_, f64>) -> f64 {
        kth_smallest(self.reference.axis_iter(Axis(0)).map(|r| dist(x, r)).collect(), self.k)
    }

    pub fn accepts(&self, x: ArrayView1<'_, f64>) -> bool {
        self.score(x) <= self.threshold
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyResult {
    /// `1 - precision`
    pub score: f64,
    pub precision: f64,
    pub n_declared: usize,
    pub n_declared_train: usize,
    /// Nothing was declared a member; precision set to the train share.
    pub chance_level: bool,
}

/// Membership-inference attack: series of `real_train ∪ real_holdout`
/// accepted by a [`KnnOcc`] fitted on `synth` are declared members.
pub fn privacy_mia(
    real_train: &TimeSeriesDataset,
    real_holdout: &TimeSeriesDataset,
    synth: &TimeSeriesDataset,
    params: KnnOccParams,
    seed: RngSeed,
) -> Result<PrivacyResult> {
    let shape = |ds: &TimeSeriesDataset| (ds.len_t(), ds.n_features());
    if shape(real_train) != shape(synth) || shape(real_holdout) != shape(synth) {
        return Err(Error::Dimension("train, holdout and synth windows differ".into()));
    }
    let occ = KnnOcc::fit(synth.flatten_series(), params, seed)?;
    let count = |ds: &TimeSeriesDataset| ds.flatten_series().axis_iter(Axis(0)).filter(|r| occ.accepts(r.view())).count();
    let from_train = count(real_train);
    let declared = from_train + count(real_holdout);
    let (precision, chance_level) = if declared == 0 {
        let n_train = real_train.n_series() as f64;
        (n_train / (n_train + real_holdout.n_series() as f64), true)
    } else {
        (from_train as f64 / declared as f64, false)
    };
    Ok(PrivacyResult { score: 1.0 - precision, precision, n_declared: declared, n_declared_train: from_train, chance_level })
}
