//! Ridge next-step autoregressor used as the downstream model.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, TimeSeriesDataset};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RidgeSpec {
    pub window: usize,
    pub lambda: f64,
}

impl Default for RidgeSpec {
    fn default() -> Self {
        Self { window: 8, lambda: 1e-3 }
    }
}

/// Predicts `x_t` (all `D` features) from the previous `window` steps plus a
/// bias. Fitted on the mean-normalized objective
/// `(XᵀX / n + λI) β = Xᵀy / n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RidgeAutoregressor {
    pub spec: RidgeSpec,
    pub n_features: usize,
    /// `[D][window * D + 1]`, bias last.
    pub coefficients: Vec<Vec<f64>>,
}

/// Design matrix rows and targets pooled over every series of every dataset.
fn examples(sets: &[&TimeSeriesDataset], w: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let d = sets[0].n_features();
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    let mut n = 0;
    for ds in sets {
        if ds.n_features() != d {
            return Err(Error::Dimension(format!("{} features vs {d}", ds.n_features())));
        }
        if ds.len_t() <= w {
            return Err(Error::Precondition(format!("series length {} too short for window {w}", ds.len_t())));
        }
        for i in 0..ds.n_series() {
            let x = ds.series(i);
            for t in w..ds.len_t() {
                rows.extend(x.slice(ndarray::s![t - w..t, ..]).iter());
                rows.push(1.0);
                targets.extend(x.row(t).iter());
                n += 1;
            }
        }
    }
    Ok((DMatrix::from_row_slice(n, w * d + 1, &rows), DMatrix::from_row_slice(n, d, &targets)))
}

impl RidgeAutoregressor {
    pub fn fit(spec: RidgeSpec, sets: &[&TimeSeriesDataset]) -> Result<Self> {
        if spec.window == 0 || !(spec.lambda >= 0.0) {
            return Err(Error::Precondition(format!("bad ridge spec {spec:?}")));
        }
        if sets.is_empty() {
            return Err(Error::Empty("no training data".into()));
        }
        let (x, y) = examples(sets, spec.window)?;
        let n = x.nrows() as f64;
        let p = x.ncols();
        let a = x.tr_mul(&x) / n + DMatrix::identity(p, p) * spec.lambda;
        let rhs = x.tr_mul(&y) / n;
        let beta = a
            .cholesky()
            .map(|c| c.solve(&rhs))
            .ok_or_else(|| Error::Numeric("ridge normal equations are singular".into()))?;
        if beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite ridge coefficients".into()));
        }
        let coefficients = (0..y.ncols()).map(|j| beta.column(j).iter().copied().collect()).collect();
        Ok(Self { spec, n_features: y.ncols(), coefficients })
    }

    fn beta(&self) -> DMatrix<f64> {
        let p = self.spec.window * self.n_features + 1;
        DMatrix::from_fn(p, self.n_features, |r, c| self.coefficients[c][r])
    }

    /// Mean squared one-step error over every example and feature of `ds`.
    pub fn mse(&self, ds: &TimeSeriesDataset) -> Result<f64> {
        if ds.n_features() != self.n_features {
            return Err(Error::Dimension(format!("{} features vs model's {}", ds.n_features(), self.n_features)));
        }
        let (x, y) = examples(&[ds], self.spec.window)?;
        let resid = x * self.beta() - y;
        Ok(resid.norm_squared() / resid.len() as f64)
    }

    pub fn predict_next(&self, history: &[f64]) -> Result<Vec<f64>> {
        let need = self.spec.window * self.n_features;
        if history.len() != need {
            return Err(Error::Dimension(format!("history of {} values, model needs {need}", history.len())));
        }
        let row = DVector::from_iterator(need + 1, history.iter().copied().chain([1.0]));
        Ok((self.beta().transpose() * row).iter().copied().collect())
    }
}
