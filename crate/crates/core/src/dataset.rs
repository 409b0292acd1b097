//! The `[N, T, D]` dataset type and the transforms shared by every module.

use ndarray::{s, Array2, Array3, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, RngSeed};

/// Labels attached to a dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub enum Labels {
    #[default]
    None,
    /// One class id per series, length `N`.
    Static(Vec<i64>),
    /// One condition value per timestep, shape `[N, T]`.
    Temporal(Array2<f64>),
}

impl Labels {
    pub fn is_none(&self) -> bool {
        matches!(self, Labels::None)
    }

    fn select(&self, idx: &[usize]) -> Labels {
        match self {
            Labels::None => Labels::None,
            Labels::Static(v) => Labels::Static(idx.iter().map(|&i| v[i]).collect()),
            Labels::Temporal(a) => Labels::Temporal(a.select(Axis(0), idx)),
        }
    }
}

/// `N` series of `T` timesteps with `D` features, series-major.
///
/// Invariants: `N, T, D >= 1`, all values finite, label containers sized to
/// match. Values are never mutated after construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesDataset {
    data: Array3<f64>,
    labels: Labels,
    feature_names: Vec<String>,
}

impl TimeSeriesDataset {
    pub fn new(data: Array3<f64>) -> Result<Self> {
        let (n, t, d) = data.dim();
        if n == 0 || t == 0 || d == 0 {
            return Err(Error::Empty(format!("dataset shape [{n}, {t}, {d}] has a zero axis")));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite value at flat index {pos}")));
        }
        let data = data.as_standard_layout().into_owned();
        Ok(Self { data, labels: Labels::None, feature_names: default_feature_names(d) })
    }

    /// Builds from a flat row-major buffer of length `n * t * d`.
    pub fn from_flat(n: usize, t: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * t * d {
            return Err(Error::Dimension(format!(
                "buffer of {} values cannot be shaped [{n}, {t}, {d}]",
                values.len()
            )));
        }
        let data = Array3::from_shape_vec((n, t, d), values)
            .map_err(|e| Error::Dimension(e.to_string()))?;
        Self::new(data)
    }

    pub fn with_labels(mut self, labels: Labels) -> Result<Self> {
        let (n, t, _) = self.dim();
        match &labels {
            Labels::None => {}
            Labels::Static(v) if v.len() != n => {
                return Err(Error::Dimension(format!("{} static labels for {n} series", v.len())));
            }
            Labels::Temporal(a) if a.dim() != (n, t) => {
                return Err(Error::Dimension(format!(
                    "temporal labels shaped {:?}, expected ({n}, {t})",
                    a.dim()
                )));
            }
            Labels::Temporal(a) if a.iter().any(|v| !v.is_finite()) => {
                return Err(Error::Numeric("non-finite temporal label".into()));
            }
            _ => {}
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn with_static_labels(self, labels: Vec<i64>) -> Result<Self> {
        self.with_labels(Labels::Static(labels))
    }

    pub fn with_temporal_labels(self, labels: Array2<f64>) -> Result<Self> {
        self.with_labels(Labels::Temporal(labels))
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_features() {
            return Err(Error::Dimension(format!(
                "{} feature names for {} features",
                names.len(),
                self.n_features()
            )));
        }
        self.feature_names = names;
        Ok(self)
    }

    pub fn dim(&self) -> (usize, usize, usize) {
        self.data.dim()
    }

    pub fn n_series(&self) -> usize {
        self.data.dim().0
    }

    pub fn len_t(&self) -> usize {
        self.data.dim().1
    }

    pub fn n_features(&self) -> usize {
        self.data.dim().2
    }

    pub fn data(&self) -> &Array3<f64> {
        &self.data
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// One series as a `[T, D]` view.
    pub fn series(&self, i: usize) -> ArrayView2<'_, f64> {
        self.data.index_axis(Axis(0), i)
    }

    /// Row-major buffer, `N * T * D` long.
    pub fn as_flat(&self) -> &[f64] {
        self.data.as_slice().expect("standard layout")
    }

    /// Each series flattened to one row of length `T * D`.
    pub fn flatten_series(&self) -> Array2<f64> {
        let (n, t, d) = self.dim();
        Array2::from_shape_vec((n, t * d), self.as_flat().to_vec()).expect("shape")
    }

    /// Per-series temporal label path, if temporal labels are present.
    pub fn temporal_path(&self, i: usize) -> Option<ndarray::ArrayView1<'_, f64>> {
        match &self.labels {
            Labels::Temporal(a) => Some(a.row(i)),
            _ => None,
        }
    }

    /// Subset of series, in the given order (repeats allowed).
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        if idx.is_empty() {
            return Err(Error::Empty("selection of zero series".into()));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.n_series()) {
            return Err(Error::Precondition(format!("series index {bad} out of range")));
        }
        Ok(Self {
            data: self.data.select(Axis(0), idx),
            labels: self.labels.select(idx),
            feature_names: self.feature_names.clone(),
        })
    }

    /// Stacks `other` below `self`. Label forms must agree.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        let (_, t, d) = self.dim();
        if other.len_t() != t || other.n_features() != d {
            return Err(Error::Dimension(format!(
                "cannot concatenate [.., {t}, {d}] with [.., {}, {}]",
                other.len_t(),
                other.n_features()
            )));
        }
        let labels = match (&self.labels, &other.labels) {
            (Labels::None, Labels::None) => Labels::None,
            (Labels::Static(a), Labels::Static(b)) => {
                Labels::Static(a.iter().chain(b).copied().collect())
            }
            (Labels::Temporal(a), Labels::Temporal(b)) => Labels::Temporal(
                ndarray::concatenate(Axis(0), &[a.view(), b.view()]).expect("matching T"),
            ),
            _ => return Err(Error::Dimension("label forms differ".into())),
        };
        let data = ndarray::concatenate(Axis(0), &[self.data.view(), other.data.view()])
            .expect("matching T, D");
        Ok(Self { data, labels, feature_names: self.feature_names.clone() })
    }

    /// Same labels and names, new values of identical shape.
    pub(crate) fn map_data(&self, data: Array3<f64>) -> Result<Self> {
        debug_assert_eq!(data.dim(), self.dim());
        let mut out = Self::new(data)?;
        out.labels = self.labels.clone();
        out.feature_names = self.feature_names.clone();
        Ok(out)
    }
}

fn default_feature_names(d: usize) -> Vec<String> {
    (0..d).map(|i| format!("feature_{i}")).collect()
}

/// Cuts every series into windows of length `window` taken every `stride`
/// steps. Produces `N * (floor((T - window) / stride) + 1)` series.
pub fn window_split(ds: &TimeSeriesDataset, window: usize, stride: usize) -> Result<TimeSeriesDataset> {
    let (n, t, d) = ds.dim();
    if window == 0 || stride == 0 {
        return Err(Error::Precondition("window and stride must be positive".into()));
    }
    if window > t {
        return Err(Error::Precondition(format!("window {window} exceeds series length {t}")));
    }
    let per = (t - window) / stride + 1;
    let starts: Vec<usize> = (0..per).map(|k| k * stride).collect();
    let mut data = Array3::zeros((n * per, window, d));
    for i in 0..n {
        for (k, &s0) in starts.iter().enumerate() {
            data.index_axis_mut(Axis(0), i * per + k)
                .assign(&ds.data.slice(s![i, s0..s0 + window, ..]));
        }
    }
    let labels = match ds.labels() {
        Labels::None => Labels::None,
        Labels::Static(v) => Labels::Static(v.iter().flat_map(|&l| std::iter::repeat_n(l, per)).collect()),
        Labels::Temporal(a) => {
            let mut out = Array2::zeros((n * per, window));
            for i in 0..n {
                for (k, &s0) in starts.iter().enumerate() {
                    out.row_mut(i * per + k).assign(&a.slice(s![i, s0..s0 + window]));
                }
            }
            Labels::Temporal(out)
        }
    };
    TimeSeriesDataset::new(data)?
        .with_labels(labels)?
        .with_feature_names(ds.feature_names.clone())
}

/// Per-feature min/max captured by [`minmax_scale`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalerState {
    pub per_feature_min: Vec<f64>,
    pub per_feature_max: Vec<f64>,
}

impl ScalerState {
    pub fn fit(ds: &TimeSeriesDataset) -> Self {
        let d = ds.n_features();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for row in ds.data.lanes(Axis(2)) {
            for (j, &v) in row.iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
        ScalerState { per_feature_min: lo, per_feature_max: hi }
    }

    /// Features whose observed range is a single value.
    pub fn constant_features(&self) -> Vec<bool> {
        self.per_feature_min.iter().zip(&self.per_feature_max).map(|(a, b)| a == b).collect()
    }

    fn check(&self, ds: &TimeSeriesDataset) -> Result<()> {
        if self.per_feature_min.len() != ds.n_features() || self.per_feature_max.len() != ds.n_features() {
            return Err(Error::Dimension(format!(
                "scaler fitted on {} features, dataset has {}",
                self.per_feature_min.len(),
                ds.n_features()
            )));
        }
        Ok(())
    }

    /// Maps values with this state's ranges. Constant features go to 0.
    pub fn transform(&self, ds: &TimeSeriesDataset) -> Result<TimeSeriesDataset> {
        self.check(ds)?;
        let mut data = ds.data.clone();
        for mut row in data.lanes_mut(Axis(2)) {
            for (j, v) in row.iter_mut().enumerate() {
                let (lo, hi) = (self.per_feature_min[j], self.per_feature_max[j]);
                *v = if hi > lo { (*v - lo) / (hi - lo) } else { 0.0 };
            }
        }
        ds.map_data(data)
    }

    pub fn inverse(&self, ds: &TimeSeriesDataset) -> Result<TimeSeriesDataset> {
        self.check(ds)?;
        let mut data = ds.data.clone();
        for mut row in data.lanes_mut(Axis(2)) {
            for (j, v) in row.iter_mut().enumerate() {
                let (lo, hi) = (self.per_feature_min[j], self.per_feature_max[j]);
                *v = if hi > lo { lo + *v * (hi - lo) } else { lo };
            }
        }
        ds.map_data(data)
    }
}

/// Scales each feature to `[0, 1]` over all series and timesteps.
pub fn minmax_scale(ds: &TimeSeriesDataset) -> Result<(TimeSeriesDataset, ScalerState)> {
    let state = ScalerState::fit(ds);
    Ok((state.transform(ds)?, state))
}

pub fn minmax_unscale(ds: &TimeSeriesDataset, state: &ScalerState) -> Result<TimeSeriesDataset> {
    state.inverse(ds)
}

/// Seeded series-level partition into `(train, holdout)`; train receives
/// `round(N * (1 - holdout_fraction))` series.
pub fn train_holdout_split(
    ds: &TimeSeriesDataset,
    holdout_fraction: f64,
    seed: RngSeed,
) -> Result<(TimeSeriesDataset, TimeSeriesDataset)> {
    let n = ds.n_series();
    if n < 2 {
        return Err(Error::Precondition("need at least two series to split".into()));
    }
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(Error::Precondition(format!("holdout fraction {holdout_fraction} not in (0, 1)")));
    }
    let n_train = (n as f64 * (1.0 - holdout_fraction)).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::Empty(format!(
            "split of {n} series at fraction {holdout_fraction} leaves an empty partition"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed.rng());
    Ok((ds.select(&idx[..n_train])?, ds.select(&idx[n_train..])?))
}

/// Mean over the feature axis, `[N, T]`.
pub fn feature_mean(ds: &TimeSeriesDataset) -> Array2<f64> {
    ds.data.mean_axis(Axis(2)).expect("D >= 1")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(n: usize, t: usize, d: usize) -> TimeSeriesDataset {
        TimeSeriesDataset::from_flat(n, t, d, (0..n * t * d).map(|v| v as f64).collect()).unwrap()
    }

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(TimeSeriesDataset::from_flat(0, 3, 1, vec![]).is_err());
        assert!(TimeSeriesDataset::from_flat(1, 2, 1, vec![1.0, f64::NAN]).is_err());
        assert!(TimeSeriesDataset::from_flat(1, 2, 1, vec![1.0]).is_err());
        let ds = ramp(2, 3, 1);
        assert!(ds.clone().with_static_labels(vec![0]).is_err());
        assert!(ds.with_temporal_labels(Array2::zeros((2, 2))).is_err());
    }

    #[test]
    fn window_identity() {
        let ds = ramp(1, 24, 1);
        let w = window_split(&ds, 24, 1).unwrap();
        assert_eq!(w, ds);
    }

    #[test]
    fn window_starts() {
        let ds = ramp(1, 10, 1);
        let w = window_split(&ds, 4, 2).unwrap();
        assert_eq!(w.n_series(), 4);
        for (k, start) in [0.0, 2.0, 4.0, 6.0].iter().enumerate() {
            assert_eq!(w.series(k)[[0, 0]], *start);
            assert_eq!(w.series(k)[[3, 0]], start + 3.0);
        }
    }

    #[test]
    fn window_one_per_series() {
        let ds = ramp(2, 5, 1).with_static_labels(vec![3, 9]).unwrap();
        let w = window_split(&ds, 3, 3).unwrap();
        assert_eq!(w.n_series(), 2);
        assert_eq!(w.labels(), &Labels::Static(vec![3, 9]));
        assert_eq!(w.series(1)[[0, 0]], 5.0);
    }

    #[test]
    fn window_too_long() {
        assert!(matches!(window_split(&ramp(1, 4, 1), 5, 1), Err(Error::Precondition(_))));
    }

    #[test]
    fn window_slices_temporal_labels() {
        let labels = Array2::from_shape_fn((1, 6), |(_, t)| t as f64);
        let ds = ramp(1, 6, 2).with_temporal_labels(labels).unwrap();
        let w = window_split(&ds, 2, 2).unwrap();
        let Labels::Temporal(l) = w.labels() else { panic!() };
        assert_eq!(l.row(2).to_vec(), vec![4.0, 5.0]);
    }

    #[test]
    fn scale_two_values() {
        let ds = TimeSeriesDataset::from_flat(1, 2, 1, vec![2.0, 4.0]).unwrap();
        let (s, _) = minmax_scale(&ds).unwrap();
        assert_eq!(s.as_flat(), &[0.0, 1.0]);
    }

    #[test]
    fn scale_constant_feature() {
        let ds = TimeSeriesDataset::from_flat(1, 3, 1, vec![5.0; 3]).unwrap();
        let (s, st) = minmax_scale(&ds).unwrap();
        assert_eq!(s.as_flat(), &[0.0; 3]);
        assert_eq!(st.constant_features(), vec![true]);
        assert_eq!(minmax_unscale(&s, &st).unwrap().as_flat(), &[5.0; 3]);
    }

    #[test]
    fn unscale_dimension_mismatch() {
        let (_, st) = minmax_scale(&ramp(1, 3, 2)).unwrap();
        assert!(matches!(minmax_unscale(&ramp(1, 3, 1), &st), Err(Error::Dimension(_))));
    }

    #[test]
    fn split_sizes_and_partition() {
        let ds = ramp(10, 2, 1).with_static_labels((0..10).collect()).unwrap();
        let (a, b) = train_holdout_split(&ds, 0.3, RngSeed(5)).unwrap();
        assert_eq!((a.n_series(), b.n_series()), (7, 3));
        let (a2, b2) = train_holdout_split(&ds, 0.3, RngSeed(5)).unwrap();
        assert_eq!((&a, &b), (&a2, &b2));
        let (Labels::Static(la), Labels::Static(lb)) = (a.labels(), b.labels()) else { panic!() };
        let mut all: Vec<i64> = la.iter().chain(lb).copied().collect();
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn split_rejects_empty_partition() {
        assert!(train_holdout_split(&ramp(2, 2, 1), 0.1, RngSeed(0)).is_err());
        assert!(train_holdout_split(&ramp(1, 2, 1), 0.5, RngSeed(0)).is_err());
    }

    proptest! {
        #[test]
        fn window_count_formula(t in 1usize..40, window in 1usize..40, stride in 1usize..12, n in 1usize..3) {
            prop_assume!(window <= t);
            let w = window_split(&ramp(n, t, 1), window, stride).unwrap();
            prop_assert_eq!(w.n_series(), n * ((t - window) / stride + 1));
            prop_assert_eq!(w.len_t(), window);
        }

        #[test]
        fn scale_roundtrip(values in proptest::collection::vec(-1e6f64..1e6, 12)) {
            let ds = TimeSeriesDataset::from_flat(2, 3, 2, values).unwrap();
            let (s, st) = minmax_scale(&ds).unwrap();
            prop_assert!(s.as_flat().iter().all(|v| (0.0..=1.0).contains(v)));
            let back = minmax_unscale(&s, &st).unwrap();
            // relative to the feature's range: near-zero entries of a wide
            // feature cannot be recovered better than range * eps.
            for (j, (x, y)) in ds.as_flat().iter().zip(back.as_flat()).enumerate() {
                let f = j % 2;
                let range = st.per_feature_max[f] - st.per_feature_min[f];
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(range));
            }
        }
    }
}
