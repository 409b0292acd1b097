//! Augmentation-based generation.
//!
//! Every method returns a dataset of `n_new` new series with the source's
//! `(T, D)`. New series `k` draws its source index and all its randomness
//! from `seed.derive(k)`. Labels travel with the source series; temporal
//! label paths undergo the same time rearrangement as the values (nearest
//! sample where values are interpolated).

mod dba;
mod dtw;
mod spline;

use std::collections::HashMap;

use ndarray::{s, Array1, Array2, Array3, ArrayView1, ArrayView2, Axis};
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use dba::{weighted_dba, Barycenter};
pub use dtw::{dtw, Alignment, PointDistance};
pub use spline::NaturalCubicSpline;

use crate::{Error, Labels, Result, RngSeed, TimeSeriesDataset};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipMode {
    /// Multiply every value by -1.
    #[default]
    Sign,
    /// Reverse the time axis.
    Time,
}

/// Method and its parameters. JSON is tagged by `"method"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Augmentation {
    GaussianNoise { sigma: f64 },
    SliceAndShuffle { n_slices: usize },
    Flip { mode: FlipMode },
    MagnitudeWarp { n_knots: usize, sigma: f64 },
    WindowWarp { window_ratio: f64, scales: Vec<f64> },
    WindowSlice { reduce_ratio: f64 },
    Dtwba { n_iters: usize },
}

impl Augmentation {
    pub const METHODS: [&'static str; 7] = [
        "gaussian_noise",
        "slice_and_shuffle",
        "flip",
        "magnitude_warp",
        "window_warp",
        "window_slice",
        "dtwba",
    ];
}

/// `{"method": "window_warp", "window_ratio": 0.2, "scales": [0.5, 2.0], "n_new": 100, "seed": 0}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentationRequest {
    #[serde(flatten)]
    pub method: Augmentation,
    pub n_new: usize,
    #[serde(default)]
    pub seed: RngSeed,
}

pub fn augment(ds: &TimeSeriesDataset, req: &AugmentationRequest) -> Result<TimeSeriesDataset> {
    let (n_new, seed) = (req.n_new, req.seed);
    match &req.method {
        Augmentation::GaussianNoise { sigma } => gaussian_noise(ds, *sigma, n_new, seed),
        Augmentation::SliceAndShuffle { n_slices } => slice_and_shuffle(ds, *n_slices, n_new, seed),
        Augmentation::Flip { mode } => flip(ds, *mode, n_new, seed),
        Augmentation::MagnitudeWarp { n_knots, sigma } => magnitude_warp(ds, *n_knots, *sigma, n_new, seed),
        Augmentation::WindowWarp { window_ratio, scales } => window_warp(ds, *window_ratio, scales, n_new, seed),
        Augmentation::WindowSlice { reduce_ratio } => window_slice(ds, *reduce_ratio, n_new, seed),
        Augmentation::Dtwba { n_iters } => dtwba(ds, n_new, *n_iters, seed),
    }
}

/// One transformed series: values `[T, D]` and, when the source has a
/// temporal path, the transformed path.
struct Derived {
    source: usize,
    values: Array2<f64>,
    path: Option<Array1<f64>>,
}

/// Runs `f` once per new series with a per-index RNG and a uniformly drawn
/// source, then assembles the output dataset.
fn generate<F>(ds: &TimeSeriesDataset, n_new: usize, seed: RngSeed, mut f: F) -> Result<TimeSeriesDataset>
where
    F: FnMut(&mut ChaCha8Rng, usize) -> Result<Derived>,
{
    if n_new == 0 {
        return Err(Error::Precondition("n_new must be >= 1".into()));
    }
    let (n, t, d) = ds.dim();
    let mut data = Array3::zeros((n_new, t, d));
    let mut sources = Vec::with_capacity(n_new);
    let mut paths = Array2::zeros((n_new, t));
    for k in 0..n_new {
        let mut rng = seed.derive(k as u64).rng();
        let src = rng.random_range(0..n);
        let out = f(&mut rng, src)?;
        debug_assert_eq!(out.values.dim(), (t, d));
        data.index_axis_mut(Axis(0), k).assign(&out.values);
        if let Some(p) = out.path {
            paths.row_mut(k).assign(&p);
        }
        sources.push(out.source);
    }
    let labels = match ds.labels() {
        Labels::None => Labels::None,
        Labels::Static(v) => Labels::Static(sources.iter().map(|&i| v[i]).collect()),
        Labels::Temporal(_) => Labels::Temporal(paths),
    };
    TimeSeriesDataset::new(data)?
        .with_labels(labels)?
        .with_feature_names(ds.feature_names().to_vec())
}

fn unchanged_path(ds: &TimeSeriesDataset, src: usize) -> Option<Array1<f64>> {
    ds.temporal_path(src).map(|p| p.to_owned())
}

/// Source series plus i.i.d. `N(0, sigma^2)` noise.
pub fn gaussian_noise(ds: &TimeSeriesDataset, sigma: f64, n_new: usize, seed: RngSeed) -> Result<TimeSeriesDataset> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Precondition(format!("sigma {sigma} must be finite and >= 0")));
    }
    let noise = Normal::new(0.0, sigma).expect("sigma checked");
    generate(ds, n_new, seed, |rng, src| {
        let values = ds.series(src).mapv(|v| v + noise.sample(rng));
        Ok(Derived { source: src, values, path: unchanged_path(ds, src) })
    })
}

/// Cuts `x` before each index in `cuts` (sorted, interior) and concatenates
/// the pieces in `order`.
pub fn slice_and_shuffle_series(x: ArrayView2<'_, f64>, cuts: &[usize], order: &[usize]) -> Array2<f64> {
    let t = x.nrows();
    let bounds: Vec<usize> = std::iter::once(0).chain(cuts.iter().copied()).chain(std::iter::once(t)).collect();
    let pieces: Vec<ArrayView2<'_, f64>> = bounds.windows(2).map(|w| x.slice(s![w[0]..w[1], ..])).collect();
    let ordered: Vec<ArrayView2<'_, f64>> = order.iter().map(|&i| pieces[i]).collect();
    ndarray::concatenate(Axis(0), &ordered).expect("pieces share D")
}

pub fn slice_and_shuffle(ds: &TimeSeriesDataset, n_slices: usize, n_new: usize, seed: RngSeed) -> Result<TimeSeriesDataset> {
    let t = ds.len_t();
    if n_slices == 0 || n_slices > t {
        return Err(Error::Precondition(format!("n_slices {n_slices} must be in 1..={t}")));
    }
    generate(ds, n_new, seed, |rng, src| {
        let mut cuts: Vec<usize> = index::sample(rng, t - 1, n_slices - 1).into_iter().map(|c| c + 1).collect();
        cuts.sort_unstable();
        let mut order: Vec<usize> = (0..n_slices).collect();
        order.shuffle(rng);
        let values = slice_and_shuffle_series(ds.series(src), &cuts, &order);
        let path = ds.temporal_path(src).map(|p| {
            let p2 = p.view().insert_axis(Axis(1));
            slice_and_shuffle_series(p2, &cuts, &order).column(0).to_owned()
        });
        Ok(Derived { source: src, values, path })
    })
}

pub fn flip(ds: &TimeSeriesDataset, mode: FlipMode, n_new: usize, seed: RngSeed) -> Result<TimeSeriesDataset> {
    generate(ds, n_new, seed, |_, src| {
        let x = ds.series(src);
        let (values, path) = match mode {
            FlipMode::Sign => (x.mapv(|v| -v), unchanged_path(ds, src)),
            FlipMode::Time => (
                x.slice(s![..;-1, ..]).to_owned(),
                ds.temporal_path(src).map(|p| p.slice(s![..;-1]).to_owned()),
            ),
        };
        Ok(Derived { source: src, values, path })
    })
}

/// Multiplies every feature of `x` by the natural cubic spline through
/// `knot_values` placed at equally spaced times over `0..T-1`.
pub fn magnitude_warp_with_knots(x: ArrayView2<'_, f64>, knot_values: &[f64]) -> Array2<f64> {
    let t = x.nrows();
    let k = knot_values.len();
    let xs: Vec<f64> = (0..k).map(|i| (t - 1) as f64 * i as f64 / (k - 1) as f64).collect();
    let spline = NaturalCubicSpline::new(xs, knot_values.to_vec());
    let mut out = x.to_owned();
    for (step, mut row) in out.rows_mut().into_iter().enumerate() {
        let w = spline.eval(step as f64);
        row.mapv_inplace(|v| v * w);
    }
    out
}

pub fn magnitude_warp(ds: &TimeSeriesDataset, n_knots: usize, sigma: f64, n_new: usize, seed: RngSeed) -> Result<TimeSeriesDataset> {
    if n_knots < 2 {
        return Err(Error::Precondition("magnitude_warp needs n_knots >= 2".into()));
    }
    if ds.len_t() < 2 {
        return Err(Error::Precondition("magnitude_warp needs T >= 2".into()));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Precondition(format!("sigma {sigma} must be finite and >= 0")));
    }
    let knot = Normal::new(1.0, sigma).expect("sigma checked");
    generate(ds, n_new, seed, |rng, src| {
        let knots: Vec<f64> = (0..n_knots).map(|_| knot.sample(rng)).collect();
        let values = magnitude_warp_with_knots(ds.series(src), &knots);
        Ok(Derived { source: src, values, path: unchanged_path(ds, src) })
    })
}

fn sample_positions(len: usize, m: usize) -> impl Iterator<Item = f64> {
    (0..m).map(move |i| if m == 1 { 0.0 } else { i as f64 * (len - 1) as f64 / (m - 1) as f64 })
}

/// Linear resampling of a `[L, D]` series to `m` rows over the same span.
pub fn resample_linear(x: ArrayView2<'_, f64>, m: usize) -> Array2<f64> {
    let (len, d) = x.dim();
    let mut out = Array2::zeros((m, d));
    for (i, pos) in sample_positions(len, m).enumerate() {
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(len - 1);
        let frac = pos - lo as f64;
        for j in 0..d {
            out[[i, j]] = if frac == 0.0 { x[[lo, j]] } else { x[[lo, j]] + frac * (x[[hi, j]] - x[[lo, j]]) };
        }
    }
    out
}

fn resample_nearest(p: ArrayView1<'_, f64>, m: usize) -> Array1<f64> {
    let len = p.len();
    sample_positions(len, m).map(|pos| p[(pos.round() as usize).min(len - 1)]).collect()
}

fn min_window(ratio: f64, t: usize, what: &str) -> Result<usize> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::Precondition(format!("{what} {ratio} must be in (0, 1]")));
    }
    let w = (ratio * t as f64).floor() as usize;
    if w < 2 {
        return Err(Error::Precondition(format!("{what} {ratio} gives a window of {w} < 2 steps")));
    }
    Ok(w)
}

/// Stretches or squeezes a random window by a random scale, then resamples
/// the whole series back to `T`.
pub fn window_warp(
    ds: &TimeSeriesDataset,
    window_ratio: f64,
    scales: &[f64],
    n_new: usize,
    seed: RngSeed,
) -> Result<TimeSeriesDataset> {
    let t = ds.len_t();
    let w = min_window(window_ratio, t, "window_ratio")?;
    if scales.is_empty() || scales.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::Precondition("scales must be a non-empty list of positive numbers".into()));
    }
    generate(ds, n_new, seed, |rng, src| {
        let start = rng.random_range(0..=t - w);
        let scale = scales[rng.random_range(0..scales.len())];
        let new_len = ((w as f64 * scale).round() as usize).max(2);
        let x = ds.series(src);
        let warped = resample_linear(x.slice(s![start..start + w, ..]), new_len);
        let joined = ndarray::concatenate(
            Axis(0),
            &[x.slice(s![..start, ..]), warped.view(), x.slice(s![start + w.., ..])],
        )
        .expect("same D");
        let values = resample_linear(joined.view(), t);
        let path = ds.temporal_path(src).map(|p| {
            let mid = resample_nearest(p.slice(s![start..start + w]), new_len);
            let joined: Array1<f64> = p.slice(s![..start]).iter().chain(mid.iter()).chain(p.slice(s![start + w..]).iter()).copied().collect();
            resample_nearest(joined.view(), t)
        });
        Ok(Derived { source: src, values, path })
    })
}

/// Crops a random window of `floor(reduce_ratio * T)` steps and stretches it
/// back to `T`.
pub fn window_slice(ds: &TimeSeriesDataset, reduce_ratio: f64, n_new: usize, seed: RngSeed) -> Result<TimeSeriesDataset> {
    let t = ds.len_t();
    let w = min_window(reduce_ratio, t, "reduce_ratio")?;
    generate(ds, n_new, seed, |rng, src| {
        let start = rng.random_range(0..=t - w);
        let values = resample_linear(ds.series(src).slice(s![start..start + w, ..]), t);
        let path = ds.temporal_path(src).map(|p| resample_nearest(p.slice(s![start..start + w]), t));
        Ok(Derived { source: src, values, path })
    })
}

/// Neighbour count for DBA weighting.
pub const DBA_NEIGHBOURS: usize = 5;

/// Reference selection and weights for one DBA output: the reference gets
/// 0.5, its `k` nearest DTW neighbours share 0.5 in proportion to
/// `exp(-dtw / tau)`, `tau` the median pairwise cost of the group.
fn dba_weights(group: &[usize], cost: &Array2<f64>, reference: usize, tau: f64) -> Vec<(usize, f64)> {
    let mut others: Vec<usize> = group.iter().copied().filter(|&i| i != reference).collect();
    others.sort_by(|&a, &b| cost[[reference, a]].total_cmp(&cost[[reference, b]]).then(a.cmp(&b)));
    others.truncate(DBA_NEIGHBOURS);
    let raw: Vec<f64> = others
        .iter()
        .map(|&i| if tau > 0.0 { (-cost[[reference, i]] / tau).exp() } else { 1.0 })
        .collect();
    let total: f64 = raw.iter().sum();
    let mut out = vec![(reference, 0.5)];
    out.extend(others.iter().zip(&raw).map(|(&i, &r)| (i, 0.5 * r / total)));
    out
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    crate::stats::quantile_sorted(&v, 0.5)
}

/// DTW barycenter averaging around randomly chosen reference series. With
/// static labels, references and neighbours come from the same class.
pub fn dtwba(ds: &TimeSeriesDataset, n_new: usize, n_iters: usize, seed: RngSeed) -> Result<TimeSeriesDataset> {
    let n = ds.n_series();
    if n < 2 {
        return Err(Error::Precondition("dtwba needs at least two series".into()));
    }
    if n_iters == 0 {
        return Err(Error::Precondition("dtwba needs n_iters >= 1".into()));
    }
    let group_of: Vec<i64> = match ds.labels() {
        Labels::Static(v) => v.clone(),
        _ => vec![0; n],
    };
    let mut groups: HashMap<i64, Vec<usize>> = HashMap::new();
    for (i, &g) in group_of.iter().enumerate() {
        groups.entry(g).or_default().push(i);
    }
    if let Some((label, g)) = groups.iter().find(|(_, g)| g.len() < 2) {
        return Err(Error::Precondition(format!("label group {label} has {} series, dtwba needs 2", g.len())));
    }
    let mut cost = Array2::zeros((n, n));
    let mut tau = HashMap::new();
    for (&label, members) in &groups {
        let mut pair_costs = Vec::new();
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                let c = dtw(ds.series(i), ds.series(j), PointDistance::SquaredEuclidean).cost;
                cost[[i, j]] = c;
                cost[[j, i]] = c;
                pair_costs.push(c);
            }
        }
        tau.insert(label, median(pair_costs));
    }
    let mut cache: HashMap<usize, Array2<f64>> = HashMap::new();
    generate(ds, n_new, seed, |_, reference| {
        let label = group_of[reference];
        let values = match cache.get(&reference) {
            Some(v) => v.clone(),
            None => {
                let weighted = dba_weights(&groups[&label], &cost, reference, tau[&label]);
                let members: Vec<ArrayView2<'_, f64>> = weighted.iter().map(|&(i, _)| ds.series(i)).collect();
                let weights: Vec<f64> = weighted.iter().map(|&(_, w)| w).collect();
                let b = weighted_dba(&members, &weights, ds.series(reference), n_iters);
                cache.insert(reference, b.series.clone());
                b.series
            }
        };
        Ok(Derived { source: reference, values, path: unchanged_path(ds, reference) })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds_from(rows: &[&[f64]]) -> TimeSeriesDataset {
        let t = rows[0].len();
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        TimeSeriesDataset::from_flat(rows.len(), t, 1, flat).unwrap()
    }

    fn sample(n: usize, t: usize, d: usize) -> TimeSeriesDataset {
        crate::generators::sines_generate(n, t, d, RngSeed(11)).unwrap()
    }

    fn is_source_copy(out: &TimeSeriesDataset, src: &TimeSeriesDataset, f: impl Fn(ArrayView2<'_, f64>) -> Array2<f64>) -> bool {
        (0..out.n_series()).all(|k| (0..src.n_series()).any(|i| f(src.series(i)) == out.series(k)))
    }

    #[test]
    fn zero_noise_copies() {
        let src = sample(10, 12, 2);
        let out = gaussian_noise(&src, 0.0, 100, RngSeed(1)).unwrap();
        assert_eq!(out.dim(), (100, 12, 2));
        assert!(is_source_copy(&out, &src, |x| x.to_owned()));
    }

    #[test]
    fn noise_residual_std() {
        let src = ds_from(&[&[0.0; 50]]);
        let out = gaussian_noise(&src, 1.0, 400, RngSeed(2)).unwrap();
        let v = out.as_flat();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
        assert!((sd - 1.0).abs() < 0.02, "{sd}");
    }

    #[test]
    fn one_slice_is_identity() {
        let src = sample(4, 9, 1);
        let out = slice_and_shuffle(&src, 1, 20, RngSeed(3)).unwrap();
        assert!(is_source_copy(&out, &src, |x| x.to_owned()));
    }

    #[test]
    fn two_slices_hand_case() {
        let x = Array2::from_shape_vec((4, 1), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = slice_and_shuffle_series(x.view(), &[2], &[1, 0]);
        assert_eq!(y.column(0).to_vec(), vec![3.0, 4.0, 1.0, 2.0]);
        assert_eq!(slice_and_shuffle_series(x.view(), &[2], &[0, 1]), x);
    }

    #[test]
    fn shuffle_preserves_multiset_and_labels() {
        let src = sample(3, 15, 2);
        let labels = Array2::from_shape_fn((3, 15), |(i, t)| (i * 100 + t) as f64);
        let src = src.with_temporal_labels(labels).unwrap();
        let out = slice_and_shuffle(&src, 4, 30, RngSeed(4)).unwrap();
        let Labels::Temporal(l) = out.labels() else { panic!() };
        for k in 0..30 {
            let i = (l[[k, 0]] / 100.0).floor() as usize;
            for j in 0..2 {
                let mut a = out.series(k).column(j).to_vec();
                let mut b = src.series(i).column(j).to_vec();
                a.sort_by(f64::total_cmp);
                b.sort_by(f64::total_cmp);
                assert_eq!(a, b);
            }
            // label path moved with the values
            for step in 0..15 {
                let t0 = (l[[k, step]] as usize) % 100;
                assert_eq!(out.series(k)[[step, 0]], src.series(i)[[t0, 0]]);
            }
        }
        assert!(slice_and_shuffle(&src, 16, 1, RngSeed(0)).is_err());
    }

    #[test]
    fn flips() {
        let src = ds_from(&[&[1.0, 2.0, 3.0]]);
        let t = flip(&src, FlipMode::Time, 1, RngSeed(0)).unwrap();
        assert_eq!(t.as_flat(), &[3.0, 2.0, 1.0]);
        let s = flip(&src, FlipMode::Sign, 1, RngSeed(0)).unwrap();
        assert_eq!(s.as_flat(), &[-1.0, -2.0, -3.0]);
        for mode in [FlipMode::Sign, FlipMode::Time] {
            assert_eq!(flip(&flip(&src, mode, 1, RngSeed(0)).unwrap(), mode, 1, RngSeed(0)).unwrap(), src);
        }
        let z = ds_from(&[&[0.0, 0.0]]);
        assert_eq!(flip(&z, FlipMode::Sign, 1, RngSeed(0)).unwrap().as_flat(), &[0.0, 0.0]);
    }

    #[test]
    fn magnitude_warp_limits() {
        let src = sample(5, 20, 2);
        let out = magnitude_warp(&src, 4, 1e-12, 10, RngSeed(5)).unwrap();
        for k in 0..10 {
            let best = (0..5)
                .map(|i| (&out.series(k) - &src.series(i)).iter().fold(0.0f64, |m, v| m.max(v.abs())))
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-9);
        }
        let doubled = magnitude_warp_with_knots(src.series(0), &[2.0; 4]);
        for (a, b) in doubled.iter().zip(src.series(0).iter()) {
            assert!((a - 2.0 * b).abs() < 1e-12);
        }
        assert!(magnitude_warp(&src, 1, 0.1, 1, RngSeed(0)).is_err());
    }

    #[test]
    fn window_warp_unit_scale_is_identity() {
        let src = sample(6, 30, 2);
        let out = window_warp(&src, 0.3, &[1.0], 20, RngSeed(6)).unwrap();
        assert_eq!(out.dim(), (20, 30, 2));
        for k in 0..20 {
            let best = (0..6)
                .map(|i| (&out.series(k) - &src.series(i)).iter().fold(0.0f64, |m, v| m.max(v.abs())))
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-9);
        }
    }

    #[test]
    fn window_warp_keeps_constants_and_length() {
        let src = ds_from(&[&[4.0; 17]]);
        let out = window_warp(&src, 0.5, &[0.5, 2.0, 3.3], 15, RngSeed(7)).unwrap();
        assert_eq!(out.len_t(), 17);
        assert!(out.as_flat().iter().all(|&v| (v - 4.0).abs() < 1e-12));
        assert!(window_warp(&src, 0.05, &[2.0], 1, RngSeed(0)).is_err());
    }

    #[test]
    fn window_slice_full_ratio_identity() {
        let src = sample(3, 10, 1);
        let out = window_slice(&src, 1.0, 5, RngSeed(8)).unwrap();
        assert!(is_source_copy(&out, &src, |x| x.to_owned()));
    }

    #[test]
    fn window_slice_ramp_stays_affine_and_monotone() {
        let ramp: Vec<f64> = (0..40).map(|t| 2.0 * t as f64 + 1.0).collect();
        let src = ds_from(&[&ramp]);
        let out = window_slice(&src, 0.6, 10, RngSeed(9)).unwrap();
        for k in 0..10 {
            let x = out.series(k).column(0).to_vec();
            let step = x[1] - x[0];
            assert!(step > 0.0 && step < 2.0);
            assert!(x.windows(2).all(|w| (w[1] - w[0] - step).abs() < 1e-9));
        }
    }

    #[test]
    fn dtwba_identical_members() {
        let row = [1.0, 5.0, 2.0, 2.0, 7.0];
        let src = ds_from(&[&row, &row, &row]);
        let out = dtwba(&src, 4, 3, RngSeed(10)).unwrap();
        for k in 0..4 {
            assert_eq!(out.series(k).column(0).to_vec(), row.to_vec());
        }
    }

    #[test]
    fn dtwba_needs_two_per_class() {
        let src = ds_from(&[&[1.0, 2.0], &[2.0, 3.0], &[0.0, 1.0]]).with_static_labels(vec![0, 0, 1]).unwrap();
        assert!(dtwba(&src, 1, 1, RngSeed(0)).is_err());
        let one = ds_from(&[&[1.0, 2.0]]);
        assert!(dtwba(&one, 1, 1, RngSeed(0)).is_err());
    }

    #[test]
    fn dtwba_keeps_class_labels() {
        let src = sample(8, 12, 1).with_static_labels(vec![0, 1, 0, 1, 0, 1, 0, 1]).unwrap();
        let out = dtwba(&src, 12, 2, RngSeed(12)).unwrap();
        assert_eq!(out.dim(), (12, 12, 1));
        assert!(matches!(out.labels(), Labels::Static(v) if v.len() == 12));
    }

    #[test]
    fn dba_weights_sum_to_one() {
        let src = sample(9, 10, 1);
        let group: Vec<usize> = (0..9).collect();
        let mut cost = Array2::zeros((9, 9));
        for i in 0..9 {
            for j in 0..9 {
                cost[[i, j]] = dtw(src.series(i), src.series(j), PointDistance::SquaredEuclidean).cost;
            }
        }
        let w = dba_weights(&group, &cost, 3, 1.0);
        assert_eq!(w.len(), 1 + DBA_NEIGHBOURS);
        assert_eq!(w[0], (3, 0.5));
        assert!((w.iter().map(|p| p.1).sum::<f64>() - 1.0).abs() < 1e-12);
        // nearer neighbours weigh more
        assert!(w[1..].windows(2).all(|p| p[0].1 >= p[1].1));
    }

    #[test]
    fn request_json() {
        let req: AugmentationRequest =
            serde_json::from_str(r#"{"method": "window_warp", "window_ratio": 0.2, "scales": [0.5, 2.0], "n_new": 100, "seed": 3}"#).unwrap();
        assert_eq!(req.method, Augmentation::WindowWarp { window_ratio: 0.2, scales: vec![0.5, 2.0] });
        assert_eq!(req.seed, RngSeed(3));
        let back: AugmentationRequest = serde_json::from_str(&serde_json::to_string(&req).unwrap()).unwrap();
        assert_eq!(back, req);
        let src = sample(4, 20, 1);
        assert_eq!(augment(&src, &req).unwrap().n_series(), 100);
    }
}
