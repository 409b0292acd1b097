//! Weighted DTW barycenter averaging.

use ndarray::{Array2, ArrayView2};

use super::dtw::{dtw, PointDistance};

/// Result of [`weighted_dba`].
#[derive(Clone, Debug)]
pub struct Barycenter {
    pub series: Array2<f64>,
    /// Weighted total DTW cost to the members, before the first update and
    /// after every iteration (`n_iters + 1` entries).
    pub cost_history: Vec<f64>,
}

fn weighted_cost(center: ArrayView2<'_, f64>, members: &[ArrayView2<'_, f64>], weights: &[f64]) -> f64 {
    members
        .iter()
        .zip(weights)
        .map(|(m, w)| w * dtw(center, *m, PointDistance::SquaredEuclidean).cost)
        .sum()
}

/// Refines `init` for `n_iters` rounds: align every member to the current
/// barycenter, then move each barycenter point to the weighted mean of the
/// member points aligned to it. Costs use squared Euclidean distance, for
/// which each update cannot increase the weighted total cost.
pub fn weighted_dba(
    members: &[ArrayView2<'_, f64>],
    weights: &[f64],
    init: ArrayView2<'_, f64>,
    n_iters: usize,
) -> Barycenter {
    assert_eq!(members.len(), weights.len());
    let mut center = init.to_owned();
    let (t, d) = center.dim();
    let mut cost_history = vec![weighted_cost(center.view(), members, weights)];
    for _ in 0..n_iters {
        // Weighted means are taken as anchor + mean deviation from the first
        // aligned point, so agreeing members reproduce their value exactly.
        let mut seen = vec![false; t];
        let mut sum = Array2::<f64>::zeros((t, d));
        let mut mass = vec![0.0; t];
        let mut aligned = Vec::with_capacity(members.len());
        for (k, (m, &w)) in members.iter().zip(weights).enumerate() {
            if w == 0.0 {
                continue;
            }
            aligned.push((k, w, dtw(center.view(), *m, PointDistance::SquaredEuclidean).path));
        }
        let mut first = Array2::<f64>::zeros((t, d));
        for (k, w, path) in &aligned {
            for &(ci, mi) in path {
                if !seen[ci] {
                    seen[ci] = true;
                    first.row_mut(ci).assign(&members[*k].row(mi));
                }
                for j in 0..d {
                    sum[[ci, j]] += w * (members[*k][[mi, j]] - first[[ci, j]]);
                }
                mass[ci] += w;
            }
        }
        for ci in 0..t {
            if mass[ci] > 0.0 {
                for j in 0..d {
                    center[[ci, j]] = first[[ci, j]] + sum[[ci, j]] / mass[ci];
                }
            }
        }
        cost_history.push(weighted_cost(center.view(), members, weights));
    }
    Barycenter { series: center, cost_history }
}
