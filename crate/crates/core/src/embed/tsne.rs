//! Exact O(M^2) t-SNE.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{EmbedMethod, EmbeddingResult, SourceTag};
use crate::{Error, Result, RngSeed};

const ENTROPY_TOL: f64 = 1e-5;
const MAX_BISECTIONS: usize = 50;
const P_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub n_iter: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    /// Iterations with exaggerated P; also when momentum switches.
    pub exaggeration_iters: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            n_iter: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
        }
    }
}

fn squared_distances(points: &Array2<f64>) -> Array2<f64> {
    let m = points.nrows();
    let mut d = Array2::zeros((m, m));
    for i in 0..m {
        for j in i + 1..m {
            let v: f64 = points.row(i).iter().zip(points.row(j)).map(|(a, b)| (a - b).powi(2)).sum();
            d[[i, j]] = v;
            d[[j, i]] = v;
        }
    }
    d
}

/// Row `i` of P given precision `beta`; returns (row, Shannon entropy in nats).
fn row_given_beta(dist: &Array2<f64>, i: usize, beta: f64) -> (Vec<f64>, f64) {
    let m = dist.nrows();
    // shift by the smallest off-diagonal distance for stability
    let dmin = (0..m).filter(|&j| j != i).map(|j| dist[[i, j]]).fold(f64::INFINITY, f64::min);
    let mut p: Vec<f64> = (0..m)
        .map(|j| if j == i { 0.0 } else { (-(dist[[i, j]] - dmin) * beta).exp() })
        .collect();
    let sum: f64 = p.iter().sum();
    let mut h = 0.0;
    for (j, v) in p.iter_mut().enumerate() {
        *v /= sum;
        if j != i && *v > 0.0 {
            h -= *v * v.ln();
        }
    }
    (p, h)
}

/// Conditional probabilities `p_{j|i}` with per-row bandwidths found by
/// bisection on the precision so each row's entropy is `ln(perplexity)`.
/// Returns the matrix and the achieved entropies.
pub fn conditional_probabilities(points: &Array2<f64>, perplexity: f64) -> Result<(Array2<f64>, Vec<f64>)> {
    let m = points.nrows();
    if !(perplexity >= 2.0) || 3.0 * perplexity >= m as f64 {
        return Err(Error::Precondition(format!(
            "perplexity {perplexity} infeasible for {m} points (need 2 <= perplexity < M/3)"
        )));
    }
    let dist = squared_distances(points);
    let target = perplexity.ln();
    let mut p = Array2::zeros((m, m));
    let mut entropies = Vec::with_capacity(m);
    for i in 0..m {
        let (mut beta, mut lo, mut hi) = (1.0, 0.0, f64::INFINITY);
        let (mut row, mut h) = row_given_beta(&dist, i, beta);
        for _ in 0..MAX_BISECTIONS {
            if (h - target).abs() <= ENTROPY_TOL {
                break;
            }
            if h > target {
                lo = beta;
                beta = if hi.is_finite() { 0.5 * (beta + hi) } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = 0.5 * (beta + lo);
            }
            (row, h) = row_given_beta(&dist, i, beta);
        }
        p.row_mut(i).assign(&Array1::from(row));
        entropies.push(h);
    }
    Ok((p, entropies))
}

/// Symmetrised joint P: `(P + P^T) / 2M`, off-diagonal floor, sums to 1.
pub fn joint_probabilities(conditional: &Array2<f64>) -> Array2<f64> {
    let m = conditional.nrows();
    let mut p = (conditional + &conditional.t()) / (2.0 * m as f64);
    for i in 0..m {
        for j in 0..m {
            p[[i, j]] = if i == j { 0.0 } else { p[[i, j]].max(P_FLOOR) };
        }
    }
    let s = p.sum();
    p / s
}

fn kl(p: &Array2<f64>, q_num: &Array2<f64>, q_sum: f64) -> f64 {
    let mut acc = 0.0;
    for ((i, j), &pij) in p.indexed_iter() {
        if i != j && pij > 0.0 {
            let q = (q_num[[i, j]] / q_sum).max(1e-300);
            acc += pij * (pij / q).ln();
        }
    }
    acc
}

/// Student-t kernel numerators and their off-diagonal sum.
fn student_t(y: &Array2<f64>) -> (Array2<f64>, f64) {
    let m = y.nrows();
    let mut num = Array2::zeros((m, m));
    let mut sum = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            let d = (y[[i, 0]] - y[[j, 0]]).powi(2) + (y[[i, 1]] - y[[j, 1]]).powi(2);
            let v = 1.0 / (1.0 + d);
            num[[i, j]] = v;
            num[[j, i]] = v;
            sum += 2.0 * v;
        }
    }
    (num, sum)
}

pub fn tsne_embed(points: &Array2<f64>, cfg: &TsneConfig, seed: RngSeed) -> Result<EmbeddingResult> {
    let m = points.nrows();
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite input to t-SNE".into()));
    }
    let (cond, _) = conditional_probabilities(points, cfg.perplexity)?;
    let p = joint_probabilities(&cond);

    let normal = Normal::new(0.0, 1e-2).expect("valid sigma");
    let mut rng = seed.rng();
    let mut y = Array2::from_shape_fn((m, 2), |_| normal.sample(&mut rng));
    let mut update = Array2::<f64>::zeros((m, 2));
    let mut gains = Array2::<f64>::ones((m, 2));
    let mut kl_trace = Vec::new();

    for iter in 0..cfg.n_iter {
        let exaggerate = iter < cfg.exaggeration_iters;
        let factor = if exaggerate { cfg.early_exaggeration } else { 1.0 };
        let momentum = if iter < cfg.exaggeration_iters { cfg.initial_momentum } else { cfg.final_momentum };
        let (num, sum) = student_t(&y);
        if !exaggerate {
            kl_trace.push(kl(&p, &num, sum));
        }
        let mut grad = Array2::<f64>::zeros((m, 2));
        for i in 0..m {
            let (mut g0, mut g1) = (0.0, 0.0);
            for j in 0..m {
                if i == j {
                    continue;
                }
                let w = (factor * p[[i, j]] - num[[i, j]] / sum) * num[[i, j]];
                g0 += w * (y[[i, 0]] - y[[j, 0]]);
                g1 += w * (y[[i, 1]] - y[[j, 1]]);
            }
            grad[[i, 0]] = 4.0 * g0;
            grad[[i, 1]] = 4.0 * g1;
        }
        for ((g, u), gain) in grad.iter().zip(update.iter_mut()).zip(gains.iter_mut()) {
            *gain = if (*g > 0.0) != (*u > 0.0) { *gain + 0.2 } else { *gain * 0.8 };
            *gain = gain.max(0.01);
            *u = momentum * *u - cfg.learning_rate * *gain * g;
        }
        y += &update;
        let mean = y.mean_axis(ndarray::Axis(0)).expect("m >= 1");
        y -= &mean;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("t-SNE diverged at iteration {iter}")));
        }
    }
    let (num, sum) = student_t(&y);
    let final_kl = kl(&p, &num, sum);
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("final_kl".into(), final_kl);
    diagnostics.insert("perplexity".into(), cfg.perplexity);
    Ok(EmbeddingResult {
        coords: y,
        source_tags: vec![SourceTag::Real; m],
        method: EmbedMethod::Tsne,
        diagnostics,
        kl_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::StandardNormal;

    fn gaussian_blobs(per: usize, dim: usize, sep: f64, seed: u64) -> Array2<f64> {
        let mut rng = RngSeed(seed).rng();
        Array2::from_shape_fn((2 * per, dim), |(i, _)| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z + if i < per { 0.0 } else { sep }
        })
    }

    #[test]
    fn joint_p_contract() {
        let pts = gaussian_blobs(15, 4, 3.0, 1);
        let (cond, _) = conditional_probabilities(&pts, 5.0).unwrap();
        let p = joint_probabilities(&cond);
        assert!((p.sum() - 1.0).abs() < 1e-12);
        for i in 0..p.nrows() {
            assert_eq!(p[[i, i]], 0.0);
            for j in 0..p.nrows() {
                assert!((p[[i, j]] - p[[j, i]]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn row_entropy_hits_target() {
        let pts = gaussian_blobs(20, 5, 4.0, 2);
        for perp in [2.0, 5.0, 10.0] {
            let (_, h) = conditional_probabilities(&pts, perp).unwrap();
            for e in h {
                assert!((e - perp.ln()).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn infeasible_perplexity() {
        let pts = gaussian_blobs(5, 2, 1.0, 3);
        assert!(conditional_probabilities(&pts, 4.0).is_err());
        assert!(conditional_probabilities(&pts, 1.5).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let pts = gaussian_blobs(10, 3, 5.0, 4);
        let cfg = TsneConfig { perplexity: 5.0, n_iter: 60, ..Default::default() };
        let a = tsne_embed(&pts, &cfg, RngSeed(9)).unwrap();
        let b = tsne_embed(&pts, &cfg, RngSeed(9)).unwrap();
        assert_eq!(a.coords, b.coords);
    }
}
