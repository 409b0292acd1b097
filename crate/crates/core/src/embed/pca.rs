use std::collections::BTreeMap;

use ndarray::{Array1, Array2, Axis};

use super::{EmbedMethod, EmbeddingResult, SourceTag};
use crate::{Error, Result};

const TOL: f64 = 1e-10;
const MAX_ITER: usize = 1000;

/// Top eigenpair of symmetric PSD `c` by power iteration. Converged when the
/// residual `|c v - lambda v|` is at most `TOL * lambda`, with `lambda`
/// floored at `1e-3 * scale` so numerically-zero eigenvalues terminate.
fn power_iteration(c: &Array2<f64>, scale: f64) -> Result<(f64, Array1<f64>)> {
    let p = c.nrows();
    // start from the column with the largest diagonal entry: never
    // orthogonal to the top eigenvector unless that column is zero
    let start = (0..p).max_by(|&a, &b| c[[a, a]].total_cmp(&c[[b, b]])).unwrap_or(0);
    let mut v = c.column(start).to_owned();
    let nv = v.dot(&v).sqrt();
    if nv == 0.0 {
        let mut e = Array1::zeros(p);
        e[start] = 1.0;
        return Ok((0.0, e));
    }
    v /= nv;
    for _ in 0..MAX_ITER {
        let w = c.dot(&v);
        let lambda = v.dot(&w);
        let residual = &w - &v * lambda;
        if residual.dot(&residual).sqrt() <= TOL * lambda.abs().max(1e-3 * scale) {
            return Ok((lambda, v));
        }
        let nw = w.dot(&w).sqrt();
        if nw == 0.0 {
            return Ok((0.0, v));
        }
        v = w / nw;
    }
    Err(Error::Numeric(format!("power iteration did not converge in {MAX_ITER} iterations")))
}

fn orient(v: &mut Array1<f64>) {
    let lead = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if lead < 0.0 {
        v.mapv_inplace(|x| -x);
    }
}

/// Projects centred points onto their two leading principal directions.
pub fn pca_embed(points: &Array2<f64>) -> Result<EmbeddingResult> {
    let (m, p) = points.dim();
    if m < 2 {
        return Err(Error::Precondition("PCA needs at least two points".into()));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite input to PCA".into()));
    }
    let mean = points.mean_axis(Axis(0)).expect("m >= 2");
    let centred = points - &mean;
    let cov = centred.t().dot(&centred) / (m - 1) as f64;
    let trace: f64 = cov.diag().sum();

    let mut dirs = Array2::zeros((p, 2));
    let mut deflated = cov.clone();
    let mut explained = [0.0; 2];
    for k in 0..2.min(p) {
        let (lambda, mut v) = power_iteration(&deflated, trace)?;
        if lambda <= TOL * trace.max(f64::MIN_POSITIVE) {
            // remaining variance is numerically zero: any direction
            // orthogonal to the previous ones will do
            v = orthogonal_to(&dirs, k, p);
        }
        for j in 0..k {
            let prev = dirs.column(j).to_owned();
            let proj = v.dot(&prev);
            v = v - prev * proj;
        }
        let nv = v.dot(&v).sqrt();
        v /= nv;
        orient(&mut v);
        let outer = v.view().insert_axis(Axis(1)).dot(&v.view().insert_axis(Axis(0)));
        deflated = deflated - outer * lambda.max(0.0);
        explained[k] = if trace > 0.0 { lambda.max(0.0) / trace } else { 0.0 };
        dirs.column_mut(k).assign(&v);
    }
    let coords = centred.dot(&dirs);
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("explained_variance_0".into(), explained[0]);
    diagnostics.insert("explained_variance_1".into(), explained[1]);
    Ok(EmbeddingResult {
        coords,
        source_tags: vec![SourceTag::Real; m],
        method: EmbedMethod::Pca,
        diagnostics,
        kl_trace: Vec::new(),
    })
}

fn orthogonal_to(dirs: &Array2<f64>, k: usize, p: usize) -> Array1<f64> {
    for axis in 0..p {
        let mut e = Array1::zeros(p);
        e[axis] = 1.0;
        for j in 0..k {
            let d = dirs.column(j);
            let proj = e.dot(&d);
            e = e - &d * proj;
        }
        let n = e.dot(&e).sqrt();
        if n > 1e-6 {
            return e / n;
        }
    }
    Array1::zeros(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_points(m: usize, p: usize, seed: u64) -> Array2<f64> {
        let mut rng = crate::RngSeed(seed).rng();
        // anisotropic so the top two eigenvalues are well separated
        Array2::from_shape_fn((m, p), |(_, j)| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * (p - j) as f64
        })
    }

    fn pairwise(c: &Array2<f64>) -> Vec<f64> {
        let m = c.nrows();
        let mut out = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                out.push(((c[[i, 0]] - c[[j, 0]]).powi(2) + (c[[i, 1]] - c[[j, 1]]).powi(2)).sqrt());
            }
        }
        out
    }

    #[test]
    fn rank_one_data() {
        let pts = Array2::from_shape_fn((20, 4), |(i, j)| i as f64 * (j as f64 + 1.0));
        let r = pca_embed(&pts).unwrap();
        assert!(r.diagnostics["explained_variance_1"].abs() < 1e-9);
        assert!((r.diagnostics["explained_variance_0"] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn output_is_centred() {
        let r = pca_embed(&random_points(30, 5, 1)).unwrap();
        for col in r.coords.columns() {
            assert!(col.mean().unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn rotation_invariant_distances() {
        let pts = random_points(25, 3, 2);
        // random orthogonal matrix via Gram-Schmidt on Gaussian columns
        let mut rng = crate::RngSeed(3).rng();
        let mut q = Array2::from_shape_fn((3, 3), |_| rng.random::<f64>() - 0.5);
        for k in 0..3 {
            for j in 0..k {
                let proj = q.column(k).dot(&q.column(j));
                let cj = q.column(j).to_owned();
                q.column_mut(k).scaled_add(-proj, &cj);
            }
            let n = q.column(k).dot(&q.column(k)).sqrt();
            q.column_mut(k).mapv_inplace(|v| v / n);
        }
        let a = pairwise(&pca_embed(&pts).unwrap().coords);
        let b = pairwise(&pca_embed(&pts.dot(&q)).unwrap().coords);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-6 * x.max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn directions_orthonormal() {
        let pts = random_points(40, 6, 4);
        let mean = pts.mean_axis(Axis(0)).unwrap();
        let c = &pts - &mean;
        let r = pca_embed(&pts).unwrap();
        // recover directions by least squares: coords = c * dirs
        let cov = c.t().dot(&c);
        let rhs = c.t().dot(&r.coords);
        let dirs = nalgebra::DMatrix::from_row_slice(6, 6, cov.as_slice().unwrap())
            .lu()
            .solve(&nalgebra::DMatrix::from_row_slice(6, 2, rhs.as_standard_layout().as_slice().unwrap()))
            .unwrap();
        let gram = dirs.transpose() * &dirs;
        assert!((gram[(0, 0)] - 1.0).abs() < 1e-8);
        assert!((gram[(1, 1)] - 1.0).abs() < 1e-8);
        assert!(gram[(0, 1)].abs() < 1e-8);
    }

    #[test]
    fn identical_points() {
        let pts = Array2::from_elem((5, 3), 2.0);
        let r = pca_embed(&pts).unwrap();
        assert!(r.coords.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn single_point_rejected() {
        assert!(pca_embed(&Array2::zeros((1, 3))).is_err());
    }
}
