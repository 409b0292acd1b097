//! Dynamic time warping over multivariate series (dependent warping: one
//! path, pointwise distance over all features).

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointDistance {
    #[default]
    SquaredEuclidean,
    Euclidean,
}

impl PointDistance {
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        match self {
            PointDistance::SquaredEuclidean => sq,
            PointDistance::Euclidean => sq.sqrt(),
        }
    }
}

/// Alignment cost and warping path from `(0, 0)` to `(T1 - 1, T2 - 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Alignment {
    pub cost: f64,
    pub path: Vec<(usize, usize)>,
}

/// Classic DTW with steps (1,0), (0,1), (1,1). Ties in the backtrack prefer
/// the diagonal, then the step that advances `a`.
pub fn dtw(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>, dist: PointDistance) -> Alignment {
    let (n, m) = (a.nrows(), b.nrows());
    assert!(n >= 1 && m >= 1, "dtw needs non-empty series");
    assert_eq!(a.ncols(), b.ncols(), "feature counts differ");
    let rows_a: Vec<Vec<f64>> = a.rows().into_iter().map(|r| r.to_vec()).collect();
    let rows_b: Vec<Vec<f64>> = b.rows().into_iter().map(|r| r.to_vec()).collect();
    let mut acc = vec![f64::INFINITY; n * m];
    let at = |i: usize, j: usize| i * m + j;
    for i in 0..n {
        for j in 0..m {
            let c = dist.eval(&rows_a[i], &rows_b[j]);
            let prev = if i == 0 && j == 0 {
                0.0
            } else {
                let diag = if i > 0 && j > 0 { acc[at(i - 1, j - 1)] } else { f64::INFINITY };
                let up = if i > 0 { acc[at(i - 1, j)] } else { f64::INFINITY };
                let left = if j > 0 { acc[at(i, j - 1)] } else { f64::INFINITY };
                diag.min(up).min(left)
            };
            acc[at(i, j)] = c + prev;
        }
    }
    let mut path = vec![(n - 1, m - 1)];
    let (mut i, mut j) = (n - 1, m - 1);
    while i > 0 || j > 0 {
        (i, j) = if i == 0 {
            (0, j - 1)
        } else if j == 0 {
            (i - 1, 0)
        } else {
            let diag = acc[at(i - 1, j - 1)];
            let up = acc[at(i - 1, j)];
            let left = acc[at(i, j - 1)];
            if diag <= up && diag <= left {
                (i - 1, j - 1)
            } else if up <= left {
                (i - 1, j)
            } else {
                (i, j - 1)
            }
        };
        path.push((i, j));
    }
    path.reverse();
    Alignment { cost: acc[at(n - 1, m - 1)], path }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn col(v: &[f64]) -> Array2<f64> {
        Array2::from_shape_vec((v.len(), 1), v.to_vec()).unwrap()
    }

    #[test]
    fn self_alignment_is_diagonal() {
        let x = col(&[1.0, 3.0, 2.0, 5.0]);
        let a = dtw(x.view(), x.view(), PointDistance::Euclidean);
        assert_eq!(a.cost, 0.0);
        assert_eq!(a.path, vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
    }

    #[test]
    fn single_points() {
        let a = dtw(col(&[0.0]).view(), col(&[1.0]).view(), PointDistance::Euclidean);
        assert_eq!(a.cost, 1.0);
        assert_eq!(a.path, vec![(0, 0)]);
    }

    #[test]
    fn repeated_value_warps_free() {
        let a = dtw(col(&[1.0, 2.0, 3.0]).view(), col(&[1.0, 2.0, 2.0, 3.0]).view(), PointDistance::Euclidean);
        assert_eq!(a.cost, 0.0);
        assert_eq!(a.path.first(), Some(&(0, 0)));
        assert_eq!(a.path.last(), Some(&(2, 3)));
    }

    #[test]
    fn multivariate_uses_joint_distance() {
        let a = Array2::from_shape_vec((1, 2), vec![0.0, 0.0]).unwrap();
        let b = Array2::from_shape_vec((1, 2), vec![3.0, 4.0]).unwrap();
        assert_eq!(dtw(a.view(), b.view(), PointDistance::Euclidean).cost, 5.0);
        assert_eq!(dtw(a.view(), b.view(), PointDistance::SquaredEuclidean).cost, 25.0);
    }
}
