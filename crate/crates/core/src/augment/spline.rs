//! Natural cubic spline interpolation.

/// Natural cubic spline through `(xs[k], ys[k])`, `xs` strictly increasing.
#[derive(Clone, Debug)]
pub struct NaturalCubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots; zero at both ends.
    m: Vec<f64>,
}

impl NaturalCubicSpline {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let n = xs.len();
        assert!(n >= 2 && ys.len() == n, "need >= 2 knots with matching values");
        assert!(xs.windows(2).all(|w| w[1] > w[0]), "knots must increase");
        let mut m = vec![0.0; n];
        if n > 2 {
            // interior system: h[k-1] m[k-1] + 2(h[k-1] + h[k]) m[k] + h[k] m[k+1] = rhs[k]
            let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
            let k = n - 2;
            let mut diag: Vec<f64> = (1..n - 1).map(|i| 2.0 * (h[i - 1] + h[i])).collect();
            let mut rhs: Vec<f64> = (1..n - 1)
                .map(|i| 6.0 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1]))
                .collect();
            // Thomas algorithm; sub- and super-diagonal entry for row r is h[r]
            for r in 1..k {
                let w = h[r] / diag[r - 1];
                diag[r] -= w * h[r];
                rhs[r] -= w * rhs[r - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for r in (0..k - 1).rev() {
                m[r + 1] = (rhs[r] - h[r + 1] * m[r + 2]) / diag[r];
            }
        }
        NaturalCubicSpline { xs, ys, m }
    }

    pub fn second_derivatives(&self) -> &[f64] {
        &self.m
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let seg = match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let (x0, x1) = (self.xs[seg], self.xs[seg + 1]);
        let h = x1 - x0;
        let (a, b) = ((x1 - x) / h, (x - x0) / h);
        a * self.ys[seg]
            + b * self.ys[seg + 1]
            + ((a.powi(3) - a) * self.m[seg] + (b.powi(3) - b) * self.m[seg + 1]) * h * h / 6.0
    }
}
