use ndarray::Array3;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::{Error, Result, TimeSeriesDataset};

/// One-sided power spectrum of `x`, `floor(T/2) + 1` bins.
///
/// Bin `k` holds `|X_k|^2 / T^2`, doubled for bins that have a mirrored
/// negative-frequency partner, so the bins sum to the mean square
/// `sum(x_t^2) / T`.
pub fn power_spectrum(x: &[f64]) -> Vec<f64> {
    let t = x.len();
    if t == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(t).process(&mut buf);
    let norm = (t * t) as f64;
    (0..=t / 2)
        .map(|k| {
            let p = buf[k].norm_sqr() / norm;
            let mirrored = k != 0 && 2 * k != t;
            if mirrored {
                2.0 * p
            } else {
                p
            }
        })
        .collect()
}

/// Per-series, per-feature power spectra: `[N, floor(T/2) + 1, D]`.
pub fn periodogram(ds: &TimeSeriesDataset) -> Result<Array3<f64>> {
    let (n, t, d) = ds.dim();
    if t < 2 {
        return Err(Error::Precondition("periodogram needs T >= 2".into()));
    }
    let bins = t / 2 + 1;
    let mut out = Array3::zeros((n, bins, d));
    for i in 0..n {
        let s = ds.series(i);
        for j in 0..d {
            let p = power_spectrum(&s.column(j).to_vec());
            for (k, v) in p.into_iter().enumerate() {
                out[[i, k, j]] = v;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Direct O(T^2) DFT, independent of the FFT path.
    fn dft_power(x: &[f64]) -> Vec<f64> {
        let t = x.len();
        (0..=t / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (n, &v) in x.iter().enumerate() {
                    let a = -2.0 * PI * (k * n) as f64 / t as f64;
                    re += v * a.cos();
                    im += v * a.sin();
                }
                let p = (re * re + im * im) / (t * t) as f64;
                if k != 0 && 2 * k != t { 2.0 * p } else { p }
            })
            .collect()
    }

    #[test]
    fn constant_has_only_dc() {
        let p = power_spectrum(&[3.0; 8]);
        assert!((p[0] - 9.0).abs() < 1e-12);
        assert!(p[1..].iter().all(|v| v.abs() < 1e-20));
    }

    #[test]
    fn cosine_concentrates_in_its_bin() {
        for t in [16usize, 17] {
            for k in 1..t / 2 {
                let x: Vec<f64> = (0..t).map(|n| (2.0 * PI * (k * n) as f64 / t as f64).cos()).collect();
                let p = power_spectrum(&x);
                let total: f64 = p.iter().sum();
                assert!((p[k] / total - 1.0).abs() < 1e-9, "t={t} k={k}");
            }
        }
    }

    #[test]
    fn periodogram_shape() {
        let ds = TimeSeriesDataset::from_flat(2, 7, 3, vec![1.0; 42]).unwrap();
        assert_eq!(periodogram(&ds).unwrap().dim(), (2, 4, 3));
        let short = TimeSeriesDataset::from_flat(1, 1, 1, vec![1.0]).unwrap();
        assert!(periodogram(&short).is_err());
    }

    proptest! {
        #[test]
        fn parseval(x in proptest::collection::vec(-10.0f64..10.0, 2..40)) {
            let p = power_spectrum(&x);
            let ms = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
            prop_assert!((p.iter().sum::<f64>() - ms).abs() < 1e-9);
        }

        #[test]
        fn matches_direct_dft(x in proptest::collection::vec(-5.0f64..5.0, 1..30)) {
            for (a, b) in power_spectrum(&x).iter().zip(dft_power(&x)) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
