//! Summary-statistic vectors of whole datasets.
//!
//! [`summarize`] maps a dataset to a [`StatVector`] whose layout depends only
//! on `(D, StatConfig)`. Distances between such vectors drive the
//! similarity metric and the ABC discrepancy.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::embed::power_spectrum;
use crate::{Error, Result, TimeSeriesDataset};

/// One enabled statistic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stat {
    Mean,
    Std,
    Min,
    Max,
    Q25,
    Median,
    Q75,
    /// Sample autocorrelation at each listed lag.
    AcfLags(Vec<usize>),
    /// Mean periodogram power in this many equal-width frequency bands.
    BandPower(usize),
}

impl Stat {
    fn key(&self) -> &'static str {
        match self {
            Stat::Mean => "mean",
            Stat::Std => "std",
            Stat::Min => "min",
            Stat::Max => "max",
            Stat::Q25 => "q25",
            Stat::Median => "median",
            Stat::Q75 => "q75",
            Stat::AcfLags(_) => "acf_lags",
            Stat::BandPower(_) => "band_power",
        }
    }
}

/// How scalar statistics combine across series.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// Scalar stats over all `N * T` values of a feature; ACF and band power
    /// averaged over per-series values.
    #[default]
    Pooled,
    /// Every statistic computed per series, then averaged over series.
    PerSeries,
}

/// Ordered list of statistics.
///
/// JSON form is an object whose keys are the enabled statistic names in
/// order: scalar stats map to `true`, `acf_lags` to a list of lags,
/// `band_power` to the number of bands. An optional `"pooling"` key selects
/// [`Pooling`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StatConfig {
    pub stats: Vec<Stat>,
    pub pooling: Pooling,
}

impl Default for StatConfig {
    /// mean, std, min, max, q25, median, q75, ACF at lags 1..=8 and 5 bands:
    /// 20 values per feature.
    fn default() -> Self {
        StatConfig {
            stats: vec![
                Stat::Mean,
                Stat::Std,
                Stat::Min,
                Stat::Max,
                Stat::Q25,
                Stat::Median,
                Stat::Q75,
                Stat::AcfLags((1..=8).collect()),
                Stat::BandPower(5),
            ],
            pooling: Pooling::Pooled,
        }
    }
}

impl StatConfig {
    pub fn new(stats: Vec<Stat>) -> Self {
        StatConfig { stats, pooling: Pooling::Pooled }
    }

    /// The default set with lags and bands clipped to what `t` allows.
    pub fn default_for_len(t: usize) -> Self {
        let mut cfg = Self::default();
        for s in &mut cfg.stats {
            match s {
                Stat::AcfLags(l) => l.retain(|&lag| lag < t),
                Stat::BandPower(b) => *b = (*b).min(t / 2),
                _ => {}
            }
        }
        cfg.stats.retain(|s| !matches!(s, Stat::AcfLags(l) if l.is_empty()) && !matches!(s, Stat::BandPower(0)));
        cfg
    }

    pub fn validate(&self, t: usize) -> Result<()> {
        if self.stats.is_empty() {
            return Err(Error::Config("no statistics enabled".into()));
        }
        for s in &self.stats {
            match s {
                Stat::AcfLags(lags) => {
                    if lags.is_empty() {
                        return Err(Error::Config("acf_lags is empty".into()));
                    }
                    if let Some(&l) = lags.iter().find(|&&l| l >= t) {
                        return Err(Error::Config(format!("acf lag {l} must be below series length {t}")));
                    }
                }
                Stat::BandPower(b) => {
                    if *b == 0 || *b > t / 2 {
                        return Err(Error::Config(format!("band_power {b} must be in 1..={}", t / 2)));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Layout of the vector produced for `d` features.
    pub fn layout(&self, d: usize) -> Vec<StatSlot> {
        let mut out = Vec::new();
        for feature in 0..d {
            for s in &self.stats {
                match s {
                    Stat::AcfLags(lags) => out.extend(lags.iter().map(|&l| StatSlot {
                        stat: "acf",
                        feature,
                        index: Some(l),
                    })),
                    Stat::BandPower(b) => out.extend((0..*b).map(|band| StatSlot {
                        stat: "band_power",
                        feature,
                        index: Some(band),
                    })),
                    other => out.push(StatSlot { stat: other.key(), feature, index: None }),
                }
            }
        }
        out
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("stat config serializes")
    }
}

impl Serialize for StatConfig {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = Map::new();
        for s in &self.stats {
            let v = match s {
                Stat::AcfLags(l) => Value::from(l.clone()),
                Stat::BandPower(b) => Value::from(*b),
                _ => Value::Bool(true),
            };
            m.insert(s.key().to_string(), v);
        }
        if self.pooling != Pooling::Pooled {
            m.insert("pooling".into(), serde_json::to_value(self.pooling).expect("enum"));
        }
        m.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for StatConfig {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let m = Map::<String, Value>::deserialize(de)?;
        let mut stats = Vec::new();
        let mut pooling = Pooling::Pooled;
        for (k, v) in m {
            let flag = |v: &Value| match v {
                Value::Bool(b) => Ok(*b),
                _ => Err(D::Error::custom(format!("{k} expects true/false"))),
            };
            let stat = match k.as_str() {
                "mean" => flag(&v)?.then_some(Stat::Mean),
                "std" => flag(&v)?.then_some(Stat::Std),
                "min" => flag(&v)?.then_some(Stat::Min),
                "max" => flag(&v)?.then_some(Stat::Max),
                "q25" => flag(&v)?.then_some(Stat::Q25),
                "median" => flag(&v)?.then_some(Stat::Median),
                "q75" => flag(&v)?.then_some(Stat::Q75),
                "acf_lags" => Some(Stat::AcfLags(Vec::<usize>::deserialize(v).map_err(D::Error::custom)?)),
                "band_power" => Some(Stat::BandPower(usize::deserialize(v).map_err(D::Error::custom)?)),
                "pooling" => {
                    pooling = Pooling::deserialize(v).map_err(D::Error::custom)?;
                    None
                }
                other => return Err(D::Error::custom(format!("unknown statistic {other:?}"))),
            };
            stats.extend(stat);
        }
        if stats.is_empty() {
            return Err(D::Error::custom("no statistics enabled"));
        }
        Ok(StatConfig { stats, pooling })
    }
}

/// Descriptor of one entry of a [`StatVector`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StatSlot {
    pub stat: &'static str,
    pub feature: usize,
    /// Lag for `acf`, band index for `band_power`.
    pub index: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatVector {
    pub values: Vec<f64>,
    pub layout: Vec<StatSlot>,
}

impl StatVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    #[default]
    L2,
    Linf,
}

impl std::str::FromStr for Norm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Norm::L1),
            "l2" => Ok(Norm::L2),
            "linf" => Ok(Norm::Linf),
            other => Err(Error::Config(format!("unknown norm {other:?}"))),
        }
    }
}

impl Norm {
    pub fn apply(self, diff: impl Iterator<Item = f64>) -> f64 {
        match self {
            Norm::L1 => diff.map(f64::abs).sum(),
            Norm::L2 => diff.map(|v| v * v).sum::<f64>().sqrt(),
            Norm::Linf => diff.fold(0.0, |m, v| m.max(v.abs())),
        }
    }
}

/// Quantile with linear interpolation between order statistics of `sorted`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Biased sample autocorrelation at `lag`; 0 for zero-variance input.
pub fn acf(x: &[f64], lag: usize) -> f64 {
    let n = x.len();
    if lag >= n {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let denom: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    // constant up to rounding of the mean
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if denom <= n as f64 * (1e-12 * scale).powi(2) {
        return 0.0;
    }
    let num: f64 = (0..n - lag).map(|t| (x[t] - mean) * (x[t + lag] - mean)).sum();
    num / denom
}

/// Mean periodogram power in `n_bands` contiguous bands over bins
/// `0..=T/2`.
pub fn band_powers(x: &[f64], n_bands: usize) -> Vec<f64> {
    let p = power_spectrum(x);
    let k = p.len();
    (0..n_bands)
        .map(|b| {
            let lo = b * k / n_bands;
            let hi = ((b + 1) * k / n_bands).max(lo + 1);
            p[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

fn scalar_stats(sorted: &[f64], s: &Stat) -> f64 {
    let n = sorted.len() as f64;
    match s {
        Stat::Mean => sorted.iter().sum::<f64>() / n,
        Stat::Std => {
            let m = sorted.iter().sum::<f64>() / n;
            (sorted.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt()
        }
        Stat::Min => sorted[0],
        Stat::Max => sorted[sorted.len() - 1],
        Stat::Q25 => quantile_sorted(sorted, 0.25),
        Stat::Median => quantile_sorted(sorted, 0.5),
        Stat::Q75 => quantile_sorted(sorted, 0.75),
        Stat::AcfLags(_) | Stat::BandPower(_) => unreachable!("not a scalar statistic"),
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Computes the statistic vector of `ds` under `cfg`.
pub fn summarize(ds: &TimeSeriesDataset, cfg: &StatConfig) -> Result<StatVector> {
    let (n, t, d) = ds.dim();
    cfg.validate(t)?;
    let mut values = Vec::new();
    for feature in 0..d {
        let per_series: Vec<Vec<f64>> =
            (0..n).map(|i| ds.series(i).column(feature).to_vec()).collect();
        let pooled = match cfg.pooling {
            Pooling::Pooled => Some(sorted(per_series.iter().flatten().copied().collect())),
            Pooling::PerSeries => None,
        };
        let per_sorted: Option<Vec<Vec<f64>>> = match cfg.pooling {
            Pooling::PerSeries => Some(per_series.iter().cloned().map(sorted).collect()),
            Pooling::Pooled => None,
        };
        for s in &cfg.stats {
            match s {
                Stat::AcfLags(lags) => {
                    for &lag in lags {
                        values.push(per_series.iter().map(|x| acf(x, lag)).sum::<f64>() / n as f64);
                    }
                }
                Stat::BandPower(b) => {
                    let mut acc = vec![0.0; *b];
                    for x in &per_series {
                        for (a, p) in acc.iter_mut().zip(band_powers(x, *b)) {
                            *a += p;
                        }
                    }
                    values.extend(acc.into_iter().map(|a| a / n as f64));
                }
                scalar => values.push(match (&pooled, &per_sorted) {
                    (Some(p), _) => scalar_stats(p, scalar),
                    (_, Some(ps)) => ps.iter().map(|x| scalar_stats(x, scalar)).sum::<f64>() / n as f64,
                    _ => unreachable!(),
                }),
            }
        }
    }
    let layout = cfg.layout(d);
    debug_assert_eq!(layout.len(), values.len());
    Ok(StatVector { values, layout })
}

/// Norm of `a - b`. Layouts must be identical.
pub fn stat_distance(a: &StatVector, b: &StatVector, norm: Norm) -> Result<f64> {
    if a.layout != b.layout {
        return Err(Error::Dimension(format!(
            "stat layouts differ ({} vs {} entries)",
            a.layout.len(),
            b.layout.len()
        )));
    }
    Ok(norm.apply(a.values.iter().zip(&b.values).map(|(x, y)| x - y)))
}
