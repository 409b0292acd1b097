//! Dense GAN with optional static (one-hot) or temporal conditioning.

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{adam_step, check_unit_range, minibatches, sigmoid, softplus, Activation, AdamState, DenseGrads, DenseNet, TrainConfig};
use crate::{Error, Labels, Result, RngSeed, TimeSeriesDataset};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GanConfig {
    pub latent_dim: usize,
    pub hidden: Vec<usize>,
    pub leaky_alpha: f64,
}

impl Default for GanConfig {
    fn default() -> Self {
        Self { latent_dim: 8, hidden: vec![64], leaky_alpha: 0.2 }
    }
}

/// What the networks are conditioned on, with the training labels kept as
/// the empirical pool that unconditioned sampling draws from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Conditioning {
    None,
    Static { classes: Vec<i64>, pool: Vec<i64> },
    Temporal { len_t: usize, pool: Vec<Vec<f64>> },
}

impl Conditioning {
    pub fn from_labels(labels: &Labels) -> Result<Self> {
        Ok(match labels {
            Labels::None => return Err(Error::Precondition("conditional GAN needs labels".into())),
            Labels::Static(v) => {
                let mut classes = v.clone();
                classes.sort_unstable();
                classes.dedup();
                Conditioning::Static { classes, pool: v.clone() }
            }
            Labels::Temporal(a) => Conditioning::Temporal { len_t: a.ncols(), pool: a.rows().into_iter().map(|r| r.to_vec()).collect() },
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Conditioning::None => 0,
            Conditioning::Static { classes, .. } => classes.len(),
            Conditioning::Temporal { len_t, .. } => *len_t,
        }
    }

    /// Condition rows for `idx` of `labels`.
    pub fn encode(&self, labels: &Labels, idx: &[usize]) -> Result<Array2<f64>> {
        match (self, labels) {
            (Conditioning::None, _) => Ok(Array2::zeros((idx.len(), 0))),
            (Conditioning::Static { classes, .. }, Labels::Static(v)) => {
                let mut out = Array2::zeros((idx.len(), classes.len()));
                for (r, &i) in idx.iter().enumerate() {
                    let c = classes
                        .binary_search(&v[i])
                        .map_err(|_| Error::Precondition(format!("label {} was not seen in training", v[i])))?;
                    out[[r, c]] = 1.0;
                }
                Ok(out)
            }
            (Conditioning::Temporal { len_t, .. }, Labels::Temporal(a)) if a.ncols() == *len_t => Ok(a.select(Axis(0), idx)),
            _ => Err(Error::Precondition("labels do not match the model's conditioning".into())),
        }
    }

    /// `n` labels drawn uniformly from the training pool.
    fn sample(&self, n: usize, rng: &mut impl Rng) -> Labels {
        match self {
            Conditioning::None => Labels::None,
            Conditioning::Static { pool, .. } => Labels::Static((0..n).map(|_| pool[rng.random_range(0..pool.len())]).collect()),
            Conditioning::Temporal { len_t, pool } => {
                let mut a = Array2::zeros((n, *len_t));
                for mut row in a.rows_mut() {
                    let src = &pool[rng.random_range(0..pool.len())];
                    row.iter_mut().zip(src).for_each(|(d, s)| *d = *s);
                }
                Labels::Temporal(a)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GanModel {
    /// `latent_dim + cond_dim -> T * D`, sigmoid output.
    pub generator: DenseNet,
    /// `T * D + cond_dim -> 1`, a logit; the sigmoid lives in the loss.
    pub discriminator: DenseNet,
    pub latent_dim: usize,
    pub conditioning: Conditioning,
    pub len_t: usize,
    pub n_features: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GanEpoch {
    pub d_loss: f64,
    pub g_loss: f64,
}

impl GanModel {
    pub fn new(len_t: usize, n_features: usize, conditioning: Conditioning, cfg: &GanConfig, seed: RngSeed) -> Result<Self> {
        if cfg.latent_dim == 0 {
            return Err(Error::Precondition("latent_dim must be >= 1".into()));
        }
        if let Conditioning::Temporal { len_t: lt, .. } = conditioning {
            if lt != len_t {
                return Err(Error::Dimension(format!("temporal condition length {lt} vs T = {len_t}")));
            }
        }
        let width = len_t * n_features;
        let c = conditioning.dim();
        let g_dims: Vec<usize> = std::iter::once(cfg.latent_dim + c).chain(cfg.hidden.iter().copied()).chain([width]).collect();
        let d_dims: Vec<usize> = std::iter::once(width + c).chain(cfg.hidden.iter().copied()).chain([1]).collect();
        Ok(Self {
            generator: DenseNet::mlp(&g_dims, Activation::Relu, Activation::Sigmoid, seed.derive(0))?,
            discriminator: DenseNet::mlp(&d_dims, Activation::LeakyRelu(cfg.leaky_alpha), Activation::Linear, seed.derive(1))?,
            latent_dim: cfg.latent_dim,
            conditioning,
            len_t,
            n_features,
        })
    }

    pub fn cond_dim(&self) -> usize {
        self.conditioning.dim()
    }

    fn width(&self) -> usize {
        self.len_t * self.n_features
    }

    fn generate_flat(&self, z: ArrayView2<'_, f64>, cond: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let input = concatenate(Axis(1), &[z, cond]).map_err(|e| Error::Dimension(e.to_string()))?;
        self.generator.forward(input.view())
    }
}

fn check_cond(model: &GanModel, rows: usize, cond: &ArrayView2<'_, f64>) -> Result<()> {
    if cond.dim() != (rows, model.cond_dim()) {
        return Err(Error::Dimension(format!("conditions {:?}, expected ({rows}, {})", cond.dim(), model.cond_dim())));
    }
    Ok(())
}

/// `½ (BCE(D(real), 1) + BCE(D(fake), 0))`, each averaged over its batch.
/// Returns the loss and discriminator gradients.
pub fn discriminator_loss(
    model: &GanModel,
    real: ArrayView2<'_, f64>,
    fake: ArrayView2<'_, f64>,
    cond: ArrayView2<'_, f64>,
) -> Result<(f64, DenseGrads)> {
    let b = real.nrows();
    if b == 0 || fake.nrows() != b {
        return Err(Error::Dimension(format!("real batch {} vs fake batch {}", b, fake.nrows())));
    }
    check_cond(model, b, &cond)?;
    let bf = b as f64;
    let real_in = concatenate(Axis(1), &[real, cond]).map_err(|e| Error::Dimension(e.to_string()))?;
    let fake_in = concatenate(Axis(1), &[fake, cond]).map_err(|e| Error::Dimension(e.to_string()))?;
    let tr = model.discriminator.forward_trace(real_in.view())?;
    let tf = model.discriminator.forward_trace(fake_in.view())?;
    let lr = tr.output().column(0).to_owned();
    let lf = tf.output().column(0).to_owned();
    let loss = 0.5 * (lr.iter().map(|&l| softplus(-l)).sum::<f64>() + lf.iter().map(|&l| softplus(l)).sum::<f64>()) / bf;
    if !loss.is_finite() {
        return Err(Error::Numeric(format!("discriminator loss is {loss}")));
    }
    let ur = lr.mapv(|l| 0.5 * (sigmoid(l) - 1.0) / bf).insert_axis(Axis(1));
    let uf = lf.mapv(|l| 0.5 * sigmoid(l) / bf).insert_axis(Axis(1));
    let (mut g, _) = model.discriminator.backward_trace(&tr, ur.view())?;
    let (gf, _) = model.discriminator.backward_trace(&tf, uf.view())?;
    for ((w, bias), (wf, bf)) in g.layers.iter_mut().zip(gf.layers) {
        *w += &wf;
        *bias += &bf;
    }
    Ok((loss, g))
}

/// Non-saturating generator loss `mean(-log D(G(z, c)))` and generator gradients.
pub fn generator_loss(model: &GanModel, z: ArrayView2<'_, f64>, cond: ArrayView2<'_, f64>) -> Result<(f64, DenseGrads)> {
    let b = z.nrows();
    if b == 0 || z.ncols() != model.latent_dim {
        return Err(Error::Dimension(format!("latent batch {:?}", z.dim())));
    }
    check_cond(model, b, &cond)?;
    let bf = b as f64;
    let g_in = concatenate(Axis(1), &[z, cond]).map_err(|e| Error::Dimension(e.to_string()))?;
    let tg = model.generator.forward_trace(g_in.view())?;
    let d_in = concatenate(Axis(1), &[tg.output().view(), cond]).expect("same rows");
    let td = model.discriminator.forward_trace(d_in.view())?;
    let logits = td.output().column(0).to_owned();
    let loss = logits.iter().map(|&l| softplus(-l)).sum::<f64>() / bf;
    if !loss.is_finite() {
        return Err(Error::Numeric(format!("generator loss is {loss}")));
    }
    let up = logits.mapv(|l| (sigmoid(l) - 1.0) / bf).insert_axis(Axis(1));
    let (_, dx) = model.discriminator.backward_trace(&td, up.view())?;
    let (g, _) = model.generator.backward_trace(&tg, dx.slice(s![.., ..model.width()]))?;
    Ok((loss, g))
}

/// Alternating discriminator / generator Adam steps per minibatch. Fake
/// samples reuse the real batch's conditions.
pub fn gan_train(model: &GanModel, ds: &TimeSeriesDataset, cfg: &TrainConfig, seed: RngSeed) -> Result<(GanModel, Vec<GanEpoch>)> {
    if (ds.len_t(), ds.n_features()) != (model.len_t, model.n_features) {
        return Err(Error::Dimension(format!(
            "dataset windows ({}, {}) vs model ({}, {})",
            ds.len_t(),
            ds.n_features(),
            model.len_t,
            model.n_features
        )));
    }
    check_unit_range(ds)?;
    let n = ds.n_series();
    let all: Vec<usize> = (0..n).collect();
    let conds = model.conditioning.encode(ds.labels(), &all)?;
    let x = ds.flatten_series();
    let mut model = model.clone();
    let mut gp = model.generator.params();
    let mut dp = model.discriminator.params();
    let mut g_adam = AdamState::new(gp.len(), cfg.adam);
    let mut d_adam = AdamState::new(dp.len(), cfg.adam);
    let mut rng = seed.rng();
    let mut history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let (mut d_sum, mut g_sum) = (0.0, 0.0);
        for idx in minibatches(n, cfg.batch_size, &mut rng)? {
            let b = idx.len();
            let real = x.select(Axis(0), &idx);
            let cond = conds.select(Axis(0), &idx);
            let z = Array2::from_shape_simple_fn((b, model.latent_dim), || StandardNormal.sample(&mut rng));
            let fake = model.generate_flat(z.view(), cond.view())?;
            let (d_loss, dg) = discriminator_loss(&model, real.view(), fake.view(), cond.view())?;
            adam_step(&mut dp, &dg.flatten(), &mut d_adam)?;
            model.discriminator.set_params(&dp)?;

            let z = Array2::from_shape_simple_fn((b, model.latent_dim), || StandardNormal.sample(&mut rng));
            let (g_loss, gg) = generator_loss(&model, z.view(), cond.view())?;
            adam_step(&mut gp, &gg.flatten(), &mut g_adam)?;
            model.generator.set_params(&gp)?;
            d_sum += d_loss * b as f64;
            g_sum += g_loss * b as f64;
        }
        history.push(GanEpoch { d_loss: d_sum / n as f64, g_loss: g_sum / n as f64 });
    }
    Ok((model, history))
}

/// `n` generated series. Conditions default to draws from the training
/// labels and are attached to the output.
pub fn gan_generate(model: &GanModel, n: usize, conditions: Option<&Labels>, seed: RngSeed) -> Result<TimeSeriesDataset> {
    if n == 0 {
        return Err(Error::Precondition("n must be >= 1".into()));
    }
    let mut rng = seed.rng();
    let labels = match conditions {
        Some(l) => l.clone(),
        None => model.conditioning.sample(n, &mut rng),
    };
    let idx: Vec<usize> = (0..n).collect();
    match (&model.conditioning, &labels) {
        (Conditioning::None, _) => {}
        (_, Labels::Static(v)) if v.len() == n => {}
        (_, Labels::Temporal(a)) if a.nrows() == n => {}
        _ => return Err(Error::Dimension(format!("conditions do not cover {n} series"))),
    }
    let cond = model.conditioning.encode(&labels, &idx)?;
    let z = Array2::from_shape_simple_fn((n, model.latent_dim), || StandardNormal.sample(&mut rng));
    let out = model.generate_flat(z.view(), cond.view())?;
    let ds = TimeSeriesDataset::from_flat(n, model.len_t, model.n_features, out.into_raw_vec_and_offset().0)?;
    match model.conditioning {
        Conditioning::None => Ok(ds),
        _ => ds.with_labels(labels),
    }
}

#[cfg(test)]
mod tests {
    use super::super::dense::tests::{max_rel_err, randn};
    use super::*;
    use super::super::DenseLayer;
    use ndarray::Array1;

    fn small(cond: Conditioning, seed: u64) -> GanModel {
        let cfg = GanConfig { latent_dim: 3, hidden: vec![6], leaky_alpha: 0.2 };
        GanModel::new(4, 1, cond, &cfg, RngSeed(seed)).unwrap()
    }

    fn temporal_cond() -> Conditioning {
        Conditioning::Temporal { len_t: 4, pool: vec![vec![0.0, 1.0, 1.0, 0.0]] }
    }

    #[test]
    fn half_discriminator_gives_ln2() {
        let mut m = small(Conditioning::None, 0);
        let mut layers = m.discriminator.layers().to_vec();
        let last = layers.len() - 1;
        layers[last] = DenseLayer { weights: Array2::zeros(layers[last].weights.dim()), biases: Array1::zeros(1), activation: Activation::Linear };
        m.discriminator = DenseNet::new(layers).unwrap();
        let real = randn(5, 4, 1);
        let fake = randn(5, 4, 2);
        let none = Array2::zeros((5, 0));
        let (d, _) = discriminator_loss(&m, real.view(), fake.view(), none.view()).unwrap();
        let (g, _) = generator_loss(&m, randn(5, 3, 3).view(), none.view()).unwrap();
        assert!((d - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((g - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let conds = [
            Conditioning::None,
            Conditioning::Static { classes: vec![0, 1, 2], pool: vec![0, 1, 2] },
            temporal_cond(),
        ];
        for trial in 0..12u64 {
            let cond_kind = &conds[trial as usize % 3];
            let m = small(cond_kind.clone(), trial);
            let c = randn(5, m.cond_dim(), 40 + trial);
            let real = randn(5, 4, 10 + trial).mapv(sigmoid);
            let fake = randn(5, 4, 20 + trial).mapv(sigmoid);
            let z = randn(5, 3, 30 + trial);

            let (_, dg) = discriminator_loss(&m, real.view(), fake.view(), c.view()).unwrap();
            let mut probe = m.clone();
            let mut fd = |p: &[f64]| {
                probe.discriminator.set_params(p).unwrap();
                discriminator_loss(&probe, real.view(), fake.view(), c.view()).unwrap().0
            };
            let err = max_rel_err(&dg.flatten(), &m.discriminator.params(), &mut fd);
            assert!(err < 1e-4, "trial {trial}: discriminator {err}");

            let (_, gg) = generator_loss(&m, z.view(), c.view()).unwrap();
            let mut probe = m.clone();
            let mut fg = |p: &[f64]| {
                probe.generator.set_params(p).unwrap();
                generator_loss(&probe, z.view(), c.view()).unwrap().0
            };
            let err = max_rel_err(&gg.flatten(), &m.generator.params(), &mut fg);
            assert!(err < 1e-4, "trial {trial}: generator {err}");
        }
    }

    #[test]
    fn static_conditions_one_hot() {
        let c = Conditioning::from_labels(&Labels::Static(vec![5, 2, 5])).unwrap();
        assert_eq!(c.dim(), 2);
        let enc = c.encode(&Labels::Static(vec![5, 2, 5]), &[0, 1]).unwrap();
        assert_eq!(enc, ndarray::array![[0.0, 1.0], [1.0, 0.0]]);
        assert!(c.encode(&Labels::Static(vec![7]), &[0]).is_err());
        assert!(Conditioning::from_labels(&Labels::None).is_err());
    }

    #[test]
    fn generate_attaches_temporal_conditions() {
        let m = small(temporal_cond(), 3);
        let g = gan_generate(&m, 100, None, RngSeed(4)).unwrap();
        assert_eq!(g.n_series(), 100);
        let Labels::Temporal(a) = g.labels() else { panic!("temporal labels expected") };
        assert_eq!(a.dim(), (100, 4));
        assert!(g.as_flat().iter().all(|v| (0.0..=1.0).contains(v)));
        let wrong = Labels::Temporal(Array2::zeros((3, 4)));
        assert!(gan_generate(&m, 100, Some(&wrong), RngSeed(4)).is_err());
    }

    #[test]
    fn label_mismatch_rejected() {
        let ds = crate::generators::sines_generate(8, 4, 1, RngSeed(0)).unwrap();
        let (ds, _) = crate::dataset::minmax_scale(&ds).unwrap();
        let m = small(temporal_cond(), 0);
        assert!(gan_train(&m, &ds, &TrainConfig { epochs: 1, ..Default::default() }, RngSeed(0)).is_err());
    }

    #[test]
    fn training_is_deterministic() {
        let ds = crate::generators::sines_generate(40, 4, 1, RngSeed(0)).unwrap();
        let (ds, _) = crate::dataset::minmax_scale(&ds).unwrap();
        let cfg = TrainConfig { epochs: 3, batch_size: 16, ..Default::default() };
        let m = small(Conditioning::None, 1);
        let a = gan_train(&m, &ds, &cfg, RngSeed(2)).unwrap();
        let b = gan_train(&m, &ds, &cfg, RngSeed(2)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.1.len(), 3);
    }
}
