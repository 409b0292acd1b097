//! β-VAE over flattened `[T * D]` windows.

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{adam_step, check_unit_range, minibatches, Activation, AdamState, DenseNet, TrainConfig};
use crate::{Error, Result, RngSeed, TimeSeriesDataset};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VaeConfig {
    pub latent_dim: usize,
    pub hidden: Vec<usize>,
    pub beta: f64,
}

impl Default for VaeConfig {
    fn default() -> Self {
        Self { latent_dim: 8, hidden: vec![64], beta: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VaeModel {
    /// `T * D -> 2 * latent_dim`, first half μ, second half log σ².
    pub encoder: DenseNet,
    /// `latent_dim -> T * D`, sigmoid output.
    pub decoder: DenseNet,
    pub beta: f64,
    pub latent_dim: usize,
    pub len_t: usize,
    pub n_features: usize,
}

impl VaeModel {
    pub fn new(len_t: usize, n_features: usize, cfg: &VaeConfig, seed: RngSeed) -> Result<Self> {
        if cfg.latent_dim == 0 {
            return Err(Error::Precondition("latent_dim must be >= 1".into()));
        }
        if !(cfg.beta > 0.0) {
            return Err(Error::Precondition(format!("beta {} must be > 0", cfg.beta)));
        }
        let width = len_t * n_features;
        let enc_dims: Vec<usize> = std::iter::once(width).chain(cfg.hidden.iter().copied()).chain([2 * cfg.latent_dim]).collect();
        let dec_dims: Vec<usize> = std::iter::once(cfg.latent_dim).chain(cfg.hidden.iter().rev().copied()).chain([width]).collect();
        Ok(Self {
            encoder: DenseNet::mlp(&enc_dims, Activation::Relu, Activation::Linear, seed.derive(0))?,
            decoder: DenseNet::mlp(&dec_dims, Activation::Relu, Activation::Sigmoid, seed.derive(1))?,
            beta: cfg.beta,
            latent_dim: cfg.latent_dim,
            len_t,
            n_features,
        })
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = self.encoder.params();
        p.extend(self.decoder.params());
        p
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        let n = self.encoder.n_params();
        if flat.len() != n + self.decoder.n_params() {
            return Err(Error::Dimension(format!("{} values for VAE parameters", flat.len())));
        }
        self.encoder.set_params(&flat[..n])?;
        self.decoder.set_params(&flat[n..])
    }

    fn check(&self) -> Result<()> {
        let width = self.len_t * self.n_features;
        if self.encoder.input_dim() != width
            || self.encoder.output_dim() != 2 * self.latent_dim
            || self.decoder.input_dim() != self.latent_dim
            || self.decoder.output_dim() != width
        {
            return Err(Error::Dimension("VAE encoder/decoder dims do not chain".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VaeLoss {
    /// `recon + beta * kl`
    pub loss: f64,
    pub recon: f64,
    pub kl: f64,
    /// Same order as [`VaeModel::params`].
    pub grads: Vec<f64>,
}

/// `½ Σ (σ² + μ² − 1 − log σ²)` summed over every entry.
pub fn kl_divergence(mu: ArrayView2<'_, f64>, logvar: ArrayView2<'_, f64>) -> f64 {
    mu.iter().zip(logvar.iter()).map(|(m, lv)| 0.5 * (lv.exp() + m * m - 1.0 - lv)).sum()
}

/// Negative ELBO averaged over the batch with one reparameterized sample per
/// row. Reconstruction is the summed squared error over the `T * D` outputs.
pub fn vae_loss(model: &VaeModel, batch: ArrayView2<'_, f64>, seed: RngSeed) -> Result<VaeLoss> {
    let mut rng = seed.rng();
    let eps = Array2::from_shape_simple_fn((batch.nrows(), model.latent_dim), || StandardNormal.sample(&mut rng));
    vae_loss_with_noise(model, batch, eps.view())
}

/// [`vae_loss`] with the reparameterization noise supplied.
pub fn vae_loss_with_noise(model: &VaeModel, batch: ArrayView2<'_, f64>, eps: ArrayView2<'_, f64>) -> Result<VaeLoss> {
    model.check()?;
    let (b, l) = (batch.nrows(), model.latent_dim);
    if b == 0 {
        return Err(Error::Empty("empty batch".into()));
    }
    if eps.dim() != (b, l) {
        return Err(Error::Dimension(format!("noise {:?}, expected ({b}, {l})", eps.dim())));
    }
    let bf = b as f64;
    let enc = model.encoder.forward_trace(batch)?;
    let out = enc.output();
    let mu = out.slice(s![.., ..l]);
    let logvar = out.slice(s![.., l..]);
    let sigma = logvar.mapv(|v| (0.5 * v).exp());
    let z = &mu + &(&sigma * &eps);
    let dec = model.decoder.forward_trace(z.view())?;
    let diff = dec.output() - &batch;
    let recon = diff.iter().map(|d| d * d).sum::<f64>() / bf;
    let kl = kl_divergence(mu, logvar) / bf;
    let loss = recon + model.beta * kl;
    if !loss.is_finite() {
        return Err(Error::Numeric(format!("VAE loss is {loss}")));
    }

    let up = diff.mapv(|d| 2.0 * d / bf);
    let (dec_grads, dz) = model.decoder.backward_trace(&dec, up.view())?;
    let k = model.beta / bf;
    let dmu = &dz + &mu.mapv(|m| k * m);
    let dlogvar = &dz * &eps * &sigma * 0.5 + &logvar.mapv(|v| 0.5 * k * (v.exp() - 1.0));
    let denc = concatenate(Axis(1), &[dmu.view(), dlogvar.view()]).expect("same rows");
    let (enc_grads, _) = model.encoder.backward_trace(&enc, denc.view())?;
    let mut grads = enc_grads.flatten();
    grads.extend(dec_grads.flatten());
    Ok(VaeLoss { loss, recon, kl, grads })
}

/// Minibatch Adam on [`vae_loss`]. Returns the trained model and the mean
/// loss per epoch.
pub fn vae_train(model: &VaeModel, ds: &TimeSeriesDataset, cfg: &TrainConfig, seed: RngSeed) -> Result<(VaeModel, Vec<f64>)> {
    model.check()?;
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
    let x = ds.flatten_series();
    let mut model = model.clone();
    let mut params = model.params();
    let mut adam = AdamState::new(params.len(), cfg.adam);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut rng = seed.rng();
    let mut step = 0u64;
    for _ in 0..cfg.epochs {
        let mut total = 0.0;
        for idx in minibatches(x.nrows(), cfg.batch_size, &mut rng)? {
            let batch = x.select(Axis(0), &idx);
            let res = vae_loss(&model, batch.view(), seed.derive(step))?;
            step += 1;
            adam_step(&mut params, &res.grads, &mut adam)?;
            model.set_params(&params)?;
            total += res.loss * idx.len() as f64;
        }
        history.push(total / x.nrows() as f64);
    }
    Ok((model, history))
}

/// Decodes `n` draws of `z ~ N(0, I)`.
pub fn vae_generate(model: &VaeModel, n: usize, seed: RngSeed) -> Result<TimeSeriesDataset> {
    model.check()?;
    if n == 0 {
        return Err(Error::Precondition("n must be >= 1".into()));
    }
    let mut rng = seed.rng();
    let z = Array2::from_shape_simple_fn((n, model.latent_dim), || StandardNormal.sample(&mut rng));
    let out = model.decoder.forward(z.view())?;
    TimeSeriesDataset::from_flat(n, model.len_t, model.n_features, out.into_raw_vec_and_offset().0)
}
