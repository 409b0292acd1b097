//! Toy-scale data-driven generators over flattened `[T * D]` windows: a
//! dense-layer engine with exact gradients, Adam, a β-VAE and a GAN.
//!
//! Training data must be scaled to `[0, 1]`; both generators end in a
//! sigmoid.

mod adam;
mod dense;
mod gan;
mod vae;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamConfig, AdamState};
pub use dense::{sigmoid, softplus, Activation, DenseGrads, DenseLayer, DenseNet, Trace};
pub use gan::{discriminator_loss, gan_generate, gan_train, generator_loss, Conditioning, GanConfig, GanEpoch, GanModel};
pub use vae::{kl_divergence, vae_generate, vae_loss, vae_loss_with_noise, vae_train, VaeConfig, VaeLoss, VaeModel};

use crate::{Error, Result, TimeSeriesDataset};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 100, batch_size: 64, adam: AdamConfig::default() }
    }
}

/// A trained model as written to disk. Layers are stored as dims plus
/// row-major weight and bias arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Checkpoint {
    Vae(VaeModel),
    Gan(GanModel),
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

const UNIT_TOL: f64 = 1e-9;

pub(crate) fn check_unit_range(ds: &TimeSeriesDataset) -> Result<()> {
    match ds.as_flat().iter().find(|v| !(-UNIT_TOL..=1.0 + UNIT_TOL).contains(*v)) {
        Some(v) => Err(Error::Precondition(format!("training data must be scaled to [0, 1], found {v}"))),
        None => Ok(()),
    }
}

/// Shuffled batches covering `0..n`; the last may be short.
pub(crate) fn minibatches(n: usize, batch_size: usize, rng: &mut impl Rng) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 {
        return Err(Error::Precondition("batch_size must be >= 1".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    Ok(order.chunks(batch_size).map(<[usize]>::to_vec).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RngSeed;

    #[test]
    fn checkpoint_roundtrip() {
        let vae = VaeModel::new(5, 2, &VaeConfig::default(), RngSeed(1)).unwrap();
        let ck = Checkpoint::Vae(vae);
        let json = ck.to_json().unwrap();
        assert!(json.contains(r#""kind": "vae""#));
        assert_eq!(Checkpoint::from_json(&json).unwrap(), ck);
        let gan = GanModel::new(5, 2, Conditioning::Static { classes: vec![0, 1], pool: vec![0, 1, 1] }, &GanConfig::default(), RngSeed(2)).unwrap();
        let ck = Checkpoint::Gan(gan);
        assert_eq!(Checkpoint::from_json(&ck.to_json().unwrap()).unwrap(), ck);
    }

    #[test]
    fn checkpoint_rejects_broken_chain() {
        let vae = VaeModel::new(5, 2, &VaeConfig::default(), RngSeed(1)).unwrap();
        let json = Checkpoint::Vae(vae).to_json().unwrap().replacen(r#""output_dim": 64"#, r#""output_dim": 63"#, 1);
        assert!(Checkpoint::from_json(&json).is_err());
    }

    #[test]
    fn batches_cover_everything() {
        let mut rng = RngSeed(0).rng();
        let b = minibatches(10, 4, &mut rng).unwrap();
        assert_eq!(b.iter().map(Vec::len).collect::<Vec<_>>(), vec![4, 4, 2]);
        let mut all: Vec<usize> = b.concat();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }
}
