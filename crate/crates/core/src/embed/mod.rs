//! Qualitative comparison: feature averaging, periodograms, and 2-D
//! embeddings (PCA, exact t-SNE) of real and synthetic series.
//!
//! Results are plain data; [`EmbeddingResult::write_csv`] emits `x,y,tag`
//! rows for external plotting.

mod pca;
mod spectrum;
mod tsne;

use std::collections::BTreeMap;
use std::io::Write;

use ndarray::{concatenate, Array2, Axis};
use serde::{Deserialize, Serialize};

pub use pca::pca_embed;
pub use spectrum::{periodogram, power_spectrum};
pub use tsne::{conditional_probabilities, joint_probabilities, tsne_embed, TsneConfig};

use crate::dataset::feature_mean;
use crate::io::fmt_f64;
use crate::{Error, Result, RngSeed, TimeSeriesDataset};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceTag {
    Real,
    Synthetic,
}

impl SourceTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceTag::Real => "real",
            SourceTag::Synthetic => "synthetic",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedMethod {
    Pca,
    Tsne,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingResult {
    /// `[M, 2]`.
    pub coords: Array2<f64>,
    pub source_tags: Vec<SourceTag>,
    pub method: EmbedMethod,
    /// `explained_variance_{0,1}` for PCA; `final_kl` for t-SNE.
    pub diagnostics: BTreeMap<String, f64>,
    /// KL(P||Q) after early exaggeration ends, one value per iteration.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kl_trace: Vec<f64>,
}

impl EmbeddingResult {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "tag"])?;
        for (row, tag) in self.coords.rows().into_iter().zip(&self.source_tags) {
            w.write_record([fmt_f64(row[0]), fmt_f64(row[1]), tag.as_str().to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn diagnostics_json(&self) -> String {
        serde_json::to_string_pretty(&self.diagnostics).expect("map of floats")
    }
}

/// Mean over the feature axis: `[N, T]`.
pub fn feature_average(ds: &TimeSeriesDataset) -> Array2<f64> {
    feature_mean(ds)
}

/// Embeds the feature-averaged series of `real` followed by `synth`.
pub fn embed_datasets(
    real: &TimeSeriesDataset,
    synth: &TimeSeriesDataset,
    method: EmbedMethod,
    tsne: &TsneConfig,
    seed: RngSeed,
) -> Result<EmbeddingResult> {
    if real.len_t() != synth.len_t() {
        return Err(Error::Dimension(format!(
            "series lengths differ: {} vs {}",
            real.len_t(),
            synth.len_t()
        )));
    }
    let points = concatenate(Axis(0), &[feature_average(real).view(), feature_average(synth).view()])
        .expect("equal T");
    let mut result = match method {
        EmbedMethod::Pca => pca_embed(&points)?,
        EmbedMethod::Tsne => tsne_embed(&points, tsne, seed)?,
    };
    result.source_tags = std::iter::repeat_n(SourceTag::Real, real.n_series())
        .chain(std::iter::repeat_n(SourceTag::Synthetic, synth.n_series()))
        .collect();
    Ok(result)
}
