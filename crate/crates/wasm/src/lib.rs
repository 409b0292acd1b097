//! Browser bindings for the demo page.
//!
//! Every export takes and returns JSON text. Failures come back as
//! `{"error": "..."}`.

use serde::{Deserialize, Serialize};
use tsforge::augment::{augment, AugmentationRequest};
use tsforge::embed::{embed_datasets, EmbedMethod, TsneConfig};
use tsforge::generators::{gp_sample, sine_const_generate, sines_generate, SineConstParams};
use tsforge::{RngSeed, TimeSeriesDataset};
use wasm_bindgen::prelude::wasm_bindgen;

/// Wire form of a dataset: one flat `T * D` row-major array per series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesSet {
    pub len_t: usize,
    pub n_features: usize,
    pub series: Vec<Vec<f64>>,
}

impl SeriesSet {
    pub fn from_dataset(ds: &TimeSeriesDataset) -> Self {
        let (_, t, d) = ds.dim();
        Self { len_t: t, n_features: d, series: ds.as_flat().chunks(t * d).map(<[f64]>::to_vec).collect() }
    }

    pub fn to_dataset(&self) -> tsforge::Result<TimeSeriesDataset> {
        let width = self.len_t * self.n_features;
        if let Some(i) = self.series.iter().position(|s| s.len() != width) {
            return Err(tsforge::Error::Dimension(format!("series {i} has {} values, expected {width}", self.series[i].len())));
        }
        TimeSeriesDataset::from_flat(self.series.len(), self.len_t, self.n_features, self.series.concat())
    }
}

#[derive(Serialize)]
struct Embedding {
    coords: Vec<[f64; 2]>,
    tags: Vec<&'static str>,
    diagnostics: std::collections::BTreeMap<String, f64>,
}

fn respond<T: Serialize>(r: Result<T, String>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).expect("serializable"),
        Err(e) => serde_json::json!({ "error": e }).to_string(),
    }
}

fn parse_set(json: &str) -> Result<TimeSeriesDataset, String> {
    let set: SeriesSet = serde_json::from_str(json).map_err(|e| e.to_string())?;
    set.to_dataset().map_err(|e| e.to_string())
}

/// `kind`: `sines`, `sine_const` or `gp`. One feature per series.
#[wasm_bindgen]
pub fn generate(kind: &str, n: u32, len_t: u32, seed: u32) -> String {
    let (n, t, seed) = (n as usize, len_t as usize, RngSeed(u64::from(seed)));
    let ds = match kind {
        "sines" => sines_generate(n, t, 1, seed),
        "sine_const" => sine_const_generate(&SineConstParams::default(), n, t, 1, seed),
        "gp" => gp_sample(n, t, 1, (t as f64 / 10.0).max(1.0), 1.0, seed).map(|(ds, _)| ds),
        other => return respond::<()>(Err(format!("unknown generator {other:?}; expected sines, sine_const or gp"))),
    };
    respond(ds.map(|d| SeriesSet::from_dataset(&d)).map_err(|e| e.to_string()))
}

/// New series only, for an `AugmentationRequest` such as
/// `{"method": "magnitude_warp", "n_knots": 4, "sigma": 0.2, "n_new": 5}`.
#[wasm_bindgen]
pub fn augment_preview(set_json: &str, request_json: &str) -> String {
    respond((|| {
        let ds = parse_set(set_json)?;
        let req: AugmentationRequest = serde_json::from_str(request_json).map_err(|e| e.to_string())?;
        let out = augment(&ds, &req).map_err(|e| e.to_string())?;
        Ok(SeriesSet::from_dataset(&out))
    })())
}

/// 2-D embedding of `real` followed by `synth`. `method`: `pca` or `tsne`.
#[wasm_bindgen]
pub fn embed(real_json: &str, synth_json: &str, method: &str, perplexity: f64, seed: u32) -> String {
    respond((|| {
        let method = match method {
            "pca" => EmbedMethod::Pca,
            "tsne" => EmbedMethod::Tsne,
            other => return Err(format!("unknown method {other:?}; expected pca or tsne")),
        };
        let (real, synth) = (parse_set(real_json)?, parse_set(synth_json)?);
        let cfg = TsneConfig { perplexity, n_iter: 500, ..Default::default() };
        let r = embed_datasets(&real, &synth, method, &cfg, RngSeed(u64::from(seed))).map_err(|e| e.to_string())?;
        Ok(Embedding {
            coords: r.coords.rows().into_iter().map(|row| [row[0], row[1]]).collect(),
            tags: r.source_tags.iter().map(|t| t.as_str()).collect(),
            diagnostics: r.diagnostics,
        })
    })())
}
