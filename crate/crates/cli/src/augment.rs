use std::path::PathBuf;

use clap::Args;
use tsforge::augment::{augment, Augmentation, AugmentationRequest, FlipMode};
use tsforge::io::{read_csv_path, read_labels_csv_path, write_csv_path};
use tsforge::RngSeed;

use crate::{parse_list, CliError, CliResult};

#[derive(Args)]
pub struct AugmentArgs {
    #[arg(long)]
    source_data: PathBuf,
    #[arg(long)]
    source_data_labels: Option<PathBuf>,
    /// Original series followed by the new ones
    #[arg(long)]
    dest_data: PathBuf,
    /// gaussian_noise, slice_and_shuffle, flip, magnitude_warp, window_warp, window_slice or dtwba
    #[arg(long, required_unless_present = "request")]
    method: Option<String>,
    /// AugmentationRequest JSON; replaces --method, --n-new, --seed and the method flags
    #[arg(long)]
    request: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    n_new: usize,
    /// Noise std (gaussian_noise) or knot std (magnitude_warp)
    #[arg(long, default_value_t = 0.2)]
    sigma: f64,
    #[arg(long, default_value_t = 4)]
    n_slices: usize,
    /// sign or time
    #[arg(long, default_value = "sign")]
    flip_mode: String,
    #[arg(long, default_value_t = 4)]
    n_knots: usize,
    #[arg(long, default_value_t = 0.1)]
    window_ratio: f64,
    /// Window stretch factors, comma-separated
    #[arg(long, default_value = "0.5,2.0")]
    scales: String,
    #[arg(long, default_value_t = 0.9)]
    reduce_ratio: f64,
    /// Barycenter refinement iterations (dtwba)
    #[arg(long, default_value_t = 10)]
    n_iters: usize,
    #[arg(long, env = "TSFORGE_SEED", default_value_t = 0)]
    seed: u64,
}

fn request(a: &AugmentArgs) -> CliResult<AugmentationRequest> {
    if let Some(p) = &a.request {
        let text = std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
        return serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad augmentation request: {e}")));
    }
    let name = a.method.as_deref().unwrap_or_default();
    let method = match name {
        "gaussian_noise" => Augmentation::GaussianNoise { sigma: a.sigma },
        "slice_and_shuffle" => Augmentation::SliceAndShuffle { n_slices: a.n_slices },
        "flip" => Augmentation::Flip {
            mode: match a.flip_mode.as_str() {
                "sign" => FlipMode::Sign,
                "time" => FlipMode::Time,
                m => return Err(CliError::Usage(format!("unknown flip mode {m:?}; valid: sign, time"))),
            },
        },
        "magnitude_warp" => Augmentation::MagnitudeWarp { n_knots: a.n_knots, sigma: a.sigma },
        "window_warp" => Augmentation::WindowWarp { window_ratio: a.window_ratio, scales: parse_list(&a.scales, "scale")? },
        "window_slice" => Augmentation::WindowSlice { reduce_ratio: a.reduce_ratio },
        "dtwba" => Augmentation::Dtwba { n_iters: a.n_iters },
        other => {
            return Err(CliError::Usage(format!(
                "unknown method {other:?}; valid methods: {}",
                Augmentation::METHODS.join(", ")
            )))
        }
    };
    Ok(AugmentationRequest { method, n_new: a.n_new, seed: RngSeed(a.seed) })
}

pub fn run(a: AugmentArgs) -> CliResult {
    let req = request(&a)?;
    let mut ds = read_csv_path(&a.source_data)?;
    if let Some(lp) = &a.source_data_labels {
        let labels = read_labels_csv_path(lp, ds.n_series(), ds.len_t())?;
        ds = ds.with_labels(labels)?;
    }
    let out = if req.n_new == 0 { ds } else { ds.concat(&augment(&ds, &req)?)? };
    write_csv_path(&out, &a.dest_data)?;
    Ok(())
}
