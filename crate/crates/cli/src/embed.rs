use std::path::PathBuf;

use clap::Args;
use tsforge::embed::{embed_datasets, EmbedMethod, TsneConfig};
use tsforge::io::read_csv_path;
use tsforge::RngSeed;

use crate::{write_text, CliError, CliResult};

#[derive(Args)]
pub struct EmbedArgs {
    #[arg(long)]
    real_data: PathBuf,
    #[arg(long)]
    synth_data: PathBuf,
    /// pca or tsne
    #[arg(long, default_value = "pca")]
    method: String,
    /// Output CSV with columns x,y,tag
    #[arg(long)]
    dest_data: PathBuf,
    /// Explained variance (pca) or final KL (tsne) as JSON
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    #[arg(long, default_value_t = 30.0)]
    perplexity: f64,
    #[arg(long, default_value_t = 1000)]
    n_iter: usize,
    #[arg(long, env = "TSFORGE_SEED", default_value_t = 0)]
    seed: u64,
}

pub fn run(a: EmbedArgs) -> CliResult {
    let method = match a.method.as_str() {
        "pca" => EmbedMethod::Pca,
        "tsne" => EmbedMethod::Tsne,
        m => return Err(CliError::Usage(format!("unknown method {m:?}; valid methods: pca, tsne"))),
    };
    let real = read_csv_path(&a.real_data)?;
    let synth = read_csv_path(&a.synth_data)?;
    let cfg = TsneConfig { perplexity: a.perplexity, n_iter: a.n_iter, ..Default::default() };
    let result = embed_datasets(&real, &synth, method, &cfg, RngSeed(a.seed))?;
    let mut buf = Vec::new();
    result.write_csv(&mut buf)?;
    write_text(&a.dest_data, &String::from_utf8(buf).expect("csv is utf-8"))?;
    if let Some(p) = &a.diagnostics {
        write_text(p, &result.diagnostics_json())?;
    }
    Ok(())
}
