use serde_json::Value;
use tsforge_wasm::{augment_preview, embed, generate, SeriesSet};

fn set(json: &str) -> SeriesSet {
    serde_json::from_str(json).unwrap_or_else(|e| panic!("{e}: {json}"))
}

#[test]
fn generate_shapes_and_determinism() {
    for kind in ["sines", "sine_const", "gp"] {
        let s = set(&generate(kind, 6, 24, 3));
        assert_eq!((s.series.len(), s.len_t, s.n_features), (6, 24, 1), "{kind}");
        assert!(s.series.iter().all(|r| r.len() == 24));
        assert_eq!(generate(kind, 6, 24, 3), generate(kind, 6, 24, 3));
    }
    assert_ne!(generate("sines", 6, 24, 3), generate("sines", 6, 24, 4));
    let err: Value = serde_json::from_str(&generate("wavelet", 6, 24, 3)).unwrap();
    assert!(err["error"].as_str().unwrap().contains("wavelet"));
}

#[test]
fn augment_preview_returns_new_series() {
    let base = generate("sines", 8, 32, 1);
    let out = set(&augment_preview(&base, r#"{"method": "magnitude_warp", "n_knots": 4, "sigma": 0.2, "n_new": 5, "seed": 2}"#));
    assert_eq!((out.series.len(), out.len_t), (5, 32));

    let copies = set(&augment_preview(&base, r#"{"method": "gaussian_noise", "sigma": 0.0, "n_new": 3}"#));
    let src = set(&base);
    assert!(copies.series.iter().all(|c| src.series.contains(c)));

    let bad: Value = serde_json::from_str(&augment_preview(&base, r#"{"method": "rotate", "n_new": 1}"#)).unwrap();
    assert!(bad["error"].is_string());
    let ragged: Value = serde_json::from_str(&augment_preview(
        r#"{"len_t": 3, "n_features": 1, "series": [[1, 2, 3], [1, 2]]}"#,
        r#"{"method": "flip", "mode": "sign", "n_new": 1}"#,
    ))
    .unwrap();
    assert!(ragged["error"].as_str().unwrap().contains("series 1"));
}

#[test]
fn embed_tags_follow_inputs() {
    let real = generate("sines", 12, 20, 1);
    let synth = generate("gp", 9, 20, 2);
    for m in ["pca", "tsne"] {
        let v: Value = serde_json::from_str(&embed(&real, &synth, m, 5.0, 0)).unwrap();
        let coords = v["coords"].as_array().unwrap_or_else(|| panic!("{v}"));
        assert_eq!(coords.len(), 21);
        let tags = v["tags"].as_array().unwrap();
        assert_eq!(tags.iter().filter(|t| *t == "real").count(), 12);
        assert_eq!(tags[20], "synthetic");
    }
    let mismatch: Value = serde_json::from_str(&embed(&real, &generate("gp", 9, 16, 2), "pca", 5.0, 0)).unwrap();
    assert!(mismatch["error"].is_string());
}
