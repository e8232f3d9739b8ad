//! Regenerates the committed pipeline fixture:
//!
//! ```text
//! cargo run -p dehum --example make_fixture -- crates/core/tests/fixtures/pipeline
//! ```

use std::path::PathBuf;

use dehum::synthetic::{generate, pipeline_config, SyntheticSpec};

/// 200 paragraphs over eight years.
pub fn fixture_spec() -> SyntheticSpec {
    SyntheticSpec {
        years: 8,
        paragraphs_per_year: 25,
        context_words: (12, 70),
        neutral_words: 120,
        cluster_words: 15,
        verbs_per_class: 6,
        ..Default::default()
    }
}

fn main() -> dehum::Result<()> {
    let dir: PathBuf = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "crates/core/tests/fixtures/pipeline".into())
        .into();
    let spec = fixture_spec();
    let corpus = generate(&spec);
    let files = corpus.write_to(&dir)?;
    let mut config = pipeline_config(&spec, &files);
    config.runs = 2;
    config.train.dim = 16;
    config.train.window = 5;
    config.train.epochs = 5;
    config.train.min_count = 2;
    config.measures.k = 25;
    config.measures.k_sweep = vec![5, 10, 25, 50, 100, 250];
    config.measures.bootstrap_resamples = 500;
    config.extremes.k = 25;
    let path = dir.join("config.toml");
    std::fs::write(&path, config.to_toml()?).map_err(|e| dehum::Error::Io { path, source: e })?;
    println!("{} paragraphs, {} tokens", corpus.records.len(), corpus.token_count());
    Ok(())
}
