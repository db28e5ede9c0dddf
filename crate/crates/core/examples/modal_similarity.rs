//! Per-entity cosine similarity between the three modality embeddings of
//! each drug and each protein, as CSV histograms and an SVG plot.

use std::path::Path;

use trimodal_dti::analysis::modal_similarity;
use trimodal_dti::config::ModelConfig;
use trimodal_dti::dataset::{PreparedData, Vocabularies};
use trimodal_dti::error::DtiError;
use trimodal_dti::harness::splits::make_splits;
use trimodal_dti::harness::train::train;
use trimodal_dti::synthetic::{build_archive, SyntheticSpec};
use trimodal_dti::Variant;

pub fn run_example(out: &Path, epochs: usize) -> trimodal_dti::Result<Vec<f64>> {
    let archive = build_archive(&SyntheticSpec::default(), out)?;
    let config = ModelConfig {
        epochs,
        ..ModelConfig::desk()
    };
    let split = make_splits(archive.samples.len(), config.split_scheme, config.seed, 1)?.remove(0);
    let vocabs = Vocabularies::train_on(&archive, &split.train, &config)?;
    let data = PreparedData::new(&archive, vocabs, &config)?;
    let (_, model) = train(&config, &split, &data, Variant::All, config.seed)?;
    let report = modal_similarity(&model, &data)?;
    print!("{}", report.summary_csv());
    let svg = out.join("similarity.svg");
    std::fs::write(&svg, report.render_svg()).map_err(|e| DtiError::io(&svg, e))?;
    println!("plot written to {}", svg.display());
    Ok(report.pairs.iter().map(|p| p.inside_fraction).collect())
}

#[allow(dead_code)]
fn main() -> trimodal_dti::Result<()> {
    run_example(&std::env::temp_dir().join("trimod-modal_similarity"), 30).map(|_| ())
}
