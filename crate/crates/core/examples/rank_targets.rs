//! Train briefly, then rank every protein as a candidate target for one
//! drug and every drug as a candidate ligand for one protein.

use std::path::Path;

use trimodal_dti::analysis::{rank_drugs, rank_targets, ranked_csv};
use trimodal_dti::config::ModelConfig;
use trimodal_dti::dataset::{PreparedData, Vocabularies};
use trimodal_dti::harness::splits::make_splits;
use trimodal_dti::harness::train::train;
use trimodal_dti::synthetic::{build_archive, SyntheticSpec};
use trimodal_dti::Variant;

pub fn run_example(out: &Path, epochs: usize, k: usize) -> trimodal_dti::Result<usize> {
    let archive = build_archive(&SyntheticSpec::default(), out)?;
    let config = ModelConfig {
        epochs,
        ..ModelConfig::desk()
    };
    let split = make_splits(archive.samples.len(), config.split_scheme, config.seed, 1)?.remove(0);
    let vocabs = Vocabularies::train_on(&archive, &split.train, &config)?;
    let data = PreparedData::new(&archive, vocabs, &config)?;
    let (_, model) = train(&config, &split, &data, Variant::All, config.seed)?;

    let drug = data.drugs[0].id.clone();
    let rows = rank_targets(&model, &data, &drug, &[], k)?;
    println!("top {k} targets for {drug}");
    print!("{}", ranked_csv(&rows));
    let target = data.proteins[0].id.clone();
    let rows = rank_drugs(&model, &data, &target, &[], k)?;
    println!("top {k} drugs for {target}");
    print!("{}", ranked_csv(&rows));
    Ok(rows.len())
}

#[allow(dead_code)]
fn main() -> trimodal_dti::Result<()> {
    run_example(&std::env::temp_dir().join("trimod-rank_targets"), 30, 10).map(|_| ())
}
