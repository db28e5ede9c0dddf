//! Generate a small synthetic raw dataset (SMILES, conformers, PDB
//! structures, pockets, interactions) and preprocess it into an archive.
//!
//! cargo run --example synthetic_dataset -- [out_dir]

use std::path::{Path, PathBuf};

use trimodal_dti::dataset::preprocess_dir;
use trimodal_dti::ingest::pockets::DEFAULT_POCKET_ATOM_CAP;
use trimodal_dti::synthetic::{generate, SyntheticSpec};

pub fn run_example(out: &Path) -> trimodal_dti::Result<()> {
    let raw = out.join("raw");
    let summary = generate(&SyntheticSpec::default(), &raw)?;
    println!(
        "generated {} drugs, {} proteins, {} positive / {} negative pairs",
        summary.drugs, summary.proteins, summary.positives, summary.negatives
    );
    let (archive, manifest) = preprocess_dir(&raw, DEFAULT_POCKET_ATOM_CAP)?;
    archive.save(&out.join("dataset.bin"))?;
    println!(
        "archive: {} samples, {} skipped entities",
        archive.samples.len(),
        manifest.skipped.len()
    );
    let pockets: usize = archive.proteins.iter().map(|p| p.pockets.len()).sum();
    println!("pockets per protein: {:.1}", pockets as f64 / archive.proteins.len() as f64);
    Ok(())
}

#[allow(dead_code)]
fn main() -> trimodal_dti::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("trimod-synthetic"));
    run_example(&out)
}
