//! Contrastive-term and modality-knockout ablations under identical
//! splits and seeds.

use std::path::Path;

use trimodal_dti::config::ModelConfig;
use trimodal_dti::harness::experiment::{format_table, run_ablation};
use trimodal_dti::synthetic::{build_archive, SyntheticSpec};
use trimodal_dti::Variant;

pub fn run_example(out: &Path, epochs: usize, variants: &[Variant]) -> trimodal_dti::Result<String> {
    let archive = build_archive(&SyntheticSpec::default(), out)?;
    let config = ModelConfig {
        epochs,
        ..ModelConfig::desk()
    };
    for v in variants {
        let w = v.weights(config.loss_weights());
        println!("{:<14} modalities {:?}  beta {} gamma {}", v.name(), v.modalities(), w.beta, w.gamma);
    }
    let table = format_table(&run_ablation(&config, &archive, variants)?);
    print!("{table}");
    Ok(table)
}

#[allow(dead_code)]
fn main() -> trimodal_dti::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    run_example(&std::env::temp_dir().join("trimod-ablation"), epochs, &Variant::ALL).map(|_| ())
}
