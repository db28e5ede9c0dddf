//! Train on a synthetic dataset with the desk preset, print the report
//! table and save the best checkpoint.
//!
//! cargo run --release --example train_model -- [epochs]

use std::path::Path;

use trimodal_dti::config::ModelConfig;
use trimodal_dti::harness::experiment::{format_table, run_experiment, splits_for};
use trimodal_dti::synthetic::{build_archive, SyntheticSpec};
use trimodal_dti::Variant;

pub fn run_example(out: &Path, epochs: usize) -> trimodal_dti::Result<f64> {
    let archive = build_archive(&SyntheticSpec::default(), out)?;
    let config = ModelConfig {
        epochs,
        ..ModelConfig::desk()
    };
    let splits = splits_for(&archive, &config)?;
    let res = run_experiment(&config, &archive, &splits, Variant::All)?;
    let run = &res.report.runs[0];
    for e in &run.epochs {
        println!(
            "epoch {:>2}  loss {:.4}  train AUC {}  val AUC {}",
            e.epoch,
            e.train_loss,
            e.train_metrics.map_or("n/a".into(), |m| format!("{:.3}", m.auc)),
            e.val_metrics.map_or("n/a".into(), |m| format!("{:.3}", m.auc)),
        );
    }
    print!("{}", format_table(std::slice::from_ref(&res.report)));
    if let Some(ck) = res.best {
        ck.save(&out.join("checkpoint.bin"))?;
        archive.save(&out.join("dataset.bin"))?;
        println!("checkpoint written to {}", out.join("checkpoint.bin").display());
    }
    Ok(run.train_metrics.map_or(f64::NAN, |m| m.auc))
}

#[allow(dead_code)]
fn main() -> trimodal_dti::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(30);
    run_example(&std::env::temp_dir().join("trimod-train_model"), epochs).map(|_| ())
}
