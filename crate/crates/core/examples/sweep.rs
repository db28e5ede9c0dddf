//! Grid sweep over dropout and learning rate, printed as CSV.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::json;
use trimodal_dti::analysis::{sweep, SweepGrid, SweepMode};
use trimodal_dti::config::ModelConfig;
use trimodal_dti::synthetic::{build_archive, SyntheticSpec};

pub fn run_example(out: &Path, epochs: usize) -> trimodal_dti::Result<String> {
    let archive = build_archive(&SyntheticSpec::default(), out)?;
    let config = ModelConfig {
        epochs,
        ..ModelConfig::desk()
    };
    let mut axes = BTreeMap::new();
    axes.insert("dropout".to_string(), vec![json!(0.0), json!(0.2)]);
    axes.insert("learning_rate".to_string(), vec![json!(1e-3), json!(3e-3)]);
    let grid = SweepGrid {
        axes,
        mode: SweepMode::Cartesian,
    };
    let csv = sweep(&config, &archive, &grid)?.to_csv();
    print!("{csv}");
    Ok(csv)
}

#[allow(dead_code)]
fn main() -> trimodal_dti::Result<()> {
    run_example(&std::env::temp_dir().join("trimod-sweep"), 5).map(|_| ())
}
