//! Runs every example's `run_example` with a short budget.

#[path = "../examples/ablation.rs"]
mod ablation;
#[path = "../examples/contrastive_alignment.rs"]
mod contrastive_alignment;
#[path = "../examples/featurize_inputs.rs"]
mod featurize_inputs;
#[path = "../examples/gvp_equivariance.rs"]
mod gvp_equivariance;
#[path = "../examples/modal_similarity.rs"]
mod modal_similarity;
#[path = "../examples/rank_targets.rs"]
mod rank_targets;
#[path = "../examples/sweep.rs"]
mod sweep;
#[path = "../examples/synthetic_dataset.rs"]
mod synthetic_dataset;
#[path = "../examples/tokenizer.rs"]
mod tokenizer;
#[path = "../examples/train_model.rs"]
mod train_model;

use trimodal_dti::Variant;

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

#[test]
fn data_examples() {
    synthetic_dataset::run_example(tmp().path()).unwrap();
    featurize_inputs::run_example(tmp().path()).unwrap();
    tokenizer::run_example().unwrap();
}

#[test]
fn model_examples() {
    let (inv, eqv) = gvp_equivariance::run_example(3).unwrap();
    assert!(inv < 1e-10 && eqv < 1e-10);
    let (random, aligned) = contrastive_alignment::run_example().unwrap();
    assert!(aligned < random);
}

#[test]
fn training_examples() {
    let auc = train_model::run_example(tmp().path(), 1).unwrap();
    assert!((0.0..=1.0).contains(&auc));
    let table = ablation::run_example(tmp().path(), 1, &[Variant::All, Variant::SeqOnly]).unwrap();
    assert!(table.contains("seq_only"));
    assert_eq!(rank_targets::run_example(tmp().path(), 1, 3).unwrap(), 3);
    let fractions = modal_similarity::run_example(tmp().path(), 1).unwrap();
    assert_eq!(fractions.len(), 6);
}

#[test]
fn sweep_example() {
    let csv = sweep::run_example(tmp().path(), 1).unwrap();
    assert_eq!(csv.lines().count(), 5);
}
