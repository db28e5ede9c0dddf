mod common;

use common::*;

#[test]
fn layers_and_losses_match_reference_loops() {
    for (name, err) in oracle_errors(60) {
        assert!(err <= 1e-6, "{name}: max abs error {err:e}");
    }
}

#[test]
fn gcn_isolated_node_keeps_only_its_self_loop() {
    // Node 2 has no neighbours: with A + I its row of the propagator is [0, 0, 1].
    let a = vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]];
    let z = vec![vec![1.0], vec![3.0], vec![-2.0]];
    let w = vec![vec![1.0]];
    let out = gcn_oracle(&a, &z, &w, &[5.0]);
    assert_eq!(out[2], vec![3.0]);
    assert_eq!(out[0], vec![7.0]);
}

#[test]
fn tagcn_isolated_node_is_bias_only() {
    let a = vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]];
    let x = vec![vec![1.0], vec![2.0], vec![4.0]];
    let out = tagcn_oracle(&a, &x, &[vec![vec![1.0]]], &[0.5]);
    assert_eq!(out, vec![vec![2.5], vec![1.5], vec![0.5]]);
}

#[test]
fn metric_oracles_on_worked_example() {
    let labels = [1, 0, 1, 0];
    let scores = [0.9, 0.8, 0.4, 0.1];
    assert!((auc_oracle(&labels, &scores) - 0.75).abs() < 1e-15);
    // Hits at ranks 1 and 3: (1 + 2/3) / 2.
    assert!((ap_oracle(&labels, &scores) - 5.0 / 6.0).abs() < 1e-15);
    assert_eq!(precision_oracle(&labels, &scores, 0.5), 0.5);
}

#[test]
fn contrastive_oracle_perfect_alignment_limit() {
    // Orthogonal one-hots, identical across modalities: as tau -> 0 the
    // loss vanishes; at tau = 1 each side is -log(e / (e + 4)) / 2.
    let z: Mat = (0..3).map(|i| (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    assert!(contrastive_oracle(&z, &z, 0.01) < 1e-12);
    let e = 1f64.exp();
    let expect = -(e / (e + 2.0 + 2.0)).ln();
    assert!((contrastive_oracle(&z, &z, 1.0) - expect).abs() < 1e-12);
}
