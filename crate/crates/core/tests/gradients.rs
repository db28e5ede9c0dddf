mod common;

use common::*;

#[test]
fn per_layer_gradients_match_finite_differences() {
    for (name, err) in layer_gradient_errors() {
        assert!(err < 1e-4, "{name}: relative gradient error {err:e}");
    }
}

#[test]
fn end_to_end_gradient_matches_finite_differences() {
    let dir = tempfile::tempdir().unwrap();
    let err = end_to_end_gradient_error(dir.path());
    assert!(err < 1e-3, "relative gradient error {err:e}");
}

#[test]
fn checker_detects_a_wrong_gradient() {
    use candle_core::Var;
    // detach() hides x from autograd, so the analytic gradient is zero.
    let x = Var::from_tensor(&tensor1(&[0.3, -0.7])).unwrap();
    let f = || x.as_tensor().detach().sqr().unwrap().sum_all().unwrap();
    assert!(grad_check(std::slice::from_ref(&x), &f, 8, 0) > 0.5);
    let g = || x.as_tensor().sqr().unwrap().sum_all().unwrap();
    assert!(grad_check(std::slice::from_ref(&x), &g, 8, 0) < 1e-8);
}
