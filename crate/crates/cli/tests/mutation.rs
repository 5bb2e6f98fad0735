use hypzero_cli::verify::{run_criterion, VerifyOptions};

#[test]
fn perturbed_kappa_fails_right_tail() {
    let clean = run_criterion(10, &VerifyOptions::default());
    assert!(clean.passed, "{}", clean.line());
    for seed in [1, 2] {
        let opts = VerifyOptions {
            seed,
            kappa_perturbation: 1e-3,
            ..Default::default()
        };
        let o = run_criterion(10, &opts);
        assert!(!o.passed, "perturbation went unnoticed: {}", o.line());
    }
}
