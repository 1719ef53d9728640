use bregman_bench::audit::{audit, AuditOptions, Fault};
use bregman_bench::instance::Family;

#[test]
fn default_seeds_pass_on_all_families() {
    for family in Family::ALL {
        for seed in 0..3 {
            let report = audit(family, seed, &AuditOptions::default()).unwrap();
            assert!(report.passed(), "{report}");
            assert_eq!(report.checks.len(), 8);
        }
    }
}

#[test]
fn corrupted_gradient_is_named() {
    for family in Family::ALL {
        let opts = AuditOptions { fault: Some(Fault::CorruptGradient), ..Default::default() };
        let report = audit(family, 0, &opts).unwrap();
        assert_eq!(report.failed(), vec!["objective-gradient"], "{report}");
    }
}

#[test]
fn understated_constant_fails_the_descent_lemma_check() {
    let opts = AuditOptions { fault: Some(Fault::UnderstateL), ..Default::default() };
    let report = audit(Family::LpLs, 0, &opts).unwrap();
    assert!(report.failed().contains(&"lsmad-sampled"), "{report}");
    let text = report.to_string();
    assert!(text.contains("FAIL lsmad-sampled") && text.ends_with("audit FAILED"));
}
