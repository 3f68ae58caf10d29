use riefflab::harness::{refinement_study, run_suite, SuiteConfig};

fn small(suites: &[&str]) -> SuiteConfig {
    SuiteConfig { suites: suites.iter().map(|s| s.to_string()).collect(), ..SuiteConfig::default() }
}

#[test]
fn algebraic_suites_pass_on_default_rig() {
    let r = run_suite(&small(&["fourier", "moyal", "crossed", "modulation", "orthogonality"])).unwrap();
    assert!(r.all_passed(), "{}", r.summary());
    assert!(r.observations.iter().any(|o| o.id == "prop-2.7"));
}

#[test]
fn homomorphism_refinement_ratio() {
    let t = refinement_study(&SuiteConfig::default(), "prop-2.2", &[16, 32]).unwrap();
    assert!(t.monotone());
    assert!(t.rows[1].1 * 4.0 <= t.rows[0].1);
    assert!(t.orders[0] >= 2.0);
}

#[test]
fn per_check_tolerance_override() {
    let mut cfg = small(&["fourier"]);
    cfg.grid_n = 16;
    cfg.tolerances.insert("fourier-parseval".into(), 0.0);
    let r = run_suite(&cfg).unwrap();
    assert!(!r.check("fourier-parseval").unwrap().pass || r.check("fourier-parseval").unwrap().residual == Some(0.0));
    assert!(r.check("fourier-involution").unwrap().pass);
    assert_eq!(r.check("fourier-involution").unwrap().tolerance, 1e-10);
}

#[test]
fn representation_checks_on_small_rig() {
    let mut cfg = small(&["bargmann"]);
    cfg.rep_n = 16;
    let r = run_suite(&cfg).unwrap();
    assert!(r.check("bargmann-isometry").unwrap().pass);
    assert!(r.check("bargmann-left-inverse").unwrap().pass);
    assert!(r.check("prop-4.2").unwrap().residual.is_some());
}
