//! Acceptance battery: one PASS/FAIL line per criterion on the default rig.
//! Exits 0 regardless unless RIEFFLAB_ACCEPTANCE_STRICT is set.

use std::process::ExitCode;
use std::time::Instant;

use riefflab::harness::{run_suite, SuiteConfig, SuiteReport};

const CRITERIA: [(&str, &[&str]); 8] = [
    ("Fourier: F^2 = id, Parseval", &["fourier-involution", "fourier-involution-fields", "fourier-parseval"]),
    (
        "Weyl: homomorphism, involution, projective op, window idempotent/projector",
        &["weyl-homomorphism", "weyl-involution", "op-projective", "window-idempotent", "window-projector"],
    ),
    ("Crossed: involution, associativity, gauge sign, 4x4 oracle", &["crossed-involution", "crossed-associativity", "remark-alta", "crossed-oracle"]),
    (
        "Modulation: Prop 2.2 (+decay), involution, inversion, pairing, Cor 2.4",
        &["prop-2.2", "prop-2.2-refinement", "prop-2.2-involution", "eq-inversion", "pairing-identity", "cor-2.4", "cor-2.4-involution"],
    ),
    ("Orthogonality: eq-tion", &["eq-tion"]),
    (
        "Representations: certificates, multiplicativity, sortestii, window-shift spectra, orbit-shift norms",
        &["rep-certificates", "rep-multiplicative", "rep-involution", "eq-sortestii", "remark-simult", "orbit-equivalence"],
    ),
    ("Bargmann: isometry, left inverse, Prop 4.2 at N=16 (+decay)", &["bargmann-isometry", "bargmann-left-inverse", "prop-4.2", "prop-4.2-refinement"]),
    ("Norms: amin vs Op_sigma within 5% at N=16", &["eq-amin"]),
];

fn criterion(report: &SuiteReport, ids: &[&str]) -> (bool, Vec<String>) {
    let mut ok = true;
    let mut lines = Vec::new();
    for id in ids {
        match report.check(id) {
            Some(c) => {
                ok &= c.pass;
                let r = c.residual.map_or_else(|| c.error.clone().unwrap_or("non-finite".into()), |r| format!("{r:.3e}"));
                lines.push(format!("    {} {id} N={} residual {r} tol {:.1e}", if c.pass { "ok  " } else { "FAIL" }, c.grid_n, c.tolerance));
            }
            None => {
                ok = false;
                lines.push(format!("    FAIL {id} missing from report"));
            }
        }
    }
    (ok, lines)
}

fn main() -> ExitCode {
    let t0 = Instant::now();
    let cfg = SuiteConfig::default();
    let first = match run_suite(&cfg) {
        Ok(r) => r,
        Err(e) => {
            println!("FAIL acceptance: suite run failed: {e}");
            return ExitCode::FAILURE;
        }
    };
    let mut failed = 0;
    for (i, (name, ids)) in CRITERIA.iter().enumerate() {
        let (ok, lines) = criterion(&first, ids);
        failed += usize::from(!ok);
        println!("{} criterion {}: {name}", if ok { "PASS" } else { "FAIL" }, i + 1);
        for l in lines {
            println!("{l}");
        }
    }
    let second = run_suite(&cfg).map(|r| r.to_json());
    let same = second.as_ref().is_ok_and(|s| *s == first.to_json());
    failed += usize::from(!same);
    println!("{} criterion 9: bit-identical reports across repeated runs", if same { "PASS" } else { "FAIL" });
    println!("acceptance: {} of 9 criteria passed in {:.0} s", 9 - failed, t0.elapsed().as_secs_f64());
    if failed > 0 && std::env::var_os("RIEFFLAB_ACCEPTANCE_STRICT").is_some() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
