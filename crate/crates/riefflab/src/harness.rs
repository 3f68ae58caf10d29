//! Suite orchestration: configuration, the check registry keyed to the
//! labelled propositions, refinement studies and JSON/CSV reports.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crossed::{
    gauge, involution, l1_distance, l1_norm, pin_gauge_sign, twisted_product, twisted_product_oracle, Field, GAUGE_SIGN,
};
use crate::dynamics::{AlgebraElement, Character, DynSystem, SigmaPoint};
use crate::error::{invalid, LabError, Result};
use crate::modulation::{
    admissibility_bound, comodulation, homomorphism_residual, intertwining_residual, involution_residual,
    localized_modulation, orthogonality_residual, rieffel_product, square_involution, square_product, ModMap, Window,
};
use crate::phase_space::{kappa, symplectic_fourier, PhaseGrid, PhasePoint, Symbol, C64};
use crate::reps::{
    adjoint_residual, bargmann_equivalence_residual_free, concrete_covariant, covariance_shift_residual,
    induced_covariant, orbit_shift_norm_residual, probe_battery, probe_residual, rep_crossed,
    rieffel_norm_estimate, schrodinger_covariance_residual, schrodinger_rep, window_shift_spectral_residual, xi_inner,
    Bargmann,
};
use crate::weyl::{heisenberg_op, moyal, rank_one, weyl_quantize, wigner, Domain, OperatorMatrix, WaveFunction};

pub const SCHEMA_VERSION: u32 = 1;
pub const SEED_ENV: &str = "RIEFFLAB_SEED";
pub const SUITES: [&str; 9] =
    ["fourier", "moyal", "crossed", "modulation", "orthogonality", "representations", "bargmann", "norms", "refinement"];

/// Run configuration; serializes to a flat `key=value` file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    /// Phase lattice for the algebraic suites.
    pub grid_n: usize,
    /// Lattice for dense representation matrices.
    pub rep_n: usize,
    /// Lattice for matrix-free identities that are sensitive to the box wrap.
    pub wide_n: usize,
    /// Lattice for operators on L²(𝒳) only.
    pub line_n: usize,
    pub torus_m: usize,
    pub system: String,
    pub window: String,
    pub modmap: ModMap,
    pub sigma: SigmaPoint,
    pub seed: u64,
    /// Seeded random probes added to the fixed packets.
    pub probes: usize,
    pub suites: Vec<String>,
    /// Global tolerance override.
    pub tol: Option<f64>,
    /// Per-check tolerance overrides.
    pub tolerances: BTreeMap<String, f64>,
    pub report: Option<PathBuf>,
    /// Record wall-clock time per check (makes reports non-reproducible).
    pub timing: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            grid_n: 32,
            rep_n: 16,
            wide_n: 48,
            line_n: 128,
            torus_m: 32,
            system: "kronecker:0.41421356237309515,0.7320508075688772".into(),
            window: "gaussian".into(),
            modmap: ModMap::M,
            sigma: [0.3, 0.6],
            seed: 7,
            probes: 10,
            suites: SUITES.iter().map(|s| s.to_string()).collect(),
            tol: None,
            tolerances: BTreeMap::new(),
            report: None,
            timing: false,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| LabError::InvalidArgument(format!("bad value '{v}' for {key}")))
}

/// `s1,s2` as a Σ-point.
pub fn parse_sigma(v: &str) -> Result<SigmaPoint> {
    let parts: Vec<&str> = v.split(',').collect();
    if parts.len() != 2 {
        return invalid(format!("sigma needs two comma-separated values, got '{v}'"));
    }
    Ok([parse_num("sigma", parts[0])?, parse_num("sigma", parts[1])?])
}

/// Comma-separated suite names; `all` expands to every suite.
pub fn parse_suites(v: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for s in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if s == "all" {
            out.extend(SUITES.iter().map(|x| x.to_string()));
        } else if SUITES.contains(&s) {
            out.push(s.to_string());
        } else {
            return invalid(format!("unknown suite '{s}'"));
        }
    }
    let mut seen = Vec::new();
    out.retain(|s| {
        let fresh = !seen.contains(s);
        seen.push(s.clone());
        fresh
    });
    Ok(out)
}

impl SuiteConfig {
    /// Parses a flat `key=value` file. Blank lines and `#` comments are
    /// skipped; missing keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = SuiteConfig::default();
        let mut seen = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return invalid(format!("expected key=value, got '{line}'"));
            };
            let (k, v) = (k.trim(), v.trim());
            if seen.iter().any(|s: &String| s == k) {
                return invalid(format!("duplicate key '{k}'"));
            }
            seen.push(k.to_string());
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Sets one key, using the same syntax as the config file.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "grid_n" => self.grid_n = parse_num(key, v)?,
            "rep_n" => self.rep_n = parse_num(key, v)?,
            "wide_n" => self.wide_n = parse_num(key, v)?,
            "line_n" => self.line_n = parse_num(key, v)?,
            "torus_m" => self.torus_m = parse_num(key, v)?,
            "system" => self.system = v.to_string(),
            "window" => self.window = v.to_string(),
            "modmap" => self.modmap = v.parse()?,
            "sigma" => self.sigma = parse_sigma(v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "probes" => self.probes = parse_num(key, v)?,
            "suites" => self.suites = parse_suites(v)?,
            "tol" => self.tol = Some(parse_num(key, v)?),
            "report" => self.report = Some(PathBuf::from(v)),
            "timing" => self.timing = parse_num(key, v)?,
            k => match k.strip_prefix("tol.") {
                Some(id) if !id.is_empty() => {
                    self.tolerances.insert(id.to_string(), parse_num(key, v)?);
                }
                _ => return invalid(format!("unknown config key '{k}'")),
            },
        }
        Ok(())
    }

    /// Canonical serialization; `parse(to_config_string())` reproduces self.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "grid_n={}", self.grid_n);
        let _ = writeln!(s, "rep_n={}", self.rep_n);
        let _ = writeln!(s, "wide_n={}", self.wide_n);
        let _ = writeln!(s, "line_n={}", self.line_n);
        let _ = writeln!(s, "torus_m={}", self.torus_m);
        let _ = writeln!(s, "system={}", self.system);
        let _ = writeln!(s, "window={}", self.window);
        let _ = writeln!(s, "modmap={}", self.modmap);
        let _ = writeln!(s, "sigma={},{}", self.sigma[0], self.sigma[1]);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "probes={}", self.probes);
        let _ = writeln!(s, "suites={}", self.suites.join(","));
        if let Some(t) = self.tol {
            let _ = writeln!(s, "tol={t}");
        }
        for (id, t) in &self.tolerances {
            let _ = writeln!(s, "tol.{id}={t}");
        }
        if let Some(p) = &self.report {
            let _ = writeln!(s, "report={}", p.display());
        }
        let _ = writeln!(s, "timing={}", self.timing);
        s
    }

    /// Applies `RIEFFLAB_SEED` when set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = parse_num(SEED_ENV, &v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for s in &self.suites {
            if !SUITES.contains(&s.as_str()) {
                return invalid(format!("unknown suite '{s}'"));
            }
        }
        for n in [self.grid_n, self.rep_n, self.wide_n, self.line_n] {
            PhaseGrid::new(n)?;
        }
        if self.grid_n < 8 || self.rep_n < 8 {
            return invalid("grid_n and rep_n must be at least 8");
        }
        DynSystem::parse(&self.system, self.torus_m)?;
        window_order(&self.window)?;
        if let Some(t) = self.tol {
            if !(t >= 0.0) {
                return invalid("tolerance override must be non-negative");
            }
        }
        Ok(())
    }

    fn tolerance_for(&self, id: &str, default: f64) -> f64 {
        self.tolerances.get(id).copied().or(self.tol).unwrap_or(default)
    }
}

impl fmt::Display for SuiteConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_config_string())
    }
}

fn window_order(spec: &str) -> Result<usize> {
    match spec {
        "gaussian" => Ok(0),
        s => match s.strip_prefix("hermite:").map(str::parse::<usize>) {
            Some(Ok(k)) if k <= crate::weyl::MAX_HERMITE_ORDER => Ok(k),
            _ => invalid(format!("unknown window '{spec}' (expected gaussian or hermite:k, k ≤ 4)")),
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub suite: String,
    pub anchor: String,
    pub grid_n: usize,
    /// None when the evaluation itself failed.
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub runtime_s: Option<f64>,
}

/// Values that are reported but not asserted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub id: String,
    pub anchor: String,
    pub values: Vec<(String, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub version: String,
    pub grid_n: usize,
    pub rep_n: usize,
    pub wide_n: usize,
    pub line_n: usize,
    pub torus_m: usize,
    pub system: String,
    pub window: String,
    pub modmap: ModMap,
    pub sigma: SigmaPoint,
    pub seed: u64,
    pub probes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub environment: Environment,
    pub suites: Vec<String>,
    pub checks: Vec<CheckRecord>,
    pub observations: Vec<Observation>,
    pub passed: usize,
    pub failed: usize,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn check(&self, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.id == id)
    }

    /// One line per check.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let r = c.residual.map_or("error".to_string(), |r| format!("{r:.3e}"));
            let _ = writeln!(
                s,
                "{} {:<28} N={:<4} {:>10} <= {:.1e}  [{}]{}",
                if c.pass { "PASS" } else { "FAIL" },
                c.id,
                c.grid_n,
                r,
                c.tolerance,
                c.anchor,
                c.error.as_ref().map(|e| format!(" ({e})")).unwrap_or_default()
            );
        }
        let _ = writeln!(s, "{} passed, {} failed", self.passed, self.failed);
        s
    }
}

/// Shared inputs for check evaluation.
pub struct Ctx {
    pub cfg: SuiteConfig,
}

impl Ctx {
    pub fn new(cfg: SuiteConfig) -> Self {
        Ctx { cfg }
    }

    pub fn system(&self) -> Result<DynSystem> {
        DynSystem::parse(&self.cfg.system, self.cfg.torus_m)
    }

    fn torus(&self) -> Result<DynSystem> {
        let sys = self.system()?;
        if !sys.is_torus() {
            return Err(LabError::Unsupported(format!("check needs a Kronecker system, got {}", sys.spec())));
        }
        Ok(sys)
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.cfg.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }

    fn window(&self, grid: &PhaseGrid) -> Result<Window> {
        Window::parse(grid, &self.cfg.window)
    }

    fn window_vector(&self, grid: &PhaseGrid) -> Result<WaveFunction> {
        WaveFunction::hermite(grid, window_order(&self.cfg.window)?)
    }

    fn probes(&self, grid: &PhaseGrid) -> Vec<ndarray::Array1<C64>> {
        probe_battery(grid, self.cfg.seed, self.cfg.probes)
    }
}

/// Which configured lattice a check runs on.
#[derive(Clone, Copy, Debug)]
pub enum Level {
    Grid,
    Rep,
    Wide,
    Line,
    Fixed(usize),
}

type Eval = fn(&Ctx, usize) -> Result<f64>;

pub struct CheckDef {
    pub id: &'static str,
    pub suite: &'static str,
    pub anchor: &'static str,
    pub tolerance: f64,
    pub level: Level,
    eval: Eval,
}

impl CheckDef {
    pub fn grid_for(&self, cfg: &SuiteConfig) -> usize {
        match self.level {
            Level::Grid => cfg.grid_n,
            Level::Rep => cfg.rep_n,
            Level::Wide => cfg.wide_n,
            Level::Line => cfg.line_n,
            Level::Fixed(n) => n,
        }
    }

    /// Evaluates the residual at lattice size n.
    pub fn evaluate(&self, ctx: &Ctx, n: usize) -> Result<f64> {
        (self.eval)(ctx, n)
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

// ---- batteries ----

fn gaussian_battery(grid: PhaseGrid) -> Vec<Symbol> {
    vec![
        Symbol::gaussian(grid, PhasePoint::ZERO, 1.0),
        Symbol::gaussian(grid, PhasePoint::new(0.4, -0.3), 0.8).map(|p, v| v * C64::from_polar(1.0, 0.5 * p.x - 0.2 * p.xi)),
        Symbol::gaussian(grid, PhasePoint::new(-0.5, 0.2), 1.2).scale(c(0.3, -0.6)),
    ]
}

fn field_pair(grid: PhaseGrid, sys: &DynSystem) -> Result<(Field, Field)> {
    let f1 = Field::decomposable(
        grid,
        sys,
        vec![(
            Symbol::gaussian(grid, PhasePoint::new(0.2, -0.1), 1.0),
            AlgebraElement::from_characters(sys, vec![(Character::Torus([1, 0]), c(1.0, 0.3)), (Character::Torus([0, -1]), c(0.4, 0.0))])?,
        )],
    )?;
    let f2 = Field::tensor(
        &Symbol::gaussian(grid, PhasePoint::new(-0.3, 0.2), 0.9).map(|p, v| v * C64::from_polar(1.0, 0.2 * p.x)),
        &AlgebraElement::monomial(sys, [0, 1])?,
    )?;
    Ok((f1, f2))
}

fn crossed_battery(grid: PhaseGrid, sys: &DynSystem) -> Result<(Field, Field, Field)> {
    let g1 = Field::decomposable(
        grid,
        sys,
        vec![(
            Symbol::gaussian(grid, PhasePoint::new(0.3, -0.2), 0.6),
            AlgebraElement::from_characters(sys, vec![(Character::Torus([1, 0]), c(1.0, 0.2)), (Character::Torus([0, 0]), c(0.5, 0.0))])?,
        )],
    )?;
    let g2 = Field::tensor(
        &Symbol::gaussian(grid, PhasePoint::new(-0.4, 0.1), 0.7),
        &AlgebraElement::monomial(sys, [-1, 0])?.scale(c(0.3, -0.7)),
    )?;
    let g3 = Field::tensor(&Symbol::gaussian(grid, PhasePoint::new(0.1, 0.5), 0.5), &AlgebraElement::one(sys))?;
    Ok((g1, g2, g3))
}

fn narrow(grid: PhaseGrid, sys: &DynSystem, c0: PhasePoint, m: [i64; 2]) -> Result<Field> {
    Field::tensor(&Symbol::gaussian(grid, c0, 0.45), &AlgebraElement::monomial(sys, m)?)
}

fn torus_battery(sys: &DynSystem) -> Result<Vec<AlgebraElement>> {
    Ok(vec![
        AlgebraElement::one(sys),
        AlgebraElement::monomial(sys, [1, 0])?,
        AlgebraElement::from_characters(sys, vec![(Character::Torus([1, 0]), c(0.5, 0.0)), (Character::Torus([-1, 0]), c(0.5, 0.0))])?,
        AlgebraElement::from_characters(sys, vec![(Character::Torus([0, 1]), c(0.6, 0.2)), (Character::Torus([0, 0]), c(0.4, 0.0))])?,
        AlgebraElement::from_characters(
            sys,
            vec![(Character::Torus([1, 1]), c(0.3, 0.0)), (Character::Torus([-1, 0]), c(0.0, 0.5)), (Character::Torus([0, 0]), c(0.2, 0.0))],
        )?,
    ])
}

fn mixed_element(sys: &DynSystem) -> Result<AlgebraElement> {
    AlgebraElement::from_characters(sys, vec![(Character::Torus([1, 0]), c(1.0, 0.3)), (Character::Torus([0, 0]), c(0.5, 0.0))])
}

fn max_of<I: IntoIterator<Item = Result<f64>>>(it: I) -> Result<f64> {
    let mut m: f64 = 0.0;
    for r in it {
        let r = r?;
        if r.is_nan() {
            return Ok(f64::NAN);
        }
        m = m.max(r);
    }
    Ok(m)
}

fn op_distance(a: &OperatorMatrix, b: &OperatorMatrix) -> f64 {
    a.sub(b).op_norm()
}

// ---- fourier ----

fn fourier_involution(_: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    max_of(gaussian_battery(grid).iter().map(|f| Ok(symplectic_fourier(&symplectic_fourier(f)?)?.sup_distance(f))))
}

fn fourier_involution_fields(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let sys = ctx.system()?;
    let (g1, g2, _) = crossed_battery(grid, &sys)?;
    max_of([&g1, &g2].map(|g| l1_distance(&symplectic_fourier(&symplectic_fourier(g)?)?, g)))
}

fn fourier_parseval(_: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    max_of(gaussian_battery(grid).iter().map(|f| {
        let a = f.l2_norm();
        Ok((symplectic_fourier(f)?.l2_norm() - a).abs() / a)
    }))
}

// ---- weyl ----

fn random_symbol(grid: PhaseGrid, rng: &mut ChaCha8Rng) -> Symbol {
    let c0 = PhasePoint::new(rng.random_range(-0.8..0.8), rng.random_range(-0.8..0.8));
    let w = rng.random_range(0.8..1.2);
    let k = [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)];
    let a = C64::from_polar(rng.random_range(0.5..1.0), rng.random_range(0.0..6.2));
    Symbol::gaussian(grid, c0, w).map(move |p, v| a * v * C64::from_polar(1.0, k[0] * p.x + k[1] * p.xi))
}

fn weyl_homomorphism(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let mut rng = ctx.rng(1);
    let pairs: Vec<(Symbol, Symbol)> = (0..3).map(|_| (random_symbol(grid, &mut rng), random_symbol(grid, &mut rng))).collect();
    max_of(pairs.iter().map(|(f, g)| {
        let prod = weyl_quantize(f)?.matmul(&weyl_quantize(g)?);
        Ok(op_distance(&weyl_quantize(&moyal(f, g)?)?, &prod) / prod.op_norm())
    }))
}

fn weyl_involution(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let mut rng = ctx.rng(2);
    let mut syms = gaussian_battery(grid);
    syms.push(random_symbol(grid, &mut rng));
    max_of(syms.iter().map(|f| Ok(weyl_quantize(&f.conj())?.sub(&weyl_quantize(f)?.adjoint()).max_abs())))
}

fn weyl_unit(_: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    Ok(weyl_quantize(&Symbol::constant(grid, c(1.0, 0.0)))?.sub(&OperatorMatrix::identity(n, Domain::L2X)).max_abs())
}

fn heisenberg_projective(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let mut rng = ctx.rng(3);
    let r = (n / 2) as i64;
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let x = grid.lattice_point(rng.random_range(-r..r), rng.random_range(-r..r));
        let y = grid.lattice_point(rng.random_range(-r..r), rng.random_range(-r..r));
        let lhs = heisenberg_op(&grid, x)?.matmul(&heisenberg_op(&grid, y)?);
        let rhs = heisenberg_op(&grid, x + y)?.scale(kappa(x, y));
        worst = worst.max(lhs.sub(&rhs).max_abs());
    }
    Ok(worst)
}

fn moyal_associativity(_: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let b = gaussian_battery(grid);
    let lhs = moyal(&moyal(&b[0], &b[1])?, &b[2])?;
    let rhs = moyal(&b[0], &moyal(&b[1], &b[2])?)?;
    Ok(lhs.sup_distance(&rhs))
}

fn window_idempotent(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let w = ctx.window(&grid)?;
    if !w.self_adjoint {
        return Ok(f64::INFINITY);
    }
    Ok(w.idempotency_residual)
}

fn window_projector(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let v = ctx.window_vector(&grid)?;
    let (_, h) = wigner(&v, &v)?;
    Ok(op_distance(&weyl_quantize(&h)?, &rank_one(&v)))
}

fn transint(_: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let u = WaveFunction::packet(&grid, 0.4, -0.3, 0.9);
    let v = WaveFunction::packet(&grid, -0.2, 0.5, 1.1);
    let f = Symbol::new(grid, |p| c(1.0 + 0.3 * p.x, 0.2 * p.xi) * (-0.3 * p.norm_sqr()).exp());
    let (_, big_v) = wigner(&u, &v)?;
    let lhs = u.inner(&WaveFunction::from_values(&grid, weyl_quantize(&f)?.apply(v.values()))?);
    let rhs = f.samples().iter().zip(big_v.samples().iter()).map(|(a, b)| a * b).sum::<C64>() * grid.measure_weight;
    Ok((lhs - rhs).norm())
}

// ---- crossed ----

fn crossed_involution(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let (g1, g2, _) = crossed_battery(grid, &ctx.system()?)?;
    let lhs = involution(&twisted_product(&g1, &g2)?);
    let rhs = twisted_product(&involution(&g2), &involution(&g1))?;
    l1_distance(&lhs, &rhs)
}

fn crossed_associativity(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let (g1, g2, g3) = crossed_battery(grid, &ctx.system()?)?;
    let lhs = twisted_product(&twisted_product(&g1, &g2)?, &g3)?;
    let rhs = twisted_product(&g1, &twisted_product(&g2, &g3)?)?;
    l1_distance(&lhs, &rhs)
}

fn crossed_isometries(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let (g1, g2, _) = crossed_battery(grid, &ctx.system()?)?;
    let mut worst: f64 = 0.0;
    for g in [&g1, &g2] {
        let base = l1_norm(g);
        worst = worst.max((l1_norm(&involution(g)) - base).abs());
        for a in [0.5, -0.3, 1.0] {
            worst = worst.max((l1_norm(&gauge(a, g)) - base).abs());
        }
    }
    Ok(worst)
}

fn crossed_submultiplicative(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let (g1, g2, g3) = crossed_battery(grid, &ctx.system()?)?;
    max_of([(&g1, &g2), (&g2, &g3), (&g1, &g3)].map(|(a, b)| Ok((l1_norm(&twisted_product(a, b)?) - l1_norm(a) * l1_norm(b)).max(0.0))))
}

fn gauge_intertwining(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let (g1, g2, _) = crossed_battery(grid, &ctx.system()?)?;
    let (sign, plus, minus) = pin_gauge_sign(&g1, &g2)?;
    if sign != GAUGE_SIGN {
        return Ok(f64::INFINITY);
    }
    Ok(if GAUGE_SIGN > 0.0 { plus } else { minus })
}

fn crossed_oracle(_: &Ctx, _: usize) -> Result<f64> {
    let grid = PhaseGrid::toy(4)?;
    let sys = DynSystem::translation_with_samples(vec![[0.0, 0.0], [0.3, -0.5], [1.1, 0.7]])?;
    let g1 = Field::decomposable(
        grid,
        &sys,
        vec![(
            Symbol::gaussian(grid, PhasePoint::new(0.2, 0.1), 1.0),
            AlgebraElement::from_characters(&sys, vec![(Character::Plane([0.7, -0.3]), c(1.0, 0.5)), (Character::Plane([0.0, 0.0]), c(0.2, 0.0))])?,
        )],
    )?;
    let g2 = Field::tensor(&Symbol::new(grid, |p| c(p.x, 1.0 + p.xi)), &AlgebraElement::plane_wave(&sys, [-0.4, 0.9])?)?;
    let prod = twisted_product(&g1, &g2)?;
    let nodes = prod.absolute_nodes();
    let oracle = twisted_product_oracle(&g1, &g2, &nodes)?;
    let mut worst: f64 = 0.0;
    for (k, &(a, b)) in nodes.iter().enumerate() {
        for (si, s) in sys.sigma_samples().iter().enumerate() {
            worst = worst.max((prod.eval(a, b, *s) - oracle[k][si]).norm());
        }
    }
    Ok(worst)
}

// ---- modulation ----

fn modulation_inverse(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let (f1, f2) = field_pair(grid, &ctx.torus()?)?;
    let map = ctx.cfg.modmap;
    max_of([&f1, &f2].map(|f| l1_distance(&map.inverse(&map.forward(f)?)?, f)))
}

fn prop_2_2(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let (f1, f2) = field_pair(grid, &ctx.torus()?)?;
    max_of([homomorphism_residual(&f1, &f2, ctx.cfg.modmap), homomorphism_residual(&f2, &f1, ctx.cfg.modmap)])
}

fn prop_2_2_involution(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let (f1, _) = field_pair(grid, &ctx.torus()?)?;
    involution_residual(&f1, ctx.cfg.modmap)
}

fn square_involution_check(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let (f1, f2) = field_pair(grid, &ctx.torus()?)?;
    let lhs = square_involution(&square_product(&f1, &f2)?)?;
    let rhs = square_product(&square_involution(&f2)?, &square_involution(&f1)?)?;
    l1_distance(&lhs, &rhs)
}

fn eq_inversion(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let sys = ctx.torus()?;
    let h = ctx.window(&grid)?;
    let map = ctx.cfg.modmap;
    let fs = [mixed_element(&sys)?, torus_battery(&sys)?.remove(4)];
    max_of(fs.iter().map(|f| {
        let back = comodulation(&h, &localized_modulation(&h, f, map)?, map)?.scale(c(1.0 / h.norm_sqr(), 0.0));
        Ok(back.distance(f))
    }))
}

fn pairing_identity(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let sys = ctx.torus()?;
    let map = ctx.cfg.modmap;
    let f = mixed_element(&sys)?;
    let windows: Vec<Window> = (0..=crate::weyl::MAX_HERMITE_ORDER).map(|k| Window::hermite(&grid, k)).collect::<Result<_>>()?;
    let mods: Vec<Field> = windows.iter().map(|h| localized_modulation(h, &f, map)).collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (0..windows.len()).flat_map(|a| (0..windows.len()).map(move |b| (a, b))).collect();
    let res: Vec<Result<f64>> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let (k, h) = (&windows[a], &windows[b]);
            let lhs = comodulation(k, &mods[b], map)?;
            Ok(lhs.distance(&f.scale(k.symbol.inner(&h.symbol))))
        })
        .collect();
    max_of(res)
}

fn cor_2_4(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let sys = ctx.torus()?;
    let h = ctx.window(&grid)?;
    let map = ctx.cfg.modmap;
    let f = AlgebraElement::monomial(&sys, [1, 0])?;
    let g = AlgebraElement::from_characters(&sys, vec![(Character::Torus([0, 1]), c(0.6, 0.2)), (Character::Torus([0, 0]), c(0.4, 0.0))])?;
    let prod = |a: &AlgebraElement, b: &AlgebraElement| -> Result<f64> {
        let lhs = localized_modulation(&h, &rieffel_product(a, b)?, map)?;
        let rhs = map.product(&localized_modulation(&h, a, map)?, &localized_modulation(&h, b, map)?)?;
        l1_distance(&lhs, &rhs)
    };
    max_of([prod(&f, &g), prod(&g, &f)])
}

fn cor_2_4_involution(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let sys = ctx.torus()?;
    let h = ctx.window(&grid)?;
    let map = ctx.cfg.modmap;
    let f = mixed_element(&sys)?;
    let lhs = localized_modulation(&h, &f.conj(), map)?;
    let rhs = map.involution(&localized_modulation(&h, &f, map)?);
    l1_distance(&lhs, &rhs)
}

fn brancusi(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let sys = ctx.torus()?;
    let h = ctx.window(&grid)?;
    max_of([[1, 1], [1, 0], [0, -1]].map(|m| intertwining_residual(&h, &AlgebraElement::monomial(&sys, m)?, [0.0, 0.0], ctx.cfg.modmap)))
}

fn eq_tion(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let sys = ctx.torus()?;
    let (f1, f2) = field_pair(grid, &sys)?;
    let (g1, g2, g3) = crossed_battery(grid, &sys)?;
    let map = ctx.cfg.modmap;
    max_of([(&f1, &f2), (&f1, &f1), (&g1, &g2), (&g3, &f2)].map(|(a, b)| orthogonality_residual(a, b, map)))
}

// ---- representations ----

fn rep_certificates(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let sys = ctx.system()?;
    let s = ctx.cfg.sigma;
    let mut worst: f64 = 0.0;
    for sigma in [s, [0.0, 0.0], [0.71, 0.13]] {
        let cert = concrete_covariant(&grid, &sys, sigma)?.certificate();
        worst = worst.max(cert.projective).max(cert.covariance);
    }
    let cert = induced_covariant(&grid, &sys, &[s, [0.1, 0.45]], None)?.certificate();
    Ok(worst.max(cert.projective).max(cert.covariance))
}

fn rep_multiplicative(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let sys = ctx.torus()?;
    let cr = concrete_covariant(&grid, &sys, ctx.cfg.sigma)?;
    let probes = ctx.probes(&grid);
    let g1 = narrow(grid, &sys, PhasePoint::new(0.3, -0.2), [1, 0])?.add(&narrow(grid, &sys, PhasePoint::ZERO, [0, 1])?.scale(c(0.4, 0.3)))?;
    let g2 = narrow(grid, &sys, PhasePoint::new(-0.2, 0.3), [1, -1])?;
    max_of([(&g1, &g2), (&g2, &g1)].map(|(a, b)| {
        let prod = rep_crossed(&cr, &twisted_product(a, b)?)?;
        probe_residual(&prod, &rep_crossed(&cr, a)?.matmul(&rep_crossed(&cr, b)?), &probes)
    }))
}

fn rep_involution(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let sys = ctx.torus()?;
    let cr = concrete_covariant(&grid, &sys, ctx.cfg.sigma)?;
    let probes = ctx.probes(&grid);
    let g1 = narrow(grid, &sys, PhasePoint::new(0.3, -0.2), [1, 0])?.add(&narrow(grid, &sys, PhasePoint::ZERO, [0, 1])?.scale(c(0.4, 0.3)))?;
    adjoint_residual(&cr, &g1, &probes)
}

fn sortestii(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let sys = ctx.torus()?;
    let cr = concrete_covariant(&grid, &sys, ctx.cfg.sigma)?;
    let h = ctx.window(&grid)?;
    let probes = ctx.probes(&grid);
    let f = mixed_element(&sys)?;
    max_of([(1, 0), (0, 1)].map(|z| covariance_shift_residual(&cr, &h, &f, z, ctx.cfg.modmap, &probes)))
}

fn window_shift_spectra(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let sys = ctx.torus()?;
    let cr = concrete_covariant(&grid, &sys, ctx.cfg.sigma)?;
    let h = ctx.window(&grid)?;
    let fs = [AlgebraElement::one(&sys), mixed_element(&sys)?];
    max_of(fs.iter().map(|f| window_shift_spectral_residual(&cr, &h, f, (1, -1), ctx.cfg.modmap)))
}

fn orbit_equivalence(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let sys = ctx.torus()?;
    let fs = torus_battery(&sys)?;
    max_of(fs.iter().map(|f| orbit_shift_norm_residual(&grid, ctx.cfg.sigma, f, &[(1, 0), (0, 1), (1, -2)])))
}

fn covare(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let sys = ctx.system()?;
    let f = if sys.is_torus() { mixed_element(&sys)? } else { AlgebraElement::plane_wave(&sys, [0.4, -0.2])? };
    let us = [WaveFunction::packet(&grid, 0.0, 0.0, 1.0), WaveFunction::packet(&grid, 0.5, -0.4, 0.8), WaveFunction::hermite(&grid, 2)?];
    max_of([(1, 0), (0, 1), (1, -2)].map(|y| schrodinger_covariance_residual(&grid, ctx.cfg.sigma, &f, y, &us)))
}

// ---- bargmann ----

fn bargmann_isometry(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let bg = Bargmann::new(&ctx.window_vector(&grid)?)?;
    let u = WaveFunction::packet(&grid, 0.3, -0.2, 0.9);
    let w = WaveFunction::packet(&grid, -0.4, 0.5, 1.1);
    let (bu, bw) = (bg.apply(&u), bg.apply(&w));
    let a = (xi_inner(&grid, &bu, &bw) - u.inner(&w)).norm();
    let b = (xi_inner(&grid, &bu, &bu).re.sqrt() - u.norm()).abs();
    Ok(a.max(b))
}

fn bargmann_left_inverse(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let bg = Bargmann::new(&ctx.window_vector(&grid)?)?;
    let u = WaveFunction::packet(&grid, 0.3, -0.2, 0.9);
    let back = bg.adjoint(&bg.apply(&u))?.distance(&u);
    let uu = bg.adjoint_matrix().dot(bg.matrix());
    let id = (&uu - &ndarray::Array2::<C64>::eye(n)).iter().map(|x| x.norm()).fold(0.0, f64::max);
    Ok(back.max(id))
}

fn prop_4_2(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let sys = ctx.torus()?;
    let v = ctx.window_vector(&grid)?;
    let (_, hv) = wigner(&v, &v)?;
    let window = Window::new(hv, "h(v)")?;
    let probes = ctx.probes(&grid);
    let fs = [AlgebraElement::monomial(&sys, [1, 0])?, AlgebraElement::monomial(&sys, [0, 1])?];
    max_of(fs.iter().map(|f| bargmann_equivalence_residual_free(&sys, ctx.cfg.sigma, &v, &window, f, &probes)))
}

// ---- norms ----

fn norm_pairs(ctx: &Ctx, n: usize) -> Result<Vec<(f64, f64)>> {
    let grid = PhaseGrid::new(n)?;
    let sys = ctx.torus()?;
    let cr = concrete_covariant(&grid, &sys, ctx.cfg.sigma)?;
    let h = ctx.window(&grid)?;
    let fs = torus_battery(&sys)?;
    fs.par_iter()
        .map(|f| Ok((rieffel_norm_estimate(&cr, &h, f, ctx.cfg.modmap)?, schrodinger_rep(&grid, ctx.cfg.sigma, f)?.op_norm())))
        .collect()
}

fn eq_amin(ctx: &Ctx, n: usize) -> Result<f64> {
    max_of(norm_pairs(ctx, n)?.into_iter().map(|(a, b)| Ok((a - b).abs() / b)))
}

fn norm_unit(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let sys = ctx.torus()?;
    let cr = concrete_covariant(&grid, &sys, ctx.cfg.sigma)?;
    Ok((rieffel_norm_estimate(&cr, &ctx.window(&grid)?, &AlgebraElement::one(&sys), ctx.cfg.modmap)? - 1.0).abs())
}

fn window_independence(ctx: &Ctx, n: usize) -> Result<f64> {
    let grid = PhaseGrid::new(n)?;
    let sys = ctx.torus()?;
    let cr = concrete_covariant(&grid, &sys, ctx.cfg.sigma)?;
    let (h0, h1) = (Window::hermite(&grid, 0)?, Window::hermite(&grid, 1)?);
    let f = mixed_element(&sys)?;
    let a = rieffel_norm_estimate(&cr, &h0, &f, ctx.cfg.modmap)?;
    let b = rieffel_norm_estimate(&cr, &h1, &f, ctx.cfg.modmap)?;
    Ok((a - b).abs() / a.max(b))
}

// ---- refinement ----

fn contraction(ctx: &Ctx, id: &str, levels: &[usize]) -> Result<f64> {
    let table = refinement_table(ctx, id, levels)?;
    let mut worst: f64 = 0.0;
    for w in table.rows.windows(2) {
        let per_doubling = (w[1].1 / w[0].1).powf(1.0 / (w[1].0 as f64 / w[0].0 as f64).log2());
        worst = worst.max(if per_doubling.is_nan() { f64::INFINITY } else { per_doubling });
    }
    Ok(worst)
}

fn prop_2_2_refinement(ctx: &Ctx, n: usize) -> Result<f64> {
    contraction(ctx, "prop-2.2", &[n / 2, n])
}

fn prop_4_2_refinement(ctx: &Ctx, n: usize) -> Result<f64> {
    contraction(ctx, "prop-4.2", &[n, 2 * n, 4 * n])
}

/// Every check the harness knows, in report order.
pub fn registry() -> Vec<CheckDef> {
    use Level::*;
    let d = |id, suite, anchor, tolerance, level, eval: Eval| CheckDef { id, suite, anchor, tolerance, level, eval };
    vec![
        d("fourier-involution", "fourier", "§1: F^2 = id", 1e-10, Grid, fourier_involution),
        d("fourier-involution-fields", "fourier", "§1: F^2 = id", 1e-10, Grid, fourier_involution_fields),
        d("fourier-parseval", "fourier", "§1: F unitary", 1e-10, Grid, fourier_parseval),
        d("weyl-homomorphism", "moyal", "§1: Op(f#g) = Op(f)Op(g)", 1e-6, Grid, weyl_homomorphism),
        d("weyl-involution", "moyal", "§1: Op(f*) = Op(f)*", 1e-10, Grid, weyl_involution),
        d("weyl-unit", "moyal", "Eq. (eil)", 1e-8, Grid, weyl_unit),
        d("op-projective", "moyal", "§4: op(X)op(Y) = kappa(X,Y)op(X+Y)", 1e-8, Grid, heisenberg_projective),
        d("moyal-associativity", "moyal", "Eq. (rodact)", 1e-6, Grid, moyal_associativity),
        d("window-idempotent", "moyal", "§4: h(v)#h(v) = h(v)", 1e-7, Grid, window_idempotent),
        d("window-projector", "moyal", "§4: Op(h(v)) = |v><v|", 1e-6, Grid, window_projector),
        d("eq-transint", "moyal", "Eq. (transint)", 1e-7, Grid, transint),
        d("crossed-involution", "crossed", "§1: G^(X) = G(-X)*", 1e-8, Grid, crossed_involution),
        d("crossed-associativity", "crossed", "Eq. (ucu)", 1e-7, Grid, crossed_associativity),
        d("crossed-isometry", "crossed", "§1: Banach *-algebra", 1e-12, Grid, crossed_isometries),
        d("crossed-submultiplicative", "crossed", "§1: Banach *-algebra", 1e-8, Grid, crossed_submultiplicative),
        d("remark-alta", "crossed", "Remark (alta)", 1e-8, Grid, gauge_intertwining),
        d("crossed-oracle", "crossed", "Eq. (ucu)", 1e-10, Fixed(4), crossed_oracle),
        d("def-2.1", "modulation", "Def. 2.1", 1e-9, Grid, modulation_inverse),
        d("prop-2.2", "modulation", "Prop. 2.2", 1e-5, Grid, prop_2_2),
        d("prop-2.2-involution", "modulation", "Prop. 2.2", 1e-9, Grid, prop_2_2_involution),
        d("square-involution", "modulation", "Eq. (argrur)", 1e-8, Grid, square_involution_check),
        d("eq-inversion", "modulation", "Eq. (inversion)", 1e-7, Grid, eq_inversion),
        d("pairing-identity", "modulation", "§2: M~_k M_h = <k,h> id", 1e-7, Grid, pairing_identity),
        d("cor-2.4", "modulation", "Cor. 2.4", 1e-5, Grid, cor_2_4),
        d("cor-2.4-involution", "modulation", "Cor. 2.4", 1e-9, Grid, cor_2_4_involution),
        d("eq-brancusi", "modulation", "Eq. (brancusi)", 1e-7, Grid, brancusi),
        d("eq-tion", "orthogonality", "Prop. 4.1 / Eq. (tion)", 1e-8, Grid, eq_tion),
        d("rep-certificates", "representations", "§3: covariant representations", 1e-8, Rep, rep_certificates),
        d("rep-multiplicative", "representations", "Eq. (repe)", 1e-6, Rep, rep_multiplicative),
        d("rep-involution", "representations", "Eq. (repe)", 1e-8, Wide, rep_involution),
        d("eq-sortestii", "representations", "Eq. (sortestii)", 1e-6, Wide, sortestii),
        d("remark-simult", "representations", "Remark (simult)", 1e-6, Rep, window_shift_spectra),
        d("orbit-equivalence", "representations", "§4: Op_sigma ~ Op_sigma'", 1e-6, Rep, orbit_equivalence),
        d("remark-covare", "representations", "Remark (covare)", 1e-6, Line, covare),
        d("bargmann-isometry", "bargmann", "Eq. (barr)", 1e-7, Rep, bargmann_isometry),
        d("bargmann-left-inverse", "bargmann", "Eq. (junctu)", 1e-7, Rep, bargmann_left_inverse),
        d("prop-4.2", "bargmann", "Prop. 4.2 / Eq. (ciucu)", 1e-5, Rep, prop_4_2),
        d("eq-amin", "norms", "Prop. 3.1 / Eq. (amin)", 0.05, Rep, eq_amin),
        d("norm-unit", "norms", "Prop. 3.1 / Eq. (amin)", 0.02, Rep, norm_unit),
        d("eq-zukaharu", "norms", "Eq. (zukaharu)", 0.02, Grid, window_independence),
        d("prop-2.2-refinement", "refinement", "Prop. 2.2", 0.25, Grid, prop_2_2_refinement),
        d("prop-4.2-refinement", "refinement", "Prop. 4.2", 0.25, Rep, prop_4_2_refinement),
    ]
}

pub fn find_check(id: &str) -> Result<CheckDef> {
    registry().into_iter().find(|c| c.id == id).ok_or_else(|| LabError::InvalidArgument(format!("unknown check '{id}'")))
}

fn observations(ctx: &Ctx, suite: &str) -> Result<Vec<Observation>> {
    let cfg = &ctx.cfg;
    let mut out = Vec::new();
    match suite {
        "modulation" => {
            let grid = PhaseGrid::new(cfg.grid_n)?;
            let sys = ctx.torus()?;
            let f = mixed_element(&sys)?;
            let mut values = Vec::new();
            for (a, b) in [(0, 0), (0, 1), (1, 1), (0, 2)] {
                let (h, k) = (Window::hermite(&grid, a)?, Window::hermite(&grid, b)?);
                let probes = vec![localized_modulation(&h, &f, cfg.modmap)?, localized_modulation(&k, &f, cfg.modmap)?];
                let adm = admissibility_bound(&h, &k, &probes, cfg.modmap)?;
                values.push((format!("ratio[{a},{b}]"), adm.ratio));
                values.push((format!("embedding[{a},{b}]"), adm.embedding_constant));
            }
            out.push(Observation { id: "prop-2.7".into(), anchor: "Prop. 2.7".into(), values });
        }
        "norms" => {
            let mut values = Vec::new();
            for n in [cfg.rep_n, 2 * cfg.rep_n] {
                for (i, (a, b)) in norm_pairs(ctx, n)?.into_iter().enumerate() {
                    values.push((format!("amin[f{i}] N={n}"), a));
                    values.push((format!("op_sigma[f{i}] N={n}"), b));
                }
            }
            out.push(Observation { id: "eq-amin-convergence".into(), anchor: "Prop. 3.1 / Eq. (amin)".into(), values });
        }
        "refinement" => {
            for (id, levels) in [("prop-2.2", vec![cfg.grid_n / 2, cfg.grid_n]), ("prop-4.2", vec![cfg.rep_n, 2 * cfg.rep_n, 4 * cfg.rep_n])] {
                let t = refinement_table(ctx, id, &levels)?;
                let mut values: Vec<(String, f64)> = t.rows.iter().map(|(n, r)| (format!("N={n}"), *r)).collect();
                values.extend(t.orders.iter().enumerate().map(|(i, o)| (format!("order[{i}]"), *o)));
                out.push(Observation { id: format!("{id}-table"), anchor: find_check(id)?.anchor.to_string(), values });
            }
        }
        _ => {}
    }
    Ok(out)
}

fn evaluate(ctx: &Ctx, def: &CheckDef) -> CheckRecord {
    let cfg = &ctx.cfg;
    let n = def.grid_for(cfg);
    let t0 = Instant::now();
    let out = def.evaluate(ctx, n);
    let runtime = cfg.timing.then(|| t0.elapsed().as_secs_f64());
    let tolerance = cfg.tolerance_for(def.id, def.tolerance);
    let (residual, error) = match out {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let pass = residual.is_some_and(|r| r <= tolerance);
    CheckRecord {
        id: def.id.into(),
        suite: def.suite.into(),
        anchor: def.anchor.into(),
        grid_n: n,
        residual: residual.filter(|r| r.is_finite()),
        tolerance,
        pass,
        error,
        runtime_s: runtime,
    }
}

/// Runs the selected suites; writes the report when a path is configured.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let ctx = Ctx::new(cfg.clone());
    let selected: Vec<String> = SUITES.iter().filter(|s| cfg.suites.iter().any(|x| x == *s)).map(|s| s.to_string()).collect();
    let defs: Vec<CheckDef> = registry().into_iter().filter(|d| selected.iter().any(|s| s == d.suite)).collect();
    let checks: Vec<CheckRecord> = defs.par_iter().map(|d| evaluate(&ctx, d)).collect();
    let obs: Vec<Result<Vec<Observation>>> = selected.par_iter().map(|s| observations(&ctx, s)).collect();
    let mut observations = Vec::new();
    for o in obs {
        observations.extend(o?);
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    let report = SuiteReport {
        schema_version: SCHEMA_VERSION,
        environment: Environment {
            version: env!("CARGO_PKG_VERSION").into(),
            grid_n: cfg.grid_n,
            rep_n: cfg.rep_n,
            wide_n: cfg.wide_n,
            line_n: cfg.line_n,
            torus_m: cfg.torus_m,
            system: cfg.system.clone(),
            window: cfg.window.clone(),
            modmap: cfg.modmap,
            sigma: cfg.sigma,
            seed: cfg.seed,
            probes: cfg.probes,
        },
        suites: selected,
        failed: checks.len() - passed,
        passed,
        checks,
        observations,
    };
    if let Some(p) = &cfg.report {
        report.write(p)?;
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefinementTable {
    pub check: String,
    pub rows: Vec<(usize, f64)>,
    /// Empirical order in N between consecutive levels.
    pub orders: Vec<f64>,
}

impl RefinementTable {
    pub fn monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].1 < w[0].1)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,residual,order\n");
        for (i, (n, r)) in self.rows.iter().enumerate() {
            let o = if i == 0 { String::new() } else { format!("{}", self.orders[i - 1]) };
            let _ = writeln!(s, "{n},{r:e},{o}");
        }
        s
    }
}

fn refinement_table(ctx: &Ctx, check: &str, levels: &[usize]) -> Result<RefinementTable> {
    if levels.len() < 2 {
        return invalid("a refinement study needs at least two levels");
    }
    let mut sorted = levels.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return invalid("refinement levels must be distinct");
    }
    let def = find_check(check)?;
    if matches!(def.level, Level::Fixed(_)) || def.suite == "refinement" {
        return invalid(format!("check '{check}' has no grid parameter"));
    }
    let rows = sorted.iter().map(|&n| Ok((n, def.evaluate(ctx, n)?))).collect::<Result<Vec<_>>>()?;
    let orders = rows.windows(2).map(|w| (w[0].1 / w[1].1).ln() / (w[1].0 as f64 / w[0].0 as f64).ln()).collect();
    Ok(RefinementTable { check: check.into(), rows, orders })
}

/// Residual of a check at each lattice size in `levels`.
pub fn refinement_study(cfg: &SuiteConfig, check: &str, levels: &[usize]) -> Result<RefinementTable> {
    cfg.validate()?;
    refinement_table(&Ctx::new(cfg.clone()), check, levels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> SuiteConfig {
        SuiteConfig { grid_n: 16, rep_n: 8, wide_n: 16, line_n: 16, torus_m: 8, probes: 1, ..SuiteConfig::default() }
    }

    #[test]
    fn config_round_trip() {
        let mut cfg = SuiteConfig::default();
        cfg.tol = Some(1e-3);
        cfg.tolerances.insert("prop-2.2".into(), 2.5e-6);
        cfg.report = Some(PathBuf::from("out.json"));
        cfg.sigma = [0.1, -0.25];
        let text = cfg.to_config_string();
        let back = SuiteConfig::parse(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_config_string(), text);
        assert_eq!(SuiteConfig::parse("").unwrap(), SuiteConfig::default());
        assert!(SuiteConfig::parse("grid_n=32\ngrid_n=16").is_err());
        assert!(SuiteConfig::parse("colour=red").is_err());
        assert!(SuiteConfig::parse("suites=fourier,bogus").is_err());
        assert_eq!(SuiteConfig::parse("# c\n\nsuites=all,fourier").unwrap().suites.len(), SUITES.len());
    }

    #[test]
    fn empty_and_unknown_suites() {
        let cfg = SuiteConfig { suites: vec![], ..quick() };
        let r = run_suite(&cfg).unwrap();
        assert!(r.checks.is_empty() && r.all_passed());
        let bad = SuiteConfig { suites: vec!["nope".into()], ..quick() };
        assert!(matches!(run_suite(&bad), Err(LabError::InvalidArgument(_))));
    }

    #[test]
    fn tolerance_override_forces_failures() {
        let cfg = SuiteConfig { suites: vec!["fourier".into()], tol: Some(0.0), ..quick() };
        let r = run_suite(&cfg).unwrap();
        assert!(!r.checks.is_empty());
        for ch in &r.checks {
            assert_eq!(ch.pass, ch.residual == Some(0.0));
        }
        assert!(!r.all_passed());
    }

    #[test]
    fn refinement_arguments() {
        let cfg = quick();
        assert!(refinement_study(&cfg, "prop-2.2", &[16]).is_err());
        assert!(refinement_study(&cfg, "prop-2.2", &[16, 16]).is_err());
        assert!(refinement_study(&cfg, "crossed-oracle", &[8, 16]).is_err());
        assert!(refinement_study(&cfg, "no-such-check", &[8, 16]).is_err());
        let t = refinement_study(&cfg, "fourier-involution", &[16, 8]).unwrap();
        assert_eq!(t.rows.iter().map(|r| r.0).collect::<Vec<_>>(), vec![8, 16]);
        assert!(t.to_csv().starts_with("n,residual,order\n8,"));
    }

    #[test]
    fn ids_are_unique_and_anchored() {
        let reg = registry();
        for (i, a) in reg.iter().enumerate() {
            assert!(!a.anchor.is_empty());
            assert!(SUITES.contains(&a.suite));
            assert!(reg[i + 1..].iter().all(|b| b.id != a.id), "{}", a.id);
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = SuiteConfig { suites: vec!["fourier".into(), "crossed".into()], ..quick() };
        let a = run_suite(&cfg).unwrap().to_json();
        let b = run_suite(&cfg).unwrap().to_json();
        assert_eq!(a, b);
        assert!(a.contains("\"schema_version\": 1"));
    }
}
