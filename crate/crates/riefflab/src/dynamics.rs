//! Classical data (Σ, Θ): the translation system on Σ = Ξ and the Kronecker
//! flow on the 2-torus, algebra elements with optional character expansions,
//! and smoothness seminorms.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::crossed::Field;
use crate::error::{invalid, LabError, Result};
use crate::phase_space::{PhasePoint, C64};

pub type SigmaPoint = [f64; 2];

pub const DEFAULT_ALPHA: [f64; 2] = [std::f64::consts::SQRT_2 - 1.0, 0.732_050_807_568_877_2];
pub const MAX_SEMINORM_ORDER: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SystemKind {
    Translation,
    Kronecker { alpha: [f64; 2] },
}

/// A space Σ with an action of Ξ and a finite sample set.
#[derive(Clone)]
pub struct DynSystem {
    kind: SystemKind,
    sigma_samples: Arc<Vec<SigmaPoint>>,
    invariant_weight: Option<f64>,
    product_grid: usize,
}

impl fmt::Debug for DynSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DynSystem({}, {} samples)", self.spec(), self.sigma_samples.len())
    }
}

impl PartialEq for DynSystem {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl DynSystem {
    /// Kronecker flow σ ↦ σ + X⊙α mod 1 with a uniform M×M sample lattice.
    pub fn kronecker(alpha: [f64; 2], m: usize) -> Result<Self> {
        if m == 0 {
            return invalid("torus sample lattice needs M ≥ 1");
        }
        if !alpha.iter().all(|a| a.is_finite()) {
            return invalid("Kronecker frequencies must be finite");
        }
        let samples = (0..m)
            .flat_map(|i| (0..m).map(move |j| [i as f64 / m as f64, j as f64 / m as f64]))
            .collect();
        Ok(DynSystem {
            kind: SystemKind::Kronecker { alpha },
            sigma_samples: Arc::new(samples),
            invariant_weight: Some(1.0 / (m * m) as f64),
            product_grid: 32,
        })
    }

    /// Translations σ ↦ σ − X on Σ = Ξ, sampled on a small square patch.
    pub fn translation() -> Self {
        let pts: Vec<SigmaPoint> = (-3..=3)
            .flat_map(|i| (-3..=3).map(move |j| [0.5 * i as f64, 0.5 * j as f64]))
            .collect();
        Self::translation_with_samples(pts).expect("non-empty sample set")
    }

    pub fn translation_with_samples(samples: Vec<SigmaPoint>) -> Result<Self> {
        if samples.is_empty() {
            return invalid("sample set must be non-empty");
        }
        Ok(DynSystem {
            kind: SystemKind::Translation,
            sigma_samples: Arc::new(samples),
            invariant_weight: None,
            product_grid: 32,
        })
    }

    /// Parses "translation" or "kronecker:a1,a2".
    pub fn parse(spec: &str, torus_m: usize) -> Result<Self> {
        let s = spec.trim();
        if s == "translation" {
            return Ok(Self::translation());
        }
        if s == "kronecker" {
            return Self::kronecker(DEFAULT_ALPHA, torus_m);
        }
        if let Some(rest) = s.strip_prefix("kronecker:") {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 2 {
                return invalid(format!("expected kronecker:a1,a2, got {spec:?}"));
            }
            let mut alpha = [0.0; 2];
            for (k, p) in parts.iter().enumerate() {
                alpha[k] = p
                    .trim()
                    .parse()
                    .map_err(|_| LabError::InvalidArgument(format!("bad frequency {p:?}")))?;
            }
            return Self::kronecker(alpha, torus_m);
        }
        invalid(format!("unknown system {spec:?}"))
    }

    pub fn spec(&self) -> String {
        match self.kind {
            SystemKind::Translation => "translation".into(),
            SystemKind::Kronecker { alpha } => format!("kronecker:{},{}", alpha[0], alpha[1]),
        }
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn is_torus(&self) -> bool {
        matches!(self.kind, SystemKind::Kronecker { .. })
    }

    pub fn sigma_samples(&self) -> &[SigmaPoint] {
        &self.sigma_samples
    }

    pub fn invariant_weight(&self) -> Option<f64> {
        self.invariant_weight
    }

    /// Lattice size used for closure-based Rieffel products on the translation system.
    pub fn product_grid(&self) -> usize {
        self.product_grid
    }

    pub fn with_product_grid(mut self, n: usize) -> Self {
        self.product_grid = n;
        self
    }

    /// Θ_X(σ).
    #[inline]
    pub fn act_point(&self, x: PhasePoint, s: SigmaPoint) -> SigmaPoint {
        match self.kind {
            SystemKind::Translation => [s[0] - x.x, s[1] - x.xi],
            SystemKind::Kronecker { alpha } => [
                (s[0] + x.x * alpha[0]).rem_euclid(1.0),
                (s[1] + x.xi * alpha[1]).rem_euclid(1.0),
            ],
        }
    }

    /// Frequency ω of a character: Θ_X χ = e^{iω·X} χ.
    pub fn omega(&self, ch: Character) -> Result<[f64; 2]> {
        match (self.kind, ch) {
            (SystemKind::Kronecker { alpha }, Character::Torus(m)) => {
                Ok([2.0 * PI * m[0] as f64 * alpha[0], 2.0 * PI * m[1] as f64 * alpha[1]])
            }
            (SystemKind::Translation, Character::Plane(k)) => Ok([-k[0], -k[1]]),
            _ => Err(LabError::InvalidArgument(format!(
                "character {ch:?} does not belong to {}",
                self.spec()
            ))),
        }
    }

    pub fn unit_character(&self) -> Character {
        match self.kind {
            SystemKind::Translation => Character::Plane([0.0, 0.0]),
            SystemKind::Kronecker { .. } => Character::Torus([0, 0]),
        }
    }

    pub fn same_as(&self, other: &DynSystem) -> Result<()> {
        if self != other {
            return invalid(format!("mismatched systems {} vs {}", self.spec(), other.spec()));
        }
        Ok(())
    }
}

pub fn act_point(sys: &DynSystem, x: PhasePoint, s: SigmaPoint) -> SigmaPoint {
    sys.act_point(x, s)
}

/// Eigen-characters of the action: torus monomials e^{2πi m·σ} and plane
/// waves e^{ik·σ} on Σ = Ξ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Character {
    Torus([i64; 2]),
    Plane([f64; 2]),
}

impl Character {
    #[inline]
    pub fn eval(&self, s: SigmaPoint) -> C64 {
        match *self {
            Character::Torus(m) => C64::from_polar(1.0, 2.0 * PI * (m[0] as f64 * s[0] + m[1] as f64 * s[1])),
            Character::Plane(k) => C64::from_polar(1.0, k[0] * s[0] + k[1] * s[1]),
        }
    }

    pub fn mul(&self, other: &Character) -> Result<Character> {
        match (*self, *other) {
            (Character::Torus(a), Character::Torus(b)) => Ok(Character::Torus([a[0] + b[0], a[1] + b[1]])),
            (Character::Plane(a), Character::Plane(b)) => Ok(Character::Plane([a[0] + b[0], a[1] + b[1]])),
            _ => invalid("characters from different systems"),
        }
    }

    pub fn inv(&self) -> Character {
        match *self {
            Character::Torus(m) => Character::Torus([-m[0], -m[1]]),
            Character::Plane(k) => Character::Plane([-k[0], -k[1]]),
        }
    }

    pub fn is_unit(&self) -> bool {
        match *self {
            Character::Torus(m) => m == [0, 0],
            Character::Plane(k) => k == [0.0, 0.0],
        }
    }
}

type SigmaFn = dyn Fn(SigmaPoint) -> C64 + Send + Sync;

/// An element of 𝒜∞: an evaluation closure on Σ, optionally with an exact
/// finite character expansion.
#[derive(Clone)]
pub struct AlgebraElement {
    system: DynSystem,
    eval: Arc<SigmaFn>,
    descriptor: Option<Vec<(Character, C64)>>,
}

impl fmt::Debug for AlgebraElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.descriptor {
            Some(d) => write!(f, "AlgebraElement({:?})", d),
            None => write!(f, "AlgebraElement(<closure> on {})", self.system.spec()),
        }
    }
}

impl AlgebraElement {
    pub fn from_fn<F>(system: &DynSystem, f: F) -> Self
    where
        F: Fn(SigmaPoint) -> C64 + Send + Sync + 'static,
    {
        AlgebraElement { system: system.clone(), eval: Arc::new(f), descriptor: None }
    }

    /// Finite character expansion Σ c_j χ_j.
    pub fn from_characters(system: &DynSystem, terms: Vec<(Character, C64)>) -> Result<Self> {
        for (ch, _) in &terms {
            system.omega(*ch)?;
        }
        let mut merged: Vec<(Character, C64)> = Vec::new();
        for (ch, c) in terms {
            match merged.iter_mut().find(|(k, _)| *k == ch) {
                Some(slot) => slot.1 += c,
                None => merged.push((ch, c)),
            }
        }
        let d = merged.clone();
        let eval = move |s: SigmaPoint| d.iter().map(|(ch, c)| c * ch.eval(s)).sum();
        Ok(AlgebraElement { system: system.clone(), eval: Arc::new(eval), descriptor: Some(merged) })
    }

    pub fn constant(system: &DynSystem, c: C64) -> Self {
        Self::from_characters(system, vec![(system.unit_character(), c)]).expect("unit character")
    }

    pub fn one(system: &DynSystem) -> Self {
        Self::constant(system, C64::new(1.0, 0.0))
    }

    pub fn zero(system: &DynSystem) -> Self {
        Self::from_characters(system, vec![]).expect("empty expansion")
    }

    pub fn monomial(system: &DynSystem, m: [i64; 2]) -> Result<Self> {
        Self::from_characters(system, vec![(Character::Torus(m), C64::new(1.0, 0.0))])
    }

    pub fn plane_wave(system: &DynSystem, k: [f64; 2]) -> Result<Self> {
        Self::from_characters(system, vec![(Character::Plane(k), C64::new(1.0, 0.0))])
    }

    pub fn system(&self) -> &DynSystem {
        &self.system
    }

    #[inline]
    pub fn eval(&self, s: SigmaPoint) -> C64 {
        (self.eval)(s)
    }

    pub fn closure(&self) -> Arc<SigmaFn> {
        self.eval.clone()
    }

    pub fn descriptor(&self) -> Option<&[(Character, C64)]> {
        self.descriptor.as_deref()
    }

    pub fn require_descriptor(&self) -> Result<&[(Character, C64)]> {
        self.descriptor().ok_or_else(|| {
            LabError::UnsupportedRepresentation("algebra element has no character expansion".into())
        })
    }

    fn map_descriptor(&self, f: impl Fn(Character, C64) -> (Character, C64)) -> Option<Vec<(Character, C64)>> {
        self.descriptor.as_ref().map(|d| d.iter().map(|(ch, c)| f(*ch, *c)).collect())
    }

    /// f* (pointwise conjugate).
    pub fn conj(&self) -> Self {
        if let Some(d) = self.map_descriptor(|ch, c| (ch.inv(), c.conj())) {
            return Self::from_characters(&self.system, d).expect("same system");
        }
        let e = self.eval.clone();
        Self::from_fn(&self.system, move |s| e(s).conj())
    }

    pub fn scale(&self, a: C64) -> Self {
        if let Some(d) = self.map_descriptor(|ch, c| (ch, a * c)) {
            return Self::from_characters(&self.system, d).expect("same system");
        }
        let e = self.eval.clone();
        Self::from_fn(&self.system, move |s| a * e(s))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.system.same_as(&other.system)?;
        if let (Some(a), Some(b)) = (&self.descriptor, &other.descriptor) {
            let mut t = a.clone();
            t.extend(b.iter().cloned());
            return Self::from_characters(&self.system, t);
        }
        let (a, b) = (self.eval.clone(), other.eval.clone());
        Ok(Self::from_fn(&self.system, move |s| a(s) + b(s)))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Pointwise (commutative) product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.system.same_as(&other.system)?;
        if let (Some(a), Some(b)) = (&self.descriptor, &other.descriptor) {
            let mut t = Vec::new();
            for (ca, xa) in a {
                for (cb, xb) in b {
                    t.push((ca.mul(cb)?, xa * xb));
                }
            }
            return Self::from_characters(&self.system, t);
        }
        let (a, b) = (self.eval.clone(), other.eval.clone());
        Ok(Self::from_fn(&self.system, move |s| a(s) * b(s)))
    }

    /// sup over the system's sample set; torus descriptors are polished by
    /// local ascent from the best samples.
    pub fn sup_norm(&self) -> f64 {
        let samples = self.system.sigma_samples();
        let vals: Vec<f64> = samples.iter().map(|s| self.eval(*s).norm()).collect();
        match &self.descriptor {
            Some(d) if self.system.is_torus() => polished_sup(d, samples, &vals),
            _ => vals.iter().copied().fold(0.0, f64::max),
        }
    }

    /// Largest deviation from another element over the sample set.
    pub fn distance(&self, other: &Self) -> f64 {
        self.system
            .sigma_samples()
            .iter()
            .map(|s| (self.eval(*s) - other.eval(*s)).norm())
            .fold(0.0, f64::max)
    }
}

/// Max of |Σ c e_m| on the torus: the sampled maximum refined by damped
/// Newton ascent from the three best samples.
pub fn polished_sup(coeffs: &[(Character, C64)], samples: &[SigmaPoint], vals: &[f64]) -> f64 {
    let best = vals.iter().copied().fold(0.0, f64::max);
    let modes: Vec<([f64; 2], C64)> = coeffs
        .iter()
        .filter(|(_, c)| *c != C64::new(0.0, 0.0))
        .filter_map(|(ch, c)| match ch {
            Character::Torus(m) => Some(([m[0] as f64, m[1] as f64], *c)),
            Character::Plane(_) => None,
        })
        .collect();
    if modes.len() != coeffs.iter().filter(|(_, c)| *c != C64::new(0.0, 0.0)).count() {
        return best;
    }
    if modes.len() <= 1 {
        return modes.first().map(|(_, c)| c.norm()).unwrap_or(0.0);
    }
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|a, b| vals[*b].partial_cmp(&vals[*a]).unwrap());
    let tau = 2.0 * PI;
    let value = |s: [f64; 2]| -> f64 {
        modes.iter().map(|(m, c)| c * C64::from_polar(1.0, tau * (m[0] * s[0] + m[1] * s[1]))).sum::<C64>().norm_sqr()
    };
    let mut top = best * best;
    for &k in order.iter().take(3) {
        let mut s = samples[k];
        let mut f = value(s);
        for _ in 0..40 {
            let mut p = C64::new(0.0, 0.0);
            let mut d = [C64::new(0.0, 0.0); 2];
            let mut dd = [[C64::new(0.0, 0.0); 2]; 2];
            for (m, c) in &modes {
                let e = c * C64::from_polar(1.0, tau * (m[0] * s[0] + m[1] * s[1]));
                p += e;
                for a in 0..2 {
                    d[a] += e * C64::new(0.0, tau * m[a]);
                    for b in 0..2 {
                        dd[a][b] -= e * tau * tau * m[a] * m[b];
                    }
                }
            }
            let g = [2.0 * (p.conj() * d[0]).re, 2.0 * (p.conj() * d[1]).re];
            let h = |a: usize, b: usize| 2.0 * (d[a].conj() * d[b] + p.conj() * dd[a][b]).re;
            let (h00, h01, h11) = (h(0, 0), h(0, 1), h(1, 1));
            // shift so that H − μ is negative definite
            let tr = 0.5 * (h00 + h11);
            let lmax = tr + (0.25 * (h00 - h11).powi(2) + h01 * h01).sqrt();
            let mu = lmax.max(0.0) + 1e-9 * (h00.abs() + h11.abs()) + 1e-300;
            let (a00, a11) = (h00 - mu, h11 - mu);
            let det = a00 * a11 - h01 * h01;
            let mut step = [-(a11 * g[0] - h01 * g[1]) / det, -(a00 * g[1] - h01 * g[0]) / det];
            let mut moved = false;
            for _ in 0..30 {
                let t = [s[0] + step[0], s[1] + step[1]];
                let ft = value(t);
                if ft > f {
                    s = t;
                    f = ft;
                    moved = true;
                    break;
                }
                step = [step[0] / 2.0, step[1] / 2.0];
            }
            if !moved || step[0].abs() + step[1].abs() < 1e-15 {
                break;
            }
        }
        top = top.max(f);
    }
    top.sqrt()
}

/// [Θ_X f](σ) = f(Θ_X σ).
pub fn act_function(sys: &DynSystem, x: PhasePoint, f: &AlgebraElement) -> Result<AlgebraElement> {
    sys.same_as(f.system())?;
    if let Some(d) = f.descriptor() {
        let mut t = Vec::with_capacity(d.len());
        for (ch, c) in d {
            let w = sys.omega(*ch)?;
            t.push((*ch, c * C64::from_polar(1.0, x.dot(w))));
        }
        return AlgebraElement::from_characters(sys, t);
    }
    let e = f.closure();
    let s2 = sys.clone();
    Ok(AlgebraElement::from_fn(sys, move |s| e(s2.act_point(x, s))))
}

fn stencil(order: usize) -> (&'static [f64], f64) {
    match order {
        0 => (&[1.0], 1.0),
        1 => (&[1.0, -8.0, 0.0, 8.0, -1.0], 12.0),
        2 => (&[-1.0, 16.0, -30.0, 16.0, -1.0], 12.0),
        3 => (&[1.0, -8.0, 13.0, 0.0, -13.0, 8.0, -1.0], 8.0),
        _ => (&[-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0], 6.0),
    }
}

fn fd_step(order: usize) -> f64 {
    if order <= 1 {
        1e-4
    } else {
        f64::EPSILON.powf(1.0 / (order as f64 + 4.0))
    }
}

/// δ^a f at one σ by tensor-product central differences of X ↦ f(Θ_X σ).
pub fn derivation_fd(f: &AlgebraElement, a: [usize; 2], s: SigmaPoint) -> C64 {
    let sys = f.system();
    let (c0, d0) = stencil(a[0]);
    let (c1, d1) = stencil(a[1]);
    let (h0, h1) = (fd_step(a[0]), fd_step(a[1]));
    let (r0, r1) = ((c0.len() / 2) as i64, (c1.len() / 2) as i64);
    let mut acc = C64::new(0.0, 0.0);
    for (p, w0) in c0.iter().enumerate() {
        if *w0 == 0.0 {
            continue;
        }
        for (q, w1) in c1.iter().enumerate() {
            if *w1 == 0.0 {
                continue;
            }
            let x = PhasePoint::new((p as i64 - r0) as f64 * h0, (q as i64 - r1) as f64 * h1);
            acc += f.eval(sys.act_point(x, s)) * (w0 * w1);
        }
    }
    acc / (d0 * h0.powi(a[0] as i32) * d1 * h1.powi(a[1] as i32))
}

fn multi_indices(k: usize) -> Vec<[usize; 2]> {
    (0..=k).flat_map(|t| (0..=t).map(move |a| [a, t - a])).collect()
}

/// |f|^k = Σ_{|a| ≤ k} sup_σ |δ^a f|. Exact derivatives on character
/// expansions, finite differences otherwise.
pub fn smooth_seminorm(f: &AlgebraElement, k: usize) -> Result<f64> {
    if k > MAX_SEMINORM_ORDER {
        return invalid(format!("seminorm order {k} exceeds {MAX_SEMINORM_ORDER}"));
    }
    let sys = f.system();
    let mut total = 0.0;
    for a in multi_indices(k) {
        let v = match f.descriptor() {
            Some(d) => {
                let mut t = Vec::with_capacity(d.len());
                for (ch, c) in d {
                    let w = sys.omega(*ch)?;
                    let fac = (I * w[0]).powu(a[0] as u32) * (I * w[1]).powu(a[1] as u32);
                    t.push((*ch, c * fac));
                }
                AlgebraElement::from_characters(sys, t)?.sup_norm()
            }
            None => sys
                .sigma_samples()
                .iter()
                .map(|s| derivation_fd(f, a, *s).norm())
                .fold(0.0, f64::max),
        };
        total += v;
    }
    Ok(total)
}

/// Same as [`smooth_seminorm`] but always by finite differences.
pub fn smooth_seminorm_fd(f: &AlgebraElement, k: usize) -> Result<f64> {
    if k > MAX_SEMINORM_ORDER {
        return invalid(format!("seminorm order {k} exceeds {MAX_SEMINORM_ORDER}"));
    }
    let sys = f.system();
    Ok(multi_indices(k)
        .into_iter()
        .map(|a| {
            sys.sigma_samples()
                .iter()
                .map(|s| derivation_fd(f, a, *s).norm())
                .fold(0.0, f64::max)
        })
        .sum())
}

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn lattice_derivative(vals: &ndarray::Array2<C64>, axis: usize, order: usize, delta: f64) -> ndarray::Array2<C64> {
    let n = vals.nrows();
    let (c, d) = stencil(order);
    let r = (c.len() / 2) as i64;
    let mut out = ndarray::Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for (p, w) in c.iter().enumerate() {
                let off = p as i64 - r;
                let (ii, jj) = if axis == 0 { (i as i64 + off, j as i64) } else { (i as i64, j as i64 + off) };
                if ii >= 0 && jj >= 0 && (ii as usize) < n && (jj as usize) < n {
                    acc += vals[[ii as usize, jj as usize]] * *w;
                }
            }
            out[[i, j]] = acc / (d * delta.powi(order as i32));
        }
    }
    out
}

/// sup_X (1+|X|)^N |∂^β F(X)|^k with lattice central differences for ∂^β
/// (values outside the box treated as zero).
pub fn field_seminorm(f: &Field, k: usize, beta: [usize; 2], weight_power: u32) -> Result<f64> {
    if beta[0] + beta[1] > 2 {
        return invalid("|β| ≤ 2 supported");
    }
    if weight_power > 4 {
        return invalid("weight power N ≤ 4 supported");
    }
    if k > MAX_SEMINORM_ORDER {
        return invalid(format!("seminorm order {k} exceeds {MAX_SEMINORM_ORDER}"));
    }
    let grid = *f.grid();
    let sys = f.system().clone();
    let terms: Vec<_> = f
        .terms()
        .iter()
        .map(|t| {
            let mut v = t.values.clone();
            if beta[0] > 0 {
                v = lattice_derivative(&v, 0, beta[0], grid.delta);
            }
            if beta[1] > 0 {
                v = lattice_derivative(&v, 1, beta[1], grid.delta);
            }
            (t.ch, t.offset, v)
        })
        .collect();
    let mut best: f64 = 0.0;
    for (ax, bx) in f.absolute_nodes() {
        let x = grid.lattice_point(ax, bx);
        let mut coeffs = Vec::new();
        for (ch, off, v) in &terms {
            if let Some((i, j)) = Field::position_in(&grid, *off, ax, bx) {
                coeffs.push((*ch, v[[i, j]]));
            }
        }
        if coeffs.iter().all(|(_, c)| *c == C64::new(0.0, 0.0)) {
            continue;
        }
        let e = AlgebraElement::from_characters(&sys, coeffs)?;
        let val = (1.0 + x.norm()).powi(weight_power as i32) * smooth_seminorm(&e, k)?;
        best = best.max(val);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn torus_dist(a: SigmaPoint, b: SigmaPoint) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| {
                let d = (x - y).rem_euclid(1.0);
                d.min(1.0 - d)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn act_point_examples() {
        let tr = DynSystem::translation();
        assert_eq!(tr.act_point(PhasePoint::new(1.0, 2.0), [0.0, 0.0]), [-1.0, -2.0]);
        assert_eq!(tr.act_point(PhasePoint::ZERO, [0.3, 0.4]), [0.3, 0.4]);
        let k = DynSystem::kronecker(DEFAULT_ALPHA, 8).unwrap();
        let s = k.act_point(PhasePoint::new(1.0, 0.0), [0.5, 0.5]);
        assert!(torus_dist(s, [(0.5 + 2f64.sqrt() - 1.0).rem_euclid(1.0), 0.5]) < 1e-15);
        assert_eq!(k.act_point(PhasePoint::ZERO, [0.25, 0.75]), [0.25, 0.75]);
    }

    #[test]
    fn group_law() {
        let k = DynSystem::kronecker(DEFAULT_ALPHA, 8).unwrap();
        let (x, y) = (PhasePoint::new(0.7, -1.3), PhasePoint::new(-2.1, 0.4));
        let s = [0.1, 0.9];
        assert!(torus_dist(k.act_point(x, k.act_point(y, s)), k.act_point(x + y, s)) < 1e-14);
    }

    #[test]
    fn parse_systems() {
        assert!(DynSystem::parse("translation", 8).unwrap().kind() == SystemKind::Translation);
        let k = DynSystem::parse("kronecker:0.25,0.5", 8).unwrap();
        assert_eq!(k.kind(), SystemKind::Kronecker { alpha: [0.25, 0.5] });
        assert!(DynSystem::parse("kronecker:1", 8).is_err());
        assert!(DynSystem::parse("bogus", 8).is_err());
    }

    #[test]
    fn act_function_on_monomial() {
        let k = DynSystem::kronecker(DEFAULT_ALPHA, 16).unwrap();
        let f = AlgebraElement::monomial(&k, [1, 2]).unwrap();
        let x = PhasePoint::new(0.3, -0.8);
        let g = act_function(&k, x, &f).unwrap();
        let phase = C64::from_polar(1.0, 2.0 * PI * (DEFAULT_ALPHA[0] * 0.3 + 2.0 * DEFAULT_ALPHA[1] * -0.8));
        for s in k.sigma_samples() {
            assert!((g.eval(*s) - phase * f.eval(*s)).norm() < 1e-14);
        }
        let closure = AlgebraElement::from_fn(&k, move |s| f.eval(s));
        let gc = act_function(&k, x, &closure).unwrap();
        assert!(gc.distance(&g) < 1e-12);
    }

    #[test]
    fn seminorm_examples() {
        let k = DynSystem::kronecker(DEFAULT_ALPHA, 16).unwrap();
        let c = AlgebraElement::constant(&k, C64::new(0.0, 2.5));
        for ord in 0..=4 {
            assert!(close(smooth_seminorm(&c, ord).unwrap(), 2.5, 1e-12));
        }
        let f = AlgebraElement::monomial(&k, [1, 0]).unwrap();
        let v = smooth_seminorm(&f, 1).unwrap();
        assert!(close(v, 1.0 + 2.0 * PI * DEFAULT_ALPHA[0], 1e-12));
        let fc = {
            let f2 = f.clone();
            AlgebraElement::from_fn(&k, move |s| f2.eval(s))
        };
        assert!(close(smooth_seminorm(&fc, 1).unwrap(), v, 1e-6));
        assert!(smooth_seminorm(&f, 5).is_err());
    }

    #[test]
    fn higher_order_fd_against_exact() {
        let k = DynSystem::kronecker(DEFAULT_ALPHA, 8).unwrap();
        let f = AlgebraElement::from_characters(
            &k,
            vec![(Character::Torus([1, 0]), C64::new(0.5, 0.0)), (Character::Torus([0, -1]), C64::new(0.0, 0.3))],
        )
        .unwrap();
        let g = {
            let f2 = f.clone();
            AlgebraElement::from_fn(&k, move |s| f2.eval(s))
        };
        for ord in 0..=3 {
            let a = smooth_seminorm(&f, ord).unwrap();
            let b = smooth_seminorm_fd(&g, ord).unwrap();
            assert!(((a - b) / a).abs() < 1e-3, "order {ord}: {a} vs {b}");
        }
    }

    #[test]
    fn kronecker_invariance_of_haar_sum() {
        let k = DynSystem::kronecker(DEFAULT_ALPHA, 32).unwrap();
        let f = AlgebraElement::from_characters(
            &k,
            vec![
                (Character::Torus([0, 0]), C64::new(0.7, 0.0)),
                (Character::Torus([2, -1]), C64::new(0.1, 0.4)),
            ],
        )
        .unwrap();
        let w = k.invariant_weight().unwrap();
        let avg = |g: &AlgebraElement| -> C64 { k.sigma_samples().iter().map(|s| g.eval(*s)).sum::<C64>() * w };
        let g = act_function(&k, PhasePoint::new(1.7, -0.6), &f).unwrap();
        assert!((avg(&g) - avg(&f)).norm() < 1e-12);
    }

    #[test]
    fn characters_reject_foreign_system() {
        let k = DynSystem::kronecker(DEFAULT_ALPHA, 4).unwrap();
        assert!(AlgebraElement::plane_wave(&k, [1.0, 0.0]).is_err());
        let t = DynSystem::translation();
        assert!(AlgebraElement::monomial(&t, [1, 0]).is_err());
    }
}
