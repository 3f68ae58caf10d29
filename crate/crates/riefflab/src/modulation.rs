//! Global and localized modulation maps, the □ product, comodulation,
//! induced norms, admissibility, orthogonality and intertwining.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crossed::{
    gauge, involution, l1_distance, l1_norm, twisted_product, twisted_product_prime, Field,
};
use crate::dynamics::{AlgebraElement, Character, DynSystem, SigmaPoint, SystemKind};
use crate::error::{invalid, LabError, Result};
use crate::phase_space::{dual_point, kappa, symplectic_fourier, PhaseGrid, PhasePoint, Symbol, C64};
use crate::weyl::{gaussian_window, moyal};

/// Which global modulation map is in use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModMap {
    /// M = 𝔉∘C₁, paired with ◇.
    #[default]
    M,
    /// M′ = C_{1/2}∘𝔉∘C₁, paired with ◇′.
    Mprime,
}

impl FromStr for ModMap {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "M" => Ok(ModMap::M),
            "Mprime" | "M'" => Ok(ModMap::Mprime),
            other => invalid(format!("unknown modulation map '{other}' (expected M or Mprime)")),
        }
    }
}

impl fmt::Display for ModMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModMap::M => "M",
            ModMap::Mprime => "Mprime",
        })
    }
}

impl ModMap {
    pub fn forward(&self, f: &Field) -> Result<Field> {
        let g = symplectic_fourier(&gauge(1.0, f))?;
        Ok(match self {
            ModMap::M => g,
            ModMap::Mprime => gauge(0.5, &g),
        })
    }

    pub fn inverse(&self, g: &Field) -> Result<Field> {
        let g = match self {
            ModMap::M => g.clone(),
            ModMap::Mprime => gauge(-0.5, g),
        };
        Ok(gauge(-1.0, &symplectic_fourier(&g)?))
    }

    /// The product on the target side.
    pub fn product(&self, a: &Field, b: &Field) -> Result<Field> {
        match self {
            ModMap::M => twisted_product(a, b),
            ModMap::Mprime => twisted_product_prime(a, b),
        }
    }

    /// The involution on the target side.
    pub fn involution(&self, g: &Field) -> Field {
        match self {
            ModMap::M => involution(g),
            ModMap::Mprime => gauge(1.0, &involution(g)),
        }
    }
}

pub fn global_modulation(f: &Field) -> Result<Field> {
    ModMap::M.forward(f)
}

pub fn global_modulation_inverse(g: &Field) -> Result<Field> {
    ModMap::M.inverse(g)
}

/// A window h on Ξ with its idempotency diagnostics.
#[derive(Clone)]
pub struct Window {
    pub symbol: Symbol,
    pub idempotency_residual: f64,
    pub self_adjoint: bool,
    pub label: String,
}

impl fmt::Debug for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Window({}, h♯h−h={:.2e}, self_adjoint={})", self.label, self.idempotency_residual, self.self_adjoint)
    }
}

impl Window {
    pub fn new(symbol: Symbol, label: impl Into<String>) -> Result<Self> {
        let hh = moyal(&symbol, &symbol)?;
        let idempotency_residual = hh.sup_distance(&symbol);
        let self_adjoint = symbol.samples().iter().all(|v| v.im == 0.0);
        Ok(Window { symbol, idempotency_residual, self_adjoint, label: label.into() })
    }

    /// h(v_k) for the Hermite function v_k.
    pub fn hermite(grid: &PhaseGrid, k: usize) -> Result<Self> {
        Self::new(gaussian_window(grid, k)?, if k == 0 { "gaussian".to_string() } else { format!("hermite:{k}") })
    }

    /// `gaussian` or `hermite:k`.
    pub fn parse(grid: &PhaseGrid, spec: &str) -> Result<Self> {
        match spec {
            "gaussian" => Self::hermite(grid, 0),
            s => match s.strip_prefix("hermite:").map(str::parse::<usize>) {
                Some(Ok(k)) => Self::hermite(grid, k),
                _ => invalid(format!("unknown window '{spec}' (expected gaussian or hermite:k)")),
            },
        }
    }

    pub fn is_idempotent(&self) -> bool {
        self.self_adjoint && self.idempotency_residual <= 1e-6
    }

    pub fn grid(&self) -> &PhaseGrid {
        self.symbol.grid()
    }

    /// ‖h‖²_Ξ on the lattice.
    pub fn norm_sqr(&self) -> f64 {
        self.symbol.inner(&self.symbol).re
    }

    fn require_nonzero(&self) -> Result<()> {
        if self.symbol.sup_norm() == 0.0 {
            return invalid("window is identically zero");
        }
        Ok(())
    }
}

/// e_c # e_{c'} = κ(J⁻¹ω, J⁻¹ω′) e_{cc'}.
pub fn character_phase(system: &DynSystem, a: Character, b: Character) -> Result<C64> {
    let pa = dual_point(system.omega(a)?);
    let pb = dual_point(system.omega(b)?);
    Ok(kappa(pa, pb))
}

/// The Rieffel product f # g.
pub fn rieffel_product(f: &AlgebraElement, g: &AlgebraElement) -> Result<AlgebraElement> {
    f.system().same_as(g.system())?;
    let sys = f.system().clone();
    if let (Some(a), Some(b)) = (f.descriptor(), g.descriptor()) {
        let mut terms = Vec::with_capacity(a.len() * b.len());
        for (ca, xa) in a {
            for (cb, xb) in b {
                terms.push((ca.mul(cb)?, xa * xb * character_phase(&sys, *ca, *cb)?));
            }
        }
        return AlgebraElement::from_characters(&sys, terms);
    }
    match sys.kind() {
        SystemKind::Translation => {
            // on Σ = Ξ the product is ♯ itself
            let grid = PhaseGrid::new(sys.product_grid())?;
            let (fc, gc) = (f.closure(), g.closure());
            let fs = Symbol::new(grid, move |p| fc([p.x, p.xi]));
            let gs = Symbol::new(grid, move |p| gc([p.x, p.xi]));
            let r = moyal(&fs, &gs)?;
            Ok(AlgebraElement::from_fn(&sys, move |s| r.eval(PhasePoint::new(s[0], s[1]))))
        }
        SystemKind::Kronecker { .. } => Err(LabError::UnsupportedRepresentation(
            "Kronecker products need trigonometric-polynomial descriptors".into(),
        )),
    }
}

/// Regulators used by [`rieffel_phase_oracle`].
pub const ORACLE_REGULATORS: [f64; 3] = [0.002, 0.001, 0.0005];

/// Phase of e_a # e_b from the Gaussian-regularized oscillatory integral
/// 4∫∫đYđZ e^{2i[[Y,Z]]−ε(|Y|²+|Z|²)} Θ_Y(e_a) Θ_Z(e_b), extrapolated to ε → 0.
/// The Z-integral is Gaussian and done in closed form; Y by 2D quadrature.
pub fn rieffel_phase_oracle(system: &DynSystem, a: Character, b: Character) -> Result<(C64, [C64; 3])> {
    let w = system.omega(a)?;
    let wp = system.omega(b)?;
    let mut vals = [C64::new(0.0, 0.0); 3];
    for (slot, &eps) in vals.iter_mut().zip(ORACLE_REGULATORS.iter()) {
        // the Z-integral concentrates Y near (ω′₂/2, −ω′₁/2) with width √(ε/2)
        let center = [wp[1] / 2.0, -wp[0] / 2.0];
        let width = (eps / 2.0).sqrt();
        let step = width / 8.0;
        let k = 12 * 8;
        let pref = 4.0 / (2.0 * PI) * (1.0 / (2.0 * eps)) * step * step;
        let s: C64 = (-k..=k)
            .into_par_iter()
            .map(|i| {
                let y1 = center[0] + i as f64 * step;
                let mut acc = C64::new(0.0, 0.0);
                for j in -k..=k {
                    let y2 = center[1] + j as f64 * step;
                    let u = [y2 + wp[0] / 2.0, -y1 + wp[1] / 2.0];
                    let re = -eps * (y1 * y1 + y2 * y2) - (u[0] * u[0] + u[1] * u[1]) / eps;
                    acc += C64::from_polar(re.exp(), w[0] * y1 + w[1] * y2);
                }
                acc
            })
            .collect::<Vec<C64>>()
            .into_iter()
            .sum();
        *slot = s * pref;
    }
    // quadratic extrapolation to ε = 0
    let e = ORACLE_REGULATORS;
    let l = |i: usize, j: usize, k: usize| e[j] * e[k] / ((e[i] - e[j]) * (e[i] - e[k]));
    let limit = vals[0] * l(0, 1, 2) + vals[1] * l(1, 0, 2) + vals[2] * l(2, 0, 1);
    Ok((limit, vals))
}

fn require_decomposable(f: &Field) -> Result<&[(Symbol, AlgebraElement)]> {
    f.decomposable_form().ok_or_else(|| {
        LabError::UnsupportedRepresentation("□ needs fields given as sums of h ⊗ f".into())
    })
}

/// (h⊗f)□(k⊗g) = (k♯h)⊗(f#g), extended bilinearly.
pub fn square_product(f1: &Field, f2: &Field) -> Result<Field> {
    let a = require_decomposable(f1)?;
    let b = require_decomposable(f2)?;
    if f1.grid() != f2.grid() {
        return invalid("fields live on different grids");
    }
    f1.system().same_as(f2.system())?;
    let mut pairs = Vec::with_capacity(a.len() * b.len());
    for (h, f) in a {
        for (k, g) in b {
            pairs.push((moyal(k, h)?, rieffel_product(f, g)?));
        }
    }
    Field::decomposable(*f1.grid(), f1.system(), pairs)
}

/// F^□(X) = F(X)*.
pub fn square_involution(f: &Field) -> Result<Field> {
    let a = require_decomposable(f)?;
    let pairs = a.iter().map(|(h, g)| (h.conj(), g.conj())).collect();
    Field::decomposable(*f.grid(), f.system(), pairs)
}

/// Direct quadrature of (F₁□F₂)(X) = 4∫∫đAđB e^{−2i[[A,B]]} h(X−A) k(X−B) for scalar
/// symbols (trivial action). The B-integral is a symplectic Fourier transform of k at
/// −2A, tabulated once; A is then summed per node.
pub fn square_product_oracle(h: &Symbol, k: &Symbol, nodes: &[PhasePoint], range: f64, step: f64) -> Vec<C64> {
    let m = (range / step).ceil() as i64;
    let pts: Vec<f64> = (-m..=m).map(|i| i as f64 * step).collect();
    let dm = step * step / (2.0 * PI);
    let kc = k.closure();
    let ks: Vec<(PhasePoint, C64)> = pts
        .iter()
        .flat_map(|&a| pts.iter().map(move |&b| PhasePoint::new(a, b)))
        .map(|p| (p, kc(p)))
        .filter(|(_, v)| v.norm() > 1e-300)
        .collect();
    let grid_a: Vec<PhasePoint> = pts.iter().flat_map(|&a| pts.iter().map(move |&b| PhasePoint::new(a, b))).collect();
    // K̂(A) = ∫đB e^{2i[[A,B]]} k(B)
    let khat: Vec<C64> = grid_a
        .par_iter()
        .map(|a| ks.iter().map(|(b, v)| C64::from_polar(1.0, 2.0 * a.symp(*b)) * v).sum::<C64>() * dm)
        .collect();
    let hc = h.closure();
    nodes
        .par_iter()
        .map(|x| {
            let mut acc = C64::new(0.0, 0.0);
            for (a, kh) in grid_a.iter().zip(&khat) {
                acc += C64::from_polar(1.0, -2.0 * a.symp(*x)) * hc(*x - *a) * kh;
            }
            acc * 4.0 * dm
        })
        .collect()
}

/// ‖M(F₁□F₂) − M(F₁)◇M(F₂)‖₁.
pub fn homomorphism_residual(f1: &Field, f2: &Field, map: ModMap) -> Result<f64> {
    let lhs = map.forward(&square_product(f1, f2)?)?;
    let rhs = map.product(&map.forward(f1)?, &map.forward(f2)?)?;
    l1_distance(&lhs, &rhs)
}

/// ‖M(F^□) − M(F)^◇‖₁.
pub fn involution_residual(f: &Field, map: ModMap) -> Result<f64> {
    let lhs = map.forward(&square_involution(f)?)?;
    let rhs = map.involution(&map.forward(f)?);
    l1_distance(&lhs, &rhs)
}

/// M_h(f) = M(h⊗f).
pub fn localized_modulation(h: &Window, f: &AlgebraElement, map: ModMap) -> Result<Field> {
    h.require_nonzero()?;
    map.forward(&Field::tensor(&h.symbol, f)?)
}

/// The factorized form M_h(f) = 𝔉[h·Θ_•(f)] for M.
pub fn localized_modulation_factorized(h: &Window, f: &AlgebraElement) -> Result<Field> {
    h.require_nonzero()?;
    let grid = *h.grid();
    let d = f.require_descriptor()?;
    let sys = f.system();
    let hs = h.symbol.samples();
    let mut terms = Vec::with_capacity(d.len());
    for (ch, c) in d {
        let w = sys.omega(*ch)?;
        let v = Array2::from_shape_fn((grid.points, grid.points), |(i, j)| {
            hs[[i, j]] * c * C64::from_polar(1.0, grid.node(i, j).dot(w))
        });
        terms.push((*ch, (0, 0), v));
    }
    symplectic_fourier(&Field::from_terms(grid, sys, terms)?)
}

/// M̃_h(G) = ∫đY conj(h(Y)) [M⁻¹G](Y).
pub fn comodulation(h: &Window, g: &Field, map: ModMap) -> Result<AlgebraElement> {
    h.require_nonzero()?;
    let inv = map.inverse(g)?;
    let grid = *inv.grid();
    let hc = h.symbol.closure();
    let mut coeffs: Vec<(Character, C64)> = Vec::new();
    for t in inv.terms() {
        let mut acc = C64::new(0.0, 0.0);
        for ((i, j), v) in t.values.indexed_iter() {
            if *v != C64::new(0.0, 0.0) {
                acc += hc(grid.node_at(i, j, t.offset)).conj() * v;
            }
        }
        coeffs.push((t.ch, acc * grid.measure_weight));
    }
    AlgebraElement::from_characters(inv.system(), coeffs)
}

/// Base norm for induced modulation norms.
#[derive(Clone, Debug)]
pub enum BaseNorm {
    L1,
    /// sup over the given orbits of ‖(r⋊T)_σ(·)‖.
    RepOperator { sigmas: Vec<SigmaPoint> },
}

#[derive(Clone, Debug)]
pub struct ModulationNorm {
    pub base: BaseNorm,
    pub window: Window,
    pub map: ModMap,
}

/// ‖f‖^M_h = ‖M_h(f)‖_base.
pub fn modulation_norm(nm: &ModulationNorm, f: &AlgebraElement) -> Result<f64> {
    let g = localized_modulation(&nm.window, f, nm.map)?;
    match &nm.base {
        BaseNorm::L1 => Ok(l1_norm(&g)),
        BaseNorm::RepOperator { sigmas } => {
            let mut best: f64 = 0.0;
            for s in sigmas {
                best = best.max(crate::reps::rep_crossed_norm(&g, *s)?);
            }
            Ok(best)
        }
    }
}

/// R_{k,h} = M_k∘M̃_h.
pub fn admissibility_operator(h: &Window, k: &Window, f: &Field, map: ModMap) -> Result<Field> {
    localized_modulation(k, &comodulation(h, f, map)?, map)
}

#[derive(Clone, Debug, Serialize)]
pub struct Admissibility {
    /// max over probes of ‖R_{k,h}F‖₁/‖F‖₁.
    pub ratio: f64,
    /// ratio/‖h‖²_Ξ.
    pub embedding_constant: f64,
}

pub fn admissibility_bound(h: &Window, k: &Window, probes: &[Field], map: ModMap) -> Result<Admissibility> {
    if probes.is_empty() {
        return invalid("admissibility needs at least one probe");
    }
    let mut ratio: f64 = 0.0;
    for p in probes {
        let n = l1_norm(p);
        if n == 0.0 {
            return invalid("zero probe in admissibility battery");
        }
        ratio = ratio.max(l1_norm(&admissibility_operator(h, k, p, map)?) / n);
    }
    Ok(Admissibility { ratio, embedding_constant: ratio / h.norm_sqr() })
}

/// |⟨MF, MG⟩ − ⟨F, G⟩| over Ξ × Σ.
pub fn orthogonality_residual(f: &Field, g: &Field, map: ModMap) -> Result<f64> {
    if f.system().invariant_weight().is_none() {
        return Err(LabError::Unsupported("orthogonality needs a finite invariant measure on Σ".into()));
    }
    let lhs = map.forward(f)?.inner(&map.forward(g)?)?;
    let rhs = f.inner(g)?;
    Ok((lhs - rhs).norm())
}

/// Orbit pullback 𝓡f(W) = f(Θ_{−W}σ) of a torus element to the translation
/// system; on monomials e_m ↦ e_m(σ)·e^{−iω·W}.
pub fn orbit_pullback(f: &AlgebraElement, sigma: SigmaPoint, target: &DynSystem) -> Result<AlgebraElement> {
    let d = f.require_descriptor()?;
    let sys = f.system();
    let mut terms = Vec::with_capacity(d.len());
    for (ch, c) in d {
        let w = sys.omega(*ch)?;
        terms.push((Character::Plane([-w[0], -w[1]]), c * ch.eval(sigma)));
    }
    AlgebraElement::from_characters(target, terms)
}

/// 𝓡 applied pointwise to a field.
pub fn field_pullback(g: &Field, sigma: SigmaPoint, target: &DynSystem) -> Result<Field> {
    let sys = g.system();
    let mut terms = Vec::with_capacity(g.terms().len());
    for t in g.terms() {
        let w = sys.omega(t.ch)?;
        let c = t.ch.eval(sigma);
        terms.push((Character::Plane([-w[0], -w[1]]), t.offset, t.values.mapv(|v| v * c)));
    }
    Field::from_terms(*g.grid(), target, terms)
}

/// ‖𝓡^⋊(M¹_h f) − M²_h(𝓡f)‖₁ with M¹ on the Kronecker system and M² on translations.
pub fn intertwining_residual(h: &Window, f: &AlgebraElement, sigma: SigmaPoint, map: ModMap) -> Result<f64> {
    if !f.system().is_torus() {
        return invalid("intertwining starts from a torus element");
    }
    let target = DynSystem::translation();
    let lhs = field_pullback(&localized_modulation(h, f, map)?, sigma, &target)?;
    let rhs = localized_modulation(h, &orbit_pullback(f, sigma, &target)?, map)?;
    l1_distance(&lhs, &rhs)
}
