//! Hilbert-space realizations on L²(Ξ) and L²(𝒳): covariant representations,
//! r⋊T, modulated and Schrödinger-type representations, Bargmann transforms.

use std::f64::consts::PI;
use std::fmt;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::crossed::Field;
use crate::dynamics::{AlgebraElement, Character, DynSystem, SigmaPoint};
use crate::error::{invalid, Result};
use crate::modulation::{localized_modulation, ModMap, Window};
use crate::phase_space::{PhaseGrid, PhasePoint, Symbol, C64};
use crate::weyl::{apply_heisenberg, weyl_quantize, Domain, OperatorMatrix, WaveFunction};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Reduces centered indices into the box with the magnetic twist
/// Φ(x ± 2L, ξ) = (−1)^{k_ξ}Φ, Φ(x, ξ ± 2L) = (−1)^{k_x}Φ. Returns the array
/// position and the accumulated sign.
#[inline]
fn twisted_wrap(n: i64, k0: i64, k1: i64) -> (usize, f64) {
    let h = n / 2;
    let w0 = (k0 + h).div_euclid(n);
    let r0 = k0 - w0 * n;
    let w1 = (k1 + h).div_euclid(n);
    let r1 = k1 - w1 * n;
    let odd = (w0 * k1 + w1 * r0).rem_euclid(2) == 1;
    (((r0 + h) * n + (r1 + h)) as usize, if odd { -1.0 } else { 1.0 })
}

/// A phase-permutation operator (SΦ)(Z) = phase[Z]·Φ[target[Z]] on one L²(Ξ) block.
#[derive(Clone, Debug)]
pub struct ShiftOp {
    pub target: Vec<usize>,
    pub phase: Vec<C64>,
}

impl ShiftOp {
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        self.target.iter().zip(&self.phase).map(|(t, p)| p * v[*t]).collect()
    }

    /// self ∘ other.
    pub fn compose(&self, other: &ShiftOp) -> ShiftOp {
        let target = self.target.iter().map(|t| other.target[*t]).collect();
        let phase = self.target.iter().zip(&self.phase).map(|(t, p)| p * other.phase[*t]).collect();
        ShiftOp { target, phase }
    }

    pub fn distance(&self, other: &ShiftOp) -> f64 {
        let mut d: f64 = 0.0;
        for z in 0..self.target.len() {
            if self.target[z] != other.target[z] {
                d = d.max(self.phase[z].norm().max(other.phase[z].norm()));
            } else {
                d = d.max((self.phase[z] - other.phase[z]).norm());
            }
        }
        d
    }

    pub fn to_matrix(&self) -> Array2<C64> {
        let n = self.target.len();
        let mut m = Array2::zeros((n, n));
        for z in 0..n {
            m[[z, self.target[z]]] = self.phase[z];
        }
        m
    }
}

/// [T(Y)Φ](X) = κ(Y,X) Φ(X+Y) on the twisted-periodic lattice box.
pub fn shift_operator(grid: &PhaseGrid, y: (i64, i64)) -> ShiftOp {
    let n = grid.points as i64;
    let h = grid.half();
    let table = grid.half_phase_table();
    let m2 = 2 * n;
    let mut target = Vec::with_capacity((n * n) as usize);
    let mut phase = Vec::with_capacity((n * n) as usize);
    for p in 0..n {
        for q in 0..n {
            let (z0, z1) = (p - h, q - h);
            let (t, s) = twisted_wrap(n, z0 + y.0, z1 + y.1);
            // [[Y,Z]] = z0·y1 − y0·z1 in lattice units
            let k = (z0 * y.1 - y.0 * z1).rem_euclid(m2) as usize;
            target.push(t);
            phase.push(table[k] * s);
        }
    }
    ShiftOp { target, phase }
}

/// Residuals recorded when a covariant representation is built.
#[derive(Clone, Copy, Debug, Default)]
pub struct RepCertificate {
    /// max ‖T(X)T(Y) − κ(Y,X)T(X+Y)‖ over sampled lattice pairs.
    pub projective: f64,
    /// max |T(Y)r(g)T(−Y) − r(Θ_Y g)| on nodes where Z+Y does not wrap.
    pub covariance: f64,
}

/// A covariant representation (r, T) on L²(Ξ)⊗ℂ^d, one block per orbit
/// point σ_s, optionally expressed in a rotated basis of ℂ^d.
#[derive(Clone)]
pub struct CovariantRep {
    grid: PhaseGrid,
    system: DynSystem,
    sigmas: Vec<SigmaPoint>,
    basis: Option<Array2<C64>>,
    certificate: RepCertificate,
}

impl fmt::Debug for CovariantRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CovariantRep({}, {} orbit(s), dim {})", self.grid, self.sigmas.len(), self.hilbert_dim())
    }
}

pub fn concrete_covariant(grid: &PhaseGrid, system: &DynSystem, sigma: SigmaPoint) -> Result<CovariantRep> {
    induced_covariant(grid, system, &[sigma], None)
}

/// The representation induced from ρ = ⊕_s ρ_{σ_s}; `basis` is a unitary
/// change of basis on ℂ^d.
pub fn induced_covariant(
    grid: &PhaseGrid,
    system: &DynSystem,
    sigmas: &[SigmaPoint],
    basis: Option<Array2<C64>>,
) -> Result<CovariantRep> {
    if sigmas.is_empty() {
        return invalid("induced representation needs at least one evaluation point");
    }
    if let Some(b) = &basis {
        let d = sigmas.len();
        if b.dim() != (d, d) {
            return invalid("basis change must be d×d");
        }
        let bb = b.t().mapv(|v| v.conj()).dot(b);
        let dev = (&bb - &Array2::<C64>::eye(d)).iter().map(|v| v.norm()).fold(0.0, f64::max);
        if dev > 1e-10 {
            return invalid("basis change is not unitary");
        }
    }
    let mut rep = CovariantRep {
        grid: *grid,
        system: system.clone(),
        sigmas: sigmas.to_vec(),
        basis,
        certificate: RepCertificate::default(),
    };
    rep.certificate = rep.certify(7)?;
    Ok(rep)
}

impl CovariantRep {
    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn system(&self) -> &DynSystem {
        &self.system
    }

    pub fn sigmas(&self) -> &[SigmaPoint] {
        &self.sigmas
    }

    pub fn certificate(&self) -> RepCertificate {
        self.certificate
    }

    pub fn hilbert_dim(&self) -> usize {
        self.grid.points * self.grid.points * self.sigmas.len()
    }

    fn block_dim(&self) -> usize {
        self.grid.points * self.grid.points
    }

    /// Assembles a block-diagonal operator and rotates it into the chosen basis.
    fn assemble(&self, blocks: Vec<Array2<C64>>) -> OperatorMatrix {
        let b = self.block_dim();
        let d = self.sigmas.len();
        let mut m = Array2::zeros((b * d, b * d));
        match &self.basis {
            None => {
                for (s, blk) in blocks.iter().enumerate() {
                    m.slice_mut(ndarray::s![s * b..(s + 1) * b, s * b..(s + 1) * b]).assign(blk);
                }
            }
            Some(w) => {
                for s in 0..d {
                    for t in 0..d {
                        let mut acc = Array2::<C64>::zeros((b, b));
                        for (a, blk) in blocks.iter().enumerate() {
                            let c = w[[s, a]] * w[[t, a]].conj();
                            if c != ZERO {
                                acc.scaled_add(c, blk);
                            }
                        }
                        m.slice_mut(ndarray::s![s * b..(s + 1) * b, t * b..(t + 1) * b]).assign(&acc);
                    }
                }
            }
        }
        OperatorMatrix::new(m, Domain::L2Xi)
    }

    /// Diagonal of r_σ(g): Z ↦ g(Θ_Z σ).
    pub fn r_diagonal(&self, g: &AlgebraElement, sigma: SigmaPoint) -> Vec<C64> {
        let n = self.grid.points;
        (0..n * n)
            .map(|k| g.eval(self.system.act_point(self.grid.node(k / n, k % n), sigma)))
            .collect()
    }

    pub fn r(&self, g: &AlgebraElement) -> Result<OperatorMatrix> {
        self.system.same_as(g.system())?;
        let blocks = self.sigmas.iter().map(|s| Array2::from_diag(&Array1::from(self.r_diagonal(g, *s)))).collect();
        Ok(self.assemble(blocks))
    }

    pub fn t(&self, y: (i64, i64)) -> OperatorMatrix {
        let blk = shift_operator(&self.grid, y).to_matrix();
        self.assemble(vec![blk; self.sigmas.len()])
    }

    pub fn t_point(&self, y: PhasePoint) -> Result<OperatorMatrix> {
        match self.grid.lattice_index(y) {
            Some(k) => Ok(self.t(k)),
            None => invalid(format!("{y:?} is not a lattice point")),
        }
    }

    fn certify(&self, count: usize) -> Result<RepCertificate> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let n = self.grid.points as i64;
        let h = self.grid.half();
        let g = match self.system.unit_character() {
            Character::Torus(_) => AlgebraElement::from_characters(
                &self.system,
                vec![(Character::Torus([1, 0]), C64::new(1.0, 0.0)), (Character::Torus([0, 1]), C64::new(0.5, 0.2))],
            )?,
            Character::Plane(_) => AlgebraElement::plane_wave(&self.system, [0.7, -0.4])?,
        };
        let mut cert = RepCertificate::default();
        for _ in 0..count {
            let x = (rng.random_range(-n..n), rng.random_range(-n..n));
            let y = (rng.random_range(-h..h), rng.random_range(-h..h));
            let tx = shift_operator(&self.grid, x);
            let ty = shift_operator(&self.grid, y);
            let mut txy = shift_operator(&self.grid, (x.0 + y.0, x.1 + y.1));
            let k = crate::phase_space::kappa(self.grid.lattice_point(y.0, y.1), self.grid.lattice_point(x.0, x.1));
            txy.phase.iter_mut().for_each(|p| *p *= k);
            cert.projective = cert.projective.max(tx.compose(&ty).distance(&txy));
            let yp = self.grid.lattice_point(y.0, y.1);
            let shifted = crate::dynamics::act_function(&self.system, yp, &g)?;
            for s in &self.sigmas {
                let d = self.r_diagonal(&g, *s);
                let dy = self.r_diagonal(&shifted, *s);
                for p in 0..n {
                    for q in 0..n {
                        let (z0, z1) = (p - h + y.0, q - h + y.1);
                        if z0 < -h || z0 >= h || z1 < -h || z1 >= h {
                            continue;
                        }
                        let z = (p * n + q) as usize;
                        cert.covariance = cert.covariance.max((d[ty.target[z]] - dy[z]).norm());
                    }
                }
            }
        }
        Ok(cert)
    }
}

/// r⋊T applied without forming a matrix, for large grids.
pub struct CrossedOperator {
    n: i64,
    blocks: Vec<Vec<BlockTerm>>,
}

struct BlockTerm {
    x: (i64, i64),
    /// (1/N)·G_c(X)e^{iω·X/2} times the per-Z factor χ_c(Θ_Z σ)
    row_scale: Vec<C64>,
}

impl CrossedOperator {
    pub fn new(cr: &CovariantRep, g: &Field) -> Result<Self> {
        if cr.basis.is_some() {
            return invalid("matrix-free application works in the evaluation basis");
        }
        if cr.grid != *g.grid() {
            return invalid("field and representation live on different grids");
        }
        cr.system.same_as(g.system())?;
        let grid = cr.grid;
        let n = grid.points;
        let w = grid.measure_weight;
        let peak = g.terms().iter().flat_map(|t| t.values.iter()).map(|v| v.norm()).fold(0.0, f64::max);
        let mut blocks = Vec::with_capacity(cr.sigmas.len());
        for s in &cr.sigmas {
            let mut terms = Vec::new();
            for t in g.terms() {
                let chi: Vec<C64> = (0..n * n)
                    .map(|k| t.ch.eval(cr.system.act_point(grid.node(k / n, k % n), *s)))
                    .collect();
                for ((i, j), v) in t.values.indexed_iter() {
                    if v.norm() <= 1e-17 * peak {
                        continue;
                    }
                    let xp = grid.node_at(i, j, t.offset);
                    let c = v * C64::from_polar(w, xp.dot(t.omega) / 2.0);
                    let h = grid.half();
                    let x = (i as i64 - h + t.offset.0, j as i64 - h + t.offset.1);
                    terms.push(BlockTerm { x, row_scale: chi.iter().map(|e| e * c).collect() });
                }
            }
            blocks.push(terms);
        }
        Ok(CrossedOperator { n: n as i64, blocks })
    }

    fn block_apply(&self, terms: &[BlockTerm], grid: &PhaseGrid, phi: &[C64]) -> Vec<C64> {
        let n = self.n;
        let h = n / 2;
        let table = grid.half_phase_table();
        let m2 = 2 * n;
        (0..(n * n) as usize)
            .into_par_iter()
            .map(|z| {
                let (z0, z1) = (z as i64 / n - h, z as i64 % n - h);
                let mut acc = ZERO;
                for bt in terms {
                    let (tg, s) = twisted_wrap(n, z0 + bt.x.0, z1 + bt.x.1);
                    let k = (z0 * bt.x.1 - bt.x.0 * z1).rem_euclid(m2) as usize;
                    acc += bt.row_scale[z] * table[k] * s * phi[tg];
                }
                acc
            })
            .collect()
    }

    pub fn apply(&self, grid: &PhaseGrid, phi: &[C64]) -> Vec<C64> {
        let b = (self.n * self.n) as usize;
        let mut out = Vec::with_capacity(phi.len());
        for (s, terms) in self.blocks.iter().enumerate() {
            out.extend(self.block_apply(terms, grid, &phi[s * b..(s + 1) * b]));
        }
        out
    }

    /// Applies the adjoint (r⋊T)(G)*.
    pub fn apply_adjoint(&self, grid: &PhaseGrid, phi: &[C64]) -> Vec<C64> {
        let n = self.n;
        let h = n / 2;
        let b = (n * n) as usize;
        let table = grid.half_phase_table();
        let m2 = 2 * n;
        let mut out = vec![ZERO; phi.len()];
        for (s, terms) in self.blocks.iter().enumerate() {
            let (src, dst) = (&phi[s * b..(s + 1) * b], &mut out[s * b..(s + 1) * b]);
            for bt in terms {
                for (z, v) in src.iter().enumerate() {
                    let (z0, z1) = (z as i64 / n - h, z as i64 % n - h);
                    let (tg, sg) = twisted_wrap(n, z0 + bt.x.0, z1 + bt.x.1);
                    let k = (z0 * bt.x.1 - bt.x.0 * z1).rem_euclid(m2) as usize;
                    dst[tg] += (bt.row_scale[z] * table[k] * sg).conj() * v;
                }
            }
        }
        out
    }

    /// Dense matrix of one block.
    fn block_matrix(&self, terms: &[BlockTerm], grid: &PhaseGrid) -> Array2<C64> {
        let n = self.n;
        let h = n / 2;
        let b = (n * n) as usize;
        let table = grid.half_phase_table();
        let m2 = 2 * n;
        let rows: Vec<Vec<C64>> = (0..b)
            .into_par_iter()
            .map(|z| {
                let (z0, z1) = (z as i64 / n - h, z as i64 % n - h);
                let mut row = vec![ZERO; b];
                for bt in terms {
                    let (tg, s) = twisted_wrap(n, z0 + bt.x.0, z1 + bt.x.1);
                    let k = (z0 * bt.x.1 - bt.x.0 * z1).rem_euclid(m2) as usize;
                    row[tg] += bt.row_scale[z] * table[k] * s;
                }
                row
            })
            .collect();
        Array2::from_shape_fn((b, b), |(i, j)| rows[i][j])
    }
}

/// (r⋊T)(G) = ∫đX r{Θ_{X/2}[G(X)]} T(X) as a lattice sum.
pub fn rep_crossed(cr: &CovariantRep, g: &Field) -> Result<OperatorMatrix> {
    let plain = CovariantRep { basis: None, ..cr.clone() };
    let op = CrossedOperator::new(&plain, g)?;
    let blocks = op.blocks.iter().map(|t| op.block_matrix(t, &cr.grid)).collect();
    Ok(cr.assemble(blocks))
}

/// ‖(r_σ⋊T)(G)‖ for the concrete representation at σ.
pub fn rep_crossed_norm(g: &Field, sigma: SigmaPoint) -> Result<f64> {
    let cr = concrete_covariant(g.grid(), g.system(), sigma)?;
    Ok(rep_crossed(&cr, g)?.op_norm())
}

/// (r⋊T)^M_h(f) = (r⋊T)(M_h f).
pub fn rep_modulated(cr: &CovariantRep, h: &Window, f: &AlgebraElement, map: ModMap) -> Result<OperatorMatrix> {
    rep_crossed(cr, &localized_modulation(h, f, map)?)
}

/// As [`rep_modulated`], with a warning when h is not idempotent.
pub fn rep_modulated_checked(
    cr: &CovariantRep,
    h: &Window,
    f: &AlgebraElement,
    map: ModMap,
) -> Result<(OperatorMatrix, Option<String>)> {
    let warn = (!h.is_idempotent()).then(|| {
        format!("window {} is not idempotent (residual {:.2e}); the map is not multiplicative", h.label, h.idempotency_residual)
    });
    Ok((rep_modulated(cr, h, f, map)?, warn))
}

/// ‖f‖_𝔄 ≈ ‖(r⋊T)^M_h(f)‖.
pub fn rieffel_norm_estimate(cr: &CovariantRep, h: &Window, f: &AlgebraElement, map: ModMap) -> Result<f64> {
    Ok(rep_modulated(cr, h, f, map)?.op_norm())
}

/// The symbol X ↦ f(Θ_{−X}σ) quantized by Weyl.
pub fn schrodinger_symbol(grid: &PhaseGrid, sigma: SigmaPoint, f: &AlgebraElement) -> Symbol {
    let sys = f.system().clone();
    let fc = f.closure();
    Symbol::new(*grid, move |x| fc(sys.act_point(-x, sigma)))
}

/// 𝔒𝔭_σ(f).
pub fn schrodinger_rep(grid: &PhaseGrid, sigma: SigmaPoint, f: &AlgebraElement) -> Result<OperatorMatrix> {
    weyl_quantize(&schrodinger_symbol(grid, sigma, f))
}

/// Bargmann transform 𝒰_v u(X) = ⟨𝔬𝔭(−X)v, u⟩ as an N²×N matrix.
#[derive(Clone, Debug)]
pub struct Bargmann {
    grid: PhaseGrid,
    matrix: Array2<C64>,
}

impl Bargmann {
    pub fn new(v: &WaveFunction) -> Result<Self> {
        let nv = v.norm();
        if (nv - 1.0).abs() > 1e-10 {
            return invalid(format!("Bargmann window must be normalized (‖v‖ = {nv})"));
        }
        let grid = *v.grid();
        let n = grid.points;
        let h = grid.half();
        let vals = v.values().clone();
        let rows: Vec<Vec<C64>> = (0..n * n)
            .into_par_iter()
            .map(|k| {
                let (a, b) = ((k / n) as i64 - h, (k % n) as i64 - h);
                // row = Δ·conj(v)ᵀ 𝔬𝔭(X), read off column by column
                let mut row = vec![ZERO; n];
                let mut e = vec![ZERO; n];
                for (x, r) in row.iter_mut().enumerate() {
                    e.iter_mut().for_each(|v| *v = ZERO);
                    e[x] = C64::new(1.0, 0.0);
                    let mut out = vec![ZERO; n];
                    apply_heisenberg(&grid, (a, b), &e, &mut out);
                    *r = vals.iter().zip(&out).map(|(p, q)| p.conj() * q).sum::<C64>() * grid.delta;
                }
                row
            })
            .collect();
        let matrix = Array2::from_shape_fn((n * n, n), |(i, j)| rows[i][j]);
        Ok(Bargmann { grid, matrix })
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    /// Matrix of 𝒰_v* (weights 1/N on L²(Ξ), Δ on L²(𝒳)).
    pub fn adjoint_matrix(&self) -> Array2<C64> {
        let s = 1.0 / (self.grid.points as f64 * self.grid.delta);
        self.matrix.t().mapv(|v| v.conj() * s)
    }

    pub fn apply(&self, u: &WaveFunction) -> Array1<C64> {
        self.matrix.dot(u.values())
    }

    pub fn adjoint(&self, phi: &Array1<C64>) -> Result<WaveFunction> {
        WaveFunction::from_values(&self.grid, self.adjoint_matrix().dot(phi))
    }

    /// 𝒰_v A 𝒰_v* on L²(Ξ).
    pub fn conjugate(&self, a: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix::new(self.matrix.dot(&a.entries).dot(&self.adjoint_matrix()), Domain::L2Xi)
    }
}

pub fn bargmann(v: &WaveFunction, u: &WaveFunction) -> Result<Array1<C64>> {
    Ok(Bargmann::new(v)?.apply(u))
}

pub fn bargmann_adjoint(v: &WaveFunction, phi: &Array1<C64>) -> Result<WaveFunction> {
    Bargmann::new(v)?.adjoint(phi)
}

/// ⟨Φ, Ψ⟩ on L²(Ξ) with weight 1/N.
pub fn xi_inner(grid: &PhaseGrid, a: &Array1<C64>, b: &Array1<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum::<C64>() * grid.measure_weight
}

fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// max over probes of ‖(A − B)Φ‖/‖Φ‖.
pub fn probe_residual(a: &OperatorMatrix, b: &OperatorMatrix, probes: &[Array1<C64>]) -> Result<f64> {
    if probes.is_empty() {
        return invalid("probe residual needs at least one probe");
    }
    let d = &a.entries - &b.entries;
    let mut worst: f64 = 0.0;
    for p in probes {
        let np = vec_norm(p.as_slice().unwrap());
        if np == 0.0 {
            return invalid("zero probe");
        }
        let r = d.dot(p);
        worst = worst.max(vec_norm(r.as_slice().unwrap()) / np);
    }
    Ok(worst)
}

/// Probe residual for (r_σ⋊T)^M_{h(v)}(f) against 𝒰_v 𝔒𝔭_σ(f) 𝒰_v*.
pub fn bargmann_equivalence_residual(
    system: &DynSystem,
    sigma: SigmaPoint,
    v: &WaveFunction,
    f: &AlgebraElement,
    probes: &[Array1<C64>],
) -> Result<f64> {
    let grid = *v.grid();
    let (_, hv) = crate::weyl::wigner(v, v)?;
    let window = Window::new(hv, "h(v)")?;
    let cr = concrete_covariant(&grid, system, sigma)?;
    let lhs = rep_modulated(&cr, &window, f, ModMap::M)?;
    let rhs = Bargmann::new(v)?.conjugate(&schrodinger_rep(&grid, sigma, f)?);
    probe_residual(&lhs, &rhs, probes)
}

/// Matrix-free variant of [`bargmann_equivalence_residual`] for large grids.
pub fn bargmann_equivalence_residual_free(
    system: &DynSystem,
    sigma: SigmaPoint,
    v: &WaveFunction,
    window: &Window,
    f: &AlgebraElement,
    probes: &[Array1<C64>],
) -> Result<f64> {
    let grid = *v.grid();
    let cr = concrete_covariant(&grid, system, sigma)?;
    let op = CrossedOperator::new(&cr, &localized_modulation(window, f, ModMap::M)?)?;
    let bg = Bargmann::new(v)?;
    let sch = schrodinger_rep(&grid, sigma, f)?;
    let ustar = bg.adjoint_matrix();
    let mut worst: f64 = 0.0;
    for p in probes {
        let lhs = op.apply(&grid, p.as_slice().unwrap());
        let rhs = bg.matrix().dot(&sch.entries.dot(&ustar.dot(p)));
        let d: Vec<C64> = lhs.iter().zip(rhs.iter()).map(|(a, b)| a - b).collect();
        worst = worst.max(vec_norm(&d) / vec_norm(p.as_slice().unwrap()));
    }
    Ok(worst)
}

fn worst_ratio<F: Fn(&[C64]) -> Vec<C64>>(probes: &[Array1<C64>], diff: F) -> Result<f64> {
    if probes.is_empty() {
        return invalid("probe residual needs at least one probe");
    }
    let mut worst: f64 = 0.0;
    for p in probes {
        let p = p.as_slice().unwrap();
        let np = vec_norm(p);
        if np == 0.0 {
            return invalid("zero probe");
        }
        worst = worst.max(vec_norm(&diff(p)) / np);
    }
    Ok(worst)
}

fn sub_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Matrix-free probe residual of (r⋊T)(G^◇) against (r⋊T)(G)*.
pub fn adjoint_residual(cr: &CovariantRep, g: &Field, probes: &[Array1<C64>]) -> Result<f64> {
    let grid = cr.grid;
    let a = CrossedOperator::new(cr, g)?;
    let b = CrossedOperator::new(cr, &crate::crossed::involution(g))?;
    worst_ratio(probes, |p| sub_vec(&b.apply(&grid, p), &a.apply_adjoint(&grid, p)))
}

/// Probe residual of T(Z)(r⋊T)^M_h(f)T(−Z) against (r⋊T)^M_{𝒯_Z h}(f), matrix-free.
pub fn covariance_shift_residual(
    cr: &CovariantRep,
    h: &Window,
    f: &AlgebraElement,
    z: (i64, i64),
    map: ModMap,
    probes: &[Array1<C64>],
) -> Result<f64> {
    let grid = cr.grid;
    if cr.sigmas.len() != 1 {
        return invalid("covariance shift is checked on a concrete representation");
    }
    let hz = Window::new(h.symbol.translate(grid.lattice_point(z.0, z.1)), format!("{}+shift", h.label))?;
    let a = CrossedOperator::new(cr, &localized_modulation(h, f, map)?)?;
    let b = CrossedOperator::new(cr, &localized_modulation(&hz, f, map)?)?;
    let (tp, tm) = (shift_operator(&grid, z), shift_operator(&grid, (-z.0, -z.1)));
    worst_ratio(probes, |p| sub_vec(&tp.apply(&a.apply(&grid, &tm.apply(p))), &b.apply(&grid, p)))
}

/// max_i |s_i(A) − s_i(B)| for A = (r⋊T)^M_h(f) and B = (r⋊T)^M_{𝒯_Z h}(f).
pub fn window_shift_spectral_residual(cr: &CovariantRep, h: &Window, f: &AlgebraElement, z: (i64, i64), map: ModMap) -> Result<f64> {
    let hz = Window::new(h.symbol.translate(cr.grid.lattice_point(z.0, z.1)), format!("{}+shift", h.label))?;
    let s1 = rep_modulated(cr, h, f, map)?.singular_values();
    let s2 = rep_modulated(cr, &hz, f, map)?.singular_values();
    Ok(s1.iter().zip(&s2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// max over Z of |‖𝔒𝔭_{Θ_Z σ}(f)‖ − ‖𝔒𝔭_σ(f)‖|.
pub fn orbit_shift_norm_residual(grid: &PhaseGrid, sigma: SigmaPoint, f: &AlgebraElement, shifts: &[(i64, i64)]) -> Result<f64> {
    let base = schrodinger_rep(grid, sigma, f)?.op_norm();
    let mut worst: f64 = 0.0;
    for z in shifts {
        let s2 = f.system().act_point(grid.lattice_point(z.0, z.1), sigma);
        worst = worst.max((schrodinger_rep(grid, s2, f)?.op_norm() - base).abs());
    }
    Ok(worst)
}

/// max over probes u of ‖[𝔬𝔭(Y)𝔒𝔭_σ(f)𝔬𝔭(−Y) − 𝔒𝔭_σ(Θ_Y f)]u‖/‖u‖.
pub fn schrodinger_covariance_residual(
    grid: &PhaseGrid,
    sigma: SigmaPoint,
    f: &AlgebraElement,
    y: (i64, i64),
    probes: &[WaveFunction],
) -> Result<f64> {
    if probes.is_empty() {
        return invalid("probe residual needs at least one probe");
    }
    let yp = grid.lattice_point(y.0, y.1);
    let lhs = crate::weyl::heisenberg_op(grid, yp)?
        .matmul(&schrodinger_rep(grid, sigma, f)?)
        .matmul(&crate::weyl::heisenberg_op(grid, -yp)?);
    let rhs = schrodinger_rep(grid, sigma, &crate::dynamics::act_function(f.system(), yp, f)?)?;
    let d = lhs.sub(&rhs);
    let mut worst: f64 = 0.0;
    for u in probes {
        let r = WaveFunction::from_values(grid, d.apply(u.values()))?;
        worst = worst.max(r.norm() / u.norm());
    }
    Ok(worst)
}

/// Decaying probe vectors on L²(Ξ): fixed Gaussian and Hermite packets
/// followed by `random` seeded superpositions of narrow packets.
pub fn probe_battery(grid: &PhaseGrid, seed: u64, random: usize) -> Vec<Array1<C64>> {
    let n = grid.points;
    let packet = |c: PhasePoint, w: f64, k: [f64; 2]| -> Array1<C64> {
        Array1::from_shape_fn(n * n, |idx| {
            let x = grid.node(idx / n, idx % n);
            let d = x - c;
            C64::from_polar((-d.norm_sqr() / (2.0 * w * w)).exp(), k[0] * x.x + k[1] * x.xi)
        })
    };
    let mut out = vec![
        packet(PhasePoint::ZERO, 0.7, [0.0, 0.0]),
        packet(PhasePoint::new(0.4, -0.3), 0.6, [0.5, 0.0]),
        Array1::from_shape_fn(n * n, |idx| {
            let x = grid.node(idx / n, idx % n);
            C64::new(crate::weyl::hermite_function(1, x.x / 0.7) * crate::weyl::hermite_function(0, x.xi / 0.7), 0.0)
        }),
        Array1::from_shape_fn(n * n, |idx| {
            let x = grid.node(idx / n, idx % n);
            C64::new(crate::weyl::hermite_function(2, x.x / 0.7) * crate::weyl::hermite_function(1, x.xi / 0.7), 0.0)
        }),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reach = 0.15 * grid.extent;
    for _ in 0..random {
        let mut v = Array1::<C64>::zeros(n * n);
        for _ in 0..3 {
            let c = PhasePoint::new(rng.random_range(-reach..reach), rng.random_range(-reach..reach));
            let w = rng.random_range(0.45..0.7);
            let k = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let a = C64::from_polar(rng.random_range(0.2..1.0), rng.random_range(0.0..2.0 * PI));
            v.scaled_add(a, &packet(c, w, k));
        }
        out.push(v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crossed::{involution, twisted_product};
    use crate::dynamics::DEFAULT_ALPHA;
    use crate::modulation::rieffel_product;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn setup() -> (PhaseGrid, DynSystem) {
        (PhaseGrid::new(16).unwrap(), DynSystem::kronecker(DEFAULT_ALPHA, 8).unwrap())
    }

    fn narrow(grid: PhaseGrid, sys: &DynSystem, c0: PhasePoint, m: [i64; 2]) -> Field {
        Field::tensor(&Symbol::gaussian(grid, c0, 0.45), &AlgebraElement::monomial(sys, m).unwrap()).unwrap()
    }

    #[test]
    fn covariant_basics() {
        let (grid, sys) = setup();
        let cr = concrete_covariant(&grid, &sys, [0.3, 0.6]).unwrap();
        assert!(cr.certificate().projective < 1e-12);
        assert!(cr.certificate().covariance < 1e-12);
        let id = OperatorMatrix::identity(256, Domain::L2Xi);
        assert!(cr.t((0, 0)).sub(&id).max_abs() == 0.0);
        assert!(cr.r(&AlgebraElement::one(&sys)).unwrap().sub(&id).max_abs() == 0.0);
        let tr = concrete_covariant(&grid, &DynSystem::translation(), [0.1, -0.2]).unwrap();
        assert!(tr.certificate().covariance < 1e-12);
    }

    #[test]
    fn induced_blocks_and_basis() {
        let (grid, sys) = setup();
        let (s1, s2) = ([0.3, 0.6], [0.1, 0.45]);
        let g = narrow(grid, &sys, PhasePoint::new(0.2, 0.0), [1, 0]);
        let single = rep_crossed(&concrete_covariant(&grid, &sys, s1).unwrap(), &g).unwrap();
        let ind1 = rep_crossed(&induced_covariant(&grid, &sys, &[s1], None).unwrap(), &g).unwrap();
        assert!(single.sub(&ind1).max_abs() < 1e-12);
        let two = induced_covariant(&grid, &sys, &[s1, s2], None).unwrap();
        let m = rep_crossed(&two, &g).unwrap();
        let b2 = rep_crossed(&concrete_covariant(&grid, &sys, s2).unwrap(), &g).unwrap();
        assert!((&m.entries.slice(ndarray::s![0..256, 0..256]) - &single.entries).iter().all(|v| v.norm() < 1e-12));
        assert!((&m.entries.slice(ndarray::s![256..512, 256..512]) - &b2.entries).iter().all(|v| v.norm() < 1e-12));
        assert!(m.entries.slice(ndarray::s![0..256, 256..512]).iter().all(|v| *v == ZERO));
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let w = Array2::from_shape_vec((2, 2), vec![c(r, 0.0), c(0.0, r), c(0.0, r), c(r, 0.0)]).unwrap();
        let rot = rep_crossed(&induced_covariant(&grid, &sys, &[s1, s2], Some(w.clone())).unwrap(), &g).unwrap();
        assert!((rot.op_norm() - m.op_norm()).abs() < 1e-10);
        assert!(induced_covariant(&grid, &sys, &[s1, s2], Some(w * c(2.0, 0.0))).is_err());
    }

    #[test]
    fn crossed_rep_is_star_homomorphism() {
        let (grid, sys) = setup();
        let cr = concrete_covariant(&grid, &sys, [0.3, 0.6]).unwrap();
        let probes = probe_battery(&grid, 11, 4);
        let g1 = narrow(grid, &sys, PhasePoint::new(0.3, -0.2), [1, 0]).add(&narrow(grid, &sys, PhasePoint::ZERO, [0, 1]).scale(c(0.4, 0.3))).unwrap();
        let g2 = narrow(grid, &sys, PhasePoint::new(-0.2, 0.3), [1, -1]);
        let a1 = rep_crossed(&cr, &g1).unwrap();
        let a2 = rep_crossed(&cr, &g2).unwrap();
        let prod = rep_crossed(&cr, &twisted_product(&g1, &g2).unwrap()).unwrap();
        assert!(probe_residual(&prod, &a1.matmul(&a2), &probes).unwrap() < 1e-6);
        let grid24 = PhaseGrid::new(24).unwrap();
        let cr24 = concrete_covariant(&grid24, &sys, [0.3, 0.6]).unwrap();
        let g24 = narrow(grid24, &sys, PhasePoint::new(0.3, -0.2), [1, 0]).add(&narrow(grid24, &sys, PhasePoint::ZERO, [0, 1]).scale(c(0.4, 0.3))).unwrap();
        let adj = rep_crossed(&cr24, &involution(&g24)).unwrap();
        let a24 = rep_crossed(&cr24, &g24).unwrap();
        assert!(probe_residual(&adj, &a24.adjoint(), &probe_battery(&grid24, 11, 4)).unwrap() < 1e-8);
        let z = rep_crossed(&cr, &Field::zero(grid, &sys)).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        let free = CrossedOperator::new(&cr, &g1).unwrap();
        let v = free.apply(&grid, probes[5].as_slice().unwrap());
        let dense = a1.apply(&probes[5]);
        assert!(v.iter().zip(dense.iter()).all(|(x, y)| (x - y).norm() < 1e-12));
    }

    #[test]
    fn shift_equivalences() {
        let sys = DynSystem::kronecker(DEFAULT_ALPHA, 8).unwrap();
        let f = AlgebraElement::from_characters(&sys, vec![(Character::Torus([1, 0]), c(1.0, 0.3)), (Character::Torus([0, 0]), c(0.5, 0.0))]).unwrap();
        let grid = PhaseGrid::new(48).unwrap();
        let cr = concrete_covariant(&grid, &sys, [0.3, 0.6]).unwrap();
        let h = Window::hermite(&grid, 0).unwrap();
        let probes = probe_battery(&grid, 5, 3);
        assert!(covariance_shift_residual(&cr, &h, &f, (1, -2), ModMap::M, &probes).unwrap() < 1e-6);
        let g = narrow(grid, &sys, PhasePoint::new(0.3, -0.2), [1, 0]);
        assert!(adjoint_residual(&cr, &g, &probes).unwrap() < 1e-8);
        let small = PhaseGrid::new(16).unwrap();
        let cs = concrete_covariant(&small, &sys, [0.3, 0.6]).unwrap();
        let hs = Window::hermite(&small, 0).unwrap();
        let one = AlgebraElement::one(&sys);
        let ws = window_shift_spectral_residual(&cs, &hs, &one, (1, 0), ModMap::M).unwrap();
        assert!(ws < 1e-8, "{ws}");
        assert_eq!(orbit_shift_norm_residual(&small, [0.3, 0.6], &f, &[(0, 0)]).unwrap(), 0.0);
        let x = PhaseGrid::new(128).unwrap();
        let us = [WaveFunction::packet(&x, 0.0, 0.0, 1.0), WaveFunction::hermite(&x, 2).unwrap()];
        assert!(schrodinger_covariance_residual(&x, [0.3, 0.6], &f, (1, -2), &us).unwrap() < 1e-6);
    }

    #[test]
    fn bargmann_isometry() {
        let grid = PhaseGrid::new(16).unwrap();
        let v = WaveFunction::hermite(&grid, 0).unwrap();
        let bg = Bargmann::new(&v).unwrap();
        let u = WaveFunction::packet(&grid, 0.3, -0.2, 0.9);
        let w = WaveFunction::packet(&grid, -0.4, 0.5, 1.1);
        let (bu, bw) = (bg.apply(&u), bg.apply(&w));
        assert!((xi_inner(&grid, &bu, &bw) - u.inner(&w)).norm() < 1e-7);
        assert!((xi_inner(&grid, &bu, &bu).re.sqrt() - u.norm()).abs() < 1e-7);
        let bv = bg.apply(&v);
        assert!((bv[8 * 16 + 8] - c(1.0, 0.0)).norm() < 1e-12);
        assert!(bg.adjoint(&bu).unwrap().distance(&u) < 1e-7);
        let uu = bg.adjoint_matrix().dot(bg.matrix());
        assert!((&uu - &Array2::<C64>::eye(16)).iter().all(|x| x.norm() < 1e-7));
        assert!(Bargmann::new(&v.scale(c(2.0, 0.0))).is_err());
    }

    #[test]
    fn schrodinger_examples() {
        let grid = PhaseGrid::new(16).unwrap();
        let sys = DynSystem::kronecker(DEFAULT_ALPHA, 8).unwrap();
        let one = AlgebraElement::one(&sys);
        assert!(schrodinger_rep(&grid, [0.2, 0.1], &one).unwrap().sub(&OperatorMatrix::identity(16, Domain::L2X)).max_abs() < 1e-8);
        let tr = DynSystem::translation();
        let f = AlgebraElement::from_fn(&tr, |s| c((-(s[0] * s[0]) - 0.5 * s[1] * s[1]).exp(), 0.1 * s[0]));
        let sym = Symbol::new(grid, |p| c((-(p.x * p.x) - 0.5 * p.xi * p.xi).exp(), 0.1 * p.x));
        let a = schrodinger_rep(&grid, [0.0, 0.0], &f).unwrap();
        let b = weyl_quantize(&sym).unwrap();
        assert!(a.sub(&b).max_abs() < 1e-12);
    }

    #[test]
    fn modulated_rep_multiplicative_and_linear() {
        let sys = DynSystem::kronecker(DEFAULT_ALPHA, 8).unwrap();
        let f = AlgebraElement::monomial(&sys, [1, 0]).unwrap().add(&AlgebraElement::one(&sys).scale(c(0.3, 0.0))).unwrap();
        let g = AlgebraElement::monomial(&sys, [-1, 0]).unwrap();
        let fg = rieffel_product(&f, &g).unwrap();
        let mut res = Vec::new();
        for n in [16, 32] {
            let grid = PhaseGrid::new(n).unwrap();
            let cr = concrete_covariant(&grid, &sys, [0.3, 0.6]).unwrap();
            let h = Window::hermite(&grid, 0).unwrap();
            let probes = probe_battery(&grid, 3, 2);
            let lhs = rep_modulated(&cr, &h, &fg, ModMap::M).unwrap();
            let rhs = rep_modulated(&cr, &h, &f, ModMap::M).unwrap().matmul(&rep_modulated(&cr, &h, &g, ModMap::M).unwrap());
            res.push(probe_residual(&lhs, &rhs, &probes).unwrap());
        }
        assert!(res[1] < 1e-4 && res[0] > 4.0 * res[1], "{res:?}");
        let grid = PhaseGrid::new(40).unwrap();
        let cr = concrete_covariant(&grid, &sys, [0.3, 0.6]).unwrap();
        let h = Window::hermite(&grid, 0).unwrap();
        let probes = probe_battery(&grid, 3, 2);
        let one = AlgebraElement::one(&sys);
        let e = AlgebraElement::monomial(&sys, [1, 0]).unwrap();
        for (a, b) in [(&one, &e), (&e, &one), (&one, &one)] {
            let lhs = rep_modulated(&cr, &h, &rieffel_product(a, b).unwrap(), ModMap::M).unwrap();
            let rhs = rep_modulated(&cr, &h, a, ModMap::M).unwrap().matmul(&rep_modulated(&cr, &h, b, ModMap::M).unwrap());
            assert!(probe_residual(&lhs, &rhs, &probes).unwrap() < 1e-5);
        }
        let (grid, _) = setup();
        let cr = concrete_covariant(&grid, &sys, [0.3, 0.6]).unwrap();
        let h = Window::hermite(&grid, 0).unwrap();
        let sum = rep_modulated(&cr, &h, &f.add(&g.scale(c(0.0, 2.0))).unwrap(), ModMap::M).unwrap();
        let sep = rep_modulated(&cr, &h, &f, ModMap::M).unwrap().add(&rep_modulated(&cr, &h, &g, ModMap::M).unwrap().scale(c(0.0, 2.0)));
        assert!(sum.sub(&sep).max_abs() < 1e-12);
    }
}
