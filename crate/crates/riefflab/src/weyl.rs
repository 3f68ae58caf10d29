//! Weyl calculus on 𝒳 = ℝ: quantization matrices, the Moyal product ♯,
//! Heisenberg operators, Wigner transforms and Hermite windows.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::phase_space::{lattice_fourier, PhaseGrid, PhasePoint, SpectralInterp, Symbol, C64};

/// Refinement factor of the internal lattice used by [`moyal`].
pub const MOYAL_REFINE: usize = 2;
/// Smallest internal lattice used by [`moyal`].
pub const MOYAL_MIN_POINTS: usize = 64;
pub const MAX_HERMITE_ORDER: usize = 4;

type LineFn = dyn Fn(f64) -> C64 + Send + Sync;

/// A vector of L²(𝒳) sampled on the x-grid matched to a phase lattice
/// (same N, same Δ), optionally with an exact closure.
#[derive(Clone)]
pub struct WaveFunction {
    grid: PhaseGrid,
    values: Array1<C64>,
    closure: Option<Arc<LineFn>>,
}

impl fmt::Debug for WaveFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WaveFunction(N={}, ‖·‖={:.6})", self.grid.points, self.norm())
    }
}

impl WaveFunction {
    pub fn from_fn<F>(grid: &PhaseGrid, f: F) -> Self
    where
        F: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        let values = Array1::from_shape_fn(grid.points, |i| f(grid.coord(i)));
        WaveFunction { grid: *grid, values, closure: Some(Arc::new(f)) }
    }

    pub fn from_values(grid: &PhaseGrid, values: Array1<C64>) -> Result<Self> {
        if values.len() != grid.points {
            return invalid("wave function length does not match the grid");
        }
        Ok(WaveFunction { grid: *grid, values, closure: None })
    }

    /// Hermite function v_k, normalized on the lattice.
    pub fn hermite(grid: &PhaseGrid, k: usize) -> Result<Self> {
        if k > MAX_HERMITE_ORDER {
            return invalid(format!("Hermite order {k} exceeds {MAX_HERMITE_ORDER}"));
        }
        Ok(Self::from_fn(grid, move |x| C64::new(hermite_function(k, x), 0.0)).normalized())
    }

    /// Gaussian packet π^{-1/4} s^{-1/2} e^{−(x−x₀)²/(2s²)} e^{ip₀x}.
    pub fn packet(grid: &PhaseGrid, x0: f64, p0: f64, s: f64) -> Self {
        let c = PI.powf(-0.25) / s.sqrt();
        Self::from_fn(grid, move |x| C64::from_polar(c * (-(x - x0).powi(2) / (2.0 * s * s)).exp(), p0 * x))
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &Array1<C64> {
        &self.values
    }

    pub fn closure(&self) -> Option<Arc<LineFn>> {
        self.closure.clone()
    }

    /// ⟨self, other⟩, linear in the second slot.
    pub fn inner(&self, other: &WaveFunction) -> C64 {
        self.values.iter().zip(other.values.iter()).map(|(a, b)| a.conj() * b).sum::<C64>() * self.grid.delta
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }

    pub fn scale(&self, c: C64) -> WaveFunction {
        let closure = self.closure.clone().map(|f| Arc::new(move |x: f64| c * f(x)) as Arc<LineFn>);
        WaveFunction { grid: self.grid, values: self.values.mapv(|v| v * c), closure }
    }

    pub fn normalized(&self) -> WaveFunction {
        self.scale(C64::new(1.0 / self.norm(), 0.0))
    }

    pub fn distance(&self, other: &WaveFunction) -> f64 {
        let d: f64 = self.values.iter().zip(other.values.iter()).map(|(a, b)| (a - b).norm_sqr()).sum();
        (d * self.grid.delta).sqrt()
    }
}

/// Physicists' normalized Hermite function.
pub fn hermite_function(k: usize, x: f64) -> f64 {
    let g = PI.powf(-0.25) * (-x * x / 2.0).exp();
    if k == 0 {
        return g;
    }
    // recurrence for ψ_k = H_k e^{-x²/2}/sqrt(2^k k! √π)
    let mut p0 = g;
    let mut p1 = std::f64::consts::SQRT_2 * x * g;
    for n in 1..k {
        let nf = n as f64;
        let p2 = ((2.0 / (nf + 1.0)).sqrt()) * x * p1 - (nf / (nf + 1.0)).sqrt() * p0;
        p0 = p1;
        p1 = p2;
    }
    p1
}

fn laguerre(k: usize, t: f64) -> f64 {
    let (mut a, mut b) = (1.0, 1.0 - t);
    if k == 0 {
        return a;
    }
    for n in 1..k {
        let nf = n as f64;
        let c = ((2.0 * nf + 1.0 - t) * b - nf * a) / (nf + 1.0);
        a = b;
        b = c;
    }
    b
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    L2X,
    L2Xi,
}

/// Dense matrix of an operator on discretized L²(𝒳) or L²(Ξ). Inner-product
/// weights are uniform on each space, so adjoints are conjugate transposes.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub entries: Array2<C64>,
    pub domain: Domain,
}

impl OperatorMatrix {
    pub fn new(entries: Array2<C64>, domain: Domain) -> Self {
        OperatorMatrix { entries, domain }
    }

    pub fn identity(dim: usize, domain: Domain) -> Self {
        OperatorMatrix { entries: Array2::eye(dim), domain }
    }

    pub fn zeros(dim: usize, domain: Domain) -> Self {
        OperatorMatrix { entries: Array2::zeros((dim, dim)), domain }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn adjoint(&self) -> Self {
        OperatorMatrix { entries: self.entries.t().mapv(|v| v.conj()), domain: self.domain }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        OperatorMatrix { entries: self.entries.dot(&other.entries), domain: self.domain }
    }

    pub fn sub(&self, other: &Self) -> Self {
        OperatorMatrix { entries: &self.entries - &other.entries, domain: self.domain }
    }

    pub fn add(&self, other: &Self) -> Self {
        OperatorMatrix { entries: &self.entries + &other.entries, domain: self.domain }
    }

    pub fn scale(&self, c: C64) -> Self {
        OperatorMatrix { entries: self.entries.mapv(|v| v * c), domain: self.domain }
    }

    pub fn apply(&self, v: &Array1<C64>) -> Array1<C64> {
        self.entries.dot(v)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Singular values in decreasing order.
    pub fn singular_values(&self) -> Vec<f64> {
        let n = self.entries.nrows();
        let m = self.entries.ncols();
        let mat = DMatrix::from_fn(n, m, |i, j| self.entries[[i, j]]);
        let mut s: Vec<f64> = mat.singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        s
    }

    /// Operator norm (largest singular value).
    pub fn op_norm(&self) -> f64 {
        if self.entries.iter().all(|v| *v == C64::new(0.0, 0.0)) {
            return 0.0;
        }
        self.singular_values()[0]
    }
}

/// Weyl quantization with kernel K(x,y) = ∫đξ e^{−i(x−y)ξ} f((x+y)/2, ξ);
/// the ξ-quadrature uses 2N nodes of spacing Δ/2 over [−L, L).
pub fn weyl_quantize(sf: &Symbol) -> Result<OperatorMatrix> {
    let grid = *sf.grid();
    let n = grid.points;
    let m = 2 * n;
    let xis: Vec<f64> = (0..m).map(|l| -grid.extent + l as f64 * grid.delta / 2.0).collect();
    let w = 1.0 / m as f64;
    let f = sf.closure();
    let rows: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = grid.coord(i);
            (0..n)
                .map(|j| {
                    let y = grid.coord(j);
                    let mid = 0.5 * (x + y);
                    let mut acc = C64::new(0.0, 0.0);
                    for xi in &xis {
                        acc += C64::from_polar(1.0, -(x - y) * xi) * f(PhasePoint::new(mid, *xi));
                    }
                    acc * w
                })
                .collect()
        })
        .collect();
    Ok(OperatorMatrix::new(Array2::from_shape_fn((n, n), |(i, j)| rows[i][j]), Domain::L2X))
}

/// 𝔬𝔭(X) for a lattice point X = (a, α): (𝔬𝔭(X)u)(x) = e^{iαa/2} e^{−iαx} u(x − a),
/// with the x-shift cyclic on the grid.
pub fn heisenberg_op(grid: &PhaseGrid, x: PhasePoint) -> Result<OperatorMatrix> {
    let (ka, _) = grid
        .lattice_index(x)
        .ok_or_else(|| crate::error::LabError::InvalidArgument(format!("{x:?} is not a lattice point")))?;
    let n = grid.points;
    let mut e = Array2::zeros((n, n));
    for i in 0..n {
        let j = (i as i64 - ka).rem_euclid(n as i64) as usize;
        e[[i, j]] = C64::from_polar(1.0, x.xi * x.x / 2.0 - x.xi * grid.coord(i));
    }
    Ok(OperatorMatrix::new(e, Domain::L2X))
}

/// Applies 𝔬𝔭(X) (lattice X in integer coordinates) to a value vector.
pub fn apply_heisenberg(grid: &PhaseGrid, k: (i64, i64), u: &[C64], out: &mut [C64]) {
    let n = grid.points;
    let (a, al) = (k.0 as f64 * grid.delta, k.1 as f64 * grid.delta);
    for (i, o) in out.iter_mut().enumerate() {
        let j = (i as i64 - k.0).rem_euclid(n as i64) as usize;
        *o = C64::from_polar(1.0, al * a / 2.0 - al * grid.coord(i)) * u[j];
    }
}

/// The Moyal product, computed spectrally on a refined self-dual lattice:
/// 𝔉(f♯g)(P) = ∫dK κ(K,P) 𝔉f(K) 𝔉g(P−K).
pub fn moyal(f: &Symbol, g: &Symbol) -> Result<Symbol> {
    let n = f.grid().points;
    moyal_refined(f, g, MOYAL_REFINE.max(MOYAL_MIN_POINTS.div_ceil(n)))
}

pub fn moyal_refined(f: &Symbol, g: &Symbol, refine: usize) -> Result<Symbol> {
    let home = *f.grid();
    if home != *g.grid() {
        return invalid("moyal needs symbols on the same grid");
    }
    if refine == 0 {
        return invalid("refinement factor must be ≥ 1");
    }
    let fine = PhaseGrid::toy(home.points * refine)?;
    let ff = lattice_fourier(&fine.sample(|p| f.eval(p)));
    let gg = lattice_fourier(&fine.sample(|p| g.eval(p)));
    let coeffs = twisted_convolution(&fine, &ff, &gg);
    let interp = SpectralInterp::from_coeffs(fine, coeffs);
    let samples = interp.resample(&home);
    Ok(Symbol::with_samples(home, samples, move |p| interp.eval(p)))
}

/// Same as [`moyal`], with a flag when either factor fails its decay certificate.
pub fn moyal_checked(f: &Symbol, g: &Symbol, tol: f64) -> Result<(Symbol, Option<String>)> {
    let warn = if !f.decay_certified(tol) || !g.decay_certified(tol) {
        Some(format!(
            "boundary decay {:.2e}/{:.2e} exceeds {tol:.1e}",
            f.boundary_decay(),
            g.boundary_decay()
        ))
    } else {
        None
    };
    Ok((moyal(f, g)?, warn))
}

/// (1/N) Σ_K κ(K,P) A(K) B(P−K) on one lattice, truncated to the box.
/// Coefficients of A below 1e−18 of its peak are skipped.
pub fn twisted_convolution(grid: &PhaseGrid, a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let n = grid.points;
    let h = grid.half();
    let nn = n as i64;
    let table = grid.half_phase_table();
    let m2 = 2 * nn;
    let w = grid.measure_weight;
    let peak = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let support: Vec<(i64, i64, C64)> = a
        .indexed_iter()
        .filter(|(_, v)| v.norm() > 1e-18 * peak)
        .map(|((i, j), v)| (i as i64, j as i64, *v))
        .collect();
    let rows: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|p0| {
            let c0 = p0 as i64 - h;
            (0..n)
                .map(|p1| {
                    let c1 = p1 as i64 - h;
                    let mut acc = C64::new(0.0, 0.0);
                    for &(q0, q1, av) in &support {
                        let bi = p0 as i64 - q0 + h;
                        let bj = p1 as i64 - q1 + h;
                        if bi < 0 || bi >= nn || bj < 0 || bj >= nn {
                            continue;
                        }
                        // [[K,P]] = p0 k1 − k0 p1 in lattice units
                        let kk = (c0 * (q1 - h) - (q0 - h) * c1).rem_euclid(m2) as usize;
                        acc += table[kk] * av * b[[bi as usize, bj as usize]];
                    }
                    acc * w
                })
                .collect()
        })
        .collect();
    Array2::from_shape_fn((n, n), |(i, j)| rows[i][j])
}

/// Wigner pair (W_{u,v}, V_{u,v}) with W(X) = ⟨u, 𝔬𝔭(X)v⟩ and V = 𝔉W.
pub fn wigner(u: &WaveFunction, v: &WaveFunction) -> Result<(Symbol, Symbol)> {
    let grid = *u.grid();
    if grid != *v.grid() {
        return invalid("wave functions on different grids");
    }
    let n = grid.points;
    let h = grid.half();
    let uv = u.values().clone();
    let vv = v.values().clone();
    let rows: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|a| {
            let mut buf = vec![C64::new(0.0, 0.0); n];
            (0..n)
                .map(|b| {
                    apply_heisenberg(&grid, (a as i64 - h, b as i64 - h), vv.as_slice().unwrap(), &mut buf);
                    uv.iter().zip(&buf).map(|(x, y)| x.conj() * y).sum::<C64>() * grid.delta
                })
                .collect()
        })
        .collect();
    let w = Array2::from_shape_fn((n, n), |(i, j)| rows[i][j]);
    let big_w = Symbol::from_samples(grid, w.clone())?;
    let v_samples = lattice_fourier(&w);
    let big_v = match (u.closure(), v.closure()) {
        (Some(fu), Some(fv)) => {
            let direct = move |p: PhasePoint| wigner_quadrature(&*fu, &*fv, p, grid.delta / 4.0, 2.0 * grid.extent + 12.0);
            let samples = grid.sample(&direct);
            Symbol::with_samples(grid, samples, direct)
        }
        _ => Symbol::from_samples(grid, v_samples)?,
    };
    Ok((big_w, big_v))
}

/// V_{u,v}(x,ξ) = ∫db e^{−ibξ} conj(u(x+b/2)) v(x−b/2), trapezoidal in b.
pub fn wigner_quadrature(u: &LineFn, v: &LineFn, p: PhasePoint, step: f64, range: f64) -> C64 {
    let k = (range / step).ceil() as i64;
    let mut acc = C64::new(0.0, 0.0);
    for j in -k..=k {
        let b = j as f64 * step;
        acc += C64::from_polar(1.0, -b * p.xi) * u(p.x + b / 2.0).conj() * v(p.x - b / 2.0);
    }
    acc * step
}

/// h(v_k) = V_{v_k,v_k} = 2(−1)^k L_k(2|X|²) e^{−|X|²}.
pub fn gaussian_window(grid: &PhaseGrid, k: usize) -> Result<Symbol> {
    if k > MAX_HERMITE_ORDER {
        return invalid(format!("Hermite order {k} exceeds {MAX_HERMITE_ORDER}"));
    }
    let sign = if k % 2 == 0 { 2.0 } else { -2.0 };
    Ok(Symbol::new(*grid, move |p| {
        let r2 = p.norm_sqr();
        C64::new(sign * laguerre(k, 2.0 * r2) * (-r2).exp(), 0.0)
    }))
}

/// |v⟩⟨v| as a matrix on value vectors.
pub fn rank_one(v: &WaveFunction) -> OperatorMatrix {
    let vals = v.values();
    let d = v.grid().delta;
    let n = vals.len();
    OperatorMatrix::new(Array2::from_shape_fn((n, n), |(i, j)| vals[i] * vals[j].conj() * d), Domain::L2X)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn g32() -> PhaseGrid {
        PhaseGrid::new(32).unwrap()
    }

    #[test]
    fn unit_quantizes_to_identity() {
        let g = g32();
        let op = weyl_quantize(&Symbol::constant(g, C64::new(1.0, 0.0))).unwrap();
        assert!(op.sub(&OperatorMatrix::identity(32, Domain::L2X)).max_abs() < 1e-12);
    }

    #[test]
    fn real_symbols_are_hermitian() {
        let g = g32();
        let f = Symbol::new(g, |p| C64::new((-(p.x - 0.3).powi(2) - 0.5 * p.xi * p.xi).exp() * (1.0 + p.xi), 0.0));
        let op = weyl_quantize(&f).unwrap();
        assert!(op.sub(&op.adjoint()).op_norm() < 1e-10);
        let z = Symbol::new(g, |p| C64::new(p.x, p.xi) * (-p.norm_sqr()).exp());
        let lhs = weyl_quantize(&z.conj()).unwrap();
        assert!(lhs.sub(&weyl_quantize(&z).unwrap().adjoint()).op_norm() < 1e-10);
    }

    #[test]
    fn gaussian_window_quantizes_to_projector() {
        let g = g32();
        let h = gaussian_window(&g, 0).unwrap();
        let v = WaveFunction::hermite(&g, 0).unwrap();
        let k = weyl_quantize(&h).unwrap();
        assert!(k.sub(&rank_one(&v)).op_norm() < 1e-6);
        for ord in 1..=MAX_HERMITE_ORDER {
            let hk = gaussian_window(&g, ord).unwrap();
            let vk = WaveFunction::hermite(&g, ord).unwrap();
            assert!(weyl_quantize(&hk).unwrap().sub(&rank_one(&vk)).op_norm() < 1e-6, "order {ord}");
        }
    }

    #[test]
    fn window_closed_form_and_norm() {
        let g = g32();
        let h = gaussian_window(&g, 0).unwrap();
        let exact = Symbol::new(g, |p| C64::new(2.0 * (-p.norm_sqr()).exp(), 0.0));
        assert!(h.sup_distance(&exact) < 1e-9);
        assert!(h.sup_distance(&h.conj()) == 0.0);
        assert!((h.l2_norm() - 1.0).abs() < 1e-8);
        assert!(gaussian_window(&g, 5).is_err());
        for k in 1..=MAX_HERMITE_ORDER {
            assert!((gaussian_window(&g, k).unwrap().l2_norm_fine(2).unwrap() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn wigner_examples() {
        let g = g32();
        let v = WaveFunction::hermite(&g, 0).unwrap();
        let (w, big_v) = wigner(&v, &v).unwrap();
        let exact = gaussian_window(&g, 0).unwrap();
        assert!(big_v.sup_distance(&exact) < 1e-9);
        assert!((w.samples()[[16, 16]] - C64::new(1.0, 0.0)).norm() < 1e-12);
        for k in 1..=3 {
            let vk = WaveFunction::hermite(&g, k).unwrap();
            let (_, vv) = wigner(&vk, &vk).unwrap();
            assert!(vv.sup_distance(&gaussian_window(&g, k).unwrap()) < 1e-9, "order {k}");
        }
        let far_a = WaveFunction::packet(&g, -5.0, 0.0, 0.4);
        let far_b = WaveFunction::packet(&g, 5.0, 0.0, 0.4);
        let (wab, _) = wigner(&far_a, &far_b).unwrap();
        // shifts up to the box width can bring the packets together
        assert!(wab.sup_norm() <= 1.0 + 1e-12);
        assert!(far_a.inner(&far_b).norm() < 1e-30);
    }

    #[test]
    fn pairing_identity() {
        let g = g32();
        let u = WaveFunction::packet(&g, 0.4, -0.3, 0.9);
        let v = WaveFunction::packet(&g, -0.2, 0.5, 1.1);
        let f = Symbol::new(g, |p| C64::new(1.0 + 0.3 * p.x, 0.2 * p.xi) * (-0.3 * p.norm_sqr()).exp());
        let (_, big_v) = wigner(&u, &v).unwrap();
        let lhs = u.inner(&WaveFunction::from_values(&g, weyl_quantize(&f).unwrap().apply(v.values())).unwrap());
        let rhs = f.samples().iter().zip(big_v.samples().iter()).map(|(a, b)| a * b).sum::<C64>() * g.measure_weight;
        assert!((lhs - rhs).norm() < 1e-7, "{lhs} vs {rhs}");
    }

    #[test]
    fn heisenberg_relations() {
        let g = PhaseGrid::new(16).unwrap();
        assert!(heisenberg_op(&g, PhasePoint::ZERO).unwrap().sub(&OperatorMatrix::identity(16, Domain::L2X)).max_abs() < 1e-15);
        assert!(heisenberg_op(&g, PhasePoint::new(0.1, 0.0)).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let x = g.lattice_point(rng.random_range(-8..8), rng.random_range(-8..8));
            let y = g.lattice_point(rng.random_range(-8..8), rng.random_range(-8..8));
            let lhs = heisenberg_op(&g, x).unwrap().matmul(&heisenberg_op(&g, y).unwrap());
            let rhs = heisenberg_op(&g, x + y).unwrap().scale(crate::phase_space::kappa(x, y));
            assert!(lhs.sub(&rhs).max_abs() < 1e-12);
            let adj = heisenberg_op(&g, x).unwrap().adjoint();
            assert!(adj.sub(&heisenberg_op(&g, -x).unwrap()).max_abs() < 1e-12);
        }
    }

    #[test]
    fn heisenberg_matches_quantized_character_inside() {
        let g = g32();
        let x = g.lattice_point(2, -3);
        let a = heisenberg_op(&g, x).unwrap();
        let b = weyl_quantize(&Symbol::character(g, x)).unwrap();
        // away from the cyclic wrap the two agree entrywise
        for i in 4..28 {
            for j in 0..32 {
                if (i as i64 - j as i64 - 2).abs() < 8 {
                    assert!((a.entries[[i, j]] - b.entries[[i, j]]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn moyal_unit_idempotent_and_homomorphism() {
        let g = g32();
        let one = Symbol::constant(g, C64::new(1.0, 0.0));
        let f = Symbol::gaussian(g, PhasePoint::new(0.3, -0.4), 0.9).map(|p, v| v * C64::from_polar(1.0, 0.7 * p.x - 0.2 * p.xi));
        assert!(moyal(&f, &one).unwrap().sup_distance(&f) < 1e-8);
        assert!(moyal(&one, &f).unwrap().sup_distance(&f) < 1e-8);
        let h = gaussian_window(&g, 0).unwrap();
        assert!(moyal(&h, &h).unwrap().sup_distance(&h) < 1e-7);
        let k = Symbol::gaussian(g, PhasePoint::new(-0.5, 0.2), 1.2).map(|p, v| v * C64::from_polar(1.0, -0.4 * p.xi));
        let fg = moyal(&f, &k).unwrap();
        let prod = weyl_quantize(&f).unwrap().matmul(&weyl_quantize(&k).unwrap());
        let rel = weyl_quantize(&fg).unwrap().sub(&prod).op_norm() / prod.op_norm();
        assert!(rel < 1e-6, "{rel}");
    }

    #[test]
    fn moyal_associativity_and_flag() {
        let g = g32();
        let f = Symbol::gaussian(g, PhasePoint::new(0.4, 0.1), 1.0);
        let k = Symbol::gaussian(g, PhasePoint::new(-0.3, 0.5), 0.8).map(|p, v| v * C64::from_polar(1.0, 0.3 * p.x));
        let l = Symbol::gaussian(g, PhasePoint::new(0.0, -0.6), 1.1);
        let lhs = moyal(&moyal(&f, &k).unwrap(), &l).unwrap();
        let rhs = moyal(&f, &moyal(&k, &l).unwrap()).unwrap();
        assert!(lhs.sup_distance(&rhs) < 1e-6);
        let wide = Symbol::gaussian(g, PhasePoint::ZERO, 20.0);
        assert!(moyal_checked(&wide, &f, 1e-8).unwrap().1.is_some());
        assert!(moyal_checked(&f, &k, 1e-8).unwrap().1.is_none());
    }

    #[test]
    fn hermite_functions_are_orthonormal() {
        let g = g32();
        for a in 0..=4 {
            for b in 0..=4 {
                let va = WaveFunction::hermite(&g, a).unwrap();
                let vb = WaveFunction::hermite(&g, b).unwrap();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((va.inner(&vb) - C64::new(want, 0.0)).norm() < 1e-12);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: f64 = rng.random_range(-2.0..2.0);
        assert!((hermite_function(2, x) - PI.powf(-0.25) * (2.0 * x * x - 1.0) / 2f64.sqrt() * (-x * x / 2.0).exp()).abs() < 1e-14);
    }
}
