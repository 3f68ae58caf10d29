//! Phase space Ξ = ℝ² with its symplectic form, the cocycle κ, self-dual
//! lattices and the symplectic Fourier transform.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock};

use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{invalid, Result};

pub type C64 = Complex64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// A point X = (x, ξ) of Ξ.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct PhasePoint {
    pub x: f64,
    pub xi: f64,
}

impl PhasePoint {
    pub const ZERO: PhasePoint = PhasePoint { x: 0.0, xi: 0.0 };

    pub fn new(x: f64, xi: f64) -> Self {
        PhasePoint { x, xi }
    }

    /// [[self, other]] = y·ξ − x·η.
    #[inline]
    pub fn symp(self, other: PhasePoint) -> f64 {
        other.x * self.xi - self.x * other.xi
    }

    #[inline]
    pub fn norm_sqr(self) -> f64 {
        self.x * self.x + self.xi * self.xi
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Euclidean pairing with a frequency vector.
    #[inline]
    pub fn dot(self, w: [f64; 2]) -> f64 {
        self.x * w[0] + self.xi * w[1]
    }
}

impl Add for PhasePoint {
    type Output = PhasePoint;
    fn add(self, o: PhasePoint) -> PhasePoint {
        PhasePoint::new(self.x + o.x, self.xi + o.xi)
    }
}

impl Sub for PhasePoint {
    type Output = PhasePoint;
    fn sub(self, o: PhasePoint) -> PhasePoint {
        PhasePoint::new(self.x - o.x, self.xi - o.xi)
    }
}

impl Neg for PhasePoint {
    type Output = PhasePoint;
    fn neg(self) -> PhasePoint {
        PhasePoint::new(-self.x, -self.xi)
    }
}

impl Mul<PhasePoint> for f64 {
    type Output = PhasePoint;
    fn mul(self, p: PhasePoint) -> PhasePoint {
        PhasePoint::new(self * p.x, self * p.xi)
    }
}

/// κ(X, Y) = exp(−i[[X,Y]]/2).
#[inline]
pub fn kappa(x: PhasePoint, y: PhasePoint) -> C64 {
    C64::from_polar(1.0, -0.5 * x.symp(y))
}

/// Symplectic form on ℝ²ⁿ with points laid out as (x₁..xₙ, ξ₁..ξₙ).
pub fn symplectic_form(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() || x.len() % 2 != 0 {
        return invalid(format!(
            "symplectic_form needs two points of equal even dimension, got {} and {}",
            x.len(),
            y.len()
        ));
    }
    let n = x.len() / 2;
    Ok((0..n).map(|k| y[k] * x[n + k] - x[k] * y[n + k]).sum())
}

pub fn cocycle(x: &[f64], y: &[f64]) -> Result<C64> {
    Ok(C64::from_polar(1.0, -0.5 * symplectic_form(x, y)?))
}

/// (J⁻¹ω) for J(x,ξ) = (ξ,−x): the phase-space point whose symplectic
/// character is the plane wave e^{iω·X}, i.e. [[J⁻¹ω, Y]] = ω·Y.
#[inline]
pub fn dual_point(w: [f64; 2]) -> PhasePoint {
    PhasePoint::new(-w[1], w[0])
}

/// Self-dual lattice of N×N nodes on Ξ (n = 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseGrid {
    pub n: usize,
    pub points: usize,
    pub delta: f64,
    pub extent: f64,
    pub measure_weight: f64,
}

impl fmt::Display for PhaseGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PhaseGrid(N={}, Δ={:.6}, L={:.6})", self.points, self.delta, self.extent)
    }
}

pub fn make_self_dual_grid(n: usize, points: usize) -> Result<PhaseGrid> {
    if n != 1 {
        return invalid(format!("only half-dimension n = 1 is implemented (got n = {n})"));
    }
    if points % 2 != 0 || points < 8 {
        return invalid(format!("points per axis must be even and ≥ 8 (got {points})"));
    }
    Ok(PhaseGrid::build(points))
}

impl PhaseGrid {
    pub fn new(points: usize) -> Result<Self> {
        make_self_dual_grid(1, points)
    }

    /// Small lattices (N ≥ 2) for brute-force oracles.
    pub fn toy(points: usize) -> Result<Self> {
        if points % 2 != 0 || points < 2 {
            return invalid(format!("toy lattice needs an even N ≥ 2 (got {points})"));
        }
        Ok(PhaseGrid::build(points))
    }

    fn build(points: usize) -> Self {
        let delta = (2.0 * PI / points as f64).sqrt();
        PhaseGrid {
            n: 1,
            points,
            delta,
            extent: points as f64 * delta / 2.0,
            measure_weight: delta * delta / (2.0 * PI),
        }
    }

    #[inline]
    pub fn half(&self) -> i64 {
        (self.points / 2) as i64
    }

    /// Coordinate of array position p (centered index p − N/2).
    #[inline]
    pub fn coord(&self, p: usize) -> f64 {
        (p as i64 - self.half()) as f64 * self.delta
    }

    /// Node at array position (i, j) of a window with lattice offset `off`.
    #[inline]
    pub fn node_at(&self, i: usize, j: usize, off: (i64, i64)) -> PhasePoint {
        PhasePoint::new(
            (i as i64 - self.half() + off.0) as f64 * self.delta,
            (j as i64 - self.half() + off.1) as f64 * self.delta,
        )
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> PhasePoint {
        self.node_at(i, j, (0, 0))
    }

    /// Centered integer coordinates of X if X lies on the (infinite) lattice.
    pub fn lattice_index(&self, p: PhasePoint) -> Option<(i64, i64)> {
        let a = p.x / self.delta;
        let b = p.xi / self.delta;
        let (ra, rb) = (a.round(), b.round());
        if (a - ra).abs() < 1e-9 && (b - rb).abs() < 1e-9 {
            Some((ra as i64, rb as i64))
        } else {
            None
        }
    }

    pub fn lattice_point(&self, a: i64, b: i64) -> PhasePoint {
        PhasePoint::new(a as f64 * self.delta, b as f64 * self.delta)
    }

    /// Samples of a closure at all nodes, array layout [x-index, ξ-index].
    pub fn sample<F: Fn(PhasePoint) -> C64 + Sync>(&self, f: F) -> Array2<C64> {
        let n = self.points;
        let rows: Vec<Vec<C64>> = (0..n)
            .into_par_iter()
            .map(|i| (0..n).map(|j| f(self.node(i, j))).collect())
            .collect();
        Array2::from_shape_fn((n, n), |(i, j)| rows[i][j])
    }

    /// Phase e^{−iπ k/N} for the integer k = (N/2π)·[[X,Y]] of two lattice points.
    pub fn half_phase_table(&self) -> Vec<C64> {
        let m = 2 * self.points;
        (0..m)
            .map(|k| C64::from_polar(1.0, -PI * k as f64 / self.points as f64))
            .collect()
    }
}

/// Lattice symplectic Fourier transform of an N×N array in centered layout:
/// 𝔉F(a,b) = (1/N) Σ_{c,d} e^{−2πi(cb−ad)/N} F(c,d).
pub fn lattice_fourier(f: &Array2<C64>) -> Array2<C64> {
    let n = f.nrows();
    assert_eq!(n, f.ncols(), "lattice arrays are square");
    let sign = |p: usize| if p % 2 == 0 { 1.0 } else { -1.0 };
    let mut g = Array2::from_shape_fn((n, n), |(c, d)| f[[c, d]] * (sign(c) * sign(d)));
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    for mut row in g.axis_iter_mut(Axis(0)) {
        let mut buf: Vec<C64> = row.to_vec();
        inv.process(&mut buf);
        row.assign(&Array1::from(buf));
    }
    for mut col in g.axis_iter_mut(Axis(1)) {
        let mut buf: Vec<C64> = col.to_vec();
        fwd.process(&mut buf);
        col.assign(&Array1::from(buf));
    }
    let scale = 1.0 / n as f64;
    Array2::from_shape_fn((n, n), |(a, b)| g[[b, a]] * (sign(a) * sign(b) * scale))
}

/// Band-limited interpolant of lattice data: p(X) = (1/N) Σ_K e^{−i[[X,K]]} c(K),
/// where c is the lattice transform of the data, so p reproduces the samples.
#[derive(Clone, Debug)]
pub struct SpectralInterp {
    grid: PhaseGrid,
    coeffs: Array2<C64>,
}

impl SpectralInterp {
    pub fn from_samples(grid: PhaseGrid, samples: &Array2<C64>) -> Self {
        SpectralInterp { grid, coeffs: lattice_fourier(samples) }
    }

    pub fn from_coeffs(grid: PhaseGrid, coeffs: Array2<C64>) -> Self {
        SpectralInterp { grid, coeffs }
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn eval(&self, p: PhasePoint) -> C64 {
        // [[X,K]] = k_x ξ − x k_ξ
        let n = self.grid.points;
        let ex: Vec<C64> = (0..n).map(|a| C64::from_polar(1.0, -self.grid.coord(a) * p.xi)).collect();
        let eb: Vec<C64> = (0..n).map(|b| C64::from_polar(1.0, p.x * self.grid.coord(b))).collect();
        let mut acc = C64::new(0.0, 0.0);
        for a in 0..n {
            let mut row = C64::new(0.0, 0.0);
            for b in 0..n {
                row += self.coeffs[[a, b]] * eb[b];
            }
            acc += ex[a] * row;
        }
        acc / n as f64
    }

    /// Values at every node of another grid, by separable matrix products.
    pub fn resample(&self, target: &PhaseGrid) -> Array2<C64> {
        let n = self.grid.points;
        let m = target.points;
        let ex = Array2::from_shape_fn((m, n), |(j, a)| {
            C64::from_polar(1.0, -self.grid.coord(a) * target.coord(j))
        });
        let eb = Array2::from_shape_fn((n, m), |(b, i)| {
            C64::from_polar(1.0, target.coord(i) * self.grid.coord(b))
        });
        // out[i, j] = Σ_a Σ_b ex[j,a] c[a,b] eb[b,i]
        let t = ex.dot(&self.coeffs).dot(&eb);
        let scale = 1.0 / n as f64;
        Array2::from_shape_fn((m, m), |(i, j)| t[[j, i]] * scale)
    }
}

type EvalFn = dyn Fn(PhasePoint) -> C64 + Send + Sync;

/// A complex function on Ξ, carried as an exact closure with lazily cached
/// lattice samples.
#[derive(Clone)]
pub struct Symbol {
    grid: PhaseGrid,
    eval: Arc<EvalFn>,
    samples: Arc<OnceLock<Array2<C64>>>,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Symbol({})", self.grid)
    }
}

impl Symbol {
    pub fn new<F>(grid: PhaseGrid, f: F) -> Self
    where
        F: Fn(PhasePoint) -> C64 + Send + Sync + 'static,
    {
        Symbol { grid, eval: Arc::new(f), samples: Arc::new(OnceLock::new()) }
    }

    /// Symbol whose closure is the band-limited interpolant of the samples.
    pub fn from_samples(grid: PhaseGrid, samples: Array2<C64>) -> Result<Self> {
        if samples.dim() != (grid.points, grid.points) {
            return invalid("sample array does not match the grid");
        }
        let interp = SpectralInterp::from_samples(grid, &samples);
        Ok(Self::with_samples(grid, samples, move |p| interp.eval(p)))
    }

    /// Closure plus precomputed samples, which must agree with it at the nodes.
    pub fn with_samples<F>(grid: PhaseGrid, samples: Array2<C64>, f: F) -> Self
    where
        F: Fn(PhasePoint) -> C64 + Send + Sync + 'static,
    {
        let cell = OnceLock::new();
        let _ = cell.set(samples);
        Symbol { grid, eval: Arc::new(f), samples: Arc::new(cell) }
    }

    pub fn constant(grid: PhaseGrid, c: C64) -> Self {
        Symbol::new(grid, move |_| c)
    }

    /// e^{−|X−c|²/(2w²)}.
    pub fn gaussian(grid: PhaseGrid, center: PhasePoint, width: f64) -> Self {
        let s = 0.5 / (width * width);
        Symbol::new(grid, move |p| C64::new((-(p - center).norm_sqr() * s).exp(), 0.0))
    }

    /// The character e_X(Y) = e^{−i[[X,Y]]}.
    pub fn character(grid: PhaseGrid, x: PhasePoint) -> Self {
        Symbol::new(grid, move |y| C64::from_polar(1.0, -x.symp(y)))
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    #[inline]
    pub fn eval(&self, p: PhasePoint) -> C64 {
        (self.eval)(p)
    }

    pub fn closure(&self) -> Arc<EvalFn> {
        self.eval.clone()
    }

    pub fn samples(&self) -> &Array2<C64> {
        self.samples.get_or_init(|| {
            let f = self.eval.clone();
            self.grid.sample(move |p| f(p))
        })
    }

    pub fn on_grid(&self, grid: PhaseGrid) -> Symbol {
        Symbol { grid, eval: self.eval.clone(), samples: Arc::new(OnceLock::new()) }
    }

    pub fn map<F>(&self, f: F) -> Symbol
    where
        F: Fn(PhasePoint, C64) -> C64 + Send + Sync + 'static,
    {
        let e = self.eval.clone();
        Symbol::new(self.grid, move |p| f(p, e(p)))
    }

    pub fn conj(&self) -> Symbol {
        self.map(|_, v| v.conj())
    }

    pub fn scale(&self, c: C64) -> Symbol {
        self.map(move |_, v| c * v)
    }

    pub fn add(&self, other: &Symbol) -> Symbol {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        Symbol::new(self.grid, move |p| a(p) + b(p))
    }

    pub fn mul(&self, other: &Symbol) -> Symbol {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        Symbol::new(self.grid, move |p| a(p) * b(p))
    }

    /// Phase-space translate 𝒯_Z h = h(· − Z).
    pub fn translate(&self, z: PhasePoint) -> Symbol {
        let e = self.eval.clone();
        Symbol::new(self.grid, move |p| e(p - z))
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples().iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// sup-distance between samples.
    pub fn sup_distance(&self, other: &Symbol) -> f64 {
        self.samples()
            .iter()
            .zip(other.samples().iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// ⟨self, other⟩_Ξ, linear in the second slot.
    pub fn inner(&self, other: &Symbol) -> C64 {
        lattice_inner(self.samples(), other.samples()) * self.grid.measure_weight
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }

    /// L² norm from the closure sampled on a lattice refined by `refine`.
    pub fn l2_norm_fine(&self, refine: usize) -> Result<f64> {
        let fine = PhaseGrid::toy(self.grid.points * refine.max(1))?;
        let s: f64 = fine.sample(|p| self.eval(p)).iter().map(|v| v.norm_sqr()).sum();
        Ok((s * fine.measure_weight).sqrt())
    }

    pub fn l1_norm(&self) -> f64 {
        self.samples().iter().map(|v| v.norm()).sum::<f64>() * self.grid.measure_weight
    }

    /// max |f| on the outermost lattice shell relative to max |f|.
    pub fn boundary_decay(&self) -> f64 {
        let s = self.samples();
        let n = self.grid.points;
        let mut edge: f64 = 0.0;
        for k in 0..n {
            for v in [s[[0, k]], s[[n - 1, k]], s[[k, 0]], s[[k, n - 1]]] {
                edge = edge.max(v.norm());
            }
        }
        let top = self.sup_norm();
        if top == 0.0 {
            0.0
        } else {
            edge / top
        }
    }

    pub fn decay_certified(&self, tol: f64) -> bool {
        self.boundary_decay() <= tol
    }
}

/// Σ conj(a)·b over matching arrays (unweighted).
pub fn lattice_inner(a: &Array2<C64>, b: &Array2<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Transforms acting on the Ξ-slot.
pub trait SymplecticFourier: Sized {
    fn symplectic_fourier(&self) -> Result<Self>;
}

impl SymplecticFourier for Symbol {
    fn symplectic_fourier(&self) -> Result<Symbol> {
        let grid = self.grid;
        let out = lattice_fourier(self.samples());
        let src = self.samples().clone();
        let w = grid.measure_weight;
        // off-lattice values by direct quadrature of the kernel
        Ok(Symbol::with_samples(grid, out, move |x| {
            let mut acc = C64::new(0.0, 0.0);
            for ((i, j), v) in src.indexed_iter() {
                acc += C64::from_polar(1.0, -x.symp(grid.node(i, j))) * v;
            }
            acc * w
        }))
    }
}

pub fn symplectic_fourier<T: SymplecticFourier>(f: &T) -> Result<T> {
    f.symplectic_fourier()
}
