//! 𝒜∞-valued fields on the phase lattice and the twisted crossed-product
//! structure: ◇, ◇', the involution, the L¹ norm and the gauge maps C_α.
//!
//! A field is a finite sum Σ_j A_j(X) χ_j of scalar lattice arrays times
//! eigen-characters of the action. Each term stores N×N nodes of a window of
//! the infinite lattice, centered at an integer offset.

use std::f64::consts::PI;
use std::fmt;

use ndarray::Array2;
use rayon::prelude::*;

use crate::dynamics::{polished_sup, AlgebraElement, Character, DynSystem, SigmaPoint};
use crate::error::{invalid, LabError, Result};
use crate::phase_space::{lattice_fourier, PhaseGrid, PhasePoint, Symbol, SymplecticFourier, C64};

/// The sign s with C_s(G₁◇G₂) = C_s(G₁) ◇' C_s(G₂); fixed by [`pin_gauge_sign`].
pub const GAUGE_SIGN: f64 = 0.5;

#[derive(Clone, Debug)]
pub struct Term {
    pub ch: Character,
    pub omega: [f64; 2],
    pub offset: (i64, i64),
    pub values: Array2<C64>,
}

#[derive(Clone)]
pub struct Field {
    grid: PhaseGrid,
    system: DynSystem,
    terms: Vec<Term>,
    decomposable: Option<Vec<(Symbol, AlgebraElement)>>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let chs: Vec<_> = self.terms.iter().map(|t| (t.ch, t.offset)).collect();
        write!(f, "Field({}, {:?})", self.grid, chs)
    }
}

impl Field {
    pub fn zero(grid: PhaseGrid, system: &DynSystem) -> Self {
        Field { grid, system: system.clone(), terms: Vec::new(), decomposable: Some(Vec::new()) }
    }

    /// Builds a field from (character, window offset, values) triples.
    pub fn from_terms(
        grid: PhaseGrid,
        system: &DynSystem,
        terms: Vec<(Character, (i64, i64), Array2<C64>)>,
    ) -> Result<Self> {
        let mut f = Field { grid, system: system.clone(), terms: Vec::new(), decomposable: None };
        for (ch, off, v) in terms {
            if v.dim() != (grid.points, grid.points) {
                return invalid("term array does not match the grid");
            }
            let omega = system.omega(ch)?;
            f.push(Term { ch, omega, offset: off, values: v });
        }
        Ok(f)
    }

    /// Σ_i h_i ⊗ f_i for character-expanded f_i.
    pub fn decomposable(grid: PhaseGrid, system: &DynSystem, pairs: Vec<(Symbol, AlgebraElement)>) -> Result<Self> {
        let mut f = Field { grid, system: system.clone(), terms: Vec::new(), decomposable: None };
        for (h, a) in &pairs {
            system.same_as(a.system())?;
            let d = a.require_descriptor()?;
            let hs = h.on_grid(grid);
            let samples = hs.samples();
            for (ch, c) in d {
                let omega = system.omega(*ch)?;
                f.push(Term { ch: *ch, omega, offset: (0, 0), values: samples.mapv(|v| v * c) });
            }
        }
        f.decomposable = Some(pairs);
        Ok(f)
    }

    pub fn tensor(h: &Symbol, a: &AlgebraElement) -> Result<Self> {
        Self::decomposable(*h.grid(), a.system(), vec![(h.clone(), a.clone())])
    }

    fn push(&mut self, t: Term) {
        if let Some(slot) = self.terms.iter_mut().find(|s| s.ch == t.ch && s.offset == t.offset) {
            slot.values += &t.values;
        } else {
            self.terms.push(t);
        }
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn system(&self) -> &DynSystem {
        &self.system
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn decomposable_form(&self) -> Option<&[(Symbol, AlgebraElement)]> {
        self.decomposable.as_deref()
    }

    fn check_compatible(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return invalid("fields live on different grids");
        }
        self.system.same_as(&other.system)
    }

    /// Array position of absolute lattice index (a, b) in a window, if inside.
    #[inline]
    pub fn position_in(grid: &PhaseGrid, off: (i64, i64), a: i64, b: i64) -> Option<(usize, usize)> {
        let h = grid.half();
        let (i, j) = (a - off.0 + h, b - off.1 + h);
        let n = grid.points as i64;
        if i >= 0 && j >= 0 && i < n && j < n {
            Some((i as usize, j as usize))
        } else {
            None
        }
    }

    /// All absolute lattice indices covered by some term, in a fixed order.
    pub fn absolute_nodes(&self) -> Vec<(i64, i64)> {
        let h = self.grid.half();
        let mut offs: Vec<(i64, i64)> = self.terms.iter().map(|t| t.offset).collect();
        offs.sort();
        offs.dedup();
        if offs.len() <= 1 {
            let o = offs.first().copied().unwrap_or((0, 0));
            let n = self.grid.points as i64;
            return (0..n).flat_map(|i| (0..n).map(move |j| (o.0 + i - h, o.1 + j - h))).collect();
        }
        let mut nodes: Vec<(i64, i64)> = offs
            .iter()
            .flat_map(|o| {
                let n = self.grid.points as i64;
                (0..n).flat_map(move |i| (0..n).map(move |j| (o.0 + i - h, o.1 + j - h)))
            })
            .collect();
        nodes.sort();
        nodes.dedup();
        nodes
    }

    /// Coefficients of the entry at absolute lattice index (a, b).
    pub fn entry_coefficients(&self, a: i64, b: i64) -> Vec<(Character, C64)> {
        let mut out: Vec<(Character, C64)> = Vec::new();
        for t in &self.terms {
            if let Some((i, j)) = Self::position_in(&self.grid, t.offset, a, b) {
                let v = t.values[[i, j]];
                match out.iter_mut().find(|(c, _)| *c == t.ch) {
                    Some(s) => s.1 += v,
                    None => out.push((t.ch, v)),
                }
            }
        }
        out
    }

    /// G(X) ∈ 𝒜 at the absolute lattice index (a, b).
    pub fn entry(&self, a: i64, b: i64) -> AlgebraElement {
        AlgebraElement::from_characters(&self.system, self.entry_coefficients(a, b)).expect("own characters")
    }

    pub fn eval(&self, a: i64, b: i64, s: SigmaPoint) -> C64 {
        self.entry_coefficients(a, b).iter().map(|(ch, c)| c * ch.eval(s)).sum()
    }

    pub fn scale(&self, c: C64) -> Field {
        let mut f = self.clone();
        for t in &mut f.terms {
            t.values.mapv_inplace(|v| v * c);
        }
        f.decomposable = self
            .decomposable
            .as_ref()
            .map(|d| d.iter().map(|(h, a)| (h.clone(), a.scale(c))).collect());
        f
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.check_compatible(other)?;
        let mut f = self.clone();
        for t in &other.terms {
            f.push(t.clone());
        }
        f.decomposable = match (&self.decomposable, &other.decomposable) {
            (Some(a), Some(b)) => Some(a.iter().chain(b.iter()).cloned().collect()),
            _ => None,
        };
        Ok(f)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Per-node σ-sample evaluation over the union of windows.
    fn evaluate_nodes(&self, nodes: &[(i64, i64)]) -> Vec<Vec<C64>> {
        let samples = self.system.sigma_samples();
        let tables: Vec<Vec<C64>> = self
            .terms
            .iter()
            .map(|t| samples.iter().map(|s| t.ch.eval(*s)).collect())
            .collect();
        nodes
            .par_iter()
            .map(|&(a, b)| {
                let mut row = vec![C64::new(0.0, 0.0); samples.len()];
                for (t, tab) in self.terms.iter().zip(&tables) {
                    if let Some((i, j)) = Self::position_in(&self.grid, t.offset, a, b) {
                        let v = t.values[[i, j]];
                        if v == C64::new(0.0, 0.0) {
                            continue;
                        }
                        for (r, c) in row.iter_mut().zip(tab) {
                            *r += v * c;
                        }
                    }
                }
                row
            })
            .collect()
    }

    /// sup_σ |G(X)(σ)| at every covered node.
    pub fn sup_profile(&self) -> Vec<((i64, i64), f64)> {
        let nodes = self.absolute_nodes();
        let vals = self.evaluate_nodes(&nodes);
        let torus = self.system.is_torus();
        let samples = self.system.sigma_samples();
        nodes
            .into_par_iter()
            .zip(vals)
            .map(|(n, row)| {
                let mags: Vec<f64> = row.iter().map(|v| v.norm()).collect();
                let sup = if torus {
                    polished_sup(&self.entry_coefficients(n.0, n.1), samples, &mags)
                } else {
                    mags.iter().copied().fold(0.0, f64::max)
                };
                (n, sup)
            })
            .collect()
    }

    /// ⟨self, other⟩ over Ξ × Σ with the product quadrature weight.
    pub fn inner(&self, other: &Field) -> Result<C64> {
        self.check_compatible(other)?;
        let w = self.system.invariant_weight().ok_or_else(|| {
            LabError::Unsupported("inner product over Σ needs a finite invariant measure".into())
        })?;
        let mut nodes = self.absolute_nodes();
        nodes.extend(other.absolute_nodes());
        nodes.sort();
        nodes.dedup();
        let a = self.evaluate_nodes(&nodes);
        let b = other.evaluate_nodes(&nodes);
        let s: C64 = a
            .iter()
            .zip(b.iter())
            .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x.conj() * y).sum::<C64>())
            .sum();
        Ok(s * w * self.grid.measure_weight)
    }

    /// Re-expresses each term on the window centered at `offset(term)`,
    /// treating the values as lattice-periodic.
    pub fn rewindow(&self, offset: impl Fn(&Term) -> (i64, i64)) -> Field {
        let mut f = Field { grid: self.grid, system: self.system.clone(), terms: Vec::new(), decomposable: None };
        for t in &self.terms {
            let o = offset(t);
            f.push(Term { ch: t.ch, omega: t.omega, offset: o, values: roll_window(&t.values, t.offset, o) });
        }
        f
    }
}

/// Cyclic reindexing of an N×N window from offset `from` to offset `to`.
pub fn roll_window(v: &Array2<C64>, from: (i64, i64), to: (i64, i64)) -> Array2<C64> {
    let n = v.nrows() as i64;
    let (d0, d1) = (to.0 - from.0, to.1 - from.1);
    Array2::from_shape_fn(v.dim(), |(i, j)| {
        let si = (i as i64 + d0).rem_euclid(n) as usize;
        let sj = (j as i64 + d1).rem_euclid(n) as usize;
        v[[si, sj]]
    })
}

/// Window offset centered on the circular mean of |v|² (values in window 0).
fn spectral_center(v: &Array2<C64>) -> (i64, i64) {
    let n = v.nrows();
    let mut m0 = C64::new(0.0, 0.0);
    let mut m1 = C64::new(0.0, 0.0);
    let mut total = 0.0;
    for ((i, j), x) in v.indexed_iter() {
        let w = x.norm_sqr();
        total += w;
        m0 += C64::from_polar(w, 2.0 * PI * i as f64 / n as f64);
        m1 += C64::from_polar(w, 2.0 * PI * j as f64 / n as f64);
    }
    if total == 0.0 || !total.is_finite() {
        return (0, 0);
    }
    let h = (n / 2) as i64;
    let pick = |m: C64| -> i64 {
        if m.norm() < 1e-14 * total {
            return 0;
        }
        let p = (m.arg() / (2.0 * PI) * n as f64).round() as i64;
        let c = (p - h).rem_euclid(n as i64);
        if c >= h {
            c - n as i64
        } else {
            c
        }
    };
    (pick(m0), pick(m1))
}

impl SymplecticFourier for Field {
    /// 𝔉 ⊗ 1 term by term; output windows follow the spectral mass.
    fn symplectic_fourier(&self) -> Result<Field> {
        let mut f = Field { grid: self.grid, system: self.system.clone(), terms: Vec::new(), decomposable: None };
        for t in &self.terms {
            let canon = roll_window(&t.values, t.offset, (0, 0));
            let out = lattice_fourier(&canon);
            let o = spectral_center(&out);
            f.push(Term { ch: t.ch, omega: t.omega, offset: o, values: roll_window(&out, (0, 0), o) });
        }
        Ok(f)
    }
}

/// G^◇(X) = G(−X)^*.
pub fn involution(g: &Field) -> Field {
    let n = g.grid.points;
    let mut f = Field { grid: g.grid, system: g.system.clone(), terms: Vec::new(), decomposable: None };
    for t in &g.terms {
        let v = Array2::from_shape_fn((n, n), |(i, j)| t.values[[(n - i) % n, (n - j) % n]].conj());
        f.push(Term {
            ch: t.ch.inv(),
            omega: [-t.omega[0], -t.omega[1]],
            offset: (-t.offset.0, -t.offset.1),
            values: v,
        });
    }
    f
}

/// ‖G‖₁ = ∫ dX sup_σ |G(X)(σ)|.
pub fn l1_norm(g: &Field) -> f64 {
    g.sup_profile().iter().map(|(_, v)| v).sum::<f64>() * g.grid.measure_weight
}

/// [C_α G](X) = Θ_{αX}[G(X)].
pub fn gauge(alpha: f64, g: &Field) -> Field {
    let grid = g.grid;
    let mut f = g.clone();
    f.decomposable = None;
    if alpha == 0.0 {
        return f;
    }
    for t in &mut f.terms {
        let w = t.omega;
        let off = t.offset;
        for ((i, j), v) in t.values.indexed_iter_mut() {
            let x = grid.node_at(i, j, off);
            *v *= C64::from_polar(1.0, alpha * x.dot(w));
        }
    }
    f
}

#[derive(Clone, Copy)]
enum Law {
    Symmetric,
    Standard,
}

fn product_term(grid: &PhaseGrid, a: &Term, b: &Term, law: Law) -> Result<Term> {
    let n = grid.points;
    let h = grid.half();
    let nn = n as i64;
    let table = grid.half_phase_table();
    let m2 = 2 * nn;
    let out_off = (a.offset.0 + b.offset.0, a.offset.1 + b.offset.1);
    let (pre_w, post_w) = match law {
        // Θ_{(Y−X)/2}[A(Y)] Θ_{Y/2}[B(X−Y)]
        Law::Symmetric => ([(a.omega[0] + b.omega[0]) / 2.0, (a.omega[1] + b.omega[1]) / 2.0], [-a.omega[0] / 2.0, -a.omega[1] / 2.0]),
        // A(Y) Θ_Y[B(X−Y)]
        Law::Standard => (b.omega, [0.0, 0.0]),
    };
    let ap = Array2::from_shape_fn((n, n), |(i, j)| {
        let y = grid.node_at(i, j, a.offset);
        a.values[[i, j]] * C64::from_polar(1.0, y.dot(pre_w))
    });
    let rows: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|p0| {
            let c0 = out_off.0 + p0 as i64 - h;
            let mut row = vec![C64::new(0.0, 0.0); n];
            for (p1, slot) in row.iter_mut().enumerate() {
                let c1 = out_off.1 + p1 as i64 - h;
                let mut acc = C64::new(0.0, 0.0);
                let q0_lo = (p0 as i64 - h + 1).max(0);
                let q0_hi = (p0 as i64 + h).min(nn - 1);
                let q1_lo = (p1 as i64 - h + 1).max(0);
                let q1_hi = (p1 as i64 + h).min(nn - 1);
                for q0 in q0_lo..=q0_hi {
                    let y0 = a.offset.0 + q0 - h;
                    let bi = (p0 as i64 - q0 + h) as usize;
                    for q1 in q1_lo..=q1_hi {
                        let y1 = a.offset.1 + q1 - h;
                        let bj = (p1 as i64 - q1 + h) as usize;
                        // κ(X,Y) = e^{−iπ(y0 c1 − c0 y1)/N}
                        let k = (y0 * c1 - c0 * y1).rem_euclid(m2) as usize;
                        acc += table[k] * ap[[q0 as usize, q1 as usize]] * b.values[[bi, bj]];
                    }
                }
                let x = PhasePoint::new(c0 as f64 * grid.delta, c1 as f64 * grid.delta);
                *slot = acc * grid.measure_weight * C64::from_polar(1.0, x.dot(post_w));
            }
            row
        })
        .collect();
    Ok(Term {
        ch: a.ch.mul(&b.ch)?,
        omega: [a.omega[0] + b.omega[0], a.omega[1] + b.omega[1]],
        offset: out_off,
        values: Array2::from_shape_fn((n, n), |(i, j)| rows[i][j]),
    })
}

fn product(g1: &Field, g2: &Field, law: Law) -> Result<Field> {
    g1.check_compatible(g2)?;
    let mut f = Field { grid: g1.grid, system: g1.system.clone(), terms: Vec::new(), decomposable: None };
    for a in &g1.terms {
        for b in &g2.terms {
            f.push(product_term(&g1.grid, a, b, law)?);
        }
    }
    Ok(f)
}

/// (G₁◇G₂)(X) = ∫dY κ(X,Y) Θ_{(Y−X)/2}[G₁(Y)] Θ_{Y/2}[G₂(X−Y)], lattice
/// quadrature truncated to the windows.
pub fn twisted_product(g1: &Field, g2: &Field) -> Result<Field> {
    product(g1, g2, Law::Symmetric)
}

/// (G₁◇'G₂)(X) = ∫dY κ(X,Y) G₁(Y) Θ_Y[G₂(X−Y)].
pub fn twisted_product_prime(g1: &Field, g2: &Field) -> Result<Field> {
    product(g1, g2, Law::Standard)
}

/// Difference field self − other as an L¹ residual.
pub fn l1_distance(a: &Field, b: &Field) -> Result<f64> {
    Ok(l1_norm(&a.sub(b)?))
}

/// Runs the gauge-intertwining experiment for s = ±½ on the given pair and
/// returns the sign with the smaller residual together with both residuals.
pub fn pin_gauge_sign(g1: &Field, g2: &Field) -> Result<(f64, f64, f64)> {
    let res = |s: f64| -> Result<f64> {
        let lhs = gauge(s, &twisted_product(g1, g2)?);
        let rhs = twisted_product_prime(&gauge(s, g1), &gauge(s, g2))?;
        l1_distance(&lhs, &rhs)
    };
    let (p, m) = (res(0.5)?, res(-0.5)?);
    Ok((if p <= m { 0.5 } else { -0.5 }, p, m))
}

/// Brute-force ◇ from entry closures and exact point actions, at the nodes
/// and σ-samples given; sums over the windows of the inputs.
pub fn twisted_product_oracle(g1: &Field, g2: &Field, nodes: &[(i64, i64)]) -> Result<Vec<Vec<C64>>> {
    g1.check_compatible(g2)?;
    let grid = g1.grid;
    let sys = g1.system.clone();
    let n1 = g1.absolute_nodes();
    let e1: Vec<AlgebraElement> = n1.iter().map(|&(a, b)| g1.entry(a, b)).collect();
    let cover2 = g2.absolute_nodes();
    let samples = sys.sigma_samples().to_vec();
    Ok(nodes
        .iter()
        .map(|&(c0, c1)| {
            let x = grid.lattice_point(c0, c1);
            samples
                .iter()
                .map(|s| {
                    let mut acc = C64::new(0.0, 0.0);
                    for ((y0, y1), ey) in n1.iter().zip(&e1) {
                        let d = (c0 - y0, c1 - y1);
                        if !cover2.contains(&d) {
                            continue;
                        }
                        let y = grid.lattice_point(*y0, *y1);
                        let k = C64::from_polar(1.0, -0.5 * x.symp(y));
                        let s1 = sys.act_point(0.5 * (y - x), *s);
                        let s2 = sys.act_point(0.5 * y, *s);
                        acc += k * ey.eval(s1) * g2.eval(d.0, d.1, s2);
                    }
                    acc * grid.measure_weight
                })
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::DEFAULT_ALPHA;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn battery(grid: PhaseGrid, sys: &DynSystem) -> (Field, Field, Field) {
        let g1 = Field::decomposable(
            grid,
            sys,
            vec![
                (
                    Symbol::gaussian(grid, PhasePoint::new(0.3, -0.2), 0.6),
                    AlgebraElement::from_characters(sys, vec![(Character::Torus([1, 0]), c(1.0, 0.2)), (Character::Torus([0, 0]), c(0.5, 0.0))]).unwrap(),
                ),
            ],
        )
        .unwrap();
        let g2 = Field::tensor(
            &Symbol::gaussian(grid, PhasePoint::new(-0.4, 0.1), 0.7),
            &AlgebraElement::monomial(sys, [-1, 0]).unwrap().scale(c(0.3, -0.7)),
        )
        .unwrap();
        let g3 = Field::tensor(&Symbol::gaussian(grid, PhasePoint::new(0.1, 0.5), 0.5), &AlgebraElement::one(sys)).unwrap();
        (g1, g2, g3)
    }

    #[test]
    fn zero_and_bilinearity() {
        let grid = PhaseGrid::new(16).unwrap();
        let sys = DynSystem::kronecker(DEFAULT_ALPHA, 8).unwrap();
        let (g1, g2, _) = battery(grid, &sys);
        let z = Field::zero(grid, &sys);
        assert_eq!(l1_norm(&twisted_product(&g1, &z).unwrap()), 0.0);
        assert_eq!(l1_norm(&twisted_product_prime(&g1, &z).unwrap()), 0.0);
        let lhs = twisted_product(&g1.scale(c(2.0, 1.0)), &g2).unwrap();
        let rhs = twisted_product(&g1, &g2).unwrap().scale(c(2.0, 1.0));
        assert!(l1_distance(&lhs, &rhs).unwrap() < 1e-14);
    }

    #[test]
    fn involution_axioms() {
        let grid = PhaseGrid::new(32).unwrap();
        let sys = DynSystem::kronecker(DEFAULT_ALPHA, 8).unwrap();
        let (g1, g2, _) = battery(grid, &sys);
        let back = involution(&involution(&g1));
        assert_eq!(l1_distance(&back, &g1).unwrap(), 0.0);
        assert!((l1_norm(&involution(&g1)) - l1_norm(&g1)).abs() < 1e-12);
        let lhs = involution(&twisted_product(&g1, &g2).unwrap());
        let rhs = twisted_product(&involution(&g2), &involution(&g1)).unwrap();
        assert!(l1_distance(&lhs, &rhs).unwrap() < 1e-8);
    }

    #[test]
    fn even_real_field_is_fixed() {
        let grid = PhaseGrid::new(16).unwrap();
        let sys = DynSystem::kronecker(DEFAULT_ALPHA, 8).unwrap();
        let g = Field::tensor(&Symbol::gaussian(grid, PhasePoint::ZERO, 0.8), &AlgebraElement::constant(&sys, c(0.4, 0.0))).unwrap();
        // the lattice is not symmetric at −N/2; a decaying field makes that node negligible
        assert!(l1_distance(&involution(&g), &g).unwrap() < 1e-14);
    }

    #[test]
    fn associativity() {
        let grid = PhaseGrid::new(32).unwrap();
        let sys = DynSystem::kronecker(DEFAULT_ALPHA, 8).unwrap();
        let (g1, g2, g3) = battery(grid, &sys);
        let lhs = twisted_product(&twisted_product(&g1, &g2).unwrap(), &g3).unwrap();
        let rhs = twisted_product(&g1, &twisted_product(&g2, &g3).unwrap()).unwrap();
        assert!(l1_distance(&lhs, &rhs).unwrap() < 1e-7);
    }

    #[test]
    fn gauge_group_law_and_isometry() {
        let grid = PhaseGrid::new(16).unwrap();
        let sys = DynSystem::kronecker(DEFAULT_ALPHA, 8).unwrap();
        let (g1, _, _) = battery(grid, &sys);
        assert_eq!(l1_distance(&gauge(0.0, &g1), &g1).unwrap(), 0.0);
        assert!(l1_distance(&gauge(0.5, &gauge(0.5, &g1)), &gauge(1.0, &g1)).unwrap() < 1e-14);
        assert!(l1_distance(&gauge(-0.7, &gauge(0.7, &g1)), &g1).unwrap() < 1e-14);
        let mono = Field::tensor(&Symbol::gaussian(grid, PhasePoint::new(0.1, 0.4), 0.8), &AlgebraElement::monomial(&sys, [2, -1]).unwrap()).unwrap();
        assert!((l1_norm(&gauge(0.3, &mono)) - l1_norm(&mono)).abs() < 1e-12);
        assert!((l1_norm(&gauge(0.3, &g1)) - l1_norm(&g1)).abs() < 1e-12);
    }

    #[test]
    fn gauge_sign_is_pinned() {
        let grid = PhaseGrid::new(16).unwrap();
        let sys = DynSystem::kronecker(DEFAULT_ALPHA, 8).unwrap();
        let (g1, g2, _) = battery(grid, &sys);
        let (s, plus, minus) = pin_gauge_sign(&g1, &g2).unwrap();
        assert_eq!(s, GAUGE_SIGN);
        assert!(plus < 1e-8, "{plus}");
        assert!(minus > 1e-3, "{minus}");
    }

    #[test]
    fn brute_force_oracle_on_toy_lattice() {
        let grid = PhaseGrid::toy(4).unwrap();
        let sys = DynSystem::translation_with_samples(vec![[0.0, 0.0], [0.3, -0.5], [1.1, 0.7]]).unwrap();
        let g1 = Field::decomposable(
            grid,
            &sys,
            vec![(
                Symbol::gaussian(grid, PhasePoint::new(0.2, 0.1), 1.0),
                AlgebraElement::from_characters(&sys, vec![(Character::Plane([0.7, -0.3]), c(1.0, 0.5)), (Character::Plane([0.0, 0.0]), c(0.2, 0.0))]).unwrap(),
            )],
        )
        .unwrap();
        let g2 = Field::tensor(
            &Symbol::new(grid, |p| c(p.x, 1.0 + p.xi)),
            &AlgebraElement::plane_wave(&sys, [-0.4, 0.9]).unwrap(),
        )
        .unwrap();
        let prod = twisted_product(&g1, &g2).unwrap();
        let nodes = prod.absolute_nodes();
        let oracle = twisted_product_oracle(&g1, &g2, &nodes).unwrap();
        for (k, &(a, b)) in nodes.iter().enumerate() {
            for (si, s) in sys.sigma_samples().iter().enumerate() {
                assert!((prod.eval(a, b, *s) - oracle[k][si]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn fourier_on_fields_is_involutive() {
        let grid = PhaseGrid::new(32).unwrap();
        let sys = DynSystem::kronecker(DEFAULT_ALPHA, 8).unwrap();
        let (g1, _, _) = battery(grid, &sys);
        let back = g1.symplectic_fourier().unwrap().symplectic_fourier().unwrap();
        assert!(l1_distance(&back, &g1).unwrap() < 1e-10);
    }

    #[test]
    fn l1_of_tensor_factorizes() {
        let grid = PhaseGrid::new(32).unwrap();
        let sys = DynSystem::kronecker(DEFAULT_ALPHA, 8).unwrap();
        let h = Symbol::gaussian(grid, PhasePoint::ZERO, 0.7);
        let f = AlgebraElement::monomial(&sys, [2, 1]).unwrap().scale(c(0.0, 1.5));
        let g = Field::tensor(&h, &f).unwrap();
        assert!((l1_norm(&g) - h.l1_norm() * 1.5).abs() < 1e-10);
    }
}
