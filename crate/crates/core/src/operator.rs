//! The discrete nonlocal operator
//!
//! ```text
//! (𝓛_v u)ᵢ = Σ_{j ∈ nbr(i)} (uᵢ − uⱼ)·m_ε(vᵢ, vⱼ; r_ij)·hᴺ
//! ```
//!
//! on the periodic lattice, with the bilinear form and the Kato functional
//! built on the same pair weights. Neighbors are visited in a fixed offset
//! order and every row is accumulated with compensated summation, so results
//! are identical for any worker count and exactly equivariant under lattice
//! shifts.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernels::{levy_constant, levy_constant_full, regular_bound, Coupling, JumpKernel, RegularizedKernel};
use crate::lattice::{Field, Grid};
use crate::math::{self, CompensatedSum};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Lattice offsets `d ∈ [0, M)ᴺ \ {0}` with `min_r ≤ r(d) ≤ max_r`, in a
/// fixed lexicographic order.
pub(crate) fn lattice_offsets(grid: &Grid, min_r: f64, max_r: f64) -> Vec<([usize; 2], f64)> {
    let m = grid.cells();
    let second = if grid.dim() == 2 { m } else { 1 };
    let mut out = Vec::new();
    for d0 in 0..m {
        for d1 in 0..second {
            if d0 == 0 && d1 == 0 {
                continue;
            }
            let r = grid.offset_length([d0, d1]);
            if r >= min_r && r <= max_r {
                out.push(([d0, d1], r));
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
enum Weights {
    /// Value-independent kernel: `m(r)·hᴺ` per offset.
    Linear(Vec<f64>),
    /// `F(a, b)·μ(r)`: `μ(r)·hᴺ` per offset.
    Decoupled { coupling: Coupling, density: Vec<f64> },
    /// Anything else is evaluated pair by pair.
    Generic,
}

/// Precomputed geometry and weights for one grid, regularized kernel and
/// amplitude bound `R`.
#[derive(Debug, Clone)]
pub struct OperatorContext {
    grid: Grid,
    kernel: RegularizedKernel,
    big_r: f64,
    offsets: Vec<[usize; 2]>,
    radii: Vec<f64>,
    weights: Weights,
    tail_estimate: f64,
    bound: f64,
}

impl OperatorContext {
    /// Builds the neighbor geometry: every offset with `ε ≤ r` inside the
    /// kernel support. `tail_estimate` is the majorant mass beyond `L/2` that
    /// the torus drops.
    pub fn build(grid: Grid, kernel: RegularizedKernel, big_r: f64) -> Result<Self> {
        let (left, right) = (grid.dim(), kernel.dimension());
        if left != right {
            return Err(Error::DimensionMismatch { left, right });
        }
        if !(big_r > 0.0) || !big_r.is_finite() {
            return Err(Error::InvalidParameter { name: "R", value: big_r, reason: "must be positive and finite" });
        }
        let eps = kernel.epsilon();
        let pairs = lattice_offsets(&grid, eps, kernel.support_radius());
        if pairs.is_empty() && !kernel.base().is_zero() {
            return Err(Error::EmptyNeighborhood { epsilon: eps, max_distance: grid.max_distance() });
        }
        let (offsets, radii): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let vol = grid.cell_volume();
        let base = kernel.base();
        let weights = if base.is_zero() {
            Weights::Linear(radii.iter().map(|_| 0.0).collect())
        } else if base.is_linear() {
            Weights::Linear(radii.iter().map(|&r| base.eval(0.0, 0.0, r) * vol).collect())
        } else if let Some(d) = base.as_decoupled() {
            Weights::Decoupled {
                coupling: d.coupling().clone(),
                density: radii.iter().map(|&r| d.density().value(grid.dim(), r) * vol).collect(),
            }
        } else {
            Weights::Generic
        };
        if let Weights::Linear(w) | Weights::Decoupled { density: w, .. } = &weights {
            if let Some(k) = w.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFiniteKernel { i: 0, j: grid.index(offsets[k]), value: w[k] });
            }
        }
        let tail_estimate = if base.is_zero() {
            0.0
        } else {
            match levy_constant(base, big_r, grid.period() / 2.0) {
                Ok(k) => k.tail,
                Err(Error::Divergent { .. }) => f64::INFINITY,
                Err(e) => return Err(e),
            }
        };
        let bound = regular_bound(&kernel, &grid, big_r)?;
        Ok(Self { grid, kernel, big_r, offsets, radii, weights, tail_estimate, bound })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kernel(&self) -> &RegularizedKernel {
        &self.kernel
    }

    /// Amplitude bound `R` the context was built for.
    pub fn radius(&self) -> f64 {
        self.big_r
    }

    pub fn tail_estimate(&self) -> f64 {
        self.tail_estimate
    }

    /// `M_R`, the certified bound on row sums of pair weights.
    pub fn regular_bound(&self) -> f64 {
        self.bound
    }

    /// True when the spatial cutoff is finer than the lattice and therefore
    /// removes nothing.
    pub fn cutoff_below_spacing(&self) -> bool {
        self.kernel.epsilon() < self.grid.spacing()
    }

    pub fn neighbor_count(&self) -> usize {
        self.offsets.len()
    }

    /// `(j, r_ij)` for every neighbor of cell `i`, in accumulation order.
    pub fn neighbors(&self, i: usize) -> Vec<(usize, f64)> {
        (0..self.offsets.len()).map(|k| (self.neighbor(i, k), self.radii[k])).collect()
    }

    #[inline]
    fn neighbor(&self, i: usize, k: usize) -> usize {
        let m = self.grid.cells();
        let d = self.offsets[k];
        if self.grid.dim() == 1 {
            let j = i + d[0];
            if j >= m {
                j - m
            } else {
                j
            }
        } else {
            let (c0, c1) = (i / m, i % m);
            ((c0 + d[0]) % m) * m + (c1 + d[1]) % m
        }
    }

    fn check_field(&self, f: &Field) -> Result<()> {
        if *f.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    fn prepared(&self, v: &Field) -> Vec<f64> {
        match &self.weights {
            Weights::Decoupled { coupling, .. } => v.values().iter().map(|&a| coupling.prepare(a)).collect(),
            _ => Vec::new(),
        }
    }

    /// Calls `visit(j, w_ij)` for each neighbor of `i`, `w_ij = m_ε(vᵢ, vⱼ; r)·hᴺ`.
    #[inline]
    fn for_each_weight(
        &self,
        i: usize,
        v: &[f64],
        prep: &[f64],
        mut visit: impl FnMut(usize, f64),
    ) -> Result<()> {
        match &self.weights {
            Weights::Linear(w) => {
                for (k, &wk) in w.iter().enumerate() {
                    visit(self.neighbor(i, k), wk);
                }
            }
            Weights::Decoupled { coupling, density } => {
                let (a, pa) = (v[i], prep[i]);
                for (k, &mu) in density.iter().enumerate() {
                    let j = self.neighbor(i, k);
                    let ramp = self.kernel.ramp_weight(a, v[j]);
                    if ramp == 0.0 || mu == 0.0 {
                        continue;
                    }
                    let w = ramp * coupling.value_prepared(a, v[j], pa, prep[j]) * mu;
                    if !w.is_finite() {
                        return Err(Error::NonFiniteKernel { i, j, value: w });
                    }
                    visit(j, w);
                }
            }
            Weights::Generic => {
                let vol = self.grid.cell_volume();
                for (k, &r) in self.radii.iter().enumerate() {
                    let j = self.neighbor(i, k);
                    let w = self.kernel.eval(v[i], v[j], r) * vol;
                    if !w.is_finite() {
                        return Err(Error::NonFiniteKernel { i, j, value: w });
                    }
                    visit(j, w);
                }
            }
        }
        Ok(())
    }

    fn rows(&self, row: impl Fn(usize) -> Result<f64> + Sync + Send) -> Result<Vec<f64>> {
        let n = self.grid.len();
        #[cfg(feature = "parallel")]
        {
            (0..n).into_par_iter().map(row).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..n).map(row).collect()
        }
    }

    /// `𝓛_v u`.
    pub fn apply(&self, v: &Field, u: &Field) -> Result<Field> {
        self.check_field(v)?;
        self.check_field(u)?;
        let prep = self.prepared(v);
        let (vv, uu) = (v.values(), u.values());
        let out = self.rows(|i| {
            let mut acc = CompensatedSum::new();
            let ui = uu[i];
            self.for_each_weight(i, vv, &prep, |j, w| acc.add((ui - uu[j]) * w))?;
            Ok(acc.value())
        })?;
        Field::new(self.grid, out)
    }

    /// `Σⱼ m_ε(vᵢ, vⱼ; r_ij)·hᴺ` for every row.
    pub fn row_sums(&self, v: &Field) -> Result<Vec<f64>> {
        self.check_field(v)?;
        let prep = self.prepared(v);
        self.rows(|i| {
            let mut acc = CompensatedSum::new();
            self.for_each_weight(i, v.values(), &prep, |_, w| acc.add(w))?;
            Ok(acc.value())
        })
    }

    /// `½ Σᵢ Σⱼ (φᵢ − φⱼ)(ψᵢ − ψⱼ)·m_ε(vᵢ, vⱼ; r_ij)·h²ᴺ`.
    pub fn bilinear_form(&self, v: &Field, phi: &Field, psi: &Field) -> Result<f64> {
        for f in [v, phi, psi] {
            self.check_field(f)?;
        }
        let prep = self.prepared(v);
        let (p, q) = (phi.values(), psi.values());
        let rows = self.rows(|i| {
            let mut acc = CompensatedSum::new();
            self.for_each_weight(i, v.values(), &prep, |j, w| acc.add((p[i] - p[j]) * (q[i] - q[j]) * w))?;
            Ok(acc.value())
        })?;
        Ok(0.5 * math::compensated_sum(rows) * self.grid.cell_volume())
    }

    /// `Σᵢ [(𝓛_u u)ᵢ − (𝓛_v v)ᵢ]·sgn(uᵢ − vᵢ)·hᴺ`, with `sgn(0) = 0`.
    pub fn kato_functional(&self, u: &Field, v: &Field) -> Result<f64> {
        let lu = self.apply(u, u)?;
        let lv = self.apply(v, v)?;
        let terms = (0..u.len()).map(|i| {
            let s = math::sgn(u.values()[i] - v.values()[i]);
            if s == 0.0 {
                0.0
            } else {
                (lu.values()[i] - lv.values()[i]) * s
            }
        });
        Ok(math::compensated_sum(terms) * self.grid.cell_volume())
    }

    /// `(‖𝓛_v u‖₁, K_R·‖u‖_BV)`; the continuous theory guarantees lhs ≤ rhs.
    pub fn l1_operator_bound_check(&self, v: &Field, u: &Field) -> Result<(f64, f64)> {
        let lhs = self.apply(v, u)?.l1();
        let bv = u.bv_norm();
        let rhs = if bv == 0.0 { 0.0 } else { levy_constant_full(self.kernel.base(), self.big_r)? * bv };
        Ok((lhs, rhs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{regularize, Kernel, LevyDensity, ScalarFunction};
    use alloc::vec;

    fn unit_linear(dim: usize) -> Kernel {
        let phi = ScalarFunction::phi_power(2.0).unwrap();
        Kernel::p_laplacian(dim, phi, LevyDensity::compact_bump(100.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn neighbor_geometry() {
        let g = Grid::new(1, 4, 4.0).unwrap();
        let ctx = OperatorContext::build(g, regularize(unit_linear(1), 1.0).unwrap(), 1.0).unwrap();
        let mut r: Vec<f64> = ctx.neighbors(0).iter().map(|n| n.1).collect();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(r, vec![1.0, 1.0, 2.0]);
        // ε must stay in (0, 1], so probe the empty case on a smaller torus
        let small = Grid::new(1, 4, 1.0).unwrap();
        let err = OperatorContext::build(small, regularize(unit_linear(1), 0.75).unwrap(), 1.0).unwrap_err();
        assert!(matches!(err, Error::EmptyNeighborhood { .. }));
    }

    #[test]
    fn apply_small_example() {
        let g = Grid::new(1, 4, 4.0).unwrap();
        let ctx = OperatorContext::build(g, regularize(unit_linear(1), 1.0).unwrap(), 1.0).unwrap();
        let u = Field::new(g, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let v = Field::new(g, vec![0.3, -2.0, 5.0, 1.0]).unwrap();
        assert_eq!(ctx.apply(&v, &u).unwrap().values(), &[3.0, -1.0, -1.0, -1.0]);
        let c = Field::constant(g, 2.5);
        assert!(ctx.apply(&v, &c).unwrap().values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn compact_support_has_zero_tail() {
        let g = Grid::new(1, 16, 8.0).unwrap();
        let k = Kernel::porous_medium(
            1,
            ScalarFunction::power_odd(2.0).unwrap(),
            LevyDensity::compact_bump(2.0, 1.0).unwrap(),
        )
        .unwrap();
        let ctx = OperatorContext::build(g, regularize(k, 0.5).unwrap(), 1.0).unwrap();
        assert_eq!(ctx.tail_estimate(), 0.0);
        assert_eq!(ctx.neighbor_count(), 8);
    }

    #[test]
    fn bound_check_on_constants() {
        let g = Grid::new(1, 16, 4.0).unwrap();
        let k = Kernel::fractional_heat(1, 0.5, 1.0).unwrap();
        let ctx = OperatorContext::build(g, regularize(k, 0.25).unwrap(), 1.0).unwrap();
        let z = Field::zeros(g);
        assert_eq!(ctx.l1_operator_bound_check(&z, &z).unwrap(), (0.0, 0.0));
        let c = Field::constant(g, -2.0);
        let (lhs, rhs) = ctx.l1_operator_bound_check(&c, &c).unwrap();
        assert_eq!(lhs, 0.0);
        assert!((rhs - 2.0 * 2.0 * 4.0 * 8.0).abs() < 1e-6);
    }
}
