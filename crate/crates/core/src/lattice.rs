//! Periodic lattice geometry, fields, discrete norms and initial profiles.
//!
//! The domain is the flat torus `[0, L)ᴺ` sampled at cell centers
//! `x_k = (k + ½)h`, `h = L/M`. Fields are flat row-major arrays: in two
//! dimensions the flat index is `i = i₀·M + i₁`, axis 0 being the slow one.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::math::{self, CompensatedSum};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    cells: usize,
    period: f64,
}

impl Grid {
    pub fn new(dim: usize, cells: usize, period: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if cells < 3 {
            return Err(Error::TooFewCells(cells));
        }
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::NonPositivePeriod(period));
        }
        Ok(Self { dim, cells, period })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Mesh width `h = L/M`; derived, never stored.
    pub fn spacing(&self) -> f64 {
        self.period / self.cells as f64
    }

    /// `hᴺ`.
    pub fn cell_volume(&self) -> f64 {
        let h = self.spacing();
        if self.dim == 1 {
            h
        } else {
            h * h
        }
    }

    /// Number of cells, `Mᴺ`.
    pub fn len(&self) -> usize {
        if self.dim == 1 {
            self.cells
        } else {
            self.cells * self.cells
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest minimal-image distance, `(L/2)·√N` up to lattice quantization.
    pub fn max_distance(&self) -> f64 {
        let half = (self.cells / 2) as f64 * self.spacing();
        half * math::sqrt(self.dim as f64)
    }

    pub fn coords(&self, i: usize) -> [usize; 2] {
        if self.dim == 1 {
            [i, 0]
        } else {
            [i / self.cells, i % self.cells]
        }
    }

    pub fn index(&self, c: [usize; 2]) -> usize {
        if self.dim == 1 {
            c[0]
        } else {
            c[0] * self.cells + c[1]
        }
    }

    /// Cell-center position.
    pub fn position(&self, i: usize) -> [f64; 2] {
        let h = self.spacing();
        let c = self.coords(i);
        let y = if self.dim == 2 { (c[1] as f64 + 0.5) * h } else { 0.0 };
        [(c[0] as f64 + 0.5) * h, y]
    }

    /// Minimal-image length of a per-axis lattice offset `d ∈ [0, M)`.
    pub(crate) fn offset_length(&self, d: [usize; 2]) -> f64 {
        let h = self.spacing();
        let wrap = |k: usize| k.min(self.cells - k) as f64 * h;
        if self.dim == 1 {
            wrap(d[0])
        } else {
            let (a, b) = (wrap(d[0]), wrap(d[1]));
            math::sqrt(a * a + b * b)
        }
    }

    /// Minimal-image Euclidean distance between cells `i` and `j`.
    pub fn torus_distance(&self, i: usize, j: usize) -> f64 {
        let (ci, cj) = (self.coords(i), self.coords(j));
        let m = self.cells;
        let d = [(cj[0] + m - ci[0]) % m, (cj[1] + m - ci[1]) % m];
        self.offset_length(d)
    }
}

/// Real cell values on a [`Grid`]. Immutable once built; every entry finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index, value });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    /// Samples `f` at cell centers.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.position(i))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mass(&self) -> f64 {
        math::compensated_sum(self.values.iter().copied()) * self.grid.cell_volume()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete `Lᵖ` norm; pass `f64::INFINITY` for the sup norm.
    pub fn norm_lp(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::InvalidExponent(p));
        }
        if p == f64::INFINITY {
            return Ok(self.sup_norm());
        }
        let vol = self.grid.cell_volume();
        let mut acc = CompensatedSum::new();
        if p == 1.0 {
            self.values.iter().for_each(|v| acc.add(v.abs()));
            Ok(acc.value() * vol)
        } else if p == 2.0 {
            self.values.iter().for_each(|v| acc.add(v * v));
            Ok(math::sqrt(acc.value() * vol))
        } else {
            self.values.iter().for_each(|v| acc.add(math::pow_abs(*v, p)));
            Ok(math::pow(acc.value() * vol, 1.0 / p))
        }
    }

    pub fn l1(&self) -> f64 {
        self.norm_lp(1.0).expect("p = 1 is admissible")
    }

    /// `Σ_axes Σᵢ |u_{i+e} − uᵢ| · h^{N−1}` with periodic wrap.
    pub fn total_variation(&self) -> f64 {
        let g = self.grid;
        let m = g.cells();
        let face = if g.dim() == 1 { 1.0 } else { g.spacing() };
        let mut acc = CompensatedSum::new();
        for i in 0..self.values.len() {
            let c = g.coords(i);
            for axis in 0..g.dim() {
                let mut n = c;
                n[axis] = (n[axis] + 1) % m;
                acc.add((self.values[g.index(n)] - self.values[i]).abs());
            }
        }
        acc.value() * face
    }

    /// `2‖u‖₁ + TV(u)`.
    pub fn bv_norm(&self) -> f64 {
        2.0 * self.l1() + self.total_variation()
    }

    /// Periodic translation: `shifted(ξ)ᵢ = u_{i−ξ mod M}`, i.e. the profile
    /// moves in the `+ξ` direction.
    pub fn shifted(&self, offset: [isize; 2]) -> Field {
        let g = self.grid;
        let m = g.cells() as isize;
        let wrap = |k: usize, d: isize| ((k as isize - d).rem_euclid(m)) as usize;
        let values = (0..self.values.len())
            .map(|i| {
                let c = g.coords(i);
                let src = if g.dim() == 1 {
                    [wrap(c[0], offset[0]), 0]
                } else {
                    [wrap(c[0], offset[0]), wrap(c[1], offset[1])]
                };
                self.values[g.index(src)]
            })
            .collect();
        Field { grid: g, values }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        Field::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise `self − other`.
    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Field::new(self.grid, values)
    }

    /// `‖self − other‖₁`.
    pub fn l1_distance(&self, other: &Field) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let s = math::compensated_sum(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()));
        Ok(s * self.grid.cell_volume())
    }

    /// Discrete `L²` pairing `Σ aᵢbᵢ hᴺ`.
    pub fn inner(&self, other: &Field) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let s = math::compensated_sum(self.values.iter().zip(&other.values).map(|(a, b)| a * b));
        Ok(s * self.grid.cell_volume())
    }
}

/// Initial-condition recipes. Every profile produces a bounded field with
/// finite discrete total variation.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// Indicator of the cube of side `width` centered at `center` on every axis.
    Box { center: f64, width: f64, height: f64 },
    /// `height·exp(1 − 1/(1 − ρ²))` with `ρ = 2|x − c|/width`.
    SmoothBump { center: f64, width: f64, height: f64 },
    /// `high` on `[position, L)` along axis 0, `low` elsewhere.
    Step { position: f64, low: f64, high: f64 },
    /// Random choice between `low` and `high` on `blocks` equal blocks per axis.
    TwoLevel { low: f64, high: f64, blocks: usize, seed: u64 },
    /// Piecewise constant with `pieces` random breakpoints per axis and levels
    /// in `[−amplitude, amplitude]`.
    RandomBv { amplitude: f64, pieces: usize, seed: u64 },
}

impl Default for Profile {
    fn default() -> Self {
        Profile::Box { center: f64::NAN, width: f64::NAN, height: 1.0 }
    }
}

/// Signed periodic displacement `x − c` folded into `[−L/2, L/2)`.
fn periodic_offset(x: f64, c: f64, period: f64) -> f64 {
    let d = x - c;
    d - period * math::floor(d / period + 0.5)
}

impl Profile {
    /// The default box of the command-line driver: height 1, width `L/4`,
    /// centered at `L/2`.
    pub fn default_box(grid: &Grid) -> Self {
        Profile::Box { center: grid.period() / 2.0, width: grid.period() / 4.0, height: 1.0 }
    }

    pub fn sample(&self, grid: &Grid) -> Result<Field> {
        let l = grid.period();
        let check_width = |w: f64| {
            if !(w > 0.0) || w > l {
                Err(Error::InvalidProfile("width must lie in (0, period]".to_string()))
            } else {
                Ok(())
            }
        };
        match *self {
            Profile::Box { center, width, height } => {
                check_width(width)?;
                let inside = |x: f64| periodic_offset(x, center, l).abs() < width / 2.0;
                Field::from_fn(*grid, |p| {
                    let hit = inside(p[0]) && (grid.dim() == 1 || inside(p[1]));
                    if hit {
                        height
                    } else {
                        0.0
                    }
                })
            }
            Profile::SmoothBump { center, width, height } => {
                check_width(width)?;
                let radius = width / 2.0;
                Field::from_fn(*grid, |p| {
                    let dx = periodic_offset(p[0], center, l);
                    let dy = if grid.dim() == 2 { periodic_offset(p[1], center, l) } else { 0.0 };
                    let rho2 = (dx * dx + dy * dy) / (radius * radius);
                    if rho2 < 1.0 {
                        height * math::exp(1.0 - 1.0 / (1.0 - rho2))
                    } else {
                        0.0
                    }
                })
            }
            Profile::Step { position, low, high } => {
                if !(0.0..=l).contains(&position) {
                    return Err(Error::InvalidProfile("step position outside [0, period]".to_string()));
                }
                Field::from_fn(*grid, |p| if p[0] >= position { high } else { low })
            }
            Profile::TwoLevel { low, high, blocks, seed } => {
                if blocks == 0 || blocks > grid.cells() {
                    return Err(Error::InvalidProfile("blocks must lie in 1..=cells".to_string()));
                }
                let per_axis = if grid.dim() == 1 { blocks } else { blocks * blocks };
                let mut rng = math::seeded_rng(seed, 1);
                let pick: Vec<f64> =
                    (0..per_axis).map(|_| if rng.random::<bool>() { high } else { low }).collect();
                let block_of = |k: usize| k * blocks / grid.cells();
                let values = (0..grid.len())
                    .map(|i| {
                        let c = grid.coords(i);
                        let b = if grid.dim() == 1 {
                            block_of(c[0])
                        } else {
                            block_of(c[0]) * blocks + block_of(c[1])
                        };
                        pick[b]
                    })
                    .collect();
                Field::new(*grid, values)
            }
            Profile::RandomBv { amplitude, pieces, seed } => {
                if pieces == 0 {
                    return Err(Error::InvalidProfile("random_bv needs at least one piece".to_string()));
                }
                if !(amplitude >= 0.0) {
                    return Err(Error::InvalidProfile("amplitude must be non-negative".to_string()));
                }
                let mut rng = math::seeded_rng(seed, 2);
                let mut axis_profile = || {
                    let mut cuts: Vec<f64> = (0..pieces).map(|_| rng.random::<f64>() * l).collect();
                    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite cut"));
                    let levels: Vec<f64> =
                        (0..=pieces).map(|_| amplitude * (2.0 * rng.random::<f64>() - 1.0)).collect();
                    (cuts, levels)
                };
                let axes: Vec<_> = (0..grid.dim()).map(|_| axis_profile()).collect();
                let eval = |(cuts, levels): &(Vec<f64>, Vec<f64>), x: f64| {
                    let k = cuts.iter().take_while(|&&c| c <= x).count();
                    // the torus closes the last piece onto the first
                    if k == cuts.len() {
                        levels[0]
                    } else {
                        levels[k]
                    }
                };
                let scale = 1.0 / grid.dim() as f64;
                Field::from_fn(*grid, |p| {
                    axes.iter().enumerate().map(|(a, ax)| eval(ax, p[a])).sum::<f64>() * scale
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(m: usize, l: f64) -> Grid {
        Grid::new(1, m, l).unwrap()
    }

    #[test]
    fn grid_construction() {
        let g = line(4, 4.0);
        assert_eq!(g.spacing(), 1.0);
        let g2 = Grid::new(2, 64, 1.0).unwrap();
        assert_eq!(g2.spacing(), 1.0 / 64.0);
        assert_eq!(g2.len(), 4096);
        assert_eq!(Grid::new(3, 8, 1.0), Err(Error::UnsupportedDimension(3)));
        assert_eq!(Grid::new(1, 2, 1.0), Err(Error::TooFewCells(2)));
        assert!(matches!(Grid::new(1, 8, 0.0), Err(Error::NonPositivePeriod(_))));
    }

    #[test]
    fn torus_distance_wraps() {
        let g = line(4, 4.0);
        assert_eq!(g.torus_distance(0, 3), 1.0);
        assert_eq!(g.torus_distance(0, 2), 2.0);
        assert_eq!(g.torus_distance(1, 1), 0.0);
        let g2 = Grid::new(2, 4, 4.0).unwrap();
        let (i, j) = (g2.index([0, 0]), g2.index([3, 3]));
        assert!((g2.torus_distance(i, j) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn norms_on_small_fields() {
        let g = line(4, 4.0);
        let u = Field::new(g, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(u.norm_lp(1.0).unwrap(), 1.0);
        assert_eq!(u.norm_lp(f64::INFINITY).unwrap(), 1.0);
        assert_eq!(u.total_variation(), 2.0);
        assert_eq!(u.bv_norm(), 4.0);
        assert!(matches!(u.norm_lp(0.5), Err(Error::InvalidExponent(_))));

        let g2 = Grid::new(1, 3, 3.0).unwrap();
        let v = Field::new(g2, vec![3.0, 4.0, 0.0]).unwrap();
        assert!((v.norm_lp(2.0).unwrap() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn constant_and_zero_fields() {
        let g = Grid::new(2, 5, 2.0).unwrap();
        assert_eq!(Field::constant(g, 3.0).total_variation(), 0.0);
        assert_eq!(Field::zeros(g).bv_norm(), 0.0);
    }

    #[test]
    fn shift_is_cyclic() {
        let g = line(4, 4.0);
        let u = Field::new(g, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(u.shifted([1, 0]).values(), &[4.0, 1.0, 2.0, 3.0]);
        assert_eq!(u.shifted([0, 0]), u);
        assert_eq!(u.shifted([4, 0]), u);
        assert_eq!(u.shifted([-1, 0]).values(), &[2.0, 3.0, 4.0, 1.0]);
    }

    #[test]
    fn rejects_bad_fields() {
        let g = line(4, 4.0);
        assert!(matches!(Field::new(g, vec![0.0; 3]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(
            Field::new(g, vec![0.0, f64::NAN, 0.0, 0.0]),
            Err(Error::NonFiniteValue { index: 1, .. })
        ));
    }

    #[test]
    fn box_profile_mass() {
        let g = line(8, 8.0);
        let u = Profile::Box { center: 4.0, width: 2.0, height: 1.0 }.sample(&g).unwrap();
        assert_eq!(u.mass(), 2.0);
        assert!(u.values().iter().all(|&v| v == 0.0 || v == 1.0));
        let too_wide = Profile::Box { center: 4.0, width: 9.0, height: 1.0 };
        assert!(matches!(too_wide.sample(&g), Err(Error::InvalidProfile(_))));
    }

    #[test]
    fn two_level_and_random_profiles() {
        let g = line(32, 4.0);
        let u = Profile::TwoLevel { low: -1.0, high: 1.0, blocks: 8, seed: 3 }.sample(&g).unwrap();
        assert!(u.values().iter().all(|&v| v == -1.0 || v == 1.0));
        let p = Profile::RandomBv { amplitude: 2.0, pieces: 5, seed: 11 };
        let a = p.sample(&g).unwrap();
        let b = p.sample(&g).unwrap();
        assert_eq!(a, b);
        assert!(a.sup_norm() <= 2.0);
        let g2 = Grid::new(2, 16, 1.0).unwrap();
        assert!(p.sample(&g2).unwrap().total_variation().is_finite());
    }

    #[test]
    fn smooth_bump_peaks_at_height() {
        let g = line(9, 9.0);
        let u = Profile::SmoothBump { center: 4.5, width: 4.0, height: 2.0 }.sample(&g).unwrap();
        assert_eq!(u.max(), 2.0);
        assert_eq!(u.min(), 0.0);
    }
}
