use alloc::format;
use alloc::string::String;

use super::{levy_constant_full, JumpKernel, Kernel};
use crate::error::{Error, Result};
use crate::lattice::Grid;
use crate::math::CompensatedSum;

/// Ramp `h_ε(x)`: `0` for `x ≤ ε/2`, `1` for `x ≥ ε`, and the quintic
/// smoothstep `6s⁵ − 15s⁴ + 10s³` in between.
#[inline]
pub fn smooth_ramp(epsilon: f64, x: f64) -> f64 {
    let half = 0.5 * epsilon;
    if x <= half {
        return 0.0;
    }
    if x >= epsilon {
        return 1.0;
    }
    let s = (x - half) / half;
    s * s * s * (s * (6.0 * s - 15.0) + 10.0)
}

/// `m_ε(a, b; r) = h_ε(|a − b|)·𝟙_{r ≥ ε}·m(a, b; r)`.
///
/// Kernels that do not depend on `(a, b)` skip the ramp: they are already
/// Lipschitz in `u`, and keeping them linear preserves the exact linear
/// structure of the discrete operator.
#[derive(Debug, Clone)]
pub struct RegularizedKernel {
    base: Kernel,
    epsilon: f64,
    ramp: bool,
}

pub fn regularize(kernel: Kernel, epsilon: f64) -> Result<RegularizedKernel> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidParameter { name: "epsilon", value: epsilon, reason: "must lie in (0, 1]" });
    }
    let ramp = !kernel.is_linear();
    Ok(RegularizedKernel { base: kernel, epsilon, ramp })
}

impl RegularizedKernel {
    /// The base kernel wrapped without cutoff or ramp (`ε = 0`). Useful to
    /// demonstrate that unregularized kernels are not regular.
    pub fn unregularized(kernel: Kernel) -> Self {
        RegularizedKernel { base: kernel, epsilon: 0.0, ramp: false }
    }

    pub fn base(&self) -> &Kernel {
        &self.base
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn ramp_active(&self) -> bool {
        self.ramp
    }

    #[inline]
    pub fn ramp_weight(&self, a: f64, b: f64) -> f64 {
        if self.ramp {
            smooth_ramp(self.epsilon, (a - b).abs())
        } else {
            1.0
        }
    }
}

impl JumpKernel for RegularizedKernel {
    fn dimension(&self) -> usize {
        self.base.dimension()
    }

    #[inline]
    fn eval(&self, a: f64, b: f64, r: f64) -> f64 {
        if r < self.epsilon {
            return 0.0;
        }
        let w = self.ramp_weight(a, b);
        if w == 0.0 {
            0.0
        } else {
            w * self.base.eval(a, b, r)
        }
    }

    fn majorant(&self, big_r: f64, r: f64) -> f64 {
        if r < self.epsilon {
            0.0
        } else {
            self.base.majorant(big_r, r)
        }
    }

    fn support_radius(&self) -> f64 {
        self.base.support_radius()
    }

    fn is_linear(&self) -> bool {
        self.base.is_linear()
    }

    fn label(&self) -> String {
        format!("{} [eps={}]", self.base.label(), self.epsilon)
    }
}

/// Upper bound `M_R` on the lattice row sums `Σⱼ m_ε(a, b; r_{ij})·hᴺ` over
/// `|a|, |b| ≤ R`: the smaller of `ε⁻¹K_R` and the direct lattice sum of the
/// majorant over `r ≥ ε`.
pub fn regular_bound(kernel: &RegularizedKernel, grid: &Grid, big_r: f64) -> Result<f64> {
    if kernel.base.is_zero() {
        return Ok(0.0);
    }
    let from_levy = match levy_constant_full(&kernel.base, big_r) {
        Ok(k) if kernel.epsilon > 0.0 => k / kernel.epsilon,
        Ok(_) | Err(Error::Divergent { .. }) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    let m = grid.cells();
    let mut acc = CompensatedSum::new();
    let second = if grid.dim() == 2 { m } else { 1 };
    for d0 in 0..m {
        for d1 in 0..second {
            if d0 == 0 && d1 == 0 {
                continue;
            }
            let r = grid.offset_length([d0, d1]);
            if r >= kernel.epsilon {
                acc.add(kernel.base.majorant(big_r, r));
            }
        }
    }
    let direct = acc.value() * grid.cell_volume();
    Ok(from_levy.min(direct))
}
