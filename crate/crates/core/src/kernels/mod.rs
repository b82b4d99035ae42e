//! Homogeneous jump kernels `m(a, b; r)`, their majorants and Lévy constants,
//! and the ε-regularization that makes them bounded and Lipschitz in `u`.

mod decoupled;
mod density;
mod regularized;
mod scalar;
mod variable_order;

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use core::fmt;

pub use decoupled::{Coupling, Decoupled, DIAGONAL_THRESHOLD};
pub use density::LevyDensity;
pub use regularized::{regular_bound, regularize, smooth_ramp, RegularizedKernel};
pub use scalar::ScalarFunction;
pub use variable_order::{OrderFunction, Theta, VariableOrder};

use crate::error::{Error, Result};
use crate::quadrature;

/// A homogeneous jump kernel: a density `m(a, b; r) ≥ 0` of jumps over
/// distance `r` between states `a` and `b`, together with a radial majorant
/// `m_R(r) ≥ m(a, b; r)` for `|a|, |b| ≤ R`.
///
/// Implementations must be pure: the operator evaluates them from many
/// threads at once.
pub trait JumpKernel: Send + Sync + fmt::Debug {
    fn dimension(&self) -> usize;

    fn eval(&self, a: f64, b: f64, r: f64) -> f64;

    fn majorant(&self, big_r: f64, r: f64) -> f64;

    /// Radius beyond which the kernel vanishes identically.
    fn support_radius(&self) -> f64 {
        f64::INFINITY
    }

    /// True when `eval` does not depend on `a` and `b`.
    fn is_linear(&self) -> bool {
        false
    }

    fn label(&self) -> String;
}

/// `α·k₁ + β·k₂`.
#[derive(Debug, Clone)]
pub struct Cone {
    alpha: f64,
    first: Kernel,
    beta: f64,
    second: Kernel,
}

impl Cone {
    fn terms(&self) -> impl Iterator<Item = (f64, &Kernel)> {
        [(self.alpha, &self.first), (self.beta, &self.second)].into_iter().filter(|(c, _)| *c != 0.0)
    }
}

/// The built-in kernel zoo plus an escape hatch for user kernels.
#[derive(Debug, Clone)]
pub enum Kernel {
    Zero { dim: usize },
    Decoupled(Decoupled),
    VariableOrder(VariableOrder),
    Cone(Arc<Cone>),
    Custom(Arc<dyn JumpKernel>),
}

fn check_dim(dim: usize) -> Result<()> {
    if (1..=2).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

fn incompatible(role: &'static str, f: &ScalarFunction) -> Error {
    Error::IncompatibleFunction { role, function: f.label() }
}

impl Kernel {
    pub fn zero(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Kernel::Zero { dim })
    }

    fn decoupled(dim: usize, coupling: Coupling, density: LevyDensity) -> Result<Self> {
        check_dim(dim)?;
        density.validate()?;
        Ok(Kernel::Decoupled(Decoupled { dim, coupling, density }))
    }

    /// `C·r^{−N−α}`, the kernel of the linear fractional heat equation.
    pub fn fractional_heat(dim: usize, alpha: f64, amplitude: f64) -> Result<Self> {
        Self::decoupled(dim, Coupling::Constant, LevyDensity::power_law(alpha, amplitude)?)
    }

    /// `[(f(a) − f(b))/(a − b)]·μ(r)` for a non-decreasing `C¹` function `f`.
    pub fn porous_medium(dim: usize, f: ScalarFunction, mu: LevyDensity) -> Result<Self> {
        if f.is_monotone_c1() == Some(false) {
            return Err(incompatible("non-decreasing C1 f", &f));
        }
        Self::decoupled(dim, Coupling::PorousMedium(f), mu)
    }

    /// `[f(a) + f(b)]·μ(r)` for a convex, non-negative `f`.
    pub fn convex_diffusion(dim: usize, f: ScalarFunction, mu: LevyDensity) -> Result<Self> {
        if f.is_convex_nonnegative() == Some(false) {
            return Err(incompatible("convex non-negative f", &f));
        }
        Self::decoupled(dim, Coupling::Convex(f), mu)
    }

    /// `[Φ(a − b)/(a − b)]·μ(r)`.
    pub fn p_laplacian(dim: usize, phi: ScalarFunction, mu: LevyDensity) -> Result<Self> {
        if phi.is_admissible_phi() == Some(false) {
            return Err(incompatible("odd non-decreasing phi", &phi));
        }
        Self::decoupled(dim, Coupling::PLaplacian(phi), mu)
    }

    /// `[Φ(f(a) − f(b))/(a − b)]·μ(r)`.
    pub fn doubly_nonlinear(dim: usize, f: ScalarFunction, phi: ScalarFunction, mu: LevyDensity) -> Result<Self> {
        if f.is_monotone_c1() == Some(false) {
            return Err(incompatible("non-decreasing C1 f", &f));
        }
        if phi.is_admissible_phi() == Some(false) {
            return Err(incompatible("odd non-decreasing phi", &phi));
        }
        Self::decoupled(dim, Coupling::DoublyNonlinear { f, phi }, mu)
    }

    /// `r^{−N−Ψ(|a−b|; r)}` with order bounds `0 < A1 ≤ Ψ ≤ A2 < 1`.
    pub fn variable_order(
        dim: usize,
        psi1: OrderFunction,
        psi2: OrderFunction,
        theta: Theta,
        a1: f64,
        a2: f64,
    ) -> Result<Self> {
        check_dim(dim)?;
        Ok(Kernel::VariableOrder(VariableOrder::new(dim, psi1, psi2, theta, a1, a2)?))
    }

    /// `α·k₁ + β·k₂` for `α, β ≥ 0`. Collapses to the zero kernel when both
    /// coefficients vanish.
    pub fn cone_combine(alpha: f64, first: Kernel, beta: f64, second: Kernel) -> Result<Self> {
        for (name, c) in [("alpha", alpha), ("beta", beta)] {
            if !(c >= 0.0) || !c.is_finite() {
                return Err(Error::InvalidParameter { name, value: c, reason: "cone coefficients must be >= 0" });
            }
        }
        let (left, right) = (first.dimension(), second.dimension());
        if left != right {
            return Err(Error::DimensionMismatch { left, right });
        }
        if alpha == 0.0 && beta == 0.0 {
            return Ok(Kernel::Zero { dim: left });
        }
        Ok(Kernel::Cone(Arc::new(Cone { alpha, first, beta, second })))
    }

    pub fn custom(kernel: Arc<dyn JumpKernel>) -> Result<Self> {
        check_dim(kernel.dimension())?;
        Ok(Kernel::Custom(kernel))
    }

    /// The decoupled factorization `F(a, b)·μ(r)`, when the kernel has one.
    pub fn as_decoupled(&self) -> Option<&Decoupled> {
        match self {
            Kernel::Decoupled(d) => Some(d),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Kernel::Zero { .. })
    }
}

impl JumpKernel for Kernel {
    fn dimension(&self) -> usize {
        match self {
            Kernel::Zero { dim } => *dim,
            Kernel::Decoupled(d) => d.dim,
            Kernel::VariableOrder(v) => v.dim,
            Kernel::Cone(c) => c.first.dimension(),
            Kernel::Custom(k) => k.dimension(),
        }
    }

    #[inline]
    fn eval(&self, a: f64, b: f64, r: f64) -> f64 {
        match self {
            Kernel::Zero { .. } => 0.0,
            Kernel::Decoupled(d) => d.eval(a, b, r),
            Kernel::VariableOrder(v) => v.eval(a, b, r),
            Kernel::Cone(c) => c.terms().map(|(w, k)| w * k.eval(a, b, r)).sum(),
            Kernel::Custom(k) => k.eval(a, b, r),
        }
    }

    fn majorant(&self, big_r: f64, r: f64) -> f64 {
        match self {
            Kernel::Zero { .. } => 0.0,
            Kernel::Decoupled(d) => d.majorant(big_r, r),
            Kernel::VariableOrder(v) => v.majorant(r),
            Kernel::Cone(c) => c.terms().map(|(w, k)| w * k.majorant(big_r, r)).sum(),
            Kernel::Custom(k) => k.majorant(big_r, r),
        }
    }

    fn support_radius(&self) -> f64 {
        match self {
            Kernel::Zero { .. } => 0.0,
            Kernel::Decoupled(d) => d.density.support_radius(),
            Kernel::VariableOrder(_) => f64::INFINITY,
            Kernel::Cone(c) => c.terms().map(|(_, k)| k.support_radius()).fold(0.0, f64::max),
            Kernel::Custom(k) => k.support_radius(),
        }
    }

    fn is_linear(&self) -> bool {
        match self {
            Kernel::Zero { .. } => true,
            Kernel::Decoupled(d) => d.coupling.is_constant(),
            Kernel::VariableOrder(_) => false,
            Kernel::Cone(c) => c.terms().all(|(_, k)| k.is_linear()),
            Kernel::Custom(k) => k.is_linear(),
        }
    }

    fn label(&self) -> String {
        match self {
            Kernel::Zero { .. } => "zero".into(),
            Kernel::Decoupled(d) => d.label(),
            Kernel::VariableOrder(v) => v.label(),
            Kernel::Cone(c) => {
                format!("{}*({}) + {}*({})", c.alpha, c.first.label(), c.beta, c.second.label())
            }
            Kernel::Custom(k) => k.label(),
        }
    }
}

/// Lévy constant `K_R = ∫_{|y| ≤ r_max} (1∧|y|)·m_R(|y|) dy` and the part of
/// the full integral beyond `r_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyConstant {
    pub value: f64,
    pub tail: f64,
}

/// Radial quadrature of the weighted majorant. Pass `f64::INFINITY` as
/// `r_max` for the untruncated constant.
pub fn levy_constant(kernel: &dyn JumpKernel, big_r: f64, r_max: f64) -> Result<LevyConstant> {
    if !(big_r > 0.0) {
        return Err(Error::InvalidParameter { name: "R", value: big_r, reason: "must be positive" });
    }
    if !(r_max > 0.0) {
        return Err(Error::InvalidParameter { name: "r_max", value: r_max, reason: "must be positive" });
    }
    let dim = kernel.dimension();
    let support = kernel.support_radius();
    let integrand = |r: f64| {
        let sphere = if dim == 1 { 2.0 } else { 2.0 * core::f64::consts::PI * r };
        r.min(1.0) * kernel.majorant(big_r, r) * sphere
    };
    let upper = r_max.min(support);
    let value = quadrature::radial_integral(integrand, 0.0, upper)?;
    let tail = if support > r_max { quadrature::radial_integral(integrand, r_max, support)? } else { 0.0 };
    Ok(LevyConstant { value, tail })
}

/// `levy_constant(kernel, R, ∞).value`.
pub fn levy_constant_full(kernel: &dyn JumpKernel, big_r: f64) -> Result<f64> {
    Ok(levy_constant(kernel, big_r, f64::INFINITY)?.value)
}
