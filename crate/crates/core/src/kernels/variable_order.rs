use alloc::format;
use alloc::string::String;

use crate::error::{Error, Result};
use crate::math;

/// `𝔞 ↦ base + amplitude·(1 − e^{−rate·𝔞})` for `𝔞 = |a − b| ≥ 0`.
///
/// Non-decreasing when `amplitude ≥ 0`, non-increasing when `amplitude ≤ 0`;
/// `amplitude = 0` is a constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderFunction {
    pub base: f64,
    pub amplitude: f64,
    pub rate: f64,
}

impl OrderFunction {
    pub fn constant(c: f64) -> Self {
        Self { base: c, amplitude: 0.0, rate: 0.0 }
    }

    pub fn saturating(base: f64, amplitude: f64, rate: f64) -> Self {
        Self { base, amplitude, rate }
    }

    #[inline]
    pub fn eval(&self, gap: f64) -> f64 {
        if self.amplitude == 0.0 {
            self.base
        } else {
            self.base + self.amplitude * (1.0 - math::exp(-self.rate * gap))
        }
    }

    /// Closure of the range over `𝔞 ∈ [0, ∞)`.
    fn range(&self) -> (f64, f64) {
        let end = self.base + self.amplitude;
        (self.base.min(end), self.base.max(end))
    }
}

/// The spatial part `Θ(z)` of the variable order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Theta {
    Constant(f64),
    /// `center − amplitude·sin(1/z)`: bounded, discontinuous at the origin.
    Oscillating { center: f64, amplitude: f64 },
}

impl Theta {
    #[inline]
    pub fn eval(&self, z: f64) -> f64 {
        match *self {
            Theta::Constant(c) => c,
            Theta::Oscillating { center, amplitude } => center - amplitude * math::sin(1.0 / z),
        }
    }

    fn range(&self) -> (f64, f64) {
        match *self {
            Theta::Constant(c) => (c, c),
            Theta::Oscillating { center, amplitude } => (center - amplitude.abs(), center + amplitude.abs()),
        }
    }
}

/// `r^{−N−Ψ(|a−b|; r)}` with `Ψ = Ψ₁(𝔞)𝟙_{r<1} + Ψ₂(𝔞)𝟙_{r≥1} + Θ(r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableOrder {
    pub(crate) dim: usize,
    pub(crate) psi1: OrderFunction,
    pub(crate) psi2: OrderFunction,
    pub(crate) theta: Theta,
    pub(crate) a1: f64,
    pub(crate) a2: f64,
}

impl VariableOrder {
    pub(crate) fn new(
        dim: usize,
        psi1: OrderFunction,
        psi2: OrderFunction,
        theta: Theta,
        a1: f64,
        a2: f64,
    ) -> Result<Self> {
        if !(a1 > 0.0) {
            return Err(Error::InvalidParameter { name: "A1", value: a1, reason: "must be positive" });
        }
        if !(a2 < 1.0) {
            return Err(Error::InvalidParameter { name: "A2", value: a2, reason: "must be below 1" });
        }
        if a1 > a2 {
            return Err(Error::InvalidParameter { name: "A1", value: a1, reason: "must not exceed A2" });
        }
        let finite = |o: &OrderFunction| o.base.is_finite() && o.amplitude.is_finite() && o.rate >= 0.0;
        if !finite(&psi1) || !finite(&psi2) {
            return Err(Error::InvalidParameter {
                name: "psi",
                value: f64::NAN,
                reason: "order functions need finite parameters and rate >= 0",
            });
        }
        if psi1.amplitude < 0.0 {
            return Err(Error::InvalidParameter {
                name: "psi1.amplitude",
                value: psi1.amplitude,
                reason: "psi1 must be non-decreasing",
            });
        }
        if psi2.amplitude > 0.0 {
            return Err(Error::InvalidParameter {
                name: "psi2.amplitude",
                value: psi2.amplitude,
                reason: "psi2 must be non-increasing",
            });
        }
        let (t_lo, t_hi) = theta.range();
        if t_lo < a1 || t_hi > a2 {
            return Err(Error::InvalidParameter { name: "theta", value: t_lo, reason: "theta must stay in [A1, A2]" });
        }
        for (name, psi) in [("psi1 + theta", psi1), ("psi2 + theta", psi2)] {
            let (lo, hi) = psi.range();
            if lo + t_lo < a1 || hi + t_hi > a2 {
                return Err(Error::InvalidParameter { name, value: lo + t_lo, reason: "order must stay in [A1, A2]" });
            }
        }
        Ok(Self { dim, psi1, psi2, theta, a1, a2 })
    }

    #[inline]
    pub fn order(&self, a: f64, b: f64, r: f64) -> f64 {
        let gap = (a - b).abs();
        let psi = if r < 1.0 { self.psi1.eval(gap) } else { self.psi2.eval(gap) };
        psi + self.theta.eval(r)
    }

    #[inline]
    pub fn eval(&self, a: f64, b: f64, r: f64) -> f64 {
        math::pow(r, -(self.dim as f64) - self.order(a, b, r))
    }

    pub fn majorant(&self, r: f64) -> f64 {
        let n = self.dim as f64;
        let power = if r < 1.0 { math::pow(r, -n - self.a2) } else { math::pow(r, -n - self.a1) };
        power * math::ln(r).abs().max(1.0)
    }

    pub fn label(&self) -> String {
        format!("variable_order(A1={}, A2={})", self.a1, self.a2)
    }
}
