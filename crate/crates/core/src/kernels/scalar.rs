use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::math;

/// Samples used to bound user-supplied functions on an interval.
const SUP_SAMPLES: usize = 4096;

#[derive(Clone)]
enum Kind {
    PowerOdd(f64),
    PowerAbs(f64),
    PhiPower(f64),
    Table(Arc<[(f64, f64)]>),
    Custom { label: String, f: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

/// A scalar nonlinearity `f` or `Φ` entering a decoupled kernel.
///
/// The built-in kinds carry their parameter constraints and have exact
/// derivatives and suprema. Tables (piecewise linear with linear
/// extrapolation) and closures are accepted without structural checks; their
/// admissibility is for the validator to judge.
#[derive(Clone)]
pub struct ScalarFunction {
    kind: Kind,
}

impl fmt::Debug for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl ScalarFunction {
    /// `a ↦ a|a|^{m−1}`, `m ≥ 1`.
    pub fn power_odd(m: f64) -> Result<Self> {
        if !(m >= 1.0) || !m.is_finite() {
            return Err(Error::InvalidParameter { name: "m", value: m, reason: "power_odd needs m >= 1" });
        }
        Ok(Self { kind: Kind::PowerOdd(m) })
    }

    /// `a ↦ |a|^m`, `m ≥ 1`.
    pub fn power_abs(m: f64) -> Result<Self> {
        if !(m >= 1.0) || !m.is_finite() {
            return Err(Error::InvalidParameter { name: "m", value: m, reason: "power_abs needs m >= 1" });
        }
        Ok(Self { kind: Kind::PowerAbs(m) })
    }

    /// `z ↦ z|z|^{p−2}`, `p ≥ 2`.
    pub fn phi_power(p: f64) -> Result<Self> {
        if !(p >= 2.0) || !p.is_finite() {
            return Err(Error::InvalidParameter { name: "p", value: p, reason: "phi_power needs p >= 2" });
        }
        Ok(Self { kind: Kind::PhiPower(p) })
    }

    pub fn identity() -> Self {
        Self { kind: Kind::PowerOdd(1.0) }
    }

    /// Piecewise-linear interpolation through `knots`, extended linearly
    /// beyond the first and last knot.
    pub fn table(mut knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidParameter {
                name: "table",
                value: knots.len() as f64,
                reason: "a table needs at least two knots",
            });
        }
        if knots.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::InvalidParameter { name: "table", value: f64::NAN, reason: "non-finite knot" });
        }
        knots.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite knots"));
        if knots.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter {
                name: "table",
                value: f64::NAN,
                reason: "knot abscissae must be distinct",
            });
        }
        Ok(Self { kind: Kind::Table(knots.into()) })
    }

    /// Arbitrary closure. Derivatives are taken by central differences and
    /// suprema by sampling.
    pub fn custom(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { kind: Kind::Custom { label: label.into(), f: Arc::new(f) } }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            Kind::PowerOdd(m) => format!("power_odd(m={m})"),
            Kind::PowerAbs(m) => format!("power_abs(m={m})"),
            Kind::PhiPower(p) => format!("phi_power(p={p})"),
            Kind::Table(k) => format!("table({} knots)", k.len()),
            Kind::Custom { label, .. } => format!("custom({label})"),
        }
    }

    /// Exponent of the power kinds, if any.
    pub fn exponent(&self) -> Option<f64> {
        match self.kind {
            Kind::PowerOdd(m) | Kind::PowerAbs(m) | Kind::PhiPower(m) => Some(m),
            _ => None,
        }
    }

    /// True for the identity map (power_odd with m = 1 or phi_power with p = 2).
    pub fn is_identity(&self) -> bool {
        matches!(self.kind, Kind::PowerOdd(m) if m == 1.0) || matches!(self.kind, Kind::PhiPower(p) if p == 2.0)
    }

    /// Odd power structure `z|z|^{q−1}` shared by power_odd(q) and phi_power(q+1).
    fn odd_exponent(&self) -> Option<f64> {
        match self.kind {
            Kind::PowerOdd(m) => Some(m),
            Kind::PhiPower(p) => Some(p - 1.0),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::PowerOdd(_) | Kind::PhiPower(_) => {
                let q = self.odd_exponent().expect("odd kind");
                if q == 1.0 {
                    x
                } else {
                    x * math::pow_abs(x, q - 1.0)
                }
            }
            Kind::PowerAbs(m) => math::pow_abs(x, *m),
            Kind::Table(knots) => {
                let k = segment(knots, x);
                let ((x0, y0), (x1, y1)) = (knots[k], knots[k + 1]);
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
            Kind::Custom { f, .. } => f(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::PowerOdd(_) | Kind::PhiPower(_) => {
                let q = self.odd_exponent().expect("odd kind");
                q * math::pow_abs(x, q - 1.0)
            }
            Kind::PowerAbs(m) => m * math::sgn(x) * math::pow_abs(x, m - 1.0),
            Kind::Table(knots) => {
                let k = segment(knots, x);
                let ((x0, y0), (x1, y1)) = (knots[k], knots[k + 1]);
                (y1 - y0) / (x1 - x0)
            }
            Kind::Custom { f, .. } => {
                let d = 1e-6 * x.abs().max(1.0);
                (f(x + d) - f(x - d)) / (2.0 * d)
            }
        }
    }

    /// `Φ(z)/z`, with the limit at `z = 0`.
    pub fn ratio(&self, z: f64) -> f64 {
        if let Some(q) = self.odd_exponent() {
            // z|z|^{q−1}/z, exact and even in z
            return if q == 1.0 {
                1.0
            } else if z == 0.0 {
                0.0
            } else {
                math::pow_abs(z, q - 1.0)
            };
        }
        if z == 0.0 {
            self.derivative(0.0)
        } else {
            self.eval(z) / z
        }
    }

    /// `sup_{|x| ≤ r} |f′(x)|`.
    pub fn sup_abs_derivative(&self, r: f64) -> f64 {
        match &self.kind {
            Kind::PowerOdd(_) | Kind::PhiPower(_) => {
                let q = self.odd_exponent().expect("odd kind");
                q * math::pow_abs(r, q - 1.0)
            }
            Kind::PowerAbs(m) => m * math::pow_abs(r, m - 1.0),
            Kind::Table(knots) => {
                let (lo, hi) = (segment(knots, -r), segment(knots, r));
                (lo..=hi)
                    .map(|k| ((knots[k + 1].1 - knots[k].1) / (knots[k + 1].0 - knots[k].0)).abs())
                    .fold(0.0, f64::max)
            }
            Kind::Custom { .. } => sampled_sup(r, |x| self.derivative(x).abs()),
        }
    }

    /// `sup_{|x| ≤ r} |f(x)|`.
    pub fn sup_abs(&self, r: f64) -> f64 {
        match &self.kind {
            Kind::PowerOdd(_) | Kind::PhiPower(_) | Kind::PowerAbs(_) => self.eval(r).abs(),
            Kind::Table(knots) => {
                let inner = knots.iter().filter(|(x, _)| x.abs() <= r).map(|(_, y)| y.abs());
                inner.fold(self.eval(-r).abs().max(self.eval(r).abs()), f64::max)
            }
            Kind::Custom { .. } => sampled_sup(r, |x| self.eval(x).abs()),
        }
    }

    /// `sup_{0 < |z| ≤ r} |Φ(z)/z|`.
    pub fn sup_abs_ratio(&self, r: f64) -> f64 {
        if let Some(q) = self.odd_exponent() {
            return if q == 1.0 { 1.0 } else { math::pow_abs(r, q - 1.0) };
        }
        sampled_sup(r, |z| if z == 0.0 { 0.0 } else { self.ratio(z).abs() })
    }

    /// Structural convexity and non-negativity, where decidable.
    pub(crate) fn is_convex_nonnegative(&self) -> Option<bool> {
        match &self.kind {
            Kind::PowerAbs(_) => Some(true),
            Kind::PowerOdd(_) | Kind::PhiPower(_) => Some(false),
            Kind::Table(knots) => {
                let slopes: Vec<f64> =
                    knots.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
                let convex = slopes.windows(2).all(|s| s[0] <= s[1]);
                // linear extension must not dip below zero on either side
                let ends = slopes[0] <= 0.0 && slopes[slopes.len() - 1] >= 0.0;
                Some(convex && ends && knots.iter().all(|(_, y)| *y >= 0.0))
            }
            Kind::Custom { .. } => None,
        }
    }

    /// Non-decreasing with an exact derivative rule, where decidable.
    pub(crate) fn is_monotone_c1(&self) -> Option<bool> {
        match &self.kind {
            Kind::PowerOdd(_) | Kind::PhiPower(_) => Some(true),
            Kind::PowerAbs(_) => Some(false),
            Kind::Table(_) | Kind::Custom { .. } => None,
        }
    }

    /// Odd, non-decreasing, with bounded `Φ(z)/z` at the origin, where decidable.
    pub(crate) fn is_admissible_phi(&self) -> Option<bool> {
        match &self.kind {
            Kind::PowerOdd(_) | Kind::PhiPower(_) => Some(true),
            Kind::PowerAbs(_) => Some(false),
            Kind::Table(_) | Kind::Custom { .. } => None,
        }
    }
}

fn segment(knots: &[(f64, f64)], x: f64) -> usize {
    let n = knots.len();
    let k = knots.partition_point(|(kx, _)| *kx <= x);
    k.clamp(1, n - 1) - 1
}

fn sampled_sup(r: f64, g: impl Fn(f64) -> f64) -> f64 {
    let n = SUP_SAMPLES as f64;
    (0..=SUP_SAMPLES)
        .map(|k| g(-r + 2.0 * r * k as f64 / n))
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
}
