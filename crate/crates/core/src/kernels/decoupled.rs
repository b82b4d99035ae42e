use alloc::format;
use alloc::string::String;

use super::{LevyDensity, ScalarFunction};

/// Relative width of the band around `a = b` where difference quotients are
/// replaced by their analytic limits.
pub const DIAGONAL_THRESHOLD: f64 = 1e-8;

#[inline]
pub(crate) fn on_diagonal(a: f64, b: f64) -> bool {
    (a - b).abs() < DIAGONAL_THRESHOLD * a.abs().max(b.abs()).max(1.0)
}

/// The nonlinearity `F(a, b)` of a decoupled kernel `F(a, b)·μ(r)`.
#[derive(Debug, Clone)]
pub enum Coupling {
    /// `F ≡ 1`.
    Constant,
    /// `(f(a) − f(b))/(a − b)`.
    PorousMedium(ScalarFunction),
    /// `f(a) + f(b)`.
    Convex(ScalarFunction),
    /// `Φ(a − b)/(a − b)`.
    PLaplacian(ScalarFunction),
    /// `Φ(f(a) − f(b))/(a − b)`.
    DoublyNonlinear { f: ScalarFunction, phi: ScalarFunction },
}

impl Coupling {
    /// The per-cell quantity `F` is built from (`f(a)`, or `a` itself).
    #[inline]
    pub fn prepare(&self, a: f64) -> f64 {
        match self {
            Coupling::PorousMedium(f) | Coupling::Convex(f) | Coupling::DoublyNonlinear { f, .. } => f.eval(a),
            Coupling::Constant | Coupling::PLaplacian(_) => a,
        }
    }

    #[inline]
    pub fn value(&self, a: f64, b: f64) -> f64 {
        self.value_prepared(a, b, self.prepare(a), self.prepare(b))
    }

    /// `F(a, b)` given `fa = prepare(a)`, `fb = prepare(b)`. Arguments are put
    /// in canonical order first, so the result is bitwise symmetric.
    #[inline]
    pub fn value_prepared(&self, a: f64, b: f64, fa: f64, fb: f64) -> f64 {
        let (a, b, fa, fb) = if a < b { (b, a, fb, fa) } else { (a, b, fa, fb) };
        match self {
            Coupling::Constant => 1.0,
            Coupling::PorousMedium(f) => {
                if on_diagonal(a, b) {
                    f.derivative(0.5 * (a + b))
                } else {
                    (fa - fb) / (a - b)
                }
            }
            Coupling::Convex(_) => fa + fb,
            Coupling::PLaplacian(phi) => {
                if on_diagonal(a, b) {
                    phi.ratio(0.0)
                } else {
                    phi.ratio(a - b)
                }
            }
            Coupling::DoublyNonlinear { f, phi } => {
                if on_diagonal(a, b) {
                    phi.ratio(0.0) * f.derivative(0.5 * (a + b))
                } else {
                    let df = fa - fb;
                    phi.ratio(df) * (df / (a - b))
                }
            }
        }
    }

    /// `sup_{|a|,|b| ≤ R} |F(a, b)|`, analytic for the built-in functions.
    pub fn sup(&self, big_r: f64) -> f64 {
        match self {
            Coupling::Constant => 1.0,
            Coupling::PorousMedium(f) => f.sup_abs_derivative(big_r),
            Coupling::Convex(f) => 2.0 * f.sup_abs(big_r),
            Coupling::PLaplacian(phi) => phi.sup_abs_ratio(2.0 * big_r),
            Coupling::DoublyNonlinear { f, phi } => {
                phi.sup_abs_ratio(2.0 * f.sup_abs(big_r)) * f.sup_abs_derivative(big_r)
            }
        }
    }

    /// True when `F` does not depend on its arguments.
    pub fn is_constant(&self) -> bool {
        match self {
            Coupling::Constant => true,
            Coupling::PorousMedium(f) => f.is_identity(),
            Coupling::Convex(_) => false,
            Coupling::PLaplacian(phi) => phi.is_identity(),
            Coupling::DoublyNonlinear { f, phi } => f.is_identity() && phi.is_identity(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Coupling::Constant => "linear".into(),
            Coupling::PorousMedium(f) => format!("porous_medium[f={}]", f.label()),
            Coupling::Convex(f) => format!("convex_diffusion[f={}]", f.label()),
            Coupling::PLaplacian(phi) => format!("p_laplacian[phi={}]", phi.label()),
            Coupling::DoublyNonlinear { f, phi } => {
                format!("doubly_nonlinear[f={}, phi={}]", f.label(), phi.label())
            }
        }
    }
}

/// `F(a, b)·μ(r)` in dimension `dim`.
#[derive(Debug, Clone)]
pub struct Decoupled {
    pub(crate) dim: usize,
    pub(crate) coupling: Coupling,
    pub(crate) density: LevyDensity,
}

impl Decoupled {
    pub fn coupling(&self) -> &Coupling {
        &self.coupling
    }

    pub fn density(&self) -> &LevyDensity {
        &self.density
    }

    #[inline]
    pub fn eval(&self, a: f64, b: f64, r: f64) -> f64 {
        self.coupling.value(a, b) * self.density.value(self.dim, r)
    }

    pub fn majorant(&self, big_r: f64, r: f64) -> f64 {
        self.coupling.sup(big_r) * self.density.value(self.dim, r)
    }

    pub fn label(&self) -> String {
        let mu = match self.density {
            LevyDensity::PowerLaw { alpha, amplitude } => format!("power_law(alpha={alpha}, C={amplitude})"),
            LevyDensity::CompactBump { radius, amplitude } => {
                format!("compact_bump(r0={radius}, C={amplitude})")
            }
        };
        format!("{} x {mu}", self.coupling.label())
    }
}
