//! One-dimensional quadrature for radial Lévy integrals.
//!
//! Integrands of the form `(1∧r)·m_R(r)·|S^{N−1}|(r)` are singular at `r = 0`
//! and decay slowly at infinity. Both ends are handled by dyadic shells
//! `[s·2^{−k−1}, s·2^{−k}]` and `[s·2^k, s·2^{k+1}]`, each integrated with an
//! adaptive Gauss–Kronrod (7/15) rule. Shell sums stop once a shell
//! contributes less than `SHELL_REL_TOL` of the running total; when the shell
//! budget runs out the remainder is extrapolated geometrically, or the
//! integral is declared divergent.

use alloc::vec::Vec;

use crate::error::{Error, Result};

const MAX_SHELLS: usize = 1000;
const MIN_SHELLS: usize = 4;
const SHELL_REL_TOL: f64 = 1e-14;
const SEGMENT_REL_TOL: f64 = 1e-12;
const MAX_BISECTIONS: usize = 40;

// 15-point Kronrod nodes on [0, 1] (symmetric), with the embedded 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Single G7K15 panel: returns (Kronrod estimate, |Kronrod − Gauss|).
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for k in 0..7 {
        let dx = h * XGK[k];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[k] * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive G7K15 on `[a, b]` by recursive bisection with a local error
/// budget proportional to panel width.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    let (whole, err) = gauss_kronrod(f, a, b);
    if !whole.is_finite() {
        return whole;
    }
    let width = b - a;
    let budget = abs_tol.max(rel_tol * whole.abs());
    if err <= budget {
        return whole;
    }
    let mut total = 0.0;
    let mut stack: Vec<(f64, f64, usize)> = Vec::new();
    stack.push((a, b, 0));
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, e) = gauss_kronrod(f, lo, hi);
        if !v.is_finite() {
            return v;
        }
        let local = budget * (hi - lo) / width;
        if e <= local || depth >= MAX_BISECTIONS || hi - lo <= f64::EPSILON * lo.abs().max(hi.abs()) {
            total += v;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    total
}

fn shell(f: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    adaptive(f, lo, hi, 0.0, SEGMENT_REL_TOL)
}

/// Sums shells produced by `bounds(k)`; `None` ends the sequence early.
fn shell_series(
    f: &impl Fn(f64) -> f64,
    bounds: impl Fn(usize) -> Option<(f64, f64)>,
    lower: f64,
    upper: f64,
) -> Result<f64> {
    let mut total = 0.0;
    let mut prev = f64::NAN;
    let mut last = 0.0;
    for k in 0..MAX_SHELLS {
        let Some((lo, hi)) = bounds(k) else {
            return Ok(total);
        };
        let c = shell(f, lo, hi);
        if !c.is_finite() {
            return Err(Error::Divergent { lower, upper });
        }
        total += c;
        if k + 1 >= MIN_SHELLS && c.abs() <= SHELL_REL_TOL * total.abs() {
            return Ok(total);
        }
        prev = last;
        last = c;
    }
    // Shell budget exhausted: extrapolate a geometric remainder if the
    // contributions are visibly shrinking.
    let q = (last / prev).abs();
    if q.is_finite() && q < 1.0 - 1e-9 {
        Ok(total + last * q / (1.0 - q))
    } else {
        Err(Error::Divergent { lower, upper })
    }
}

/// `∫_lower^upper g(r) dr` for `0 ≤ lower < upper ≤ ∞`, where `g` may be
/// singular at `0` and decay slowly at `∞`. Shell boundaries are anchored at
/// `1` when `lower = 0`, so a kink of `g` at `r = 1` falls on a shell edge.
pub fn radial_integral(g: impl Fn(f64) -> f64, lower: f64, upper: f64) -> Result<f64> {
    if !(upper > lower) {
        return Ok(0.0);
    }
    let (inner, start) = if lower == 0.0 {
        let s = upper.min(1.0);
        let inner = shell_series(
            &g,
            |k| {
                let hi = s * libm::ldexp(1.0, -(k as i32));
                Some((0.5 * hi, hi))
            },
            lower,
            upper,
        )?;
        (inner, s)
    } else {
        (0.0, lower)
    };
    if start >= upper {
        return Ok(inner);
    }
    let outer = shell_series(
        &g,
        |k| {
            let lo = start * libm::ldexp(1.0, k as i32);
            if lo >= upper {
                return None;
            }
            Some((lo, (2.0 * lo).min(upper)))
        },
        lower,
        upper,
    )?;
    Ok(inner + outer)
}
