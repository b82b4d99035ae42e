//! Per-snapshot measurements and cross-run checks: mass conservation, norm
//! and BV decay, `L¹` contraction, comparison, and the weak-form residual.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::evolve::Trajectory;
use crate::lattice::{Field, Grid};
use crate::math::{self, CompensatedSum};
use crate::operator::OperatorContext;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub tv: f64,
    pub bv: f64,
    pub min_value: f64,
    pub max_value: f64,
    pub tail_estimate: f64,
    pub picard_iters: usize,
}

impl DiagnosticsRecord {
    pub fn measure(t: f64, field: &Field, tail_estimate: f64, picard_iters: usize) -> Self {
        let l1 = field.l1();
        let tv = field.total_variation();
        Self {
            t,
            mass: field.mass(),
            l1,
            l2: field.norm_lp(2.0).expect("p = 2 is admissible"),
            linf: field.sup_norm(),
            tv,
            bv: 2.0 * l1 + tv,
            min_value: field.min(),
            max_value: field.max(),
            tail_estimate,
            picard_iters,
        }
    }

    pub fn get(&self, q: Quantity) -> f64 {
        match q {
            Quantity::L1 => self.l1,
            Quantity::L2 => self.l2,
            Quantity::Linf => self.linf,
            Quantity::Tv => self.tv,
            Quantity::Bv => self.bv,
        }
    }
}

/// Record for `field` at time `t`, taking the truncation tail from `ctx`.
pub fn record(ctx: &OperatorContext, t: f64, field: &Field, picard_iters: usize) -> DiagnosticsRecord {
    DiagnosticsRecord::measure(t, field, ctx.tail_estimate(), picard_iters)
}

/// Quantities the continuous flow does not increase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    L1,
    L2,
    Linf,
    Tv,
    Bv,
}

impl Quantity {
    pub const ALL: [Quantity; 5] = [Quantity::L1, Quantity::L2, Quantity::Linf, Quantity::Tv, Quantity::Bv];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::L1 => "l1",
            Quantity::L2 => "l2",
            Quantity::Linf => "linf",
            Quantity::Tv => "tv",
            Quantity::Bv => "bv",
        }
    }
}

/// Outcome of a check. `worst_margin` is the largest observed excess over
/// the reference (negative when every sample has room to spare);
/// `first_violation` is the first snapshot index exceeding the slack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub pass: bool,
    pub worst_margin: f64,
    pub first_violation: Option<usize>,
}

impl Verdict {
    fn from_margins(margins: impl Iterator<Item = (usize, f64)>, slack: f64) -> Self {
        let mut worst = f64::NEG_INFINITY;
        let mut first = None;
        for (k, m) in margins {
            if m > worst || m.is_nan() {
                worst = m;
            }
            if first.is_none() && !(m <= slack) {
                first = Some(k);
            }
        }
        Verdict { pass: first.is_none(), worst_margin: worst, first_violation: first }
    }
}

/// Passes iff `q_{k+1} ≤ q_k + slack` for every `k`; the violation index is
/// that of `q_{k+1}`.
pub fn check_monotone_values(series: &[f64], slack: f64) -> Verdict {
    Verdict::from_margins(series.windows(2).enumerate().map(|(k, w)| (k + 1, w[1] - w[0])), slack)
}

pub fn check_monotone_series(trajectory: &Trajectory, quantity: Quantity, slack: f64) -> Verdict {
    let series: Vec<f64> = trajectory.snapshots.iter().map(|s| s.record.get(quantity)).collect();
    check_monotone_values(&series, slack)
}

fn same_times(a: &Trajectory, b: &Trajectory) -> Result<()> {
    if a.snapshots.len() != b.snapshots.len()
        || a.snapshots.iter().zip(&b.snapshots).any(|(x, y)| x.t != y.t || x.field.grid() != y.field.grid())
    {
        return Err(Error::SnapshotMismatch);
    }
    Ok(())
}

/// `L¹` distances `‖u(t_k) − v(t_k)‖₁` at the shared snapshot times.
pub fn l1_distances(u: &Trajectory, v: &Trajectory) -> Result<Vec<f64>> {
    same_times(u, v)?;
    u.snapshots.iter().zip(&v.snapshots).map(|(a, b)| a.field.l1_distance(&b.field)).collect()
}

/// Passes iff `‖u(t_k) − v(t_k)‖₁ ≤ ‖u₀ − v₀‖₁ + slack` at every snapshot.
pub fn check_contraction(u: &Trajectory, v: &Trajectory, slack: f64) -> Result<Verdict> {
    let d = l1_distances(u, v)?;
    let d0 = d.first().copied().unwrap_or(0.0);
    Ok(Verdict::from_margins(d.iter().enumerate().map(|(k, dk)| (k, dk - d0)), slack))
}

/// Passes iff `min(v(t_k) − u(t_k)) ≥ −slack` at every snapshot. Requires
/// `u₀ ≤ v₀`; a crossing pair is reported as a precondition error.
pub fn check_comparison(u: &Trajectory, v: &Trajectory, slack: f64) -> Result<Verdict> {
    same_times(u, v)?;
    if let (Some(a), Some(b)) = (u.snapshots.first(), v.snapshots.first()) {
        check_ordered(&a.field, &b.field)?;
    }
    let margins = u.snapshots.iter().zip(&v.snapshots).enumerate().map(|(k, (a, b))| {
        let gap = a.field.values().iter().zip(b.field.values()).map(|(x, y)| y - x).fold(f64::INFINITY, f64::min);
        (k, -gap)
    });
    Ok(Verdict::from_margins(margins, slack))
}

/// `Err(OrderingPrecondition)` unless `u ≤ v` pointwise.
pub fn check_ordered(u: &Field, v: &Field) -> Result<()> {
    if u.grid() != v.grid() {
        return Err(Error::GridMismatch);
    }
    match u.values().iter().zip(v.values()).position(|(a, b)| a > b) {
        Some(index) => Err(Error::OrderingPrecondition { index, gap: v.values()[index] - u.values()[index] }),
        None => Ok(()),
    }
}

/// Smooth space-time bump `ψ(t, x) = β((t − t₀)/τ)·β(|x − c|_torus/ρ)` with
/// `β(s) = exp(1 − 1/(1 − s²))` on `|s| < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    pub center: [f64; 2],
    pub radius: f64,
    pub t_center: f64,
    pub t_radius: f64,
}

fn bump(s: f64) -> f64 {
    let s2 = s * s;
    if s2 < 1.0 {
        math::exp(1.0 - 1.0 / (1.0 - s2))
    } else {
        0.0
    }
}

impl TestFunction {
    pub fn eval(&self, grid: &Grid, t: f64, x: [f64; 2]) -> f64 {
        let time = bump((t - self.t_center) / self.t_radius);
        if time == 0.0 {
            return 0.0;
        }
        let l = grid.period();
        let wrap = |d: f64| d - l * math::floor(d / l + 0.5);
        let dx = wrap(x[0] - self.center[0]);
        let dy = if grid.dim() == 2 { wrap(x[1] - self.center[1]) } else { 0.0 };
        time * bump(math::sqrt(dx * dx + dy * dy) / self.radius)
    }

    pub fn sample(&self, grid: &Grid, t: f64) -> Field {
        Field::from_fn(*grid, |x| self.eval(grid, t, x)).expect("bump values are finite")
    }
}

/// A few bumps covering the domain, supported in time strictly inside
/// `(0, end_time)`.
pub fn default_test_bank(grid: &Grid, end_time: f64) -> Vec<TestFunction> {
    let l = grid.period();
    let mut bank = Vec::new();
    for (k, frac) in [0.5, 0.25, 0.75].into_iter().enumerate() {
        let c = frac * l;
        bank.push(TestFunction {
            center: [c, if k == 0 { c } else { 0.5 * l }],
            radius: 0.3 * l,
            t_center: 0.5 * end_time,
            t_radius: (0.35 + 0.05 * k as f64) * end_time,
        });
    }
    bank
}

/// `max_ψ |Σ_k Σᵢ u_k,ᵢ·(∂ₜψ − 𝓛_{u_k}ψ)(t_k)ᵢ·hᴺ·Δt_k|` over the bank, with
/// centered differences in time and the first and last snapshots excluded.
pub fn weak_residual(trajectory: &Trajectory, ctx: &OperatorContext, bank: &[TestFunction]) -> Result<f64> {
    let snaps = &trajectory.snapshots;
    if snaps.len() < 3 {
        return Ok(0.0);
    }
    let grid = ctx.grid();
    let vol = grid.cell_volume();
    let mut worst: f64 = 0.0;
    for psi in bank {
        let mut total = CompensatedSum::new();
        let samples: Vec<Field> = snaps.iter().map(|s| psi.sample(grid, s.t)).collect();
        for k in 1..snaps.len() - 1 {
            let (t_prev, t_next) = (snaps[k - 1].t, snaps[k + 1].t);
            let span = t_next - t_prev;
            let u = &snaps[k].field;
            let lpsi = ctx.apply(u, &samples[k])?;
            let mut row = CompensatedSum::new();
            for i in 0..u.len() {
                let dt_psi = (samples[k + 1].values()[i] - samples[k - 1].values()[i]) / span;
                row.add(u.values()[i] * (dt_psi - lpsi.values()[i]));
            }
            total.add(row.value() * vol * 0.5 * span);
        }
        worst = worst.max(total.value().abs());
    }
    Ok(worst)
}
