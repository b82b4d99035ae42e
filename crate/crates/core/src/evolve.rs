//! Time integration of `∂ₜu = −𝓛ᵤu` for regularized kernels.
//!
//! Explicit Euler is cheap but CFL-limited. Backward Euler, solved by plain
//! Picard iteration `w ← u − dt·𝓛_w w`, is the certifying integrator: its
//! steps inherit the discrete Kato inequality, so the scheme is `L¹`
//! contractive and order preserving up to the Picard tolerance.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::kernels::{regularize, Kernel};
use crate::lattice::{Field, Grid, Profile};
use crate::math;
use crate::operator::OperatorContext;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    ExplicitEuler,
    BackwardEulerPicard,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    Fixed(f64),
    /// `dt = θ/(2M_R)`.
    Cfl { theta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub integrator: Integrator,
    /// Regularization radius; `None` means one mesh width.
    pub epsilon: Option<f64>,
    pub end_time: f64,
    pub time_step: TimeStep,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    /// Simulated time between snapshots.
    pub snapshot_every: f64,
    /// Accept explicit steps above the CFL limit (the sup-norm guard still applies).
    pub allow_cfl_violation: bool,
    /// How often a non-converging implicit step may halve its dt.
    pub max_halvings: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            integrator: Integrator::BackwardEulerPicard,
            epsilon: None,
            end_time: 1.0,
            time_step: TimeStep::Cfl { theta: 0.5 },
            picard_tol: 1e-12,
            picard_max_iters: 200,
            snapshot_every: 0.1,
            allow_cfl_violation: false,
            max_halvings: 10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.end_time) {
            return Err(Error::InvalidSolver("end time must be positive"));
        }
        if !positive(self.snapshot_every) {
            return Err(Error::InvalidSolver("snapshot interval must be positive"));
        }
        if !positive(self.picard_tol) {
            return Err(Error::InvalidSolver("Picard tolerance must be positive"));
        }
        if self.picard_max_iters == 0 {
            return Err(Error::InvalidSolver("Picard iteration cap must be at least 1"));
        }
        match self.time_step {
            TimeStep::Fixed(dt) if !positive(dt) => return Err(Error::InvalidSolver("dt must be positive")),
            TimeStep::Cfl { theta } if !(theta > 0.0 && theta <= 1.0) => {
                return Err(Error::InvalidSolver("CFL safety factor must lie in (0, 1]"))
            }
            _ => {}
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0 && eps <= 1.0) {
                return Err(Error::InvalidSolver("epsilon must lie in (0, 1]"));
            }
        }
        Ok(())
    }

    /// The regularization radius on `grid`.
    pub fn epsilon_on(&self, grid: &Grid) -> f64 {
        self.epsilon.unwrap_or_else(|| grid.spacing())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub field: Field,
    pub record: DiagnosticsRecord,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunMeta {
    /// Nominal step size.
    pub dt: f64,
    /// Smallest step actually taken (after halvings and snapshot clipping).
    pub min_dt: f64,
    pub steps: usize,
    pub halvings: usize,
    pub picard_iterations: usize,
    pub max_picard_iterations: usize,
    pub tail_estimate: f64,
    pub regular_bound: f64,
}

/// Snapshots at strictly increasing times, the first one being `u₀` at `t = 0`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub meta: RunMeta,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }

    pub fn initial(&self) -> Option<&Field> {
        self.snapshots.first().map(|s| &s.field)
    }
}

/// A failed run together with everything computed before the failure.
#[derive(Debug, Clone)]
pub struct RunFailure {
    pub error: Error,
    pub partial: Trajectory,
}

impl fmt::Display for RunFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.partial.last().map_or(0.0, |s| s.t);
        write!(f, "{} (last good snapshot at t = {t})", self.error)
    }
}

impl core::error::Error for RunFailure {}

/// Largest explicit step the CFL rule admits, `1/(2M_R)`.
pub fn cfl_limit(ctx: &OperatorContext) -> f64 {
    let m = ctx.regular_bound();
    if m == 0.0 {
        f64::INFINITY
    } else {
        0.5 / m
    }
}

/// `θ/(2M_R)`, or `snapshot_every` when the kernel is zero.
pub fn cfl_dt(ctx: &OperatorContext, theta: f64, snapshot_every: f64) -> f64 {
    let m = ctx.regular_bound();
    if m == 0.0 {
        snapshot_every
    } else {
        theta / (2.0 * m)
    }
}

fn euler_update(u: &Field, dt: f64, lu: &Field) -> Result<Field> {
    u.zip_with(lu, |a, l| a - dt * l)
}

/// `u − dt·𝓛ᵤu`; rejects `dt` above the CFL limit.
pub fn step_explicit(ctx: &OperatorContext, u: &Field, dt: f64) -> Result<Field> {
    let limit = cfl_limit(ctx);
    if dt > limit {
        return Err(Error::CflViolation { dt, limit });
    }
    step_explicit_unchecked(ctx, u, dt)
}

/// Explicit Euler without the CFL check.
pub fn step_explicit_unchecked(ctx: &OperatorContext, u: &Field, dt: f64) -> Result<Field> {
    let lu = ctx.apply(u, u)?;
    euler_update(u, dt, &lu)
}

/// Solves `w = u − dt·𝓛_w w` by Picard iteration from `w⁰ = u` until
/// `‖w^{k+1} − w^k‖₁ ≤ tol`. Returns the iterate and the iteration count.
pub fn step_backward_picard(
    ctx: &OperatorContext,
    u: &Field,
    dt: f64,
    tol: f64,
    max_iters: usize,
) -> Result<(Field, usize)> {
    let mut w = u.clone();
    let mut first = f64::NAN;
    let mut residual = f64::INFINITY;
    for k in 1..=max_iters {
        let lw = ctx.apply(&w, &w)?;
        let next = match euler_update(u, dt, &lw) {
            Ok(f) => f,
            Err(Error::NonFiniteValue { .. }) => {
                return Err(Error::PicardNotConverged { residual: f64::INFINITY, iterations: k })
            }
            Err(e) => return Err(e),
        };
        residual = next.l1_distance(&w)?;
        w = next;
        if residual <= tol {
            return Ok((w, k));
        }
        if k == 1 {
            first = residual;
        } else if !(residual <= 1e3 * first) {
            // clearly diverging; let the caller halve dt
            return Err(Error::PicardNotConverged { residual, iterations: k });
        }
    }
    Err(Error::PicardNotConverged { residual, iterations: max_iters })
}

/// Default amplitude bound for a run from `u₀`: `‖u₀‖_∞`, or 1 for the zero field.
pub fn amplitude_bound(u0: &Field) -> f64 {
    let s = u0.sup_norm();
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

/// Steps from `u0` to `config.end_time`, recording snapshots every
/// `snapshot_every` (the step before each snapshot is clipped to land on it
/// exactly). Every step must keep `‖u‖_∞ ≤ ‖u₀‖_∞ + 1e−10·max(‖u₀‖_∞, 1)`.
pub fn run(ctx: &OperatorContext, u0: &Field, config: &SolverConfig) -> core::result::Result<Trajectory, Box<RunFailure>> {
    let mut traj = Trajectory::default();
    let fail = |error: Error, traj: Trajectory| Box::new(RunFailure { error, partial: traj });
    if let Err(e) = config.validate() {
        return Err(fail(e, traj));
    }
    if u0.grid() != ctx.grid() {
        return Err(fail(Error::GridMismatch, traj));
    }
    let dt = match config.time_step {
        TimeStep::Fixed(dt) => dt,
        TimeStep::Cfl { theta } => cfl_dt(ctx, theta, config.snapshot_every),
    };
    let limit = cfl_limit(ctx);
    if config.integrator == Integrator::ExplicitEuler && dt > limit && !config.allow_cfl_violation {
        return Err(fail(Error::CflViolation { dt, limit }, traj));
    }
    traj.meta = RunMeta {
        dt,
        min_dt: f64::INFINITY,
        tail_estimate: ctx.tail_estimate(),
        regular_bound: ctx.regular_bound(),
        ..RunMeta::default()
    };
    let sup0 = u0.sup_norm();
    let sup_limit = sup0 + 1e-10 * sup0.max(1.0);
    traj.snapshots.push(Snapshot { t: 0.0, field: u0.clone(), record: diagnostics::record(ctx, 0.0, u0, 0) });

    let end = config.end_time;
    let mut u = u0.clone();
    let mut t = 0.0;
    let mut snap_index = 1usize;
    let mut iters_since_snapshot = 0usize;
    while t < end {
        let target = (snap_index as f64 * config.snapshot_every).min(end);
        let mut step = dt;
        let mut lands = false;
        if t + step >= target - 1e-9 * dt {
            step = target - t;
            lands = true;
        }
        let (next, iters) = match config.integrator {
            Integrator::ExplicitEuler => match step_explicit_unchecked(ctx, &u, step) {
                Ok(f) => (f, 0),
                Err(e) => return Err(fail(e, traj)),
            },
            Integrator::BackwardEulerPicard => {
                let mut attempt = 0;
                loop {
                    match step_backward_picard(ctx, &u, step, config.picard_tol, config.picard_max_iters) {
                        Ok(r) => break r,
                        Err(Error::PicardNotConverged { .. }) if attempt < config.max_halvings => {
                            attempt += 1;
                            traj.meta.halvings += 1;
                            step *= 0.5;
                            lands = false;
                        }
                        Err(e) => return Err(fail(e, traj)),
                    }
                }
            }
        };
        let sup = next.sup_norm();
        let t_next = if lands { target } else { t + step };
        if !(sup <= sup_limit) {
            return Err(fail(Error::BoundBreach { t: t_next, sup, limit: sup_limit }, traj));
        }
        u = next;
        t = t_next;
        traj.meta.steps += 1;
        traj.meta.min_dt = traj.meta.min_dt.min(step);
        traj.meta.picard_iterations += iters;
        traj.meta.max_picard_iterations = traj.meta.max_picard_iterations.max(iters);
        iters_since_snapshot = iters_since_snapshot.max(iters);
        if lands {
            let record = diagnostics::record(ctx, t, &u, iters_since_snapshot);
            traj.snapshots.push(Snapshot { t, field: u.clone(), record });
            iters_since_snapshot = 0;
            snap_index += 1;
        }
    }
    Ok(traj)
}

/// Runs for a strictly decreasing list of regularization radii and the Cauchy
/// table `d_k = max_t ‖u^{ε_k}(t) − u^{ε_{k+1}}(t)‖₁`.
#[derive(Debug, Clone)]
pub struct Continuation {
    pub epsilons: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
    pub cauchy: Vec<f64>,
}

pub fn continuation_in_epsilon(
    grid: &Grid,
    kernel: &Kernel,
    u0: &Field,
    eps_list: &[f64],
    config: &SolverConfig,
) -> core::result::Result<Continuation, Box<RunFailure>> {
    let fail = |error: Error| Box::new(RunFailure { error, partial: Trajectory::default() });
    let h = grid.spacing();
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(fail(Error::InvalidSolver("epsilon list must be strictly decreasing")));
    }
    if eps_list.iter().any(|&e| e < h * (1.0 - 1e-12)) {
        return Err(fail(Error::InvalidSolver("every epsilon must be at least the mesh width")));
    }
    let big_r = amplitude_bound(u0);
    let mut trajectories = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let ctx = regularize(kernel.clone(), eps)
            .and_then(|k| OperatorContext::build(*grid, k, big_r))
            .map_err(fail)?;
        let cfg = SolverConfig { epsilon: Some(eps), ..config.clone() };
        trajectories.push(run(&ctx, u0, &cfg)?);
    }
    let mut cauchy = Vec::new();
    for pair in trajectories.windows(2) {
        let d = diagnostics::l1_distances(&pair[0], &pair[1]).map_err(fail)?;
        cauchy.push(d.into_iter().fold(0.0, f64::max));
    }
    Ok(Continuation { epsilons: eps_list.to_vec(), trajectories, cauchy })
}

/// Periodic convolution with the normalized discrete bump
/// `exp(−1/(1 − (|x|/width)²))`. Mass is preserved and the sup norm cannot grow.
pub fn mollify(u: &Field, width: f64) -> Result<Field> {
    let grid = *u.grid();
    if !(width >= grid.spacing() * (1.0 - 1e-12)) {
        return Err(Error::InvalidParameter {
            name: "mollifier_width",
            value: width,
            reason: "must be at least the mesh width",
        });
    }
    let m = grid.cells();
    let second = if grid.dim() == 2 { m } else { 1 };
    let mut taps = Vec::new();
    for d0 in 0..m {
        for d1 in 0..second {
            let s = grid.offset_length([d0, d1]) / width;
            if s < 1.0 {
                taps.push(([d0, d1], math::exp(-1.0 / (1.0 - s * s))));
            }
        }
    }
    let norm = math::compensated_sum(taps.iter().map(|t| t.1));
    let values = (0..grid.len())
        .map(|i| {
            let c = grid.coords(i);
            let terms = taps.iter().map(|(d, w)| {
                let src = [(c[0] + m - d[0]) % m, (c[1] + m - d[1]) % m];
                let src = if grid.dim() == 1 { [src[0], 0] } else { src };
                w / norm * u.values()[grid.index(src)]
            });
            math::compensated_sum(terms)
        })
        .collect();
    Field::new(grid, values)
}

pub fn mollify_initial(profile: &Profile, grid: &Grid, width: f64) -> Result<Field> {
    mollify(&profile.sample(grid)?, width)
}
