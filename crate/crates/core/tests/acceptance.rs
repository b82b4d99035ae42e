//! Acceptance criteria, one test per criterion. Each test prints a single
//! `criterion NN <name>: PASS|FAIL (...)` line before asserting, so
//! `cargo test --test acceptance -- --nocapture` doubles as a report.

mod common;

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nonlocal_core::diagnostics::{check_comparison, check_contraction, check_monotone_series, l1_distances};
use nonlocal_core::evolve::{self, amplitude_bound, continuation_in_epsilon, run};
use nonlocal_core::kernels::levy_constant_full;
use nonlocal_core::validator::{self, check_axioms, replay, Axiom, Outcome};
use nonlocal_core::{
    regularize, Field, Grid, Integrator, JumpKernel, Kernel, OperatorContext, Profile, Quantity, ScalarFunction,
    SolverConfig, TimeStep, Trajectory,
};

// Tolerances, pinned.
const MASS_TOL: f64 = 1e-12;
const NORM_SLACK: f64 = 1e-10;
const TV_SLACK: f64 = 1e-9;
const CONTRACTION_SLACK: f64 = 2e-9;
const COMPARISON_SLACK: f64 = 2e-9;
const KATO_TOL: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-13;
const L1_BOUND_FACTOR: f64 = 1.1;
const ORACLE_TOL: f64 = 1e-3;
const ORDER_TARGET: f64 = 1.0;
const ORDER_BAND: f64 = 0.2;
const REGULAR_FACTOR: f64 = 1.05;
const EQUIVARIANCE_TOL: f64 = 1e-12;
const VALIDATOR_BUDGET: usize = 10_000;
const RUNTIME_LIMIT_SECS: f64 = 60.0;

fn report(n: usize, name: &str, pass: bool, detail: String) {
    println!("criterion {n:>2} {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} {name} failed: {detail}");
}

fn line(cells: usize) -> Grid {
    Grid::new(1, cells, 8.0).unwrap()
}

fn context(grid: Grid, kernel: Kernel, eps: f64, big_r: f64) -> OperatorContext {
    OperatorContext::build(grid, regularize(kernel, eps).unwrap(), big_r).unwrap()
}

fn implicit(end_time: f64, time_step: TimeStep, snapshot_every: f64) -> SolverConfig {
    SolverConfig {
        integrator: Integrator::BackwardEulerPicard,
        end_time,
        time_step,
        snapshot_every,
        picard_tol: 1e-12,
        ..SolverConfig::default()
    }
}

fn box_profile(width: f64) -> Profile {
    Profile::Box { center: 4.0, width, height: 1.0 }
}

fn random_field(grid: Grid, rng: &mut ChaCha8Rng) -> Field {
    let values = (0..grid.len()).map(|_| rng.random_range(-1.0..=1.0)).collect();
    Field::new(grid, values).unwrap()
}

/// Box run on the standard line (M = 256, ε = h, T = 1).
fn standard_run(kernel: Kernel) -> Trajectory {
    let g = line(256);
    let u0 = Profile::default_box(&g).sample(&g).unwrap();
    let ctx = context(g, kernel, g.spacing(), amplitude_bound(&u0));
    run(&ctx, &u0, &implicit(1.0, TimeStep::Cfl { theta: 0.5 }, 0.1)).unwrap()
}

fn standard_runs() -> Vec<(&'static str, Trajectory)> {
    vec![
        ("fractional_heat", standard_run(common::fractional_heat())),
        ("porous_medium", standard_run(common::porous_medium())),
        ("p_laplacian", standard_run(common::p_laplacian())),
    ]
}

#[test]
fn criterion_01_mass_conservation() {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let traj = pool.install(|| standard_run(common::fractional_heat()));
    let secs = start.elapsed().as_secs_f64();
    let m0 = traj.snapshots[0].record.mass;
    let worst = traj.snapshots.iter().map(|s| (s.record.mass - m0).abs() / m0.abs()).fold(0.0, f64::max);
    let pass = worst <= MASS_TOL && secs <= RUNTIME_LIMIT_SECS;
    report(
        1,
        "mass conservation",
        pass,
        format!("max relative drift {worst:.3e} <= {MASS_TOL:e}; {secs:.2} s single-threaded, {} steps", traj.meta.steps),
    );
}

#[test]
fn criterion_02_lp_decay() {
    let mut worst = f64::NEG_INFINITY;
    let mut pass = true;
    for (name, traj) in standard_runs() {
        for q in [Quantity::L1, Quantity::L2, Quantity::Linf] {
            let v = check_monotone_series(&traj, q, NORM_SLACK);
            worst = worst.max(v.worst_margin);
            if !v.pass {
                println!("  {name} {}: first violation at snapshot {:?}", q.name(), v.first_violation);
                pass = false;
            }
        }
    }
    report(2, "Lp decay", pass, format!("worst step increase {worst:.3e}, slack {NORM_SLACK:e}"));
}

#[test]
fn criterion_03_bv_decay() {
    let mut worst = f64::NEG_INFINITY;
    let mut pass = true;
    for (name, traj) in standard_runs() {
        let v = check_monotone_series(&traj, Quantity::Tv, TV_SLACK);
        worst = worst.max(v.worst_margin);
        if !v.pass {
            println!("  {name} tv: first violation at snapshot {:?}", v.first_violation);
            pass = false;
        }
    }
    report(3, "BV decay", pass, format!("worst tv increase {worst:.3e}, slack {TV_SLACK:e}"));
}

/// PME runs from two boxes, 10³ implicit steps.
fn pme_pair(u0: Profile, v0: Profile) -> (Trajectory, Trajectory) {
    let g = line(128);
    let ctx = context(g, common::porous_medium(), g.spacing(), 1.0);
    let cfg = implicit(1.0, TimeStep::Fixed(1e-3), 0.05);
    let u = run(&ctx, &u0.sample(&g).unwrap(), &cfg).unwrap();
    let v = run(&ctx, &v0.sample(&g).unwrap(), &cfg).unwrap();
    assert_eq!(u.meta.steps, 1000);
    (u, v)
}

#[test]
fn criterion_04_l1_contraction() {
    // overlapping but unordered, so the distance is not pinned by mass conservation
    let (u, v) = pme_pair(
        Profile::Box { center: 3.0, width: 2.0, height: 1.0 },
        Profile::Box { center: 4.5, width: 4.0, height: 1.0 },
    );
    let verdict = check_contraction(&u, &v, CONTRACTION_SLACK).unwrap();
    let d = l1_distances(&u, &v).unwrap();
    report(
        4,
        "L1 contraction",
        verdict.pass,
        format!(
            "d0 = {:.6}, d(T) = {:.6}, worst excess {:.3e} <= {CONTRACTION_SLACK:e}",
            d[0],
            d[d.len() - 1],
            verdict.worst_margin
        ),
    );
}

#[test]
fn criterion_05_comparison_and_positivity() {
    let (u, v) = pme_pair(box_profile(2.0), box_profile(4.0));
    let verdict = check_comparison(&u, &v, COMPARISON_SLACK).unwrap();
    let min_u = u.snapshots.iter().chain(&v.snapshots).map(|s| s.record.min_value).fold(f64::INFINITY, f64::min);
    let pass = verdict.pass && min_u >= -COMPARISON_SLACK;
    report(
        5,
        "comparison and positivity",
        pass,
        format!("min(v - u) = {:.3e}, min u = {min_u:.3e}, slack {COMPARISON_SLACK:e}", -verdict.worst_margin),
    );
}

#[test]
fn criterion_06_kato_inequality() {
    let g = line(64);
    let mut worst: f64 = f64::INFINITY;
    for (name, kernel) in common::zoo() {
        let ctx = context(g, kernel, g.spacing(), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..1000 {
            let (u, v) = (random_field(g, &mut rng), random_field(g, &mut rng));
            let k = ctx.kato_functional(&u, &v).unwrap();
            let scale = ctx.apply(&u, &u).unwrap().l1() + ctx.apply(&v, &v).unwrap().l1();
            let rel = k / scale;
            worst = worst.min(rel);
            if rel < -KATO_TOL {
                report(6, "Kato inequality", false, format!("{name}: functional {k:.3e} at scale {scale:.3e}"));
            }
        }
    }
    report(6, "Kato inequality", true, format!("6 kernels x 1000 pairs, min functional/scale {worst:.3e}"));
}

#[test]
fn criterion_07_symmetry_and_positivity() {
    let g = line(64);
    let h = g.cell_volume();
    let (mut worst_sym, mut worst_psd): (f64, f64) = (0.0, f64::INFINITY);
    let mut pass = true;
    for (name, kernel) in common::zoo() {
        let ctx = context(g, kernel, g.spacing(), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let (v, phi, psi) = (random_field(g, &mut rng), random_field(g, &mut rng), random_field(g, &mut rng));
            let (lphi, lpsi) = (ctx.apply(&v, &phi).unwrap(), ctx.apply(&v, &psi).unwrap());
            let gap = (lphi.inner(&psi).unwrap() - phi.inner(&lpsi).unwrap()).abs();
            let abs_dot = |a: &Field, b: &Field| a.values().iter().zip(b.values()).map(|(x, y)| (x * y).abs()).sum::<f64>() * h;
            let sym_scale = abs_dot(&lphi, &psi) + abs_dot(&phi, &lpsi);
            let form = ctx.bilinear_form(&v, &phi, &phi).unwrap();
            let psd_scale = abs_dot(&lphi, &phi);
            worst_sym = worst_sym.max(gap / sym_scale);
            worst_psd = worst_psd.min(form / psd_scale);
            if gap > SYMMETRY_TOL * sym_scale || form < -PSD_TOL * psd_scale {
                println!("  {name}: asymmetry {gap:.3e}, form {form:.3e}");
                pass = false;
            }
        }
    }
    report(
        7,
        "operator symmetry and positivity",
        pass,
        format!("max asymmetry/scale {worst_sym:.3e} <= {SYMMETRY_TOL:e}, min form/scale {worst_psd:.3e}"),
    );
}

#[test]
fn criterion_08_l1_operator_bound() {
    let mut worst: f64 = 0.0;
    for cells in [32, 64, 128] {
        let g = line(cells);
        for kernel in [common::fractional_heat(), common::porous_medium()] {
            let ctx = context(g, kernel, g.spacing(), 1.0);
            for profile in [box_profile(2.0), Profile::RandomBv { amplitude: 1.0, pieces: 8, seed: 8 }] {
                let u = profile.sample(&g).unwrap();
                let (lhs, rhs) = ctx.l1_operator_bound_check(&u, &u).unwrap();
                worst = worst.max(lhs / rhs);
            }
        }
    }
    report(
        8,
        "L1 operator bound",
        worst <= L1_BOUND_FACTOR,
        format!("max ||L_u u||_1 / (K_R ||u||_BV) = {worst:.4} <= {L1_BOUND_FACTOR}"),
    );
}

/// Dense generator `A` of the linear scheme, `(Au)ᵢ = Σⱼ (uᵢ − uⱼ)·m(rᵢⱼ)·h`
/// over `rᵢⱼ ≥ ε`, assembled straight from the kernel.
fn dense_generator(grid: &Grid, kernel: &Kernel, eps: f64) -> DMatrix<f64> {
    let n = grid.len();
    let h = grid.cell_volume();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let r = grid.torus_distance(i, j);
            if i != j && r >= eps {
                let w = kernel.eval(0.0, 0.0, r) * h;
                a[(i, j)] -= w;
                a[(i, i)] += w;
            }
        }
    }
    a
}

fn relative_l1(x: &Field, y: &DVector<f64>) -> f64 {
    let diff: f64 = x.values().iter().zip(y.iter()).map(|(a, b)| (a - b).abs()).sum();
    diff / y.iter().map(|b| b.abs()).sum::<f64>()
}

#[test]
fn criterion_09_linear_oracle() {
    let g = line(64);
    let kernel = common::fractional_heat();
    let eps = g.spacing();
    let u0 = Profile::SmoothBump { center: 4.0, width: 3.0, height: 1.0 }.sample(&g).unwrap();
    let ctx = context(g, kernel.clone(), eps, 1.0);
    let a = dense_generator(&g, &kernel, eps);
    let end = 0.5;
    let x0 = DVector::from_column_slice(u0.values());
    let exact = (&a * -end).exp() * &x0;

    let solve = |dt: f64| run(&ctx, &u0, &implicit(end, TimeStep::Fixed(dt), end)).unwrap().last().unwrap().field.clone();
    let coarse = solve(1e-3);
    let fine = solve(5e-4);

    // the same scheme, stepped with a dense LU factorization
    let lu = (DMatrix::identity(g.len(), g.len()) + &a * 1e-3).lu();
    let mut dense = x0.clone();
    for _ in 0..500 {
        dense = lu.solve(&dense).unwrap();
    }
    let scheme_gap = relative_l1(&coarse, &dense);

    let (e1, e2) = (relative_l1(&coarse, &exact), relative_l1(&fine, &exact));
    let order = (e1 / e2).log2();
    let pass = e1 <= ORACLE_TOL && (order - ORDER_TARGET).abs() <= ORDER_BAND && scheme_gap <= 1e-9;
    report(
        9,
        "linear-kernel oracle",
        pass,
        format!(
            "rel L1 error {e1:.3e} (dt=1e-3) <= {ORACLE_TOL:e}, {e2:.3e} (dt=5e-4), order {order:.3}, \
             gap to dense backward Euler {scheme_gap:.1e}"
        ),
    );
}

#[test]
fn criterion_10_regularization_bound() {
    let g = line(128);
    let h = g.spacing();
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for (_, kernel) in common::zoo() {
        let k_r = levy_constant_full(&kernel, 1.0).unwrap();
        for eps in [h, 2.0 * h, 4.0 * h] {
            let ctx = context(g, kernel.clone(), eps, 1.0);
            for _ in 0..20 {
                let v = random_field(g, &mut rng);
                let max_row = ctx.row_sums(&v).unwrap().into_iter().fold(0.0, f64::max);
                worst = worst.max(max_row / (k_r / eps));
            }
        }
    }
    report(
        10,
        "regularization bound",
        worst <= REGULAR_FACTOR,
        format!("max row sum / (K_R/eps) = {worst:.4} <= {REGULAR_FACTOR}"),
    );
}

fn planted_violators() -> Vec<(&'static str, Kernel, Axiom)> {
    let decreasing = ScalarFunction::table(vec![(-1.0, 1.0), (1.0, -1.0)]).unwrap();
    let root = ScalarFunction::custom("sqrt-phi", |z: f64| z.signum() * z.abs().sqrt());
    vec![
        ("non-monotone f", Kernel::porous_medium(1, decreasing, common::mu()).unwrap(), Axiom::A1),
        ("p = 1.5 phi", Kernel::p_laplacian(1, root, common::mu()).unwrap(), Axiom::A6),
    ]
}

#[test]
fn criterion_11_validator_soundness() {
    let (big_r, eps) = (1.0, 0.05);
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, kernel) in common::zoo() {
        let reports = check_axioms(&kernel, big_r, eps, VALIDATOR_BUDGET, 11).unwrap();
        if let Some(bad) = reports.iter().find(|r| r.verdict != Outcome::Pass) {
            lines.push(format!("{name} {} {}", bad.axiom, bad.verdict.name()));
            pass = false;
        }
    }
    for (name, kernel, axiom) in planted_violators() {
        let reports = check_axioms(&kernel, big_r, eps, VALIDATOR_BUDGET, 11).unwrap();
        let rep = reports.iter().find(|r| r.axiom == axiom).unwrap();
        let tol = if axiom == Axiom::A6 { validator::CONTINUITY_TOLERANCE } else { validator::TOLERANCE };
        let replayed = rep.witness.map(|w| replay(&kernel, axiom, &w, big_r)).unwrap_or(f64::NAN);
        let ok = rep.verdict == Outcome::Fail && replayed == rep.worst_violation && replayed > tol;
        lines.push(format!("{name}: {axiom} {} replay {replayed:.3e}", rep.verdict.name()));
        pass &= ok;
    }
    report(11, "validator soundness", pass, format!("6 zoo kernels pass at budget 1e4; {}", lines.join("; ")));
}

#[test]
fn criterion_12_translation_equivariance() {
    let g = line(128);
    let shift = [37isize, 0];
    let u0 = Profile::RandomBv { amplitude: 1.0, pieces: 6, seed: 12 }.sample(&g).unwrap();
    let ctx = context(g, common::porous_medium(), g.spacing(), amplitude_bound(&u0));
    let cfg = implicit(0.5, TimeStep::Cfl { theta: 0.5 }, 0.1);
    let plain = run(&ctx, &u0, &cfg).unwrap();
    let moved = run(&ctx, &u0.shifted(shift), &cfg).unwrap();
    let worst = plain
        .snapshots
        .iter()
        .zip(&moved.snapshots)
        .map(|(a, b)| a.field.shifted(shift).sub(&b.field).unwrap().sup_norm())
        .fold(0.0, f64::max);
    report(
        12,
        "translation equivariance",
        worst <= EQUIVARIANCE_TOL,
        format!("max |shift(run(u0)) - run(shift u0)| = {worst:.3e} <= {EQUIVARIANCE_TOL:e}"),
    );
}

#[test]
fn criterion_13_epsilon_continuation() {
    let g = line(64);
    let h = g.spacing();
    let eps = [4.0 * h, 2.0 * h, h];
    let cfg = implicit(0.5, TimeStep::Cfl { theta: 0.5 }, 0.1);
    let mut pass = true;
    let mut lines = Vec::new();
    for seed in [13, 14] {
        let u0 = Profile::RandomBv { amplitude: 1.0, pieces: 6, seed }.sample(&g).unwrap();
        let first = continuation_in_epsilon(&g, &common::porous_medium(), &u0, &eps, &cfg).unwrap();
        let again = continuation_in_epsilon(&g, &common::porous_medium(), &u0, &eps, &cfg).unwrap();
        let d = &first.cauchy;
        pass &= d.len() == 2 && d.iter().all(|x| x.is_finite()) && *d == again.cauchy;
        lines.push(format!("seed {seed}: d(4h->2h) = {:.4e}, d(2h->h) = {:.4e}", d[0], d[1]));
    }
    report(13, "epsilon continuation", pass, format!("{}; reproducible", lines.join(", ")));
}

// Keeps the explicit integrator exercised by the suite as well: at θ = 0.5
// it must agree with the implicit scheme to first order on the linear run.
#[test]
fn explicit_and_implicit_agree_to_first_order() {
    let g = line(64);
    let u0 = Profile::SmoothBump { center: 4.0, width: 3.0, height: 1.0 }.sample(&g).unwrap();
    let ctx = context(g, common::fractional_heat(), g.spacing(), 1.0);
    let dt = 1e-3;
    let explicit_cfg = SolverConfig { integrator: Integrator::ExplicitEuler, ..implicit(0.2, TimeStep::Fixed(dt), 0.2) };
    let a = run(&ctx, &u0, &explicit_cfg).unwrap();
    let b = run(&ctx, &u0, &implicit(0.2, TimeStep::Fixed(dt), 0.2)).unwrap();
    let gap = a.last().unwrap().field.l1_distance(&b.last().unwrap().field).unwrap();
    assert!(gap < 10.0 * dt * u0.l1(), "gap {gap}");
    assert!(evolve::cfl_limit(&ctx) > dt);
}
