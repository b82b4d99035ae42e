mod common;

use proptest::prelude::*;

use nonlocal_core::diagnostics::{check_comparison, check_contraction, default_test_bank, weak_residual};
use nonlocal_core::evolve::{cfl_limit, run, step_explicit};
use nonlocal_core::kernels::RegularizedKernel;
use nonlocal_core::validator::{check_axioms, replay, Outcome};
use nonlocal_core::{
    regularize, Field, Grid, Integrator, JumpKernel, Kernel, OperatorContext, Profile, ScalarFunction, SolverConfig,
    TimeStep,
};

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn grid_strategy() -> impl Strategy<Value = Grid> {
    (1usize..=2, 4usize..=12, 1.0f64..10.0).prop_map(|(dim, m, l)| Grid::new(dim, m, l).unwrap())
}

fn field_strategy() -> impl Strategy<Value = Field> {
    grid_strategy().prop_flat_map(|g| {
        prop::collection::vec(-2.0f64..2.0, g.len()).prop_map(move |v| Field::new(g, v).unwrap())
    })
}

fn line_field(m: usize) -> impl Strategy<Value = Field> {
    prop::collection::vec(-1.0f64..1.0, m).prop_map(move |v| Field::new(Grid::new(1, m, 8.0).unwrap(), v).unwrap())
}

fn kernel_index() -> impl Strategy<Value = usize> {
    0usize..6
}

fn zoo_kernel(k: usize) -> Kernel {
    common::zoo().swap_remove(k).1
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn torus_distance_is_a_metric(g in grid_strategy(), a in 0usize..144, b in 0usize..144, c in 0usize..144) {
        let (i, j, k) = (a % g.len(), b % g.len(), c % g.len());
        prop_assert_eq!(g.torus_distance(i, j), g.torus_distance(j, i));
        prop_assert_eq!(g.torus_distance(i, i), 0.0);
        prop_assert!(g.torus_distance(i, k) <= g.torus_distance(i, j) + g.torus_distance(j, k) + 1e-12);
    }

    #[test]
    fn shifts_preserve_norms_and_variation(u in field_strategy(), s0 in -20isize..20, s1 in -20isize..20) {
        let v = u.shifted([s0, s1]);
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            prop_assert!(rel_close(u.norm_lp(p).unwrap(), v.norm_lp(p).unwrap(), 1e-13));
        }
        prop_assert!(rel_close(u.total_variation(), v.total_variation(), 1e-13));
    }

    #[test]
    fn variation_ignores_constants(u in field_strategy(), c in -5.0f64..5.0) {
        let v = u.map(|x| x + c).unwrap();
        // the difference of two shifted values carries rounding of size |c|·ulp
        let tol = 1e-13 * u.total_variation().max(c.abs() * u.len() as f64);
        prop_assert!((u.total_variation() - v.total_variation()).abs() <= tol);
    }

    #[test]
    fn norms_are_homogeneous(u in field_strategy(), p in 1.0f64..6.0) {
        let twice = u.map(|x| 2.0 * x).unwrap();
        prop_assert!(rel_close(twice.norm_lp(p).unwrap(), 2.0 * u.norm_lp(p).unwrap(), 1e-13));
        prop_assert_eq!(twice.sup_norm(), 2.0 * u.sup_norm());
    }

    #[test]
    fn zoo_kernels_are_symmetric(k in kernel_index(), a in -1.0f64..1.0, b in -1.0f64..1.0, r in 1e-3f64..50.0) {
        let m = zoo_kernel(k);
        prop_assert_eq!(m.eval(a, b, r), m.eval(b, a, r));
    }

    #[test]
    fn zoo_kernels_are_monotone(k in kernel_index(), mut q in prop::array::uniform4(-1.0f64..1.0), r in 1e-3f64..50.0) {
        let m = zoo_kernel(k);
        q.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let (a, c, d, b) = (q[0], q[1], q[2], q[3]);
        let outer = (a - b) * m.eval(a, b, r);
        let inner = (c - d) * m.eval(c, d, r);
        prop_assert!(outer >= inner - 1e-12 * outer.abs().max(inner.abs()));
    }

    #[test]
    fn zoo_kernels_stay_below_majorant(k in kernel_index(), a in -1.0f64..1.0, b in -1.0f64..1.0, r in 1e-3f64..50.0) {
        let m = zoo_kernel(k);
        let v = m.eval(a, b, r);
        prop_assert!(v >= 0.0);
        prop_assert!(v <= m.majorant(1.0, r) * (1.0 + 1e-12));
    }

    #[test]
    fn regularization_only_lowers_kernels(
        k in kernel_index(), eps in 0.01f64..1.0, a in -1.0f64..1.0, b in -1.0f64..1.0, r in 1e-3f64..50.0,
    ) {
        let base = zoo_kernel(k);
        let reg = regularize(base.clone(), eps).unwrap();
        prop_assert!(reg.eval(a, b, r) <= base.eval(a, b, r));
        prop_assert_eq!(reg.eval(a, b, r), reg.eval(b, a, r));
        if r < eps {
            prop_assert_eq!(reg.eval(a, b, r), 0.0);
        }
    }

    #[test]
    fn cone_combinations_keep_the_axioms(
        i in kernel_index(), j in kernel_index(), alpha in 0.0f64..3.0, beta in 0.0f64..3.0,
        mut q in prop::array::uniform4(-1.0f64..1.0), r in 1e-3f64..50.0,
    ) {
        let m = Kernel::cone_combine(alpha, zoo_kernel(i), beta, zoo_kernel(j)).unwrap();
        q.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let (a, c, d, b) = (q[0], q[1], q[2], q[3]);
        prop_assert_eq!(m.eval(a, b, r), m.eval(b, a, r));
        let outer = (a - b) * m.eval(a, b, r);
        let inner = (c - d) * m.eval(c, d, r);
        prop_assert!(outer >= inner - 1e-12 * outer.abs().max(inner.abs()));
        prop_assert!(m.eval(a, b, r) <= m.majorant(1.0, r) * (1.0 + 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn operator_annihilates_mass(k in kernel_index(), v in line_field(32), u in line_field(32)) {
        let g = *u.grid();
        let ctx = OperatorContext::build(g, regularize(zoo_kernel(k), g.spacing()).unwrap(), 1.0).unwrap();
        let lu = ctx.apply(&v, &u).unwrap();
        prop_assert!(lu.mass().abs() <= 1e-13 * lu.l1().max(f64::MIN_POSITIVE));
    }

    #[test]
    fn operator_commutes_with_shifts(k in kernel_index(), v in line_field(32), u in line_field(32), s in -40isize..40) {
        let g = *u.grid();
        let ctx = OperatorContext::build(g, regularize(zoo_kernel(k), g.spacing()).unwrap(), 1.0).unwrap();
        let moved = ctx.apply(&v.shifted([s, 0]), &u.shifted([s, 0])).unwrap();
        prop_assert_eq!(moved, ctx.apply(&v, &u).unwrap().shifted([s, 0]));
    }

    #[test]
    fn zero_kernel_is_inert(v in field_strategy()) {
        let g = *v.grid();
        let ctx = OperatorContext::build(g, RegularizedKernel::unregularized(Kernel::zero(g.dim()).unwrap()), 1.0).unwrap();
        prop_assert_eq!(ctx.apply(&v, &v).unwrap(), Field::zeros(g));
    }

    #[test]
    fn explicit_steps_under_cfl_keep_the_maximum_principle(k in kernel_index(), u in line_field(32)) {
        let g = *u.grid();
        let ctx = OperatorContext::build(g, regularize(zoo_kernel(k), g.spacing()).unwrap(), 1.0).unwrap();
        let next = step_explicit(&ctx, &u, 0.5 * cfl_limit(&ctx)).unwrap();
        prop_assert!(next.max() <= u.max() + 1e-12);
        prop_assert!(next.min() >= u.min() - 1e-12);
    }

    #[test]
    fn validator_is_deterministic_and_nested(seed in 0u64..1000) {
        let f = ScalarFunction::table(vec![(-1.0, 1.0), (0.0, 0.5), (1.0, 0.75)]).unwrap();
        let k = Kernel::porous_medium(1, f, common::mu()).unwrap();
        let small = check_axioms(&k, 1.0, 0.1, 1000, seed).unwrap();
        prop_assert_eq!(&small, &check_axioms(&k, 1.0, 0.1, 1000, seed).unwrap());
        let large = check_axioms(&k, 1.0, 0.1, 3000, seed).unwrap();
        for (s, l) in small.iter().zip(&large) {
            prop_assert!(s.worst_violation <= l.worst_violation);
            if l.verdict == Outcome::Fail {
                let w = l.witness.unwrap();
                prop_assert_eq!(replay(&k, l.axiom, &w, 1.0), l.worst_violation);
            }
        }
    }
}

fn heat_ctx(cells: usize) -> OperatorContext {
    let g = Grid::new(1, cells, 8.0).unwrap();
    OperatorContext::build(g, regularize(common::fractional_heat(), g.spacing()).unwrap(), 1.0).unwrap()
}

#[test]
fn comparison_of_a_run_with_itself() {
    let ctx = heat_ctx(64);
    let g = *ctx.grid();
    let u0 = Profile::default_box(&g).sample(&g).unwrap();
    let traj = run(&ctx, &u0, &SolverConfig { end_time: 0.3, ..SolverConfig::default() }).unwrap();
    assert!(check_comparison(&traj, &traj, 0.0).unwrap().pass);
}

#[test]
fn contraction_against_a_shifted_run() {
    let ctx = heat_ctx(64);
    let g = *ctx.grid();
    let u0 = Profile::RandomBv { amplitude: 1.0, pieces: 5, seed: 9 }.sample(&g).unwrap();
    let cfg = SolverConfig { end_time: 0.3, ..SolverConfig::default() };
    let a = run(&ctx, &u0, &cfg).unwrap();
    let b = run(&ctx, &u0.shifted([11, 0]), &cfg).unwrap();
    assert!(check_contraction(&a, &b, 1e-12).unwrap().pass);
}

#[test]
fn weak_residual_halves_with_the_time_step() {
    let ctx = heat_ctx(64);
    let g = *ctx.grid();
    let u0 = Profile::SmoothBump { center: 4.0, width: 3.0, height: 1.0 }.sample(&g).unwrap();
    let bank = default_test_bank(&g, 1.0);
    let residual = |dt: f64| {
        let cfg = SolverConfig {
            integrator: Integrator::BackwardEulerPicard,
            time_step: TimeStep::Fixed(dt),
            snapshot_every: dt,
            end_time: 1.0,
            ..SolverConfig::default()
        };
        weak_residual(&run(&ctx, &u0, &cfg).unwrap(), &ctx, &bank).unwrap()
    };
    let (coarse, fine) = (residual(0.02), residual(0.01));
    let ratio = coarse / fine;
    assert!((ratio - 2.0).abs() <= 0.5, "residual ratio {ratio} ({coarse:e} -> {fine:e})");
}

#[test]
fn zoo_kernels_pass_the_validator_in_two_dimensions() {
    let mu = nonlocal_core::LevyDensity::power_law(0.5, 1.0).unwrap();
    let k = Kernel::porous_medium(2, ScalarFunction::power_odd(3.0).unwrap(), mu).unwrap();
    let reports = check_axioms(&k, 1.0, 0.1, 1000, 2).unwrap();
    assert!(reports.iter().all(|r| r.verdict == Outcome::Pass), "{reports:?}");
}
