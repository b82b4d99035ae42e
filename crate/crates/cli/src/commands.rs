//! The four subcommands. Each writes its CSV artifacts under the output
//! directory and returns the process exit status.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use nonlocal_core::diagnostics::{self, Verdict};
use nonlocal_core::evolve::{self, Continuation, RunFailure};
use nonlocal_core::validator::{self, AxiomReport, Outcome, Witness};
use nonlocal_core::{regularize, Field, OperatorContext, Quantity, Trajectory};

use crate::config::RunConfig;
use crate::CliError;

/// Process exit status of a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass = 0,
    ConfigError = 1,
    CheckFailed = 2,
    SolverFailed = 3,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// 17 significant digits: every `f64` survives a text round trip.
fn f(x: f64) -> String {
    format!("{x:.16e}")
}

fn create(path: &Path) -> io::Result<BufWriter<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(fs::File::create(path)?))
}

pub fn write_field(path: &Path, field: &Field) -> io::Result<()> {
    let mut w = create(path)?;
    let grid = field.grid();
    if grid.dim() == 1 {
        writeln!(w, "i,x,u")?;
    } else {
        writeln!(w, "i,x,y,u")?;
    }
    for (i, u) in field.values().iter().enumerate() {
        let p = grid.position(i);
        if grid.dim() == 1 {
            writeln!(w, "{i},{},{}", f(p[0]), f(*u))?;
        } else {
            writeln!(w, "{i},{},{},{}", f(p[0]), f(p[1]), f(*u))?;
        }
    }
    w.flush()
}

pub fn write_diagnostics(path: &Path, trajectory: &Trajectory) -> io::Result<()> {
    let mut w = create(path)?;
    writeln!(w, "t,mass,l1,l2,linf,tv,bv,min,max,tail_estimate,picard_iters")?;
    for s in &trajectory.snapshots {
        let r = &s.record;
        let cols = [r.t, r.mass, r.l1, r.l2, r.linf, r.tv, r.bv, r.min_value, r.max_value, r.tail_estimate];
        let cols: Vec<String> = cols.iter().map(|x| f(*x)).collect();
        writeln!(w, "{},{}", cols.join(","), r.picard_iters)?;
    }
    w.flush()
}

fn write_trajectory(dir: &Path, prefix: &str, trajectory: &Trajectory) -> io::Result<()> {
    for (k, s) in trajectory.snapshots.iter().enumerate() {
        write_field(&dir.join("snapshots").join(format!("{prefix}{k:05}.csv")), &s.field)?;
    }
    write_diagnostics(&dir.join(format!("{prefix}diagnostics.csv")), trajectory)
}

/// One summary row per check.
struct Checks {
    rows: Vec<(String, bool, f64, f64)>,
}

impl Checks {
    fn new() -> Self {
        Self { rows: Vec::new() }
    }

    fn push(&mut self, name: impl Into<String>, verdict: Verdict, slack: f64) {
        self.rows.push((name.into(), verdict.pass, verdict.worst_margin, slack));
    }

    fn skip(&mut self, name: impl Into<String>) {
        self.rows.push((name.into(), true, f64::NAN, f64::NAN));
    }

    fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.1)
    }

    fn write(&self, path: &Path) -> io::Result<()> {
        let mut w = create(path)?;
        writeln!(w, "check,verdict,worst_margin,slack")?;
        for (name, pass, margin, slack) in &self.rows {
            let verdict = if margin.is_nan() { "skipped" } else if *pass { "pass" } else { "fail" };
            writeln!(w, "{name},{verdict},{},{}", f(*margin), f(*slack))?;
        }
        w.flush()
    }
}

fn context(config: &RunConfig, u0: &Field) -> Result<OperatorContext, CliError> {
    let kernel = config.build_kernel()?;
    let eps = config.solver.epsilon_on(&config.grid);
    let big_r = config.radius.unwrap_or_else(|| evolve::amplitude_bound(u0));
    Ok(OperatorContext::build(config.grid, regularize(kernel, eps)?, big_r)?)
}

fn mass_verdict(trajectory: &Trajectory, tol: f64) -> Verdict {
    let m0 = trajectory.snapshots.first().map_or(0.0, |s| s.record.mass);
    let limit = tol * m0.abs() + 1e-14;
    let margins: Vec<f64> = trajectory.snapshots.iter().map(|s| (s.record.mass - m0).abs() - limit).collect();
    let first = margins.iter().position(|m| *m > 0.0);
    Verdict { pass: first.is_none(), worst_margin: margins.iter().copied().fold(f64::NEG_INFINITY, f64::max), first_violation: first }
}

fn trajectory_checks(checks: &mut Checks, prefix: &str, trajectory: &Trajectory, config: &RunConfig) {
    checks.push(format!("{prefix}mass"), mass_verdict(trajectory, config.diag.mass_tol), config.diag.mass_tol);
    for q in [Quantity::L1, Quantity::L2, Quantity::Linf] {
        let slack = config.diag.norm_slack;
        checks.push(format!("{prefix}{}_decay", q.name()), diagnostics::check_monotone_series(trajectory, q, slack), slack);
    }
    let slack = config.diag.tv_slack;
    checks.push(format!("{prefix}tv_decay"), diagnostics::check_monotone_series(trajectory, Quantity::Tv, slack), slack);
}

fn solver_failure(out: &Path, prefix: &str, failure: &RunFailure) -> Result<Status, CliError> {
    write_trajectory(out, prefix, &failure.partial)?;
    eprintln!("solver failed: {}", failure.error);
    Ok(Status::SolverFailed)
}

pub fn run(config: &RunConfig, out: &Path) -> Result<Status, CliError> {
    let u0 = config.init.profile.sample(&config.grid)?;
    let ctx = context(config, &u0)?;
    let trajectory = match evolve::run(&ctx, &u0, &config.solver) {
        Ok(t) => t,
        Err(failure) => return solver_failure(out, "", &failure),
    };
    write_trajectory(out, "", &trajectory)?;
    let mut checks = Checks::new();
    trajectory_checks(&mut checks, "", &trajectory, config);
    checks.write(&out.join("checks.csv"))?;
    Ok(if checks.all_pass() { Status::Pass } else { Status::CheckFailed })
}

pub fn compare(config: &RunConfig, out: &Path) -> Result<Status, CliError> {
    let Some(init_b) = &config.init_b else {
        return Err(CliError::Usage("`compare` needs a second initial profile (`init_b.*` keys)".into()));
    };
    let u0 = config.init.profile.sample(&config.grid)?;
    let v0 = init_b.profile.sample(&config.grid)?;
    let big_r = u0.sup_norm().max(v0.sup_norm()).max(f64::MIN_POSITIVE);
    let ctx = context(&RunConfig { radius: config.radius.or(Some(big_r)), ..config.clone() }, &u0)?;
    let a = match evolve::run(&ctx, &u0, &config.solver) {
        Ok(t) => t,
        Err(failure) => return solver_failure(out, "a_", &failure),
    };
    let b = match evolve::run(&ctx, &v0, &config.solver) {
        Ok(t) => t,
        Err(failure) => return solver_failure(out, "b_", &failure),
    };
    write_diagnostics(&out.join("a_diagnostics.csv"), &a)?;
    write_diagnostics(&out.join("b_diagnostics.csv"), &b)?;

    let steps = a.meta.steps.max(b.meta.steps) as f64;
    let slack = config.diag.contraction_slack.unwrap_or(2.0 * config.solver.picard_tol * steps);
    let distances = diagnostics::l1_distances(&a, &b)?;
    let mut checks = Checks::new();
    checks.push("contraction", diagnostics::check_contraction(&a, &b, slack)?, slack);
    let (lower, upper) = if diagnostics::check_ordered(&u0, &v0).is_ok() {
        (Some(&a), Some(&b))
    } else if diagnostics::check_ordered(&v0, &u0).is_ok() {
        (Some(&b), Some(&a))
    } else {
        (None, None)
    };
    match (lower, upper) {
        (Some(lo), Some(hi)) => checks.push("comparison", diagnostics::check_comparison(lo, hi, slack)?, slack),
        _ => checks.skip("comparison"),
    }

    let mut w = create(&out.join("compare.csv"))?;
    writeln!(w, "t,l1_distance,min_difference")?;
    for ((sa, sb), d) in a.snapshots.iter().zip(&b.snapshots).zip(&distances) {
        let gap = sa.field.values().iter().zip(sb.field.values()).map(|(x, y)| y - x).fold(f64::INFINITY, f64::min);
        writeln!(w, "{},{},{}", f(sa.t), f(*d), f(gap))?;
    }
    w.flush()?;
    checks.write(&out.join("checks.csv"))?;
    Ok(if checks.all_pass() { Status::Pass } else { Status::CheckFailed })
}

pub fn converge(config: &RunConfig, out: &Path) -> Result<Status, CliError> {
    let u0 = config.init.profile.sample(&config.grid)?;
    let kernel = config.build_kernel()?;
    let eps: Vec<f64> = config.converge.iter().map(|e| e.resolve(&config.grid)).collect();
    let result: Result<Continuation, Box<RunFailure>> =
        evolve::continuation_in_epsilon(&config.grid, &kernel, &u0, &eps, &config.solver);
    let continuation = match result {
        Ok(c) => c,
        Err(failure) => return solver_failure(out, "", &failure),
    };
    let mut w = create(&out.join("cauchy.csv"))?;
    writeln!(w, "k,eps_coarse,eps_fine,d")?;
    for (k, d) in continuation.cauchy.iter().enumerate() {
        writeln!(w, "{k},{},{},{}", f(eps[k]), f(eps[k + 1]), f(*d))?;
    }
    w.flush()?;
    Ok(Status::Pass)
}

fn witness_text(w: &Witness) -> String {
    match *w {
        Witness::Pair { a, b, r } => format!("a={a:e} b={b:e} r={r:e}"),
        Witness::Quadruple { a, b, c, d, r } => format!("a={a:e} b={b:e} c={c:e} d={d:e} r={r:e}"),
        Witness::Ladder { b, z0, r } => format!("b={b:e} z0={z0:e} r={r:e}"),
        Witness::Lipschitz { a, b, c, r } => format!("a={a:e} b={b:e} c={c:e} r={r:e}"),
        Witness::Integral { big_r } => format!("R={big_r:e}"),
        Witness::Row { a, b } => format!("a={a:e} b={b:e}"),
        Witness::Perturbation { a, b, delta } => format!("a={a:e} b={b:e} delta={delta:e}"),
    }
}

pub fn validate(config: &RunConfig, out: &Path) -> Result<Status, CliError> {
    let kernel = config.build_kernel()?;
    let v = &config.validate;
    let eps = v.epsilon.unwrap_or_else(|| config.solver.epsilon_on(&config.grid)).min(1.0);
    let mut reports: Vec<AxiomReport> = validator::check_axioms(&kernel, v.radius, eps, v.budget, config.seed)?;
    let reg = regularize(kernel, eps)?;
    reports.extend(validator::check_regular(&reg, &config.grid, v.radius, v.budget, config.seed)?);

    let mut w = create(&out.join("axioms.csv"))?;
    writeln!(w, "axiom,verdict,worst_violation,samples,estimate,witness")?;
    for r in &reports {
        let estimate = r.estimate.map(f).unwrap_or_default();
        let witness = r.witness.as_ref().map(witness_text).unwrap_or_default();
        writeln!(w, "{},{},{},{},{estimate},{witness}", r.axiom, r.verdict.name(), f(r.worst_violation), r.samples_used)?;
    }
    w.flush()?;
    for r in reports.iter().filter(|r| r.verdict != Outcome::Pass) {
        eprintln!("{} {}: worst violation {:e}", r.axiom, r.verdict.name(), r.worst_violation);
    }
    Ok(if reports.iter().all(|r| r.verdict == Outcome::Pass) { Status::Pass } else { Status::CheckFailed })
}

/// Output directory: the `--out` flag wins over `output.dir`.
pub fn output_dir(config: &RunConfig, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(&config.output_dir))
}
