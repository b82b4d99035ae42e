//! Flat `key = value` run configuration.
//!
//! Keys carry dotted section prefixes (`grid.m`, `kernel.family`, ...), values
//! are bare numbers/booleans/words or double-quoted strings, and `#` starts a
//! comment. The syntax is a subset of TOML, so configs open in any TOML-aware
//! editor. Parsing never stops at the first problem: every unknown key, type
//! mismatch, duplicate and constraint violation is reported with its line.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use nonlocal_core::kernels::{OrderFunction, Theta};
use nonlocal_core::{Grid, Integrator, Kernel, LevyDensity, Profile, ScalarFunction, SolverConfig, TimeStep};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {n}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionConfig {
    PowerOdd(f64),
    PowerAbs(f64),
    PhiPower(f64),
    Table(Vec<(f64, f64)>),
}

impl FunctionConfig {
    pub fn build(&self) -> Result<ScalarFunction, nonlocal_core::Error> {
        match self {
            FunctionConfig::PowerOdd(m) => ScalarFunction::power_odd(*m),
            FunctionConfig::PowerAbs(m) => ScalarFunction::power_abs(*m),
            FunctionConfig::PhiPower(p) => ScalarFunction::phi_power(*p),
            FunctionConfig::Table(knots) => ScalarFunction::table(knots.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelConfig {
    Zero,
    FractionalHeat { alpha: f64, amplitude: f64 },
    PorousMedium { f: FunctionConfig, density: LevyDensity },
    Convex { f: FunctionConfig, density: LevyDensity },
    PLaplacian { phi: FunctionConfig, density: LevyDensity },
    DoublyNonlinear { f: FunctionConfig, phi: FunctionConfig, density: LevyDensity },
    VariableOrder { psi1: OrderFunction, psi2: OrderFunction, theta: f64, theta_amplitude: f64, a1: f64, a2: f64 },
}

impl KernelConfig {
    pub fn family(&self) -> &'static str {
        match self {
            KernelConfig::Zero => "zero",
            KernelConfig::FractionalHeat { .. } => "fractional_heat",
            KernelConfig::PorousMedium { .. } => "porous_medium",
            KernelConfig::Convex { .. } => "convex",
            KernelConfig::PLaplacian { .. } => "p_laplacian",
            KernelConfig::DoublyNonlinear { .. } => "doubly_nonlinear",
            KernelConfig::VariableOrder { .. } => "variable_order",
        }
    }

    pub fn build(&self, dim: usize) -> Result<Kernel, nonlocal_core::Error> {
        match self {
            KernelConfig::Zero => Kernel::zero(dim),
            KernelConfig::FractionalHeat { alpha, amplitude } => Kernel::fractional_heat(dim, *alpha, *amplitude),
            KernelConfig::PorousMedium { f, density } => Kernel::porous_medium(dim, f.build()?, *density),
            KernelConfig::Convex { f, density } => Kernel::convex_diffusion(dim, f.build()?, *density),
            KernelConfig::PLaplacian { phi, density } => Kernel::p_laplacian(dim, phi.build()?, *density),
            KernelConfig::DoublyNonlinear { f, phi, density } => {
                Kernel::doubly_nonlinear(dim, f.build()?, phi.build()?, *density)
            }
            KernelConfig::VariableOrder { psi1, psi2, theta, theta_amplitude, a1, a2 } => {
                let theta = if *theta_amplitude == 0.0 {
                    Theta::Constant(*theta)
                } else {
                    Theta::Oscillating { center: *theta, amplitude: *theta_amplitude }
                };
                Kernel::variable_order(dim, *psi1, *psi2, theta, *a1, *a2)
            }
        }
    }
}

/// An initial profile. Seeded profiles that did not set their own seed follow
/// the top-level `seed` (and therefore `--seed`).
#[derive(Debug, Clone, PartialEq)]
pub struct InitConfig {
    pub profile: Profile,
    pub inherits_seed: bool,
}

impl InitConfig {
    fn reseed(&mut self, seed: u64) {
        if !self.inherits_seed {
            return;
        }
        match &mut self.profile {
            Profile::TwoLevel { seed: s, .. } | Profile::RandomBv { seed: s, .. } => *s = seed,
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagConfig {
    pub mass_tol: f64,
    pub norm_slack: f64,
    pub tv_slack: f64,
    /// `None` means `2·picard_tol·steps`.
    pub contraction_slack: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidateConfig {
    pub budget: usize,
    pub radius: f64,
    pub epsilon: Option<f64>,
}

/// A regularization radius, absolute or in mesh widths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsSpec {
    Absolute(f64),
    Mesh(f64),
}

impl EpsSpec {
    pub fn resolve(self, grid: &Grid) -> f64 {
        match self {
            EpsSpec::Absolute(x) => x,
            EpsSpec::Mesh(k) => k * grid.spacing(),
        }
    }
}

impl fmt::Display for EpsSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            EpsSpec::Absolute(x) => write!(f, "{x:?}"),
            EpsSpec::Mesh(k) if k == 1.0 => f.write_str("h"),
            EpsSpec::Mesh(k) => write!(f, "{k:?}h"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub grid: Grid,
    pub kernel: KernelConfig,
    pub init: InitConfig,
    pub init_b: Option<InitConfig>,
    pub solver: SolverConfig,
    /// Amplitude bound `R`; `None` means `‖u₀‖_∞`.
    pub radius: Option<f64>,
    pub diag: DiagConfig,
    pub output_dir: String,
    pub validate: ValidateConfig,
    pub converge: Vec<EpsSpec>,
}

impl RunConfig {
    pub fn build_kernel(&self) -> Result<Kernel, nonlocal_core::Error> {
        self.kernel.build(self.grid.dim())
    }

    /// Replaces the top-level seed and every seed inherited from it.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.init.reseed(seed);
        if let Some(b) = &mut self.init_b {
            b.reseed(seed);
        }
        self
    }

    /// Non-fatal remarks, e.g. a cutoff below the mesh width.
    pub fn warnings(&self) -> Vec<String> {
        let h = self.grid.spacing();
        let eps = self.solver.epsilon_on(&self.grid);
        let mut out = Vec::new();
        if eps < h * (1.0 - 1e-12) {
            out.push(format!("solver.epsilon = {eps} is below the mesh width {h}; the cutoff cannot resolve it"));
        }
        out
    }

    /// The canonical text form; `parse_config(&c.serialize()) == Ok(c)`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("seed", self.seed.to_string());
        put("grid.n", self.grid.dim().to_string());
        put("grid.m", self.grid.cells().to_string());
        put("grid.l", num(self.grid.period()));
        put("kernel.family", quote(self.kernel.family()));
        let density = |put: &mut dyn FnMut(&str, String), d: &LevyDensity| match *d {
            LevyDensity::PowerLaw { alpha, amplitude } => {
                put("kernel.density", quote("power_law"));
                put("kernel.alpha", num(alpha));
                put("kernel.amplitude", num(amplitude));
            }
            LevyDensity::CompactBump { radius, amplitude } => {
                put("kernel.density", quote("compact_bump"));
                put("kernel.radius", num(radius));
                put("kernel.amplitude", num(amplitude));
            }
        };
        let function = |put: &mut dyn FnMut(&str, String), role: &str, f: &FunctionConfig| {
            let (kind, exp_key) = if role == "f" { ("kernel.f", "kernel.m") } else { ("kernel.phi", "kernel.p") };
            match f {
                FunctionConfig::PowerOdd(m) => {
                    put(kind, quote("power_odd"));
                    put(exp_key, num(*m));
                }
                FunctionConfig::PowerAbs(m) => {
                    put(kind, quote("power_abs"));
                    put(exp_key, num(*m));
                }
                FunctionConfig::PhiPower(p) => {
                    put(kind, quote("phi_power"));
                    put(exp_key, num(*p));
                }
                FunctionConfig::Table(knots) => {
                    put(kind, quote("table"));
                    let text: Vec<String> = knots.iter().map(|(x, y)| format!("{}:{}", num(*x), num(*y))).collect();
                    put(&format!("{kind}_table"), quote(&text.join(", ")));
                }
            }
        };
        match &self.kernel {
            KernelConfig::Zero => {}
            KernelConfig::FractionalHeat { alpha, amplitude } => {
                put("kernel.alpha", num(*alpha));
                put("kernel.amplitude", num(*amplitude));
            }
            KernelConfig::PorousMedium { f, density: d } | KernelConfig::Convex { f, density: d } => {
                function(&mut put, "f", f);
                density(&mut put, d);
            }
            KernelConfig::PLaplacian { phi, density: d } => {
                function(&mut put, "phi", phi);
                density(&mut put, d);
            }
            KernelConfig::DoublyNonlinear { f, phi, density: d } => {
                function(&mut put, "f", f);
                function(&mut put, "phi", phi);
                density(&mut put, d);
            }
            KernelConfig::VariableOrder { psi1, psi2, theta, theta_amplitude, a1, a2 } => {
                let order = |o: &OrderFunction| quote(&format!("{}, {}, {}", num(o.base), num(o.amplitude), num(o.rate)));
                put("kernel.psi1", order(psi1));
                put("kernel.psi2", order(psi2));
                put("kernel.theta", num(*theta));
                put("kernel.theta_amplitude", num(*theta_amplitude));
                put("kernel.a1", num(*a1));
                put("kernel.a2", num(*a2));
            }
        }
        for (prefix, init) in [("init", Some(&self.init)), ("init_b", self.init_b.as_ref())] {
            let Some(init) = init else { continue };
            let key = |k: &str| format!("{prefix}.{k}");
            let seed = |put: &mut dyn FnMut(&str, String), s: u64| {
                if !init.inherits_seed {
                    put(&key("seed"), s.to_string());
                }
            };
            match init.profile {
                Profile::Box { center, width, height } | Profile::SmoothBump { center, width, height } => {
                    let kind = if matches!(init.profile, Profile::Box { .. }) { "box" } else { "smooth_bump" };
                    put(&key("profile"), quote(kind));
                    put(&key("center"), num(center));
                    put(&key("width"), num(width));
                    put(&key("height"), num(height));
                }
                Profile::Step { position, low, high } => {
                    put(&key("profile"), quote("step"));
                    put(&key("position"), num(position));
                    put(&key("low"), num(low));
                    put(&key("high"), num(high));
                }
                Profile::TwoLevel { low, high, blocks, seed: s } => {
                    put(&key("profile"), quote("two_level"));
                    put(&key("low"), num(low));
                    put(&key("high"), num(high));
                    put(&key("blocks"), blocks.to_string());
                    seed(&mut put, s);
                }
                Profile::RandomBv { amplitude, pieces, seed: s } => {
                    put(&key("profile"), quote("random_bv"));
                    put(&key("amplitude"), num(amplitude));
                    put(&key("pieces"), pieces.to_string());
                    seed(&mut put, s);
                }
            }
        }
        let sv = &self.solver;
        put(
            "solver.integrator",
            quote(match sv.integrator {
                Integrator::BackwardEulerPicard => "backward_euler_picard",
                Integrator::ExplicitEuler => "explicit_euler",
            }),
        );
        put("solver.t", num(sv.end_time));
        match sv.time_step {
            TimeStep::Fixed(dt) => put("solver.dt", num(dt)),
            TimeStep::Cfl { theta } => put("solver.theta", num(theta)),
        }
        if let Some(eps) = sv.epsilon {
            put("solver.epsilon", num(eps));
        }
        if let Some(r) = self.radius {
            put("solver.radius", num(r));
        }
        put("solver.picard_tol", num(sv.picard_tol));
        put("solver.picard_max_iters", sv.picard_max_iters.to_string());
        put("solver.snapshot_every", num(sv.snapshot_every));
        put("solver.allow_cfl_violation", sv.allow_cfl_violation.to_string());
        put("solver.max_halvings", sv.max_halvings.to_string());
        put("diag.mass_tol", num(self.diag.mass_tol));
        put("diag.norm_slack", num(self.diag.norm_slack));
        put("diag.tv_slack", num(self.diag.tv_slack));
        if let Some(c) = self.diag.contraction_slack {
            put("diag.contraction_slack", num(c));
        }
        put("output.dir", quote(&self.output_dir));
        put("validate.budget", self.validate.budget.to_string());
        put("validate.radius", num(self.validate.radius));
        if let Some(e) = self.validate.epsilon {
            put("validate.epsilon", num(e));
        }
        let eps: Vec<String> = self.converge.iter().map(|e| e.to_string()).collect();
        put("converge.eps", quote(&eps.join(", ")));
        s
    }
}

/// Shortest text that parses back to the same `f64`.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn quote(s: &str) -> String {
    format!("\"{s}\"")
}

#[derive(Debug, Clone)]
enum Raw {
    Quoted(String),
    Bare(String),
}

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    raw: Raw,
}

/// Typed access to the parsed entries, collecting every error on the way.
struct Reader {
    entries: BTreeMap<String, Entry>,
    used: BTreeSet<String>,
    errors: Vec<ConfigError>,
}

impl Reader {
    fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line)
    }

    fn error(&mut self, key: &str, message: impl Into<String>) {
        let line = self.line(key);
        self.errors.push(ConfigError { line, message: message.into() });
    }

    fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn raw(&mut self, key: &str) -> Option<Entry> {
        self.used.insert(key.to_string());
        self.entries.get(key).cloned()
    }

    fn bare<T>(&mut self, key: &str, what: &str, parse: impl Fn(&str) -> Option<T>) -> Option<T> {
        let entry = self.raw(key)?;
        let parsed = match &entry.raw {
            Raw::Bare(s) => parse(s),
            Raw::Quoted(_) => None,
        };
        if parsed.is_none() {
            let found = match &entry.raw {
                Raw::Bare(s) => format!("`{s}`"),
                Raw::Quoted(s) => format!("the string \"{s}\""),
            };
            self.error(key, format!("type mismatch for `{key}`: expected {what}, found {found}"));
        }
        parsed
    }

    fn f64(&mut self, key: &str) -> Option<f64> {
        self.bare(key, "a finite number", |s| s.parse::<f64>().ok().filter(|x| x.is_finite()))
    }

    fn usize(&mut self, key: &str) -> Option<usize> {
        self.bare(key, "a non-negative integer", |s| s.parse().ok())
    }

    fn u64(&mut self, key: &str) -> Option<u64> {
        self.bare(key, "a non-negative integer", |s| s.parse().ok())
    }

    fn bool(&mut self, key: &str) -> Option<bool> {
        self.bare(key, "true or false", |s| s.parse().ok())
    }

    fn string(&mut self, key: &str) -> Option<String> {
        self.raw(key).map(|e| match e.raw {
            Raw::Quoted(s) | Raw::Bare(s) => s,
        })
    }

    fn missing(&mut self, key: &str) {
        self.errors.push(ConfigError { line: None, message: format!("missing required key `{key}`") });
    }

    fn required_f64(&mut self, key: &str) -> Option<f64> {
        if !self.has(key) {
            self.missing(key);
        }
        self.f64(key)
    }

    fn f64_or(&mut self, key: &str, default: f64) -> f64 {
        if self.has(key) {
            self.f64(key).unwrap_or(default)
        } else {
            default
        }
    }

    fn positive(&mut self, key: &str, default: f64) -> f64 {
        let x = self.f64_or(key, default);
        if !(x > 0.0) {
            self.error(key, format!("`{key}` must be positive, got {x}"));
        }
        x
    }
}

fn tokenize(text: &str) -> (BTreeMap<String, Entry>, Vec<ConfigError>) {
    let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
    let mut errors = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = strip_comment(raw_line).trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| ConfigError { line: Some(line), message };
        let Some((key, value)) = content.split_once('=') else {
            errors.push(err(format!("expected `key = value`, found `{content}`")));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let valid_key = !key.is_empty()
            && key.split('.').all(|part| {
                !part.is_empty() && part.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
            });
        if !valid_key {
            errors.push(err(format!("invalid key `{key}`")));
            continue;
        }
        let raw = if let Some(rest) = value.strip_prefix('"') {
            match rest.strip_suffix('"') {
                Some(inner) if !inner.contains('"') => Raw::Quoted(inner.to_string()),
                _ => {
                    errors.push(err(format!("unterminated string for `{key}`")));
                    continue;
                }
            }
        } else if value.is_empty() || value.contains(char::is_whitespace) {
            errors.push(err(format!("invalid value for `{key}`: `{value}` (quote strings containing spaces)")));
            continue;
        } else {
            Raw::Bare(value.to_string())
        };
        if let Some(first) = entries.get(key) {
            errors.push(err(format!("duplicate key `{key}` on lines {} and {line}", first.line)));
            continue;
        }
        entries.insert(key.to_string(), Entry { line, raw });
    }
    (entries, errors)
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn parse_list(text: &str) -> Vec<&str> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

fn parse_table(r: &mut Reader, key: &str) -> Option<Vec<(f64, f64)>> {
    let Some(text) = r.string(key) else {
        r.missing(key);
        return None;
    };
    let mut knots = Vec::new();
    for item in parse_list(&text) {
        let pair = item.split_once(':').and_then(|(x, y)| Some((x.trim().parse().ok()?, y.trim().parse().ok()?)));
        match pair {
            Some(p) => knots.push(p),
            None => {
                r.error(key, format!("`{key}`: expected `x:y` knots separated by commas, found `{item}`"));
                return None;
            }
        }
    }
    Some(knots)
}

fn parse_function(r: &mut Reader, role: &str, default_kind: &str) -> Option<FunctionConfig> {
    let (kind_key, exp_key, table_key) = if role == "f" {
        ("kernel.f", "kernel.m", "kernel.f_table")
    } else {
        ("kernel.phi", "kernel.p", "kernel.phi_table")
    };
    let kind = r.string(kind_key).unwrap_or_else(|| default_kind.to_string());
    let exponent = |r: &mut Reader| r.required_f64(exp_key);
    match kind.as_str() {
        "power_odd" => exponent(r).map(FunctionConfig::PowerOdd),
        "power_abs" => exponent(r).map(FunctionConfig::PowerAbs),
        "phi_power" => exponent(r).map(FunctionConfig::PhiPower),
        "table" => parse_table(r, table_key).map(FunctionConfig::Table),
        other => {
            r.error(kind_key, format!("unknown function `{other}` (power_odd, power_abs, phi_power, table)"));
            None
        }
    }
}

fn check_alpha(r: &mut Reader, key: &str, alpha: f64) {
    if !(alpha > 0.0 && alpha < 1.0) {
        r.error(
            key,
            format!("`{key}` = {alpha} violates A5 (low singularity of the Levy density): alpha must lie in (0, 1)"),
        );
    }
}

fn parse_density(r: &mut Reader) -> Option<LevyDensity> {
    let kind = r.string("kernel.density").unwrap_or_else(|| "power_law".to_string());
    let amplitude = r.positive("kernel.amplitude", 1.0);
    match kind.as_str() {
        "power_law" => {
            let alpha = r.required_f64("kernel.alpha")?;
            check_alpha(r, "kernel.alpha", alpha);
            Some(LevyDensity::PowerLaw { alpha, amplitude })
        }
        "compact_bump" => {
            let radius = r.required_f64("kernel.radius")?;
            Some(LevyDensity::CompactBump { radius, amplitude })
        }
        other => {
            r.error("kernel.density", format!("unknown density `{other}` (power_law, compact_bump)"));
            None
        }
    }
}

fn parse_order(r: &mut Reader, key: &str, default: OrderFunction) -> Option<OrderFunction> {
    let Some(text) = r.string(key) else { return Some(default) };
    let parts: Vec<Option<f64>> = parse_list(&text).into_iter().map(|s| s.parse().ok()).collect();
    match parts[..] {
        [Some(base), Some(amplitude), Some(rate)] => Some(OrderFunction { base, amplitude, rate }),
        _ => {
            r.error(key, format!("`{key}`: expected \"base, amplitude, rate\", found \"{text}\""));
            None
        }
    }
}

fn parse_kernel(r: &mut Reader) -> Option<KernelConfig> {
    let Some(family) = r.string("kernel.family") else {
        r.missing("kernel.family");
        return None;
    };
    let kernel = match family.as_str() {
        "zero" => KernelConfig::Zero,
        "fractional_heat" => {
            let alpha = r.required_f64("kernel.alpha")?;
            check_alpha(r, "kernel.alpha", alpha);
            KernelConfig::FractionalHeat { alpha, amplitude: r.positive("kernel.amplitude", 1.0) }
        }
        "porous_medium" => {
            let f = parse_function(r, "f", "power_odd");
            KernelConfig::PorousMedium { f: f?, density: parse_density(r)? }
        }
        "convex" => {
            let f = parse_function(r, "f", "power_abs");
            KernelConfig::Convex { f: f?, density: parse_density(r)? }
        }
        "p_laplacian" => {
            let phi = parse_function(r, "phi", "phi_power");
            KernelConfig::PLaplacian { phi: phi?, density: parse_density(r)? }
        }
        "doubly_nonlinear" => {
            let f = parse_function(r, "f", "power_odd");
            let phi = parse_function(r, "phi", "phi_power");
            let density = parse_density(r);
            KernelConfig::DoublyNonlinear { f: f?, phi: phi?, density: density? }
        }
        "variable_order" => {
            let psi1 = parse_order(r, "kernel.psi1", OrderFunction::constant(0.0));
            let psi2 = parse_order(r, "kernel.psi2", OrderFunction::constant(0.0));
            let theta = r.required_f64("kernel.theta");
            let theta_amplitude = r.f64_or("kernel.theta_amplitude", 0.0);
            let a1 = r.required_f64("kernel.a1");
            let a2 = r.required_f64("kernel.a2");
            KernelConfig::VariableOrder { psi1: psi1?, psi2: psi2?, theta: theta?, theta_amplitude, a1: a1?, a2: a2? }
        }
        other => {
            r.error(
                "kernel.family",
                format!(
                    "unknown kernel family `{other}` (zero, fractional_heat, porous_medium, convex, p_laplacian, \
                     doubly_nonlinear, variable_order)"
                ),
            );
            return None;
        }
    };
    Some(kernel)
}

fn parse_init(r: &mut Reader, prefix: &str, grid: Option<&Grid>, seed: u64) -> Option<InitConfig> {
    let key = |k: &str| format!("{prefix}.{k}");
    let kind = r.string(&key("profile")).unwrap_or_else(|| "box".to_string());
    let l = grid.map_or(1.0, |g| g.period());
    let own_seed = if r.has(&key("seed")) { r.u64(&key("seed")) } else { None };
    let inherits_seed = own_seed.is_none();
    let seed = own_seed.unwrap_or(seed);
    let profile = match kind.as_str() {
        "box" | "smooth_bump" => {
            let center = r.f64_or(&key("center"), 0.5 * l);
            let width = r.f64_or(&key("width"), 0.25 * l);
            let height = r.f64_or(&key("height"), 1.0);
            if kind == "box" {
                Profile::Box { center, width, height }
            } else {
                Profile::SmoothBump { center, width, height }
            }
        }
        "step" => Profile::Step {
            position: r.f64_or(&key("position"), 0.5 * l),
            low: r.f64_or(&key("low"), 0.0),
            high: r.f64_or(&key("high"), 1.0),
        },
        "two_level" => Profile::TwoLevel {
            low: r.f64_or(&key("low"), 0.0),
            high: r.f64_or(&key("high"), 1.0),
            blocks: if r.has(&key("blocks")) { r.usize(&key("blocks")).unwrap_or(8) } else { 8 },
            seed,
        },
        "random_bv" => Profile::RandomBv {
            amplitude: r.f64_or(&key("amplitude"), 1.0),
            pieces: if r.has(&key("pieces")) { r.usize(&key("pieces")).unwrap_or(8) } else { 8 },
            seed,
        },
        other => {
            r.error(
                &key("profile"),
                format!("unknown profile `{other}` (box, smooth_bump, step, two_level, random_bv)"),
            );
            return None;
        }
    };
    if let Some(g) = grid {
        if let Err(e) = profile.sample(g) {
            r.error(&key("profile"), format!("`{prefix}` profile is invalid on this grid: {e}"));
        }
    }
    Some(InitConfig { profile, inherits_seed })
}

fn parse_solver(r: &mut Reader) -> Option<SolverConfig> {
    let integrator = match r.string("solver.integrator").as_deref() {
        Some("backward_euler_picard") => Some(Integrator::BackwardEulerPicard),
        Some("explicit_euler") => Some(Integrator::ExplicitEuler),
        Some(other) => {
            r.error(
                "solver.integrator",
                format!("unknown integrator `{other}` (backward_euler_picard, explicit_euler)"),
            );
            None
        }
        None => {
            r.missing("solver.integrator");
            None
        }
    };
    let end_time = r.required_f64("solver.t");
    let time_step = match (r.has("solver.dt"), r.has("solver.theta")) {
        (true, true) => {
            r.error("solver.theta", "set either `solver.dt` or `solver.theta`, not both");
            r.f64("solver.dt");
            r.f64("solver.theta");
            None
        }
        (true, false) => r.f64("solver.dt").map(TimeStep::Fixed),
        (false, _) => Some(TimeStep::Cfl { theta: r.f64_or("solver.theta", 0.5) }),
    };
    let defaults = SolverConfig::default();
    let epsilon = if r.has("solver.epsilon") { r.f64("solver.epsilon") } else { None };
    let picard_tol = r.f64_or("solver.picard_tol", defaults.picard_tol);
    let picard_max_iters = if r.has("solver.picard_max_iters") {
        r.usize("solver.picard_max_iters").unwrap_or(defaults.picard_max_iters)
    } else {
        defaults.picard_max_iters
    };
    let snapshot_every = r.f64_or("solver.snapshot_every", end_time.unwrap_or(1.0) / 10.0);
    let allow_cfl_violation = if r.has("solver.allow_cfl_violation") {
        r.bool("solver.allow_cfl_violation").unwrap_or(false)
    } else {
        false
    };
    let max_halvings = if r.has("solver.max_halvings") {
        r.usize("solver.max_halvings").unwrap_or(defaults.max_halvings)
    } else {
        defaults.max_halvings
    };
    let config = SolverConfig {
        integrator: integrator?,
        epsilon,
        end_time: end_time?,
        time_step: time_step?,
        picard_tol,
        picard_max_iters,
        snapshot_every,
        allow_cfl_violation,
        max_halvings,
    };
    if let Err(e) = config.validate() {
        let key = if r.has("solver.epsilon") && e.to_string().contains("epsilon") { "solver.epsilon" } else { "solver.t" };
        r.error(key, format!("solver settings rejected: {e}"));
    }
    Some(config)
}

fn parse_eps_list(r: &mut Reader) -> Vec<EpsSpec> {
    let default = vec![EpsSpec::Mesh(4.0), EpsSpec::Mesh(2.0), EpsSpec::Mesh(1.0)];
    let Some(text) = r.string("converge.eps") else { return default };
    let mut out = Vec::new();
    for item in parse_list(&text) {
        let spec = match item.strip_suffix('h') {
            Some("") => Some(EpsSpec::Mesh(1.0)),
            Some(k) => k.trim().parse().ok().map(EpsSpec::Mesh),
            None => item.parse().ok().map(EpsSpec::Absolute),
        };
        match spec {
            Some(s) => out.push(s),
            None => {
                r.error("converge.eps", format!("`converge.eps`: cannot read `{item}` (use numbers or multiples of h like `4h`)"));
                return default;
            }
        }
    }
    out
}

/// Parses and validates a configuration, reporting every problem found.
pub fn parse_config(text: &str) -> Result<RunConfig, Vec<ConfigError>> {
    let (entries, errors) = tokenize(text);
    let mut r = Reader { entries, used: BTreeSet::new(), errors };

    let seed = if r.has("seed") { r.u64("seed").unwrap_or(0) } else { 0 };

    let dim = r.has("grid.n").then(|| r.usize("grid.n")).flatten();
    let cells = r.has("grid.m").then(|| r.usize("grid.m")).flatten();
    let period = r.required_f64("grid.l");
    for k in ["grid.n", "grid.m"] {
        if !r.has(k) {
            r.missing(k);
        }
    }
    let grid = match (dim, cells, period) {
        (Some(n), Some(m), Some(l)) => match Grid::new(n, m, l) {
            Ok(g) => Some(g),
            Err(e) => {
                let key = if !(1..=2).contains(&n) { "grid.n" } else if l > 0.0 { "grid.m" } else { "grid.l" };
                r.error(key, format!("invalid grid: {e}"));
                None
            }
        },
        _ => None,
    };

    let before = r.errors.len();
    let kernel = parse_kernel(&mut r);
    // structural checks only once the parameters themselves are clean
    if let (Some(k), Some(g), true) = (&kernel, &grid, r.errors.len() == before) {
        if let Err(e) = k.build(g.dim()) {
            r.error("kernel.family", format!("kernel `{}` rejected: {e}", k.family()));
        }
    }

    let init = parse_init(&mut r, "init", grid.as_ref(), seed);
    let has_b = r.entries.keys().any(|k| k.starts_with("init_b."));
    let init_b = if has_b { parse_init(&mut r, "init_b", grid.as_ref(), seed) } else { None };

    let solver = parse_solver(&mut r);
    if let (Some(s), Some(g)) = (&solver, &grid) {
        let eps = s.epsilon_on(g);
        if !(eps > 0.0 && eps <= 1.0) {
            r.error(
                if s.epsilon.is_some() { "solver.epsilon" } else { "grid.m" },
                format!("regularization radius {eps} must lie in (0, 1]; refine the grid or set `solver.epsilon`"),
            );
        }
    }
    let radius = if r.has("solver.radius") {
        let x = r.positive("solver.radius", 1.0);
        Some(x)
    } else {
        None
    };

    let diag = DiagConfig {
        mass_tol: r.positive("diag.mass_tol", 1e-12),
        norm_slack: r.f64_or("diag.norm_slack", 1e-10),
        tv_slack: r.f64_or("diag.tv_slack", 1e-9),
        contraction_slack: if r.has("diag.contraction_slack") { r.f64("diag.contraction_slack") } else { None },
    };
    let output_dir = r.string("output.dir").unwrap_or_else(|| "out".to_string());

    let budget = if r.has("validate.budget") { r.usize("validate.budget").unwrap_or(10_000) } else { 10_000 };
    if budget < nonlocal_core::validator::MIN_BUDGET {
        r.error("validate.budget", format!("`validate.budget` must be at least 1000, got {budget}"));
    }
    let validate = ValidateConfig {
        budget,
        radius: r.positive("validate.radius", 1.0),
        epsilon: if r.has("validate.epsilon") { r.f64("validate.epsilon") } else { None },
    };
    if let Some(e) = validate.epsilon {
        if !(e > 0.0 && e <= 1.0) {
            r.error("validate.epsilon", format!("`validate.epsilon` must lie in (0, 1], got {e}"));
        }
    }

    let converge = parse_eps_list(&mut r);
    if let Some(g) = &grid {
        let eps: Vec<f64> = converge.iter().map(|e| e.resolve(g)).collect();
        if eps.windows(2).any(|w| !(w[1] < w[0])) || eps.iter().any(|&e| e < g.spacing() * (1.0 - 1e-12) || e > 1.0) {
            r.error("converge.eps", "`converge.eps` must be strictly decreasing, at least h and at most 1");
        }
    }

    let unknown: Vec<(String, usize)> =
        r.entries.iter().filter(|(k, _)| !r.used.contains(*k)).map(|(k, e)| (k.clone(), e.line)).collect();
    for (key, line) in unknown {
        r.errors.push(ConfigError { line: Some(line), message: format!("unknown key `{key}`") });
    }

    if !r.errors.is_empty() {
        r.errors.sort_by_key(|e| e.line.unwrap_or(0));
        return Err(r.errors);
    }
    Ok(RunConfig {
        seed,
        grid: grid.expect("no errors implies a grid"),
        kernel: kernel.expect("no errors implies a kernel"),
        init: init.expect("no errors implies a profile"),
        init_b,
        solver: solver.expect("no errors implies solver settings"),
        radius,
        diag,
        output_dir,
        validate,
        converge,
    })
}
