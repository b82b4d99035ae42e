use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    UnsupportedDimension(usize),
    TooFewCells(usize),
    NonPositivePeriod(f64),
    LengthMismatch { expected: usize, got: usize },
    NonFiniteValue { index: usize, value: f64 },
    InvalidExponent(f64),
    GridMismatch,
    InvalidProfile(String),
    /// A kernel or solver parameter is outside its admissible range.
    InvalidParameter { name: &'static str, value: f64, reason: &'static str },
    /// A scalar function cannot play the requested role (e.g. a non-convex `f`
    /// in the convex diffusion kernel).
    IncompatibleFunction { role: &'static str, function: String },
    DimensionMismatch { left: usize, right: usize },
    Divergent { lower: f64, upper: f64 },
    EmptyNeighborhood { epsilon: f64, max_distance: f64 },
    NonFiniteKernel { i: usize, j: usize, value: f64 },
    CflViolation { dt: f64, limit: f64 },
    PicardNotConverged { residual: f64, iterations: usize },
    BoundBreach { t: f64, sup: f64, limit: f64 },
    InvalidSolver(&'static str),
    SnapshotMismatch,
    OrderingPrecondition { index: usize, gap: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnsupportedDimension(n) => write!(f, "unsupported dimension {n} (expected 1 or 2)"),
            Error::TooFewCells(m) => write!(f, "at least 3 cells per axis required, got {m}"),
            Error::NonPositivePeriod(l) => write!(f, "period must be positive, got {l}"),
            Error::LengthMismatch { expected, got } => {
                write!(f, "field length {got} does not match grid size {expected}")
            }
            Error::NonFiniteValue { index, value } => write!(f, "non-finite value {value} at cell {index}"),
            Error::InvalidExponent(p) => write!(f, "norm exponent must lie in [1, inf], got {p}"),
            Error::GridMismatch => write!(f, "fields live on different grids"),
            Error::InvalidProfile(msg) => write!(f, "invalid profile: {msg}"),
            Error::InvalidParameter { name, value, reason } => write!(f, "{name} = {value}: {reason}"),
            Error::IncompatibleFunction { role, function } => {
                write!(f, "function {function} cannot serve as {role}")
            }
            Error::DimensionMismatch { left, right } => {
                write!(f, "kernel dimensions differ ({left} vs {right})")
            }
            Error::Divergent { lower, upper } => {
                write!(f, "Levy integral does not converge on [{lower}, {upper}]")
            }
            Error::EmptyNeighborhood { epsilon, max_distance } => write!(
                f,
                "empty neighborhood: cutoff {epsilon} exceeds the largest torus distance {max_distance}"
            ),
            Error::NonFiniteKernel { i, j, value } => {
                write!(f, "kernel returned {value} for the pair ({i}, {j})")
            }
            Error::CflViolation { dt, limit } => write!(f, "dt = {dt} exceeds the CFL limit {limit}"),
            Error::PicardNotConverged { residual, iterations } => write!(
                f,
                "Picard iteration did not converge after {iterations} iterations (residual {residual:e})"
            ),
            Error::BoundBreach { t, sup, limit } => {
                write!(f, "sup norm {sup} exceeds {limit} at t = {t}")
            }
            Error::InvalidSolver(msg) => write!(f, "invalid solver configuration: {msg}"),
            Error::SnapshotMismatch => write!(f, "trajectories do not share snapshot times"),
            Error::OrderingPrecondition { index, gap } => {
                write!(f, "initial data are not ordered: v0 - u0 = {gap} at cell {index}")
            }
        }
    }
}

impl core::error::Error for Error {}
