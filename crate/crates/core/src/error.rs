use thiserror::Error;

/// Errors raised while building or validating functions and sections.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("t = {t} lies outside [0, 1]")]
    Domain { t: f64 },
    #[error("pieces are not contiguous near t = {at}")]
    NonContiguous { at: f64 },
    #[error("discontinuity at junction t = {at}: left value {left}, right value {right}")]
    Discontinuous { at: f64, left: f64, right: f64 },
    #[error("invalid piece: {0}")]
    InvalidPiece(String),
    #[error("monotonicity flag of piece [{start}, {end}] violated at t = {at}")]
    FlagViolation { start: f64, end: f64, at: f64 },
    #[error("curve map must satisfy phi({t}) = {t}, found {value}")]
    CurveEndpoint { t: f64, value: f64 },
    #[error("curve map is not strictly increasing between t = {t1} and t = {t2}")]
    NotStrictlyIncreasing { t1: f64, t2: f64 },
    #[error("no bracketing piece while inverting at y = {y}")]
    Bracketing { y: f64 },
    #[error("section {gamma} at t = {t} is below the lower bound max{{0, t + phi(t) - 1}} = {bound}")]
    BelowLowerBound { t: f64, gamma: f64, bound: f64 },
    #[error("section {gamma} at t = {t} exceeds the upper bound min{{t, phi(t)}} = {bound}")]
    AboveUpperBound { t: f64, gamma: f64, bound: f64 },
    #[error("section decreases between t1 = {t1} and t2 = {t2} (by {excess})")]
    Decreasing { t1: f64, t2: f64, excess: f64 },
    #[error("section grows faster than (t2 - t1) + (phi(t2) - phi(t1)) between t1 = {t1} and t2 = {t2} (by {excess})")]
    IncrementTooLarge { t1: f64, t2: f64, excess: f64 },
    #[error("section must reach 1 at t = 1, found {value}")]
    Endpoint { value: f64 },
    #[error("validation needs at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("invalid interval family: {0}")]
    Intervals(String),
    #[error("knot equation has no root in ({a}, {b})")]
    KnotSolve { a: f64, b: f64 },
}

/// Errors raised by the variation engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum VariationError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("exact variation needs a monotone decomposition of the function")]
    MissingMonotoneMetadata,
    #[error("adaptive variation did not converge: last estimates {previous} and {last}")]
    NonConvergence { previous: f64, last: f64 },
}

/// Errors raised while evaluating a surface.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Variation(#[from] VariationError),
    #[error("({x}, {y}) lies outside the unit square")]
    OutsideSquare { x: f64, y: f64 },
}

/// Errors raised by grid construction and the grid-based checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid coordinates must start at 0, end at 1 and strictly increase ({0})")]
    Coordinates(String),
    #[error("evaluation failed at ({x}, {y}): {source}")]
    Eval { x: f64, y: f64, source: EvalError },
    #[error("value matrix is {rows}x{cols}, expected {expected_rows}x{expected_cols}")]
    Shape {
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },
}

/// Errors raised by the checkerboard linear-programming oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("knot count {0} outside 2..=64")]
    KnotCount(usize),
    #[error("node ({a}, {b}) must satisfy 0 < a, b < {n}")]
    Node { a: usize, b: usize, n: usize },
    #[error("linear program is infeasible (inconsistent section data)")]
    Infeasible,
    #[error("linear program solver failed: {0}")]
    Solver(String),
    #[error("checkerboard mass violates {what} by {excess}")]
    Invariant { what: String, excess: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Errors raised while reading section configurations.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse section config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unknown builtin section `{0}`")]
    UnknownBuiltin(String),
    #[error("invalid rational {num}/{den}")]
    Rational { num: f64, den: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}
