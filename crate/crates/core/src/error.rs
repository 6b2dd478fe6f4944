use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("waveguide index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("power must be positive to convert to dBm, got {0} W")]
    NonPositivePower(f64),

    #[error("user coincides with pinching antenna (zero distance)")]
    ZeroDistance,

    #[error("antenna list is empty")]
    EmptyArray,

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("antenna window [{low:.6}, {high:.6}] m exceeds waveguide ends ±{half_length} m")]
    WindowOutOfBounds { low: f64, high: f64, half_length: f64 },

    #[error("equal spacing needs at least 2 antennas, got {0}")]
    TooFewAntennas(usize),

    #[error("users share the same y-coordinate: deviations cannot cancel the interference")]
    DegenerateGeometry,

    #[error("channel row {user} has zero norm")]
    ZeroChannel { user: usize },

    #[error("Gram matrix is ill-conditioned (condition number {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("(I, Q) = ({i_users}, {q_pas}) does not factor N = {n}")]
    InvalidFactorPair { i_users: usize, q_pas: usize, n: usize },

    #[error("interference term needs two distinct users, got k = k' = {0}")]
    SameUser(usize),

    #[error("quadrature for f({k_prime}, {i}) did not converge (last relative change {change:.3e})")]
    QuadratureNotConverged { k_prime: usize, i: usize, change: f64 },

    #[error("invalid quadrature spec: {0}")]
    InvalidQuadrature(String),

    #[error("{0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
