use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("degenerate grid: alpha q^{index} is within tolerance of +-1")]
    DegenerateGrid { index: i64 },

    #[error("degenerate parameters: {0}")]
    DegenerateParameter(String),

    #[error("evaluation point too close to pole {pole} (distance {distance:.3e})")]
    PoleProximity { pole: String, distance: f64 },

    #[error("evaluation point {0} is a fixed point of the q-shift")]
    ShiftFixedPoint(String),

    #[error("singular linear system (condition estimate {condition:.3e})")]
    SingularSystem { condition: f64 },

    #[error("could not place {0} sample points away from the candidate poles")]
    Sampling(usize),

    #[error("eigenvalue iteration failed to converge after {0} sweeps")]
    EigenFailure(usize),

    #[error("resonant parameters: recurrence denominator vanishes at s = {s}")]
    Resonance { s: usize },

    #[error("truncation condition violated: |gamma_(N,N+1)| = {0:.3e}")]
    TruncationViolated(f64),

    #[error("constraint violated: {0}")]
    ConstraintViolation(String),

    #[error("infinite product needs {factors} factors; tail bound not reachable")]
    TailTooLarge { factors: usize },

    #[error("working precision of {0} digits is not supported (max 31)")]
    UnsupportedPrecision(u32),

    #[error("series denominator vanishes at term {0} before termination")]
    SeriesDenominator(usize),

    #[error("unknown {kind} '{name}'")]
    Unknown { kind: &'static str, name: String },
}
