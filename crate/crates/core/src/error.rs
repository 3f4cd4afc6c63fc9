use thiserror::Error;

use crate::mass_transport::Phase;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("reduction anomaly: expected rank {expected}, observed {observed}")]
    ReductionAnomaly { expected: usize, observed: usize },

    #[error("reduction produced an unexpected pattern: {0}")]
    ReductionPattern(String),

    #[error("infeasible wealth vector: {0}")]
    InfeasibleWealth(String),

    #[error("degenerate fit: {0}")]
    FitDegenerate(String),

    #[error("weight function has an infinite mean")]
    InfiniteMean,

    #[error("no chemical potential solves rho = {rho} (mean of f = {mean})")]
    NoSolution { rho: f64, mean: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid too coarse: marginal normalization is {normalization}")]
    Resolution { normalization: f64 },

    #[error("refusing to sample in the {phase} phase (rho = {rho}, mean of f = {mean})")]
    PhaseRefusal { phase: Phase, rho: f64, mean: f64 },

    #[error("sampler initialization failed: {0}")]
    Initialization(String),

    #[error("income is constant in wealth (slope coefficient is zero)")]
    DegenerateIncome,

    #[error("estimation left the D > 0 region from every start")]
    EstimationInfeasible,

    #[error(transparent)]
    Ingest(#[from] IngestError),

    #[error("malformed key-value file at line {line}: {message}")]
    KeyValue { line: usize, message: String },
}

/// Percentile-table parsing failures. Line numbers count physical lines of
/// the source, header included, starting at 1.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("missing required column `{0}`")]
    MissingColumn(&'static str),

    #[error("line {line}: cannot parse `{text}` as a number")]
    Unparseable { line: usize, text: String },

    #[error("line {line}: percentile {value} outside the open unit interval")]
    PercentileRange { line: usize, value: f64 },

    #[error("line {line}: duplicate percentile {value}")]
    DuplicatePercentile { line: usize, value: f64 },

    #[error("line {line}: threshold decreases with percentile")]
    NonMonotone { line: usize },

    #[error("need at least 3 rows, found {0}")]
    TooFewRows(usize),

    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },
}
