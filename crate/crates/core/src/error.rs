use alloc::string::String;

/// States inside errors are 0-based; messages show them 1-based.
pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("inadmissible policy at state {}: {reason}", .state + 1)]
    InadmissiblePolicy { state: usize, reason: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("scaling vector does not dominate at state {}: phi_i = {phi}, required >= {required}", .state + 1)]
    PhiNotDominating { state: usize, phi: f64, required: f64 },
    #[error("sample budget exceeded: {requested} draws requested, cap is {cap}")]
    SampleBudgetExceeded { requested: u64, cap: u64 },
    #[error("renewal check rejected state {}: {reason}", .state + 1)]
    RenewalRejected { state: usize, reason: String },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("singular linear system")]
    Singular,
    #[error("enumeration cap exceeded: {count} policy pairs > cap {cap}")]
    EnumerationCap { count: u128, cap: u128 },
}
