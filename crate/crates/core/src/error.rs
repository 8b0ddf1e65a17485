use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("expected {expected} {what}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("transition moments are not symmetric for pair ({0}, {1})")]
    AsymmetricMoments(String, String),
    #[error("diagonal transition moment of level {0} must be zero")]
    NonZeroDiagonal(String),
    #[error("duplicate level label {0:?}")]
    DuplicateLabel(String),
    #[error("levels {0} and {1} are degenerate but coupled")]
    CoupledDegenerate(String, String),
    #[error("level index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("unknown level label {0:?}")]
    UnknownLabel(String),
    #[error("a transition needs two distinct levels (got {0} twice)")]
    SameLevel(usize),
    #[error("invalid target pair: {0}")]
    InvalidTarget(String),
    #[error("invalid perturber: {0}")]
    InvalidPerturber(String),
    #[error("invalid pulse parameter: {0}")]
    InvalidPulse(String),
    #[error("t = {t} lies outside the pulse support [0, {duration}]")]
    OutsideSupport { t: f64, duration: f64 },
    #[error("tau = {tau} exceeds the total scaled time {tau_max}")]
    TauOutOfRange { tau: f64, tau_max: f64 },
    #[error("perturbing transition is resonant with the target transition (omega = {0})")]
    ResonantDegeneracy(f64),
    #[error("perturber driven on resonance (Delta = 1) at t = {0}")]
    SingularDetuning(f64),
    #[error("fixed-point iteration did not converge after {} iterations", history.len())]
    NonConvergence { history: Vec<f64> },
    #[error("step size underflow at t = {t} (h = {h})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("initial state is not normalized (norm^2 = {0})")]
    UnnormalizedState(f64),
    #[error("scenario line {line}: {msg}")]
    Scenario { line: usize, msg: String },
    #[error("scenario field {field}: {msg}")]
    ScenarioField { field: &'static str, msg: String },
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
}

impl Error {
    /// Whether the failure is numerical (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::StepUnderflow { .. }
                | Error::SingularDetuning(_)
        )
    }
}
