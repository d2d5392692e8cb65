use thiserror::Error;

/// Which of the three standing assumptions on the subspectrum was violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    /// Eigenvalues in the subspectrum are distinct.
    A1,
    /// Eigenvalues in the subspectrum are positive.
    A2,
    /// `h` and `d` have no common zeros.
    A3,
}

impl std::fmt::Display for Assumption {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Assumption::A1 => write!(f, "A1 (distinct eigenvalues)"),
            Assumption::A2 => write!(f, "A2 (positive eigenvalues)"),
            Assumption::A3 => write!(f, "A3 (h and d have no common zeros)"),
        }
    }
}

#[derive(Debug, Error)]
pub enum LassoError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("evaluation point {x} outside [0, {length}]")]
    OutOfDomain { x: f64, length: f64 },

    #[error("integration diverged at x = {x} (lambda = {lambda})")]
    DivergedIntegration { x: f64, lambda: f64 },

    #[error("step size underflow at x = {x} (lambda = {lambda}); problem too stiff for the configured tolerance")]
    Stiffness { x: f64, lambda: f64 },

    #[error("no sign change of {what} on [{lo}, {hi}]")]
    Bracketing { what: String, lo: f64, hi: f64 },

    #[error("eigenvalue numbering is ambiguous on [{lo}, {hi}]: found {found} zeros, expected {expected}")]
    NumberingAmbiguity {
        lo: f64,
        hi: f64,
        found: usize,
        expected: usize,
    },

    #[error("subspectrum is missing index (n = {n}, j = {j})")]
    IncompleteSubspectrum { n: i64, j: usize },

    #[error("assumption {assumption} violated: {detail}")]
    AssumptionViolation {
        assumption: Assumption,
        detail: String,
    },

    #[error("inconsistent spectral data: {0}")]
    SpectralDataInconsistency(String),

    #[error("zero at {nu} is not simple (|h'| = {derivative:e})")]
    MultipleZero { nu: f64, derivative: f64 },

    #[error("system too ill-conditioned (condition {condition:e} > {limit:e}); truncation too aggressive")]
    IllConditioned { condition: f64, limit: f64 },

    #[error("degenerate moment system: {0}")]
    DegenerateSystem(String),

    #[error("moment solve did not converge: residual {residual:e} exceeds {limit:e}")]
    NonConvergence { residual: f64, limit: f64 },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<LassoError>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl LassoError {
    pub fn at_stage(self, stage: &'static str) -> Self {
        LassoError::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The violated assumption, looking through stage wrappers.
    pub fn assumption(&self) -> Option<Assumption> {
        match self {
            LassoError::AssumptionViolation { assumption, .. } => Some(*assumption),
            LassoError::Stage { source, .. } => source.assumption(),
            _ => None,
        }
    }

    /// Innermost error, skipping stage wrappers.
    pub fn root(&self) -> &LassoError {
        match self {
            LassoError::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = LassoError> = std::result::Result<T, E>;

/// Attach a stage label to the error side of a result.
pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.at_stage(stage))
    }
}
