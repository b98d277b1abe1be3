use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("bisection failed to bracket a root: {0}")]
    Convergence(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("risk label {0} does not occur in the data")]
    MissingRisk(u32),

    #[error("covariates take {found} distinct values (limit {limit}); continuous covariates are not supported")]
    TooManyStrata { found: usize, limit: usize },

    #[error("generator derivative diverges at t = {time}: overall survival left limit is zero")]
    DivergentIntegrand { time: f64 },

    #[error("no observations left after support trimming: {0}")]
    EmptyTrim(String),

    #[error("semiparametric coefficient undefined: {0}")]
    UndefinedB(String),

    #[error("design matrix is rank deficient ({0})")]
    RankDeficient(String),

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("every grid point failed; last error: {0}")]
    AllGridFailed(String),

    #[error("covariate required: the two-stage estimator needs at least two covariate strata to identify the copula parameter")]
    SingleStratum,

    #[error("{failures} of {total} replicates failed (more than half)")]
    TooManyFailures { failures: usize, total: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),
}
