use std::path::PathBuf;

/// Errors raised by the laboratory.
///
/// Variants fall into two families: input validation (bad parameters,
/// violated hypotheses, malformed configuration) and numerical failure
/// (factorization breakdown, non-convergent root finding). The CLI maps them
/// to exit codes 2 and 3 respectively.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("grid too coarse: spacing {h} leaves {nodes} node(s) inside the domain (need at least 3)")]
    GridTooCoarse { h: f64, nodes: usize },

    #[error("parameter {name} = {value} outside its admissible range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: String,
    },

    /// A hypothesis of the underlying theory is violated; the message names
    /// the failed inequality.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("evaluation point {point:?} lies in the boundary layer (distance {distance:.3e} < {limit:.3e})")]
    BoundaryLayerPoint {
        point: [f64; 2],
        distance: f64,
        limit: f64,
    },

    #[error("evaluation point {0:?} lies inside the domain but is not a grid node")]
    NotANode([f64; 2]),

    #[error("fields live on different grids or have mismatched length ({0} vs {1})")]
    GridMismatch(usize, usize),

    #[error("matrix factorization failed at pivot {pivot} (condition estimate {condition:.3e})")]
    Factorization { pivot: usize, condition: f64 },

    #[error("linear solve residual {residual:.3e} exceeds tolerance {tolerance:.1e}")]
    SolveResidual { residual: f64, tolerance: f64 },

    #[error("root finder did not converge on bracket [{lo:.6e}, {hi:.6e}]")]
    RootFinding { lo: f64, hi: f64 },

    #[error("too few qualifying nodes: {found} (need {needed})")]
    TooFewNodes { found: usize, needed: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn out_of_range(name: &'static str, value: f64, range: impl Into<String>) -> Self {
        Error::OutOfRange {
            name,
            value,
            range: range.into(),
        }
    }

    /// True for errors that stem from invalid input rather than a numerical breakdown.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Factorization { .. }
                | Error::SolveResidual { .. }
                | Error::RootFinding { .. }
                | Error::NonFinite(_)
                | Error::Io { .. }
        )
    }

    /// Process exit code used by the `frackpz` binary.
    pub fn exit_code(&self) -> i32 {
        if self.is_validation() {
            2
        } else {
            3
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Rejects `value` unless it lies in the open unit interval.
pub(crate) fn check_unit_open(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::out_of_range(name, value, "(0, 1)"))
    }
}
