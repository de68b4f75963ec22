use thiserror::Error;

/// Errors raised by the numerical kernels and the detector analytics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain of the function.
    #[error("domain error in {function}: {detail}")]
    Domain {
        function: &'static str,
        detail: String,
    },

    /// A series, continued fraction or iteration did not converge.
    #[error("numeric failure in {function}: {detail}")]
    NumericFailure {
        function: &'static str,
        detail: String,
    },

    /// Two quadrature refinement levels disagreed beyond tolerance.
    #[error("quadrature did not converge: coarse estimate {coarse:e}, fine estimate {fine:e}")]
    QuadratureDisagreement { coarse: f64, fine: f64 },
}

impl Error {
    pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            function,
            detail: detail.into(),
        }
    }

    pub(crate) fn numeric(function: &'static str, detail: impl Into<String>) -> Self {
        Error::NumericFailure {
            function,
            detail: detail.into(),
        }
    }

    /// True for the failure classes that indicate a numerical breakdown
    /// rather than a bad argument.
    pub fn is_numeric_failure(&self) -> bool {
        matches!(
            self,
            Error::NumericFailure { .. } | Error::QuadratureDisagreement { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
