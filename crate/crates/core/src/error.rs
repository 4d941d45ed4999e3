use thiserror::Error;

pub type Result<T> = std::result::Result<T, CrbError>;

#[derive(Debug, Error)]
pub enum CrbError {
    /// Geometry that makes a delay or direction undefined (zero distance).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported method: {0}")]
    UnsupportedMethod(String),

    /// The Fisher information is (numerically) singular. `null_direction`
    /// is the unit parameter combination carrying the least information,
    /// expressed in the ordering of the inverted matrix.
    #[error(
        "singular Fisher information (condition number {condition:.3e}); \
         least-informative parameter combination {null_direction:?}"
    )]
    Singular {
        condition: f64,
        null_direction: Vec<f64>,
    },

    #[error(
        "quadrature did not converge with {nodes} nodes: relative change {relative_change:.3e} \
         exceeds tolerance {tolerance:.3e}"
    )]
    NonConvergent {
        nodes: usize,
        relative_change: f64,
        tolerance: f64,
        previous: Box<[[f64; 6]; 6]>,
        last: Box<[[f64; 6]; 6]>,
    },

    /// Successive Richardson extrapolants of a finite-difference Jacobian
    /// disagree by more than the tolerance.
    #[error("finite-difference Jacobian is unstable: relative disagreement {disagreement:.3e} exceeds {tolerance:.3e}")]
    FiniteDifference { disagreement: f64, tolerance: f64 },
}
