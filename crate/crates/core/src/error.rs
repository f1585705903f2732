use thiserror::Error;

use crate::Vec3;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("evaluation point {distance:.3e} m from a conductor (exclusion radius {limit:.1e} m)")]
    EvaluationTooCloseToConductor { distance: f64, limit: f64 },

    #[error("elliptic integral AGM failed to converge for m = {m}")]
    EllipticConvergenceFailure { m: f64 },

    #[error("source {index}: {source}")]
    Source {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("grid node ({:.3e}, {:.3e}, {:.3e}) m: {source}", node.x, node.y, node.z)]
    Node {
        node: Vec3,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("wire radius {wire_radius:.3e} m outside (0, {max:.3e}) m")]
    InvalidWireRadius { wire_radius: f64, max: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(
        "minimisation did not converge after {iterations} iterations (|grad| = {gradient:.3e} T/m)"
    )]
    MinimizationDidNotConverge { iterations: usize, gradient: f64 },

    #[error("stationary point is a saddle (Hessian eigenvalue {eigenvalue:.3e})")]
    SaddleDetected { eigenvalue: f64 },

    #[error("negative curvature {eigenvalue:.3e} at trap minimum")]
    NegativeCurvature { eigenvalue: f64 },

    #[error("profile has no interior local maximum/minimum pair")]
    NoLocalExtrema,

    #[error("axial fit did not converge after {iterations} iterations")]
    FitDidNotConverge { iterations: usize },

    #[error("profile variance {variance:.3e} mG^2 below noise floor")]
    DegenerateProfile { variance: f64 },

    #[error("calibration failed: {0}")]
    CalibrationFailed(String),

    #[error("imaginary-time solver did not converge in {steps} steps")]
    NoConvergence { steps: usize },

    #[error("window too small: boundary probability {boundary_mass:.3e}")]
    WindowTooSmall { boundary_mass: f64 },

    #[error("stability guard tripped: dt*max|V|/hbar = {ratio:.3e} >= 0.1")]
    StabilityGuardTripped { ratio: f64 },

    #[error("time meshes of the two branches differ")]
    MeshMismatch,

    #[error("post-selected outcome has probability {probability:.3e}")]
    ZeroProbabilityBranch { probability: f64 },
}

impl Error {
    pub(crate) fn at_source(self, index: usize) -> Self {
        Error::Source {
            index,
            source: Box::new(self),
        }
    }

    pub(crate) fn at_node(self, node: Vec3) -> Self {
        Error::Node {
            node,
            source: Box::new(self),
        }
    }
}
