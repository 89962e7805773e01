use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate element {index}: {reason}")]
    DegenerateElement { index: usize, reason: String },

    #[error("element {index} references vertex {vertex} but the mesh has {count} vertices")]
    VertexOutOfRange {
        index: usize,
        vertex: usize,
        count: usize,
    },

    #[error("element {index} has an outward-facing normal (normals must point into the room)")]
    Orientation { index: usize },

    #[error("mesh is not closed: {0}")]
    OpenMesh(String),

    #[error("scene validation failed: {0}")]
    Validation(String),

    #[error("singular kernel evaluation: observation and integration points coincide")]
    SingularEvaluation,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error(
        "Neumann series diverged at order {order} (|A^k B x| grew for {window} consecutive orders; \
         spectral radius estimate {spectral_radius:.4})"
    )]
    Divergence {
        order: usize,
        window: usize,
        spectral_radius: f64,
    },

    #[error("solve failed at {frequency_hz} Hz: {reason}")]
    Solve { frequency_hz: f64, reason: String },

    #[error("impulse response is not real (imag/real energy ratio {ratio:e}); spectrum lost Hermitian symmetry")]
    NotReal { ratio: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
