use std::fmt;

/// Process exit classes. The numeric codes are part of the interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Usage,
    Geometry,
    Solve,
    Validation,
    Symmetry,
    ComparisonSetup,
}

impl ExitKind {
    pub fn code(self) -> u8 {
        match self {
            ExitKind::Usage => 1,
            ExitKind::Geometry => 2,
            ExitKind::Solve => 3,
            ExitKind::Validation => 4,
            ExitKind::Symmetry => 5,
            ExitKind::ComparisonSetup => 6,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ExitKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<roombem::Error> for CliError {
    fn from(e: roombem::Error) -> Self {
        use roombem::Error as E;
        let kind = match &e {
            E::DegenerateElement { .. }
            | E::VertexOutOfRange { .. }
            | E::Orientation { .. }
            | E::OpenMesh(_) => ExitKind::Geometry,
            E::Validation(_) => ExitKind::Validation,
            E::NotReal { .. } => ExitKind::Symmetry,
            E::Solve { .. } | E::Divergence { .. } | E::SingularEvaluation | E::Dimension(_) => {
                ExitKind::Solve
            }
            E::InvalidParameter(_) => ExitKind::Usage,
        };
        let message = match &e {
            E::NotReal { ratio } => format!(
                "impulse response is not real (imaginary/real energy ratio {ratio:e}); \
                 the transfer function is not conjugate symmetric at DC or Nyquist"
            ),
            other => other.to_string(),
        };
        CliError::new(kind, message)
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<CliError>() {
            Ok(cli) => cli,
            Err(e) => match e.downcast::<roombem::Error>() {
                Ok(core) => core.into(),
                Err(e) => CliError::new(ExitKind::Usage, format!("{e:#}")),
            },
        }
    }
}
