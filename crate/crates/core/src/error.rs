use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum ApdgError {
    #[error("invalid velocity mode count {0}: must be odd and at least 1")]
    InvalidModeCount(usize),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("collision kernel: {0}")]
    InvalidKernel(String),

    #[error("interface index {index} out of range for {n_cells} cells")]
    InterfaceOutOfRange { index: usize, n_cells: usize },

    #[error("meshes are incompatible: {0}")]
    IncompatibleMeshes(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("boundary flux denominator non-positive at velocity node {node} (v = {velocity})")]
    DegenerateBoundaryFlux { node: usize, velocity: f64 },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("experiment error: {0}")]
    Experiment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl ApdgError {
    /// Short machine-readable tag used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            ApdgError::InvalidModeCount(_) => "invalid_mode_count",
            ApdgError::LengthMismatch { .. } => "length_mismatch",
            ApdgError::InvalidParameter { .. } => "invalid_parameter",
            ApdgError::InvalidKernel(_) => "invalid_kernel",
            ApdgError::InterfaceOutOfRange { .. } => "interface_out_of_range",
            ApdgError::IncompatibleMeshes(_) => "incompatible_meshes",
            ApdgError::NonFinite(_) => "non_finite",
            ApdgError::DegenerateBoundaryFlux { .. } => "degenerate_boundary_flux",
            ApdgError::Config { .. } => "config",
            ApdgError::Experiment(_) => "experiment",
            ApdgError::Io(_) => "io",
            ApdgError::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, ApdgError>;

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(ApdgError::LengthMismatch { expected, actual })
    }
}
