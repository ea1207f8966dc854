use std::path::PathBuf;

use crate::model::PlaneKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid pixel spacing ({dx_mm}, {dy_mm}) mm: both must be finite and > 0")]
    InvalidSpacing { dx_mm: f64, dy_mm: f64 },

    #[error("invalid mask: {0}")]
    InvalidMask(String),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("pgm: {0}")]
    Format(String),

    #[error("manifest parse error at line {line}, column {column}: {message}")]
    ManifestParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("manifest: duplicate patient id {0:?}")]
    DuplicatePatient(String),

    #[error("manifest: {0}")]
    Validation(String),

    #[error("sweep {sweep}: missing spacing_mm (pixel spacing is never assumed)")]
    MissingSpacing { sweep: String },

    #[error(
        "frame {frame}: dimensions {found_width}x{found_height} differ from {expected_width}x{expected_height}"
    )]
    DimensionMismatch {
        frame: usize,
        expected_width: usize,
        expected_height: usize,
        found_width: usize,
        found_height: usize,
    },

    #[error("frame {frame}: pixel spacing differs from frame 0")]
    SpacingMismatch { frame: usize },

    #[error("sweep is empty: no frame reaches the minimum area of {min_area_px} px")]
    EmptySweep { min_area_px: usize },

    #[error("degenerate mask: largest component has {pixels} px, need at least 3")]
    DegenerateMask { pixels: usize },

    #[error("ellipse fit needs at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("ellipse fit failed: {0}")]
    FitFailure(String),

    #[error("expected a {expected} sweep, got {found}")]
    PlaneMismatch {
        expected: PlaneKind,
        found: PlaneKind,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("hausdorff distance undefined: {0} mask is empty")]
    UndefinedDistance(&'static str),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("need at least {needed} data points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("phantom geometry: {0}")]
    Geometry(String),

    #[error("frame {index}: {source}")]
    AtFrame {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{plane} sweep: {source}")]
    InPlane {
        plane: PlaneKind,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Attaches a frame index unless one is already attached.
    pub fn at_frame(self, index: usize) -> Self {
        match self {
            // Keep the innermost frame index only.
            e @ Error::AtFrame { .. } => e,
            e => Error::AtFrame {
                index,
                source: Box::new(e),
            },
        }
    }

    /// Attaches the sweep plane unless one is already attached.
    pub fn in_plane(self, plane: PlaneKind) -> Self {
        match self {
            e @ Error::InPlane { .. } => e,
            e => Error::InPlane {
                plane,
                source: Box::new(e),
            },
        }
    }

    /// The underlying error with frame and plane context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtFrame { source, .. } | Error::InPlane { source, .. } => source.root(),
            e => e,
        }
    }
}
