use thiserror::Error;

pub type Result<T> = std::result::Result<T, PimError>;

#[derive(Debug, Error)]
pub enum PimError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("bandwidth too large for domain: no interior samples remain (t = {t})")]
    EmptyInterior { t: f64 },

    #[error("point is not covered by any kernel support")]
    Coverage,

    #[error(
        "solver did not converge after {iterations} iterations (relative residual {residual:e})"
    )]
    NotConverged {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("operator is not positive definite: {0}")]
    Indefinite(String),

    #[error("operator is singular: {0}")]
    Singular(String),

    #[error("eigensolver stagnated: {0}")]
    Stagnation(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<PimError>,
    },
}

impl PimError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        PimError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        PimError::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error, with stage labels stripped.
    pub fn root(&self) -> &PimError {
        match self {
            PimError::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
