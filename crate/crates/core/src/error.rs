use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),

    #[error("NonClosedGroup: {0}")]
    NonClosedGroup(String),
    #[error("NonOrthogonalAction: {0}")]
    NonOrthogonalAction(String),
    #[error("DegenerateLattice: {0}")]
    DegenerateLattice(String),
    #[error("UnsupportedDimension: {0}")]
    UnsupportedDimension(usize),
    #[error("PointGroupTooLarge: {0} cosets (limit 48)")]
    PointGroupTooLarge(usize),
    #[error("SpectrumUnavailable: {0}")]
    SpectrumUnavailable(String),

    #[error("EndpointMismatch: {0}")]
    EndpointMismatch(String),
    #[error("PathLeavesAtlas: {0}")]
    PathLeavesAtlas(String),
    #[error("NotALoop: {0}")]
    NotALoop(String),
    #[error("RelationViolation: residual {residual:.3e} on {relation}")]
    RelationViolation { relation: String, residual: f64 },
    #[error("AtlasConstruction: {0}")]
    AtlasConstruction(String),

    #[error("NonCommutingLatticeImages: {0}")]
    NonCommutingLatticeImages(String),
    #[error("CutoffTooSmall: {0}")]
    CutoffTooSmall(String),
    #[error("NonPositiveMetric: {0}")]
    NonPositiveMetric(String),
    #[error("TooFewModes: {0}")]
    TooFewModes(String),
    #[error("TruncationInsufficient: tail bound {bound:.3e} exceeds {tolerance:.3e}")]
    TruncationInsufficient { bound: f64, tolerance: f64 },
    #[error("NonIntegralMultiplicity: {0}")]
    NonIntegralMultiplicity(String),

    #[error("KernelMismatch: {0}")]
    KernelMismatch(String),
    #[error("BudgetExceeded: {0}")]
    BudgetExceeded(String),
    #[error("SigmaAtPole: {0}")]
    SigmaAtPole(String),

    #[error("UnsupportedGroup: {0}")]
    UnsupportedGroup(String),
    #[error("TailBoundExceeded: {0}")]
    TailBoundExceeded(String),
    #[error("EvenDimension: dimension {0} is even")]
    EvenDimension(usize),
}

impl Error {
    /// Validation-type failures map to CLI exit code 2.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse(_)
                | Error::NonClosedGroup(_)
                | Error::NonOrthogonalAction(_)
                | Error::DegenerateLattice(_)
                | Error::UnsupportedDimension(_)
                | Error::PointGroupTooLarge(_)
                | Error::RelationViolation { .. }
                | Error::NonCommutingLatticeImages(_)
                | Error::NonPositiveMetric(_)
                | Error::UnsupportedGroup(_)
                | Error::EvenDimension(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
