use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite {what}: {value}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("point of norm {norm} lies outside the domain ball of radius {radius} of `{label}`")]
    OutsideDomain {
        label: String,
        norm: f64,
        radius: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("lattice of {points} points exceeds the cap of {cap}")]
    GridCap { points: u128, cap: u64 },

    #[error("cylinder radius {radius} exceeds the certified region radius {region}")]
    CylinderExceedsRegion { radius: f64, region: f64 },

    #[error("envelope lower bound exceeds upper bound at {point:?}: {lower} > {upper}")]
    EnvelopeOrder {
        point: Vec<f64>,
        lower: f64,
        upper: f64,
    },

    #[error("cover is empty")]
    EmptyCover,

    #[error("point {point:?} is not covered by any local certificate")]
    OutsideCover { point: Vec<f64> },

    #[error("inconsistent cover at {point:?}: aggregated lower {lower} > aggregated upper {upper}")]
    InconsistentCover {
        point: Vec<f64>,
        lower: f64,
        upper: f64,
    },

    #[error("tolerance field is negative ({value}) at x = {point:?}, t = {t}")]
    NegativeTolerance { point: Vec<f64>, t: f64, value: f64 },

    #[error("argmin set is empty")]
    EmptyArgminSet,

    #[error("unsupported argmin set: {0}")]
    UnsupportedSet(String),

    #[error("grid step {step} is too coarse to resolve the smallest minimizer radius (need < {required})")]
    GridTooCoarse { step: f64, required: f64 },

    #[error("query {index} (norm {norm}) lies outside the closed ball of radius {radius}")]
    QueryOutsideBall { index: usize, norm: f64, radius: f64 },

    #[error("no point with positive clearance from the {queries} queries exists on the search lattice of step {step}")]
    NoFreePoint { queries: usize, step: f64 },
}

impl Error {
    /// True for errors that signal contradictory certificate input rather
    /// than a bad call.
    pub fn is_certificate_inconsistency(&self) -> bool {
        matches!(
            self,
            Error::EnvelopeOrder { .. }
                | Error::InconsistentCover { .. }
                | Error::NegativeTolerance { .. }
        )
    }
}
