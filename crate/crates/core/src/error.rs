use thiserror::Error;

/// Errors produced by lattice construction, interpolation and the
/// convergence machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("hyperplane has a zero normal")]
    ZeroNormal,

    #[error("family of {count} hyperplanes is too small for dimension {dim}")]
    TooFewHyperplanes { count: usize, dim: usize },

    #[error("subset {subset:?} is degenerate: |det| = {det:e}")]
    DegenerateSubset { subset: Vec<usize>, det: f64 },

    #[error("subsets {first:?} and {second:?} share a vertex (distance {distance:e})")]
    NonInjective {
        first: Vec<usize>,
        second: Vec<usize>,
        distance: f64,
    },

    #[error("vertex of {subset:?} lies on hyperplane {plane} (value {value:e})")]
    VertexOnHyperplane {
        subset: Vec<usize>,
        plane: usize,
        value: f64,
    },

    #[error("singular linear map")]
    SingularMap,

    #[error("function provides derivatives up to order {available}, {requested} requested")]
    Capability { requested: usize, available: usize },

    #[error("polynomial is not homogeneous of degree {degree}")]
    NotHomogeneous { degree: usize },

    #[error("order mismatch: expected {expected}, got {found}")]
    OrderMismatch { expected: usize, found: usize },

    #[error("size mismatch: {points} points for {basis} basis functions")]
    SizeMismatch { points: usize, basis: usize },

    #[error("invalid configuration: {0}")]
    Configuration(String),

    #[error("internal consistency: {0}")]
    Consistency(String),
}

impl Error {
    /// True for errors that stem from numerically degenerate geometry.
    pub fn is_degeneracy(&self) -> bool {
        matches!(
            self,
            Error::DegenerateSubset { .. }
                | Error::NonInjective { .. }
                | Error::VertexOnHyperplane { .. }
                | Error::SingularMap
                | Error::ZeroNormal
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
