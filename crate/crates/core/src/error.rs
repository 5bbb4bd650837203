use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("degree mismatch: {left} vs {right}")]
    DegreeMismatch { left: usize, right: usize },
    #[error("degree {degree} exceeds dimension {dim}")]
    DegreeOverflow { degree: usize, dim: usize },
    #[error("cannot contract a 0-form")]
    ContractScalar,
    #[error("not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("structure constants not antisymmetric at (i={i}, j={j}, k={k})")]
    NotAntisymmetric { i: usize, j: usize, k: usize },
    #[error("J^2 + Id has norm {0:e}")]
    NotComplexStructure(f64),
    #[error("bidegree ({p},{q}) incompatible with degree {degree}")]
    BadBidegree { p: usize, q: usize, degree: usize },
    #[error("form is not of pure bidegree (off-type residual {0:e})")]
    MixedBidegree(f64),
    #[error("deformed (0,1)-space is not complementary to its conjugate (|det| = {0:e})")]
    NonComplementary(f64),
    #[error("degenerate Nijenhuis tensor: {0}")]
    DegenerateNijenhuis(String),
    #[error("not of nearly Kaehler shape: {0}")]
    NotNkShape(String),
    #[error("unknown catalog entry `{0}`")]
    UnknownCatalog(String),
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;
