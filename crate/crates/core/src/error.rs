use thiserror::Error;

/// Errors raised while building complexes or computing boundary topology.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("non-manifold mesh: {0}")]
    NonManifold(String),
    #[error("degenerate tetrahedron {tet} (volume {volume:e})")]
    DegenerateTet { tet: usize, volume: f64 },
    #[error("vertex index {index} out of range ({count} vertices)")]
    BadVertex { index: usize, count: usize },
    #[error("mesh has no tetrahedra")]
    Empty,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HomologyError {
    #[error("surface is not closed: {0}")]
    NotClosedSurface(String),
    #[error("chain has nonzero boundary")]
    OpenChain,
    #[error("intersection pairing on the cycle basis is singular: {0}")]
    SingularPairing(String),
    #[error("chain length {got} does not match {expected} edges")]
    ChainLength { got: usize, expected: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HodgeError {
    #[error("harmonic space has dimension {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("period matrix is singular (smallest singular value {0:e})")]
    SingularPeriods(f64),
    #[error("cochain has length {got}, expected {expected}")]
    SizeMismatch { got: usize, expected: usize },
    #[error("linear solve failed: {0}")]
    Solver(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymplecticError {
    #[error("form is degenerate or not skew: {0}")]
    DegeneratePairing(String),
    #[error("basis columns are linearly dependent")]
    DependentBasis,
    #[error("invalid partition: {0}")]
    BadPartition(String),
    #[error("subspace is not a complete Lagrangian: {0}")]
    InvalidLagrangian(String),
    #[error("dimension mismatch: {0}")]
    Shape(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("mass matrix is not positive definite")]
    IndefiniteMass,
    #[error("eigensolver failed: {0}")]
    SolverFailure(String),
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Symplectic(#[from] SymplecticError),
    #[error(transparent)]
    Hodge(#[from] HodgeError),
    #[error(transparent)]
    Homology(#[from] HomologyError),
}
