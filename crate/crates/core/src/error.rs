use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FvError {
    #[error("invalid manifold: {0}")]
    InvalidManifold(String),
    #[error("degenerate cell: {0}")]
    DegenerateCell(String),
    #[error("ambiguous geodesic between antipodal points")]
    AmbiguousGeodesic,
    #[error("tangent vectors have different base points")]
    MismatchedBase,
    #[error("point lies off the edge (offset {offset:e})")]
    PointOffEdge { offset: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("CFL condition violated: tau * sup(p_K/|K|) * Lip(f) = {cfl_number} > 1")]
    CflViolated { cfl_number: f64 },
    #[error("state has {state} values but mesh has {cells} cells")]
    MeshMismatch { state: usize, cells: usize },
}

pub type Result<T, E = FvError> = std::result::Result<T, E>;
