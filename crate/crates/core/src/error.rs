use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid group order: {0}")]
    InvalidOrder(String),
    #[error("invalid group table: {0}")]
    InvalidGroup(String),
    #[error("operands belong to different groups")]
    GroupMismatch,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not affiliated to R(Γ): commutator defect {defect:e}")]
    NotAffiliated { defect: f64 },
    #[error("operator is not self-adjoint: skew defect {defect:e}")]
    NotSelfAdjoint { defect: f64 },
    #[error("operator is not positive: eigenvalue {eigenvalue:e}")]
    NotPositive { eigenvalue: f64 },
    #[error("p-norm requires p >= 1, got {0}")]
    InvalidExponent(f64),
    #[error("spectral function undefined at eigenvalue {eigenvalue:e}")]
    UndefinedSpectralFunction { eigenvalue: f64 },
    #[error("operation requires an abelian group")]
    NonAbelian,
    #[error("invalid representation: {0}")]
    InvalidRepresentation(String),
    #[error("matrix is not unitary: defect {defect:e}")]
    NonUnitary { defect: f64 },
    #[error("invalid group action: {0}")]
    InvalidAction(String),
    #[error("action does not tile: {0}")]
    NonTiling(String),
    #[error("generator is zero")]
    ZeroGenerator,
    #[error("system has no generators")]
    EmptySystem,
    #[error("system has no nonzero generator")]
    Degenerate,
    #[error("subspace is not invariant: defect {defect:e}")]
    NotInvariant { defect: f64 },
    #[error("generator orbits are not orthogonal: defect {defect:e}")]
    NonOrthogonalGenerators { defect: f64 },
    #[error("vector is outside the map's domain: residual {residual:e}")]
    DomainViolation { residual: f64 },
    #[error("element is outside the map's range: residual {residual:e}")]
    RangeViolation { residual: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
