use std::fmt;

use thiserror::Error;

use crate::witt::BlockLabel;

/// One violated clause of the Witt structure axioms.
#[derive(Debug, Clone, PartialEq)]
pub enum StructureViolation {
    /// Gram matrix shape does not match the grading.
    ShapeMismatch { expected: usize, found: (usize, usize) },
    NonSymmetric { row: usize, col: usize },
    /// Nonzero entry between blocks that are required to be orthogonal.
    NonOrthogonal { row: usize, col: usize, value: f64 },
    DimensionMismatch { pair: u32, rank: usize, dual_rank: usize },
    DegeneratePairing { pair: u32 },
    IndefiniteAnisotropicBlock { label: BlockLabel },
    DegenerateAnisotropicBlock { label: BlockLabel },
    OverlappingSlots { slot: usize },
    MissingSlot { slot: usize },
    SlotOutOfRange { slot: usize },
    UnpairedIsotropic { label: BlockLabel },
    DuplicateLabel { label: BlockLabel },
    BadLabel { label: BlockLabel },
    EmptyBlock { label: BlockLabel },
    Singular,
}

impl fmt::Display for StructureViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use StructureViolation::*;
        match self {
            ShapeMismatch { expected, found } => write!(
                f,
                "gram matrix is {}x{}, grading has dimension {expected}",
                found.0, found.1
            ),
            NonSymmetric { row, col } => {
                write!(f, "gram matrix not symmetric at ({}, {})", row + 1, col + 1)
            }
            NonOrthogonal { row, col, value } => write!(
                f,
                "entry ({}, {}) = {value} couples blocks that must be orthogonal",
                row + 1,
                col + 1
            ),
            DimensionMismatch { pair, rank, dual_rank } => write!(
                f,
                "isotropic pair {pair}: rank {rank} differs from dual rank {dual_rank}"
            ),
            DegeneratePairing { pair } => write!(f, "isotropic pair {pair}: pairing block is singular"),
            IndefiniteAnisotropicBlock { label } => write!(f, "block {label} is not definite"),
            DegenerateAnisotropicBlock { label } => write!(f, "block {label} is degenerate"),
            OverlappingSlots { slot } => write!(f, "frame slot {} belongs to several blocks", slot + 1),
            MissingSlot { slot } => write!(f, "frame slot {} belongs to no block", slot + 1),
            SlotOutOfRange { slot } => write!(f, "frame slot {} is out of range", slot + 1),
            UnpairedIsotropic { label } => write!(f, "isotropic block {label} has no dual block"),
            DuplicateLabel { label } => write!(f, "label {label} used twice"),
            BadLabel { label } => write!(f, "label {label} has an index of the wrong sign"),
            EmptyBlock { label } => write!(f, "block {label} is empty"),
            Singular => write!(f, "gram matrix is singular"),
        }
    }
}

fn join_violations(v: &[StructureViolation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum WittError {
    #[error("invalid Witt structure: {}", join_violations(.0))]
    InvalidStructure(Vec<StructureViolation>),
    #[error("unknown block {0}")]
    UnknownBlock(BlockLabel),
    #[error("frame matrix is singular at the queried point")]
    SingularFrame,
    #[error("expression domain guard tripped: {0}")]
    DomainGuard(String),
    #[error("structure constants are not antisymmetric at ({a}, {b}, {c})")]
    NotAntisymmetric { a: usize, b: usize, c: usize },
    #[error("structure constants violate the Jacobi identity (residual {0:e})")]
    JacobiViolation(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("model has no rank-1 distinguished null pair of the required type")]
    NotNullPairModel,
    #[error("no parity split: block labels must contain both even and odd indices")]
    ParityUnassigned,
    #[error("trajectory velocity is not lightlike in the null plane (defect {0:e})")]
    NotLightlike(f64),
    #[error("initial velocity is not horizontal (defect {0:e})")]
    NonHorizontalStart(f64),
    #[error("g(c', c') < 0 along the curve (min {0:e}); length undefined")]
    NegativeSpeedSquare(f64),
    #[error("screen complex structure is not adapted: {0}")]
    JNotAdapted(String),
    #[error("screen argument required")]
    NotScreen,
    #[error("model carries no Fefferman data")]
    NotFeffermanModel,
    #[error("integration left the chart domain at t = {0}")]
    StepOutOfDomain(f64),
    #[error("non-finite value encountered at t = {0}")]
    NonFinite(f64),
    #[error("shooting diverged (last residual {0:e})")]
    ShootingDiverged(f64),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error at {path}: {message}")]
    Validation { path: String, message: String },
    #[error("invalid trajectory: {0}")]
    BadTrajectory(String),
    #[error("operation not applicable: {0}")]
    NotApplicable(String),
}

pub type Result<T> = std::result::Result<T, WittError>;
