//! Detection probabilities on curved Cauchy surfaces for a lattice
//! quantum cellular automaton.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: lattice surfaces, causal order, grown/shrunk sets and the
//!   slicing of a surface into detection rounds.
//! * [`events`]: occupation configurations and detection events.
//! * [`fock`]: the local Hilbert space, vacuum embedding and partial traces.
//! * [`dynamics`]: brickwork gates and surface-to-surface evolution.
//! * [`axioms`]: numerical checks of locality, propagation speed and vacuum
//!   stability, and of the reduced evolution operators.
//! * [`protocol`]: the sequential detection protocol, its closed form and
//!   the bracketing bounds.
//! * [`experiment`]: configuration files, instance generation and the
//!   axiom/theorem check suite.

use thiserror::Error;

pub mod axioms;
pub mod dynamics;
pub mod events;
pub mod experiment;
pub mod fock;
pub mod geometry;
pub mod linalg;
pub mod protocol;

pub use num_complex::Complex64 as C64;

pub use dynamics::{Control, Dynamics, ModelParams};
pub use events::{Configuration, Event, OutcomePattern, OutcomeSeq};
pub use fock::{DensityOp, LocalSpace, StateVec};
pub use geometry::{
    LatticeSurface, Partition, Region, SiteSet, SliceDecomposition, SpacetimePoint,
};

/// Numerical tolerances shared by checks throughout the crate.
pub mod tol {
    /// Unitarity and Hermiticity residuals.
    pub const UNITARY: f64 = 1e-12;
    /// Most negative eigenvalue still accepted as positive semidefinite.
    pub const PSD: f64 = -1e-10;
    /// Norm defect above which a reduced evolution is not an isometry.
    pub const ISOMETRY: f64 = 1e-8;
    /// Branch probabilities below this are pruned.
    pub const PRUNE: f64 = 1e-14;
    /// Reconstructed masses below this are reported as inconsistent.
    pub const MASS: f64 = -1e-9;
}

/// Capacity limits of the dense representations.
pub mod limits {
    /// Largest state-vector dimension.
    pub const MAX_STATE_DIM: usize = 1 << 15;
    /// Largest density-operator dimension.
    pub const MAX_DENSITY_DIM: usize = 1 << 11;
    /// Largest number of joint detection outcomes.
    pub const MAX_OUTCOMES: usize = 1 << 20;
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("surface is not lattice-spacelike: layers at sites {site} and {} differ by {jump}", site + 1)]
    NotSpacelike { site: usize, jump: i64 },
    #[error("surface is not cut-compatible with the brickwork: step at sites {site}, {} cuts a pair gate", site + 1)]
    NotCutCompatible { site: usize },
    #[error("unsupported lattice size {0} (must be 1..=63)")]
    LatticeSize(usize),
    #[error("lattice size mismatch: {0} vs {1}")]
    LatticeMismatch(usize, usize),
    #[error("partition not disjoint: patches {0} and {1} overlap")]
    PartitionOverlap(usize, usize),
    #[error("patch {0} is empty")]
    EmptyPatch(usize),
    #[error("site {site} out of bounds for lattice of {lattice} sites")]
    SiteOutOfBounds { site: usize, lattice: usize },
    #[error("slicing parameter m must be a positive integer, got {0}")]
    InvalidM(i64),
    #[error("surface dips below the initial surface at site {0}")]
    BelowInitialSurface(usize),
    #[error("capacity exceeded: {what} needs dimension {dim}, limit is {limit}")]
    Capacity { what: &'static str, dim: usize, limit: usize },
    #[error("reduced evolution is not norm preserving (defect {defect:.3e}); the dynamics creates particles from the vacuum")]
    FsViolation { defect: f64 },
    #[error("inconsistent probabilities: configuration {config:?} has mass {mass:.3e}")]
    InconsistentDistribution { config: SiteSet, mass: f64 },
    #[error("region mismatch: {0}")]
    RegionMismatch(String),
    #[error("too many joint outcomes: {0}")]
    TooManyOutcomes(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
