//! Numerical toolkit for relative quantum-resource measures and subchannel
//! discrimination.
//!
//! The crate is organized as a small stack:
//!
//! - [`qmath`] — dense complex linear algebra (Hermitian eigensolver,
//!   fidelity, partial trace, Kronecker products).
//! - [`states`] — density matrices, maximally coherent/entangled families,
//!   Schmidt decomposition, Kraus channels, seeded random ensembles.
//! - [`sdpcore`] — barrier-method solvers for the generalized-robustness
//!   program over incoherent states and the relative-robustness program
//!   between two states.
//! - [`measures`] — robustness of α-superiority, relative robustness,
//!   geometric deficiency for coherence and entanglement, and the axiom
//!   harnesses for the resource/deficiency frameworks.
//! - [`discrimination`] — subchannel discrimination strategies: success
//!   probabilities, optimal-ratio constructions, perfect-strategy tests.
//! - [`report`] — serializable records of verification campaigns.

pub mod discrimination;
pub mod measures;
pub mod qmath;
pub mod report;
pub mod sdpcore;
pub mod states;

pub use qmath::{CMatrix, HermitianEig, Subsystem};
pub use states::{DensityMatrix, KrausChannel, PhaseVector, PureState, SchmidtDecomposition};

/// Crate version string, embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
