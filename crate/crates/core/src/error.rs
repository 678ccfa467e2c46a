//! Crate-wide error type.

use thiserror::Error;

/// Which subdomain solve raised a resonance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subdomain {
    Insulator,
    Conductor,
}

impl std::fmt::Display for Subdomain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Subdomain::Insulator => write!(f, "insulator"),
            Subdomain::Conductor => write!(f, "conductor"),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CoreError {
    /// An impedance choice annihilates a subdomain solution operator on one
    /// mode: the per-mode denominator of the solve vanishes.
    #[error("resonant impedance on mode n = {mode} ({subdomain} side)")]
    ResonantImpedance { mode: usize, subdomain: Subdomain },

    /// Mode indices start at n = 1; n = 0 carries no tangential data.
    #[error("mode index n = {0} out of range (modes start at n = 1)")]
    ModeOutOfRange(usize),

    #[error("non-finite argument: {0}")]
    NonFiniteArgument(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Large-n amplification law is undefined at 1 + n β_C = 0.
    #[error("asymptote pole: 1 + n beta_C = 0 at n = {0}")]
    AsymptotePole(usize),

    /// The coupled per-mode system of the direct solve is singular.
    #[error("singular monolithic system on mode n = {0}")]
    SingularSystem(usize),

    #[error("evaluation point outside the domain of the requested field: {0}")]
    OutOfDomain(String),

    #[error("array length mismatch: expected {expected} modes, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}
