//! Spectral toolkit for a non-overlapping domain-decomposition iteration of the
//! eddy-current problem on concentric spheres.
//!
//! The conductor occupies the unit ball and carries the electric field `E`
//! (curl curl E − κ²E = 0 with κ² = iωμσ); the insulating shell up to radius
//! `R > 1` carries a scalar magnetic potential `p` (Δp = 0, H = ∇p). The two
//! subproblems are coupled through impedance transmission conditions on the
//! unit sphere, weighted by two complex coefficients β_I and β_C.
//!
//! On this geometry every surface operator diagonalises over spherical
//! harmonics, so the whole iteration can be run and analysed exactly in modal
//! space:
//!
//! - [`special_functions`] — stable spherical Bessel evaluation for complex
//!   arguments (values, derivatives, and logarithmic derivatives).
//! - [`modal_analysis`] — per-mode coefficients of the subdomain solution
//!   operators, the eigenvalues of the interface iteration operator, their
//!   large-n contraction law, and the admissibility / consistency predicates
//!   for (β_I, β_C).
//! - [`spectral_ddm`] — the actual Jacobi interface iteration (per-mode
//!   subdomain solves, trace exchange, residual tracking) together with the
//!   monolithic coupled solve that serves as its ground-truth oracle.
//! - [`param_search`] — grid/refinement search over admissible (β_I, β_C)
//!   minimising the worst-case modal contraction factor.

pub mod error;
pub mod modal_analysis;
pub(crate) mod num_util;
pub mod param_search;
pub mod special_functions;
pub mod spectral_ddm;

pub use error::CoreError;
