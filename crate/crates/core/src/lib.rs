//! Steady free convection in a bounded, fluid-saturated porous medium.
//!
//! The crate solves the coupled stream-function / temperature system
//!
//! ```text
//!   Δψ = K·∇T,        λ ΔT = ∇T·(∇ψ)^⊥     in Ω = (0, lx) x (0, ly)
//!   ψ = 0 on Γ₁,  ∂ψ/∂n = 0 on Γ₂,  T = T_w on Γ
//! ```
//!
//! by shifting `T = H + Θ` with Θ the harmonic lift of the wall temperature
//! and running a Picard sweep on `(ψ, H)`. Around the solver sit numerical
//! checks of the estimates that govern the problem (maximum principle,
//! energy bounds, the trilinear skew identity, contraction and uniqueness
//! ratios), and a shooting solver for the boundary-layer similarity ODEs of
//! the semi-infinite plate problem.

pub mod analysis;
pub mod cli;
pub mod coupled;
pub mod elliptic;
pub mod error;
pub mod grid;
pub mod par;
pub mod similarity;

pub use error::{Error, Result};
