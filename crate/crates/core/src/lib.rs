//! Coincidence problems `T(u) = S(u)` solved through the fixed-point map
//! `h = S ∘ T⁻¹`, with generalized Ulam–Hyers error bounds.
//!
//! The crate is `no_std` (it needs `alloc`). It provides:
//!
//! - [`numerics`]: grids, quadrature, bisection, Γ and Mittag–Leffler.
//! - [`engine`]: Picard, Krasnoselskii–Mann averaging and the resolvent
//!   almost-fixed-point scheme over [`GridFunction`] iterates.
//! - [`stability`]: comparison functions φ and their inverses ψ = φ⁻¹.
//! - [`bvp3`], [`pendulum`], [`caputo`]: the three problem classes.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bvp3;
pub mod caputo;
pub mod engine;
mod error;
pub mod hypothesis;
pub mod numerics;
pub mod pendulum;
pub mod stability;

pub use engine::{NormKind, Operator, Scheme, SolveReport};
pub use error::{Error, Result};
pub use hypothesis::HypothesisReport;
pub use numerics::{Grid, GridFunction, GridStyle};
pub use stability::PhiFunction;
