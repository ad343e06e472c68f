//! Bubble-enriched Q1-Q1 quadrilateral elements for the Stokes problem.
//!
//! Exact polynomial algebra ([`poly`]) feeds the reference element
//! ([`refelem`]), the macro-element rank test ([`stability`]) and the
//! floating-point assembly on structured meshes ([`mesh`], [`assembly`]).
//! [`solver`] factors the resulting saddle-point system and [`verify`] runs
//! the manufactured-solution convergence studies.

pub mod assembly;
pub mod cli;
pub mod mesh;
pub mod poly;
pub mod refelem;
pub mod solver;
pub mod sparse;
pub mod stability;
pub mod verify;
