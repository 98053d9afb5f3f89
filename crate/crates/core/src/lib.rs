//! Executable shift equivalence for nonnegative integer matrices.
//!
//! The crate verifies, constructs and searches for witnesses of shift
//! equivalence (SE), strong shift equivalence (SSE) and compatible shift
//! equivalence (CSE), simulates the associated Cuntz–Krieger operator
//! families on a truncated path basis, and computes SE/SSE obstructions.
//!
//! Module map:
//!
//! - [`matrix`]: exact nonnegative integer matrices with labelled index sets
//! - [`paths`]: edge sets and composable path spaces
//! - [`iso`]: path isomorphisms and their algebra
//! - [`equiv`]: SE / CSE / SSE witnesses, verification and construction
//! - [`search`]: bounded searches for witnesses
//! - [`invariants`]: characteristic polynomial, Bowen–Franks group, dimension data
//! - [`ckrep`]: truncated Cuntz–Krieger representations
//! - [`cli`]: certificate-emitting command front end

pub mod ckrep;
pub mod cli;
pub mod equiv;
pub mod invariants;
pub mod iso;
pub mod matrix;
pub mod paths;
pub mod search;

pub use equiv::{CseWitness, ElementaryStep, SeWitness, SseChain};
pub use iso::PathIso;
pub use matrix::{IndexSet, NonnegMatrix};
pub use paths::{Edge, Path, PathSpaceSpec};
