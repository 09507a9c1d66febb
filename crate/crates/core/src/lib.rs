//! Blockwise decompositions of operator algebras relative to orthogonal
//! projection families.
//!
//! Given a family of pairwise-orthogonal projections `{p_ξ}` summing to the
//! identity, every operator `a` splits into corner blocks `p_ξ a p_η`. This
//! crate represents such block families directly ([`IodElement`]) and
//! implements the algebra on them: the corner-supremum norm, the
//! corner-positivity order, the involution `{a_ξη}* = {a_ηξ*}`, the Hermitian
//! split, and the block-sum product `Σ_i a_ξi b_iη`. Everything is checked
//! against ordinary dense matrix arithmetic at finite dimension.
//!
//! Modules:
//!
//! * [`matrix`]: dense complex matrices, spectral norm, PSD test, commutants.
//! * [`projections`]: projection families and partial-isometry witnesses.
//! * [`iod`]: the block-family element and its operations.
//! * [`lazy`]: generator-defined countably infinite block families and
//!   truncation diagnostics.
//! * [`monotone`]: bounded increasing sequences and their blockwise supremum.
//! * [`models`]: matrix-unit families with the l2 bound, and the
//!   `C(X) ⊗ M_n` model with center and abelian-projection checks.

pub mod error;
pub mod iod;
pub mod lazy;
pub mod matrix;
pub mod models;
pub mod monotone;
pub mod projections;
pub mod random;

pub use error::{IodError, Result};
pub use iod::{CornerSelection, IodElement};
pub use lazy::{LazyBlockFamily, TruncationReport};
pub use matrix::{Complex, ComplexMatrix};
pub use monotone::MonotoneNet;
pub use projections::{EquivalenceWitness, Projection, ProjectionFamily};

/// Default relative tolerance. Comparisons scale it by `max(1, ‖a‖)`.
pub const DEFAULT_TOL: f64 = 1e-9;
