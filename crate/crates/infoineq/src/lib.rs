//! Variance lower bounds built from a model density `f` and an escort density `g`.
//!
//! The classical information inequalities (Cramér-Rao, Bhattacharyya,
//! Hammersley–Chapman–Robbins) bound the variance of an unbiased estimator by a
//! quadratic form `Mᵀ Σ⁻¹ M` in a set of zero-mean score functions. Replacing
//! the score `∂θ f / f` by `∂θ g / f` for a second family `g` yields the
//! generalized (escort) versions of these bounds; regularity can then be imposed
//! on `g` instead of `f`, which covers non-regular models such as uniform and
//! shifted-exponential families.
//!
//! What lives where:
//!
//! * [`model`] — density families, statistics, supports, and the catalog of
//!   worked examples with their closed forms.
//! * [`numerics`] — adaptive quadrature and lattice summation, numerical
//!   differentiation, divided differences, and a small simplex optimizer.
//! * [`linalg`] — dense symmetric matrices, Cholesky, quadratic forms,
//!   Schur complements.
//! * [`bounds`] — the bound engines producing [`bounds::BoundReport`]s.
//! * [`escort`] — constructive synthesis of optimizing escort families
//!   (location, scale, deformed-exponential F-escort).
//! * [`verify`] — Monte Carlo cross-checks and the attainment/reduction suites.
//! * [`cli`] — the command-line surface with JSON/CSV reports.

// negated comparisons like `!(x > 0.0)` are NaN-robust guards: the
// non-negated form would silently pass NaN through
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// indexed loops mirror the matrix subscripts they implement
#![allow(clippy::needless_range_loop)]
#![allow(clippy::type_complexity)]

pub mod bounds;
pub mod cli;
pub mod error;
pub mod escort;
pub mod linalg;
pub mod model;
pub mod numerics;
pub mod verify;

pub use error::{Error, Result};
