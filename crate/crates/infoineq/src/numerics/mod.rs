//! Quadrature, lattice summation, numerical differentiation, divided
//! differences, and a small derivative-free simplex optimizer.

pub mod derivative;
pub mod divided;
pub mod quadrature;
pub mod simplex;
pub mod special;

pub use derivative::{default_step, derivative, mixed_partial, DerivEstimate};
pub use divided::{
    divided_difference, lagrange_form, multiparam_divided_difference, DividedDifferenceTable,
    NodeSet,
};
pub use quadrature::{integrate, integrate_interval, integrate_with, QuadEstimate, QuadratureSettings};
pub use simplex::{nelder_mead, SimplexSettings};
