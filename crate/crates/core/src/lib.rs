//! Finite-difference laboratory for the regularized singular system
//!
//! ```text
//! -div(A Du) + v^(1-θ) u^(r-1) = f_n / (u + 1/n)^γ
//! -div(A Dv)                   = u^r / (v + 1/n)^θ
//! ```
//!
//! on the unit cube with homogeneous Dirichlet data: exact exponent
//! arithmetic, the discrete operator and solver, the approximation scheme,
//! and audits of the a priori estimates.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod experiments;
pub mod exponents;
pub mod field;
pub mod operator;
pub mod scheme;
