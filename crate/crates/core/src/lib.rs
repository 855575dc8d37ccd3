//! Numerical toolkit for the generalized Hopf equation
//! `h_w · conj(h_w̄) · η(w) = Φ(w)`.
//!
//! Closed-form data lives in [`expr`], sampled fields in [`grid`], validated
//! weights and holomorphic data in [`weight`], solution producers in
//! [`solver`], derived fields and identity checks in [`analysis`], and degree
//! based probes in [`topology`].

pub mod expr;
pub mod analysis;
pub mod grid;
pub mod solver;
pub mod topology;
pub mod weight;

pub use expr::{ComplexExpr, ExprError, Wirtinger, C64};
pub use grid::{Bounds, ExecMode, Grid, GridError, GridField, NodeKind};
