//! Nonholonomic geometry induced on tangent bundles by a base metric, and the
//! bi-Hamiltonian vector mKdV / sine-Gordon curve-flow hierarchies.

#![allow(clippy::needless_range_loop)]

pub mod expr;
pub mod metric;
pub mod tensor;
pub mod geometry;
pub mod dconnection;
pub mod spectral;
pub mod hierarchy;
pub mod klein;
pub mod pipeline;
pub mod pde;
pub mod report;
pub mod check;
