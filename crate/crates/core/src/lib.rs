//! Fractional Laplacians with interaction sets on node-centred lattices.
//!
//! Weak forms and pointwise operators for Dirichlet, restricted,
//! semirestricted and general interaction sets, De Giorgi level bounds,
//! barriers, strong maximum principle checks and a stable jump simulator.

pub mod barrier;
pub mod cli;
pub mod config;
pub mod constants;
pub mod degiorgi;
pub mod domain;
pub mod families;
pub mod error;
pub mod forms;
pub mod fourier;
pub mod golden;
pub mod grid;
pub mod kernel;
pub mod lattice;
pub mod levy;
pub mod operators;
pub(crate) mod quadrature;
pub mod smp;
pub mod special;
pub mod spectral;
