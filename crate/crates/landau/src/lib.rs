//! Construction and verification of periodic electric potentials for which
//! the Landau Hamiltonian keeps an eigenvalue exactly at a Landau level.
//!
//! The pipeline: build the integer coupling matrices ([`cmatrix`]), solve
//! the nonlinear periodic system by a Fourier fixed-point iteration
//! ([`family`]), assemble the potential chain and the potential itself
//! ([`chain`]), and confirm the eigenvalue claim independently in a
//! finite Landau-level representation ([`rep`]). The scalar m = 1 case
//! doubles as an oracle through the pendulum period map ([`pendulum`]).

pub mod chain;
pub mod cmatrix;
pub mod family;
pub mod pendulum;
pub mod quad;
pub mod rep;
pub mod series;
