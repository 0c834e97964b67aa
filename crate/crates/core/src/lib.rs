//! SO(2)-equivariant bifurcation invariants at infinity for autonomous
//! Hamiltonian systems ü = −∇V(u, λ), with a Fourier–Galerkin harness for
//! following the predicted branches numerically.

pub mod bifurcation;
pub mod catalog;
pub mod config;
pub mod eqdeg;
pub mod error;
pub mod family;
pub mod galerkin;
pub mod problem;
pub mod report;
pub mod reps;
pub mod resonance;
pub mod spectral;
pub mod udring;
pub mod verify;

pub use error::{Error, Result};
