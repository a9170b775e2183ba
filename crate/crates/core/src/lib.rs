//! Semiclassical tunneling through a symmetric barrier using truncated
//! moment hierarchies of the wavefunction.

pub mod algebra;
pub mod app;
pub mod classify;
pub mod config;
pub mod consistency;
pub mod dynamics;
pub mod error;
pub mod integrator;
pub mod jet;
pub mod packet;
pub mod potential;

pub use error::{Error, Result};
