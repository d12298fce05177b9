//! Numerical kernel for graphical anisotropic mean curvature flow with
//! contact-angle and Neumann boundary conditions.
#![no_std]

extern crate alloc;

pub mod anisotropy;
pub mod error;
pub mod estimates;
pub mod evolve;
pub mod geometry;
pub mod numerics;
pub mod translator;

pub use error::{Error, Result};
