//! Domains, grids, the boundary-adapted function `h` and discrete derivatives.

mod domain;
mod field;
mod grid;

pub use domain::{h_function, ConvexDomain, DomainKind, HValue};
pub(crate) use domain::h_at;
pub use field::{discrete_derivatives, Field};
pub use grid::{Grid, IntervalGrid, Local, PolarGrid};
