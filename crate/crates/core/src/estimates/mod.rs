//! The estimate apparatus evaluated on solver states: the auxiliary
//! function `Psi`, the bilinear form of the interior case, the `T3`
//! contraction and the assumption checks.

mod assumptions;
mod bform;
mod psi;

pub use assumptions::{check_assumptions, AssumptionReport, Thresholds, EPSILON2_S_GRID};
pub use bform::{assemble_b, t3_contract, t3_groups, BAssembly, PointData};
pub use psi::{default_a0, psi, PsiSnapshot};
pub(crate) use psi::psi_from_locals;
