//! Homogeneous anisotropy integrands and the tensor calculus built on them.

mod decay;
mod frame;
mod model;
mod structure;

pub use decay::{default_directions, verify_decay, BoundKind, ConstantsReport, LemmaConstants, SlopeFit};
pub use frame::{build_frame, coefficient_matrix, t3_tensor, ExtendedGradient, TensorFrame};
pub use model::{AnisotropyModel, Derivative, Family, Tensor3, DEFAULT_FD_STEP};
pub use structure::{check_structure, IdentityCheck, IdentityKind, StructureReport};

/// `F(p)`.
pub fn eval_f(model: &AnisotropyModel, p: &[f64]) -> crate::Result<f64> {
    model.value(p)
}
