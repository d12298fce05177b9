use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
// Needed for float math under no_std; unused when std is in the graph.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::evolve::{BcMode, FlowState};
use crate::geometry::{h_at, ConvexDomain, Local};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiSnapshot {
    /// `Psi` per node; `NaN` where it is undefined (`|DW|` below 1e-10).
    pub values: Vec<f64>,
    pub max_value: f64,
    pub argmax: usize,
    pub argmax_on_boundary: bool,
    pub a0: f64,
    pub skipped: usize,
}

/// `min(k1 / 2, k0 / 3, 1)` for the contact angle, `k0` for Neumann. On an
/// interval `k0` is infinite and `k1` stands in for it.
pub fn default_a0(domain: &ConvexDomain, mode: BcMode) -> f64 {
    let k0 = if domain.k0.is_finite() { domain.k0 } else { domain.k1 };
    match mode {
        BcMode::ContactAngle => (domain.k1 / 2.0).min(k0 / 3.0).min(1.0),
        BcMode::Neumann => k0,
    }
}

/// The auxiliary function of the gradient estimate on the current state:
/// `log W + a0 h` with `W = v - <Du, Dh> cos(theta)`, or `log |DW|^2 + a0 h`
/// with `W = u + phi h`.
pub fn psi(state: &FlowState, a0: f64, mode: BcMode) -> Result<PsiSnapshot> {
    if !state.field.ghosts_closed() {
        return Err(Error::GhostNotClosed);
    }
    let mut locals = alloc::vec![Local::default(); state.grid.node_count()];
    state.grid.derivatives_all(state.field.storage(), &mut locals);
    psi_from_locals(state, &locals, a0, mode)
}

pub(crate) fn psi_from_locals(state: &FlowState, locals: &[Local], a0: f64, mode: BcMode) -> Result<PsiSnapshot> {
    if mode != state.bc.mode {
        return Err(Error::InvalidInput("psi mode differs from the boundary condition".into()));
    }
    let n = state.grid.dim();
    let size = state.domain.size();
    let mut values = Vec::with_capacity(locals.len());
    let mut skipped = 0;
    let (mut max_value, mut argmax) = (f64::NEG_INFINITY, 0);
    for (i, l) in locals.iter().enumerate() {
        let pos = state.grid.position(i);
        let (h, dh) = h_at(size, &pos[..n]);
        let ext = state.bc.extension(&state.domain, pos);
        let value = match mode {
            BcMode::ContactAngle => {
                let du_dh: f64 = (0..n).map(|k| l.du[k] * dh[k]).sum();
                let v = (1.0 + (0..n).map(|k| l.du[k] * l.du[k]).sum::<f64>()).sqrt();
                let w = v - du_dh * ext.value.cos();
                if !(w > 0.0) {
                    return Err(Error::NonPositiveW { node: i, value: w });
                }
                w.ln() + a0 * h
            }
            BcMode::Neumann => {
                // DW = Du + h D(phi) + phi Dh
                let dw2: f64 = (0..n)
                    .map(|k| {
                        let c = l.du[k] + h * ext.grad[k] + ext.value * dh[k];
                        c * c
                    })
                    .sum();
                if dw2 < 1e-20 {
                    skipped += 1;
                    f64::NAN
                } else {
                    dw2.ln() + a0 * h
                }
            }
        };
        if value > max_value {
            max_value = value;
            argmax = i;
        }
        values.push(value);
    }
    Ok(PsiSnapshot {
        values,
        max_value,
        argmax,
        argmax_on_boundary: max_value.is_finite() && state.grid.is_boundary(argmax),
        a0,
        skipped,
    })
}
