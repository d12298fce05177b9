use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
// Needed for float math under no_std; unused when std is in the graph.
#[allow(unused_imports)]
use num_traits::Float;

use super::bc::BcMode;
use super::solver::{FlowState, SolverConfig};
use crate::error::Result;
use crate::estimates::{assemble_b, default_a0, psi_from_locals, PointData};
use crate::geometry::{h_at, Local};
use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsConfig {
    #[serde(default = "default_enabled")]
    pub enabled: bool,
    /// Auxiliary constant of `Psi`; the mode default when absent.
    #[serde(default)]
    pub a0: Option<f64>,
    /// Nodes of largest `|Du|` at which the bilinear form is sampled.
    #[serde(default = "default_samples")]
    pub b_samples: usize,
}

fn default_enabled() -> bool {
    true
}

fn default_samples() -> usize {
    32
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            a0: None,
            b_samples: 32,
        }
    }
}

/// One row of the diagnostics series. Estimate columns are `NaN` when
/// diagnostics are off or nothing was sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub step: u64,
    pub time: f64,
    pub sup_grad: f64,
    pub sup_ut: f64,
    /// Spatial mean of `u_t`.
    pub lambda_hat: f64,
    /// `sup |u_t - lambda_hat|`.
    pub ut_spread: f64,
    pub energy: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub psi_max: f64,
    pub psi_argmax_boundary: bool,
    pub eigmin_b: f64,
    /// `rho^n` at the node of largest `|Du|`.
    pub rho_n: f64,
    /// The `rho` bounds hold at every sample with `|Du| >= 1`.
    pub rho_bounds_hold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<Record>,
    pub a0: f64,
    /// Time at which the translation test first passed.
    pub steady_time: Option<f64>,
    pub steps: u64,
    /// Smallest and largest step actually taken.
    pub dt_range: (f64, f64),
}

impl Trajectory {
    pub fn steady(&self) -> bool {
        self.steady_time.is_some()
    }

    pub fn last(&self) -> Option<&Record> {
        self.records.last()
    }
}

/// Integrates to `config.t_end`, or until `sup |u_t - mean u_t| <
/// translate_tol` when `stop_on_steady` is set, recording every
/// `record_every` steps and at the end.
pub fn run(state: &mut FlowState, config: &SolverConfig, diag: &DiagnosticsConfig) -> Result<Trajectory> {
    config.validate()?;
    let mode = state.bc.mode;
    let a0 = diag.a0.unwrap_or_else(|| default_a0(&state.domain, mode));
    let mut traj = Trajectory {
        records: Vec::new(),
        a0,
        steady_time: None,
        steps: 0,
        dt_range: (f64::INFINITY, 0.0),
    };
    let mut ut = vec![0.0; state.grid.node_count()];
    traj.records.push(record(state, diag, a0, &mut ut)?);
    let mut since = 0usize;
    while state.time() < config.t_end {
        let info = state.step(config)?;
        traj.steps += 1;
        traj.dt_range = (traj.dt_range.0.min(info.dt), traj.dt_range.1.max(info.dt));
        since += 1;
        if traj.steady_time.is_none() && info.rate_spread < config.translate_tol {
            traj.steady_time = Some(state.time());
            if config.stop_on_steady {
                break;
            }
        }
        if since == config.record_every {
            since = 0;
            traj.records.push(record(state, diag, a0, &mut ut)?);
        }
    }
    if since != 0 {
        traj.records.push(record(state, diag, a0, &mut ut)?);
    }
    Ok(traj)
}

fn record(state: &mut FlowState, diag: &DiagnosticsConfig, a0: f64, ut: &mut [f64]) -> Result<Record> {
    state.rhs_all(ut)?;
    let lambda_hat = state.mean(ut);
    let sup_ut = ut.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let ut_spread = ut.iter().fold(0.0f64, |m, x| m.max((x - lambda_hat).abs()));
    let locals = state.derivatives()?;
    let n = state.grid.dim();
    let grad = |l: &Local| (0..n).map(|k| l.du[k] * l.du[k]).sum::<f64>().sqrt();
    let sup_grad = locals.iter().fold(0.0f64, |m, l| m.max(grad(l)));
    let mut energy = 0.0;
    let mut p = [0.0, 0.0, -1.0];
    for (l, w) in locals.iter().zip(state.weights()) {
        p[..n].copy_from_slice(&l.du[..n]);
        p[n] = -1.0;
        energy += w * state.model.value(&p[..=n])?;
    }
    let nodes = state.field.nodes();
    let u_min = nodes.iter().fold(f64::INFINITY, |m, x| m.min(*x));
    let u_max = nodes.iter().fold(f64::NEG_INFINITY, |m, x| m.max(*x));
    let mut rec = Record {
        step: state.step_count,
        time: state.time(),
        sup_grad,
        sup_ut,
        lambda_hat,
        ut_spread,
        energy,
        u_min,
        u_max,
        psi_max: f64::NAN,
        psi_argmax_boundary: false,
        eigmin_b: f64::NAN,
        rho_n: f64::NAN,
        rho_bounds_hold: true,
    };
    if !diag.enabled {
        return Ok(rec);
    }
    let snap = psi_from_locals(state, &locals, a0, state.bc.mode)?;
    rec.psi_max = snap.max_value;
    rec.psi_argmax_boundary = snap.argmax_on_boundary;

    let mut order: Vec<(f64, usize)> = locals
        .iter()
        .enumerate()
        .map(|(i, l)| (grad(l), i))
        .filter(|(g, _)| *g > 1e-8)
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    order.truncate(diag.b_samples);
    let size = state.domain.size();
    for (rank, &(g, i)) in order.iter().enumerate() {
        let l = &locals[i];
        let pos = state.grid.position(i);
        let (h, dh) = h_at(size, &pos[..n]);
        let ext = state.bc.extension(&state.domain, pos);
        let hess = if n == 1 {
            DMatrix::from_element(1, 1, l.d2u[0])
        } else {
            DMatrix::from_row_slice(2, 2, &[l.d2u[0], l.d2u[1], l.d2u[1], l.d2u[2]])
        };
        let (data, cos_theta) = match state.bc.mode {
            BcMode::ContactAngle => {
                let c = ext.value.cos();
                (PointData::ContactAngle { cos_theta: c, dh }, c)
            }
            BcMode::Neumann => {
                let dq = (0..n).map(|k| -(h * ext.grad[k] + ext.value * dh[k])).collect();
                (PointData::Neumann { dq }, 0.0)
            }
        };
        let b = assemble_b(&state.model, &l.du[..n], &hess, &data)?;
        rec.eigmin_b = if rec.eigmin_b.is_nan() {
            b.min_eigenvalue
        } else {
            rec.eigmin_b.min(b.min_eigenvalue)
        };
        if rank == 0 {
            rec.rho_n = b.rho[n - 1];
        }
        if g >= 1.0 && !b.rho_bounds_hold(cos_theta) {
            rec.rho_bounds_hold = false;
        }
    }
    Ok(rec)
}
