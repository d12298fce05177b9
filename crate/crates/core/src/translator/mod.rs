//! Speed and profile of the translating solution, three ways: averaging the
//! parabolic flow, the damped elliptic problems `eps w = Q(w)` as `eps -> 0`,
//! and exact quadrature in one dimension.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
// Needed for float math under no_std; unused when std is in the graph.
#[allow(unused_imports)]
use num_traits::Float;

use crate::anisotropy::AnisotropyModel;
use crate::error::{Error, Result};
use crate::evolve::{BcMode, BoundaryCondition, FlowState, Integrator, Operator, Trajectory};
use crate::geometry::{ConvexDomain, Field, Grid, IntervalGrid};
use crate::numerics::{bisect_increasing, extrapolate_to_zero, gauss_legendre, integrate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ParabolicAverage,
    EpsilonScheme,
    #[serde(rename = "oracle_1d")]
    Oracle1D,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslatorSolution {
    pub method: Method,
    pub lambda: f64,
    /// Profile with `w(reference) = 0`, ghosts closed.
    pub w: Field,
    /// `sup |lambda - tr(a(Dw) D^2w)|` on the grid of `w`.
    pub residual: f64,
    /// Epsilon-scheme only: the schedule, `lambda_eps` and `osc(eps w^eps)`.
    pub epsilons: Vec<f64>,
    pub lambda_sequence: Vec<f64>,
    pub osc_sequence: Vec<f64>,
}

impl TranslatorSolution {
    fn new(method: Method, lambda: f64, w: Field, residual: f64) -> Self {
        Self {
            method,
            lambda,
            w,
            residual,
            epsilons: Vec::new(),
            lambda_sequence: Vec::new(),
            osc_sequence: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonConfig {
    pub epsilons: Vec<f64>,
    pub cfl_safety: f64,
    pub integrator: Integrator,
    /// Stop once `sup |v_t| < tol max(1, sup |v|)`.
    pub tol: f64,
    pub max_pseudo_time: f64,
}

impl Default for EpsilonConfig {
    fn default() -> Self {
        Self {
            epsilons: vec![0.1, 0.05, 0.025, 0.0125],
            cfl_safety: 0.4,
            integrator: Integrator::Rkl1 { stages: 16 },
            tol: 1e-9,
            max_pseudo_time: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSolution {
    pub epsilon: f64,
    pub w: Field,
    /// `eps w^eps` at the reference node.
    pub lambda: f64,
    /// `osc(eps w^eps)`.
    pub osc: f64,
    pub pseudo_time: f64,
    /// `w^eps` minus its value at the reference node.
    profile: Vec<f64>,
}

fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Solves `eps w = tr(a(Dw) D^2w)` with the flow's boundary closure.
///
/// `w` is split as `m + z` with `z` of zero mean; `z` follows the damped flow
/// with the mean of the operator removed, and `m = mean(Q(z)) / eps` is
/// recovered at the end. This avoids the `1 / eps` drift of the plain damped
/// flow without changing its fixed point.
pub fn solve_epsilon(
    model: &AnisotropyModel,
    domain: &ConvexDomain,
    bc: &BoundaryCondition,
    grid: &Grid,
    epsilon: f64,
    config: &EpsilonConfig,
    start: Option<&Field>,
) -> Result<EpsilonSolution> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    let field = match start {
        Some(f) => f.clone(),
        None => Field::zeros(grid),
    };
    let mut state = FlowState::new(model.clone(), *domain, grid.clone(), bc.clone(), field)?;
    let mut k = vec![0.0; grid.node_count()];
    let op = Operator::Damped { epsilon, project: true };
    let mut scale = 1.0f64;
    let mut steps = 0usize;
    loop {
        let info = state.advance(op, config.cfl_safety, config.integrator, None, None)?;
        steps += 1;
        if steps % 64 == 0 || info.rate_sup < config.tol * scale {
            state.rhs_all(&mut k)?;
            let m = state.mean(&k) / epsilon;
            scale = (m.abs() + sup_abs(state.field.nodes())).max(1.0);
            if info.rate_sup < config.tol * scale {
                break;
            }
        }
        if state.time() > config.max_pseudo_time {
            return Err(Error::NoConvergence { residual: info.rate_sup });
        }
    }
    let pseudo_time = state.time();
    state.rhs_all(&mut k)?;
    let q_mean = state.mean(&k);
    let z_ref = grid.reference_value(state.field.storage());
    let (lo, hi) = minmax(state.field.nodes());
    let profile: Vec<f64> = state.field.nodes().iter().map(|z| z - z_ref).collect();
    let m = q_mean / epsilon;
    let mut w = state.field.clone();
    w.storage_mut().iter_mut().for_each(|x| *x += m);
    w.mark_closed();
    w.time = 0.0;
    Ok(EpsilonSolution {
        epsilon,
        w,
        lambda: q_mean + epsilon * z_ref,
        osc: epsilon * (hi - lo),
        pseudo_time,
        profile,
    })
}

fn minmax(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)))
}

/// Runs the `eps` schedule (warm-started from the previous solve) and
/// extrapolates `lambda_eps` and the normalized profiles to `eps = 0`.
pub fn epsilon_scheme(
    model: &AnisotropyModel,
    domain: &ConvexDomain,
    bc: &BoundaryCondition,
    grid: &Grid,
    config: &EpsilonConfig,
) -> Result<TranslatorSolution> {
    if config.epsilons.is_empty() {
        return Err(Error::InvalidInput("empty epsilon schedule".into()));
    }
    let mut solves: Vec<EpsilonSolution> = Vec::with_capacity(config.epsilons.len());
    for &eps in &config.epsilons {
        // warm start from the previous z; its mean is already zero
        let start = solves.last().map(|s| {
            let mut f = Field::zeros(grid);
            f.nodes_mut().iter_mut().zip(&s.profile).for_each(|(a, b)| *a = *b);
            let mean = mean_with(grid, f.nodes());
            f.nodes_mut().iter_mut().for_each(|a| *a -= mean);
            f
        });
        solves.push(solve_epsilon(model, domain, bc, grid, eps, config, start.as_ref())?);
    }
    let eps: Vec<f64> = solves.iter().map(|s| s.epsilon).collect();
    let lambdas: Vec<f64> = solves.iter().map(|s| s.lambda).collect();
    let lambda = extrapolate_to_zero(&eps, &lambdas);
    let mut w = Field::zeros(grid);
    let mut column = vec![0.0; solves.len()];
    for (i, slot) in w.nodes_mut().iter_mut().enumerate() {
        for (c, s) in column.iter_mut().zip(&solves) {
            *c = s.profile[i];
        }
        *slot = extrapolate_to_zero(&eps, &column);
    }
    let (w, residual) = normalized_with_residual(model, domain, bc, grid, w, lambda)?;
    let mut out = TranslatorSolution::new(Method::EpsilonScheme, lambda, w, residual);
    out.osc_sequence = solves.iter().map(|s| s.osc).collect();
    out.epsilons = eps;
    out.lambda_sequence = lambdas;
    Ok(out)
}

fn mean_with(grid: &Grid, v: &[f64]) -> f64 {
    let w = grid.weights();
    v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / w.iter().sum::<f64>()
}

/// Shifts `w` to vanish at the reference node, closes its ghosts and
/// measures `sup |lambda - Q(w)|`.
fn normalized_with_residual(
    model: &AnisotropyModel,
    domain: &ConvexDomain,
    bc: &BoundaryCondition,
    grid: &Grid,
    mut w: Field,
    lambda: f64,
) -> Result<(Field, f64)> {
    let r = grid.reference_value(w.storage());
    w.nodes_mut().iter_mut().for_each(|x| *x -= r);
    w.time = 0.0;
    let mut state = FlowState::new(model.clone(), *domain, grid.clone(), bc.clone(), w)?;
    let mut k = vec![0.0; grid.node_count()];
    state.rhs_all(&mut k)?;
    let residual = k.iter().fold(0.0f64, |m, q| m.max((lambda - q).abs()));
    Ok((state.field, residual))
}

/// `lambda` as the time average of the recorded `lambda_hat` over the final
/// third of the run, `w = u(T) - lambda T` normalized.
pub fn lambda_from_flow(trajectory: &Trajectory, state: &FlowState) -> Result<TranslatorSolution> {
    if !trajectory.steady() {
        return Err(Error::NotSteady);
    }
    let end = state.time();
    let from = 2.0 * end / 3.0;
    let tail: Vec<(f64, f64)> = trajectory
        .records
        .iter()
        .filter(|r| r.time >= from)
        .map(|r| (r.time, r.lambda_hat))
        .collect();
    let lambda = match tail.len() {
        0 => return Err(Error::NotSteady),
        1 => tail[0].1,
        _ => {
            let span = tail[tail.len() - 1].0 - tail[0].0;
            let area: f64 = tail.windows(2).map(|p| 0.5 * (p[0].1 + p[1].1) * (p[1].0 - p[0].0)).sum();
            if span > 0.0 {
                area / span
            } else {
                tail[tail.len() - 1].1
            }
        }
    };
    let mut w = state.field.clone();
    w.nodes_mut().iter_mut().for_each(|x| *x -= lambda * end);
    let (w, residual) = normalized_with_residual(&state.model, &state.domain, &state.bc, &state.grid, w, lambda)?;
    Ok(TranslatorSolution::new(Method::ParabolicAverage, lambda, w, residual))
}

/// Outward-signed endpoint slopes `(w'(-L), w'(L))` read from 1-D data.
fn endpoint_slopes(bc: &BoundaryCondition, half_length: f64) -> (f64, f64) {
    let left = bc.boundary_value([-half_length, 0.0]);
    let right = bc.boundary_value([half_length, 0.0]);
    match bc.mode {
        BcMode::ContactAngle => (-left.cos() / left.sin(), right.cos() / right.sin()),
        BcMode::Neumann => (left, -right),
    }
}

const ORACLE_TOL: f64 = 1e-12;

/// Exact 1-D translator: `G(w'(x)) = lambda x + c` with `G' = a`, so
/// `lambda = (G(w'(L)) - G(w'(-L))) / 2L`. The profile is tabulated on
/// `quadrature_n` uniform nodes by inverting `G` and integrating `w'`.
pub fn oracle_1d(
    model: &AnisotropyModel,
    bc: &BoundaryCondition,
    half_length: f64,
    quadrature_n: usize,
) -> Result<TranslatorSolution> {
    if model.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: model.dim(),
        });
    }
    let domain = ConvexDomain::interval(half_length)?;
    bc.validate(&domain)?;
    let grid = IntervalGrid::new(half_length, quadrature_n)?;
    let a = |q: f64| {
        let mut out = [0.0];
        model.coefficient_matrix_into(&[q], &mut out);
        out[0]
    };
    let (s_left, s_right) = endpoint_slopes(bc, half_length);
    let (lo, hi) = (s_left.min(s_right), s_left.max(s_right));
    // a > 0 is what makes G invertible
    for k in 0..=64 {
        let q = lo + (hi - lo) * k as f64 / 64.0;
        if !(a(q) > 0.0) {
            return Err(Error::NonMonotoneG { q });
        }
    }
    let g = |q: f64| integrate(a, 0.0, q, ORACLE_TOL);
    let g_left = g(s_left)?;
    let g_right = g(s_right)?;
    let lambda = (g_right - g_left) / (2.0 * half_length);
    let c = g_left + lambda * half_length;

    let failed = core::cell::Cell::new(false);
    let slope = |x: f64| -> f64 {
        if lo == hi {
            return lo;
        }
        let target = lambda * x + c;
        let f = |q: f64| match g(q) {
            Ok(v) => v - target,
            Err(_) => {
                failed.set(true);
                0.0
            }
        };
        bisect_increasing(f, lo - 1e-9, hi + 1e-9, ORACLE_TOL)
    };
    let (gx, gw) = gauss_legendre(8);
    let mut nodes = vec![0.0; grid.n];
    for i in 1..grid.n {
        let (x0, x1) = (grid.x(i - 1), grid.x(i));
        let (mid, half) = (0.5 * (x0 + x1), 0.5 * (x1 - x0));
        let s: f64 = gx.iter().zip(&gw).map(|(t, wt)| wt * slope(mid + half * t)).sum();
        nodes[i] = nodes[i - 1] + half * s;
    }
    if failed.get() {
        return Err(Error::QuadratureFailure);
    }
    let grid = Grid::Interval(grid);
    let mut w = Field::zeros(&grid);
    w.nodes_mut().copy_from_slice(&nodes);
    let (w, residual) = normalized_with_residual(model, &domain, bc, &grid, w, lambda)?;
    Ok(TranslatorSolution::new(Method::Oracle1D, lambda, w, residual))
}
