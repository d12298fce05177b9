use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
// Needed for float math under no_std; unused when std is in the graph.
#[allow(unused_imports)]
use num_traits::Float;

use super::bc::{BcMode, BoundaryCondition};
use crate::anisotropy::AnisotropyModel;
use crate::error::{Error, Result};
use crate::geometry::{ConvexDomain, DomainKind, Field, Grid, Local};
use crate::numerics::max_eig_2x2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Integrator {
    Euler,
    Heun,
    /// First-order Runge-Kutta-Legendre super step of `stages` stages; the
    /// step is `(stages^2 + stages) / 2` explicit steps long.
    Rkl1 { stages: u32 },
}

impl Integrator {
    fn step_factor(&self) -> f64 {
        match *self {
            Integrator::Euler | Integrator::Heun => 1.0,
            Integrator::Rkl1 { stages } => {
                let s = stages as f64;
                0.5 * (s * s + s)
            }
        }
    }
}

fn default_record_every() -> usize {
    10
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub cfl_safety: f64,
    pub t_end: f64,
    pub translate_tol: f64,
    pub integrator: Integrator,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// Stop as soon as the translation test passes. Off, the run always
    /// reaches `t_end`.
    #[serde(default = "default_true")]
    pub stop_on_steady: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cfl_safety: 0.4,
            t_end: 1.0,
            translate_tol: 1e-6,
            integrator: Integrator::Euler,
            record_every: default_record_every(),
            stop_on_steady: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidInput("cfl_safety must lie in (0, 1]".into()));
        }
        if !(self.t_end >= 0.0) || !(self.translate_tol > 0.0) {
            return Err(Error::InvalidInput("t_end and translate_tol must be positive".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidInput("record_every must be at least 1".into()));
        }
        if let Integrator::Rkl1 { stages } = self.integrator {
            if stages == 0 {
                return Err(Error::InvalidInput("Rkl1 needs at least one stage".into()));
            }
        }
        Ok(())
    }
}

/// Right-hand side actually integrated: the flow, or the flow damped by
/// `-epsilon v`, optionally with its mean removed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Operator {
    Flow,
    Damped { epsilon: f64, project: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub dt: f64,
    /// Largest eigenvalue of `a(Du)` over the nodes at the start of the step.
    pub lambda_max: f64,
    /// Statistics of the right-hand side at the start of the step: weighted
    /// mean, `sup |rate - mean|` and `sup |rate|`.
    pub rate_mean: f64,
    pub rate_spread: f64,
    pub rate_sup: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Work {
    locals: Vec<Local>,
    k: Vec<f64>,
    k2: Vec<f64>,
    y0: Vec<f64>,
    y1: Vec<f64>,
    y2: Vec<f64>,
}

/// Discrete field plus everything needed to advance it.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub field: Field,
    pub bc: BoundaryCondition,
    pub model: AnisotropyModel,
    pub domain: ConvexDomain,
    pub grid: Grid,
    pub step_count: u64,
    /// Outward slope data per boundary slot: `cot theta` or `-phi` on the disk,
    /// the endpoint `u_x` on the interval.
    boundary_slope: Vec<f64>,
    weights: Vec<f64>,
    area: f64,
    work: Work,
}

impl FlowState {
    pub fn new(
        model: AnisotropyModel,
        domain: ConvexDomain,
        grid: Grid,
        bc: BoundaryCondition,
        field: Field,
    ) -> Result<Self> {
        let n = domain.dim();
        if model.dim() != n || grid.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: if model.dim() != n { model.dim() } else { grid.dim() },
            });
        }
        let grid_size = match &grid {
            Grid::Interval(g) => g.half_length,
            Grid::Polar(g) => g.radius,
        };
        if (grid_size - domain.size()).abs() > 1e-12 * domain.size() {
            return Err(Error::InvalidInput("grid and domain sizes differ".into()));
        }
        if field.storage().len() != grid.storage_len() {
            return Err(Error::DimensionMismatch {
                expected: grid.storage_len(),
                got: field.storage().len(),
            });
        }
        bc.validate(&domain)?;
        field.check_finite()?;

        let boundary_slope = match (&grid, domain.kind) {
            (Grid::Interval(_), DomainKind::Interval { half_length }) => {
                let left = bc.boundary_value([-half_length, 0.0]);
                let right = bc.boundary_value([half_length, 0.0]);
                match bc.mode {
                    BcMode::ContactAngle => vec![-left.cos() / left.sin(), right.cos() / right.sin()],
                    BcMode::Neumann => vec![left, -right],
                }
            }
            (Grid::Polar(g), _) => g
                .ring_range(g.n_r - 1)
                .map(|i| {
                    let d = bc.boundary_value(g.position(i));
                    match bc.mode {
                        BcMode::ContactAngle => d.cos() / d.sin(),
                        BcMode::Neumann => -d,
                    }
                })
                .collect(),
            _ => return Err(Error::InvalidInput("grid does not match the domain kind".into())),
        };
        let weights = grid.weights();
        let area = weights.iter().sum();
        let nodes = grid.node_count();
        let mut state = Self {
            field,
            bc,
            model,
            domain,
            grid,
            step_count: 0,
            boundary_slope,
            weights,
            area,
            work: Work {
                locals: vec![Local::default(); nodes],
                ..Work::default()
            },
        };
        state.close_ghosts()?;
        Ok(state)
    }

    pub fn time(&self) -> f64 {
        self.field.time
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weighted spatial mean of a nodal quantity.
    pub fn mean(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>() / self.area
    }

    /// Fills the ghost slots so that central differences at the boundary
    /// satisfy the boundary condition.
    pub fn close_ghosts(&mut self) -> Result<()> {
        let scale = self.bc.mode == BcMode::ContactAngle;
        match &self.grid {
            Grid::Interval(g) => {
                let v = self.field.storage_mut();
                let n = g.n;
                v[g.left_ghost()] = v[1] - 2.0 * g.dx * self.boundary_slope[0];
                v[g.right_ghost()] = v[n - 2] + 2.0 * g.dx * self.boundary_slope[1];
            }
            Grid::Polar(g) => {
                let (south, ut) = g.boundary_rows(self.field.storage());
                let inv_r = 1.0 / g.radius;
                let ghosts = g.ghost_range();
                let v = self.field.storage_mut();
                for (k, slot) in ghosts.enumerate() {
                    let c = self.boundary_slope[k];
                    let ur = if scale {
                        let t = ut[k] * inv_r;
                        c * (1.0 + t * t).sqrt()
                    } else {
                        c
                    };
                    v[slot] = south[k] + 2.0 * g.dr * ur;
                }
            }
        }
        self.field.mark_closed();
        Ok(())
    }

    /// `tr(a(Du) D^2u)` at one node. Ghosts must be closed.
    pub fn rhs(&self, node: usize) -> Result<f64> {
        if !self.field.ghosts_closed() {
            return Err(Error::GhostNotClosed);
        }
        let l = self.grid.local(self.field.storage(), node);
        let (value, _) = self.operator_at(&l);
        if !value.is_finite() {
            return Err(Error::NonFiniteField { node });
        }
        Ok(value)
    }

    #[inline]
    fn operator_at(&self, l: &Local) -> (f64, f64) {
        let n = self.grid.dim();
        let mut a = [0.0; 4];
        self.model.coefficient_matrix_into(&l.du[..n], &mut a[..n * n]);
        if n == 1 {
            (a[0] * l.d2u[0], a[0])
        } else {
            let value = a[0] * l.d2u[0] + (a[1] + a[2]) * l.d2u[1] + a[3] * l.d2u[2];
            (value, max_eig_2x2(a[0], 0.5 * (a[1] + a[2]), a[3]))
        }
    }

    /// Closes the ghosts, then evaluates the operator at every node into
    /// `out`. Returns the largest coefficient eigenvalue.
    pub fn rhs_all(&mut self, out: &mut [f64]) -> Result<f64> {
        self.close_ghosts()?;
        let mut locals = core::mem::take(&mut self.work.locals);
        self.grid.derivatives_all(self.field.storage(), &mut locals);
        let mut lam = 0.0f64;
        let mut bad = None;
        for (i, l) in locals.iter().enumerate() {
            let (value, top) = self.operator_at(l);
            if !value.is_finite() && bad.is_none() {
                bad = Some(i);
            }
            out[i] = value;
            lam = lam.max(top);
        }
        self.work.locals = locals;
        match bad {
            Some(node) => Err(Error::NonFiniteField { node }),
            None => Ok(lam),
        }
    }

    /// Derivatives at every node from the current storage (ghosts closed first).
    pub fn derivatives(&mut self) -> Result<Vec<Local>> {
        self.close_ghosts()?;
        let mut out = vec![Local::default(); self.grid.node_count()];
        self.grid.derivatives_all(self.field.storage(), &mut out);
        Ok(out)
    }

    pub(crate) fn evaluate(&mut self, op: Operator, out: &mut [f64]) -> Result<f64> {
        let lam = self.rhs_all(out)?;
        if let Operator::Damped { epsilon, project } = op {
            if project {
                let m = self.mean(out);
                out.iter_mut().for_each(|x| *x -= m);
            }
            for (o, v) in out.iter_mut().zip(self.field.nodes()) {
                *o -= epsilon * v;
            }
        }
        Ok(lam)
    }

    /// Explicit Euler limit `sigma delta^2 / (2 n Lambda + epsilon delta^2)`.
    pub fn explicit_dt(&self, sigma: f64, lambda_max: f64, epsilon: f64) -> f64 {
        let d = self.grid.delta_min();
        let n = self.grid.dim() as f64;
        sigma * d * d / (2.0 * n * lambda_max + epsilon * d * d)
    }

    fn set_nodes(&mut self, values: &[f64]) {
        self.field.nodes_mut().copy_from_slice(values);
    }

    /// One step of `integrator` for `op`, never passing `t_limit`.
    pub(crate) fn advance(
        &mut self,
        op: Operator,
        sigma: f64,
        integrator: Integrator,
        t_limit: Option<f64>,
        frozen_dt: Option<f64>,
    ) -> Result<StepInfo> {
        let nodes = self.grid.node_count();
        let mut w = core::mem::take(&mut self.work);
        for buf in [&mut w.k, &mut w.k2, &mut w.y0, &mut w.y1, &mut w.y2] {
            buf.resize(nodes, 0.0);
        }
        self.work.locals = core::mem::take(&mut w.locals);
        let result = self.advance_with(op, sigma, integrator, t_limit, frozen_dt, &mut w);
        w.locals = core::mem::take(&mut self.work.locals);
        self.work = w;
        result
    }

    fn advance_with(
        &mut self,
        op: Operator,
        sigma: f64,
        integrator: Integrator,
        t_limit: Option<f64>,
        frozen_dt: Option<f64>,
        w: &mut Work,
    ) -> Result<StepInfo> {
        let lam = self.evaluate(op, &mut w.k)?;
        let rate_mean = self.mean(&w.k);
        let (rate_spread, rate_sup) = w
            .k
            .iter()
            .fold((0.0f64, 0.0f64), |(a, b), x| (a.max((x - rate_mean).abs()), b.max(x.abs())));
        let epsilon = match op {
            Operator::Flow => 0.0,
            Operator::Damped { epsilon, .. } => epsilon,
        };
        let mut dt = match frozen_dt {
            Some(dt) => dt,
            None => self.explicit_dt(sigma, lam, epsilon) * integrator.step_factor(),
        };
        if !(dt >= 1e-14) {
            return Err(Error::TimestepUnderflow { dt });
        }
        if let Some(limit) = t_limit {
            dt = dt.min(limit - self.field.time);
        }
        w.y0.copy_from_slice(self.field.nodes());
        match integrator {
            Integrator::Euler => {
                for i in 0..w.y0.len() {
                    w.y1[i] = w.y0[i] + dt * w.k[i];
                }
                self.set_nodes(&w.y1);
            }
            Integrator::Heun => {
                for i in 0..w.y0.len() {
                    w.y1[i] = w.y0[i] + dt * w.k[i];
                }
                self.set_nodes(&w.y1);
                self.evaluate(op, &mut w.k2)?;
                for i in 0..w.y0.len() {
                    w.y1[i] = w.y0[i] + 0.5 * dt * (w.k[i] + w.k2[i]);
                }
                self.set_nodes(&w.y1);
            }
            Integrator::Rkl1 { stages } => {
                let s = stages as f64;
                let w1 = 2.0 / (s * s + s);
                // y0 = Y_{j-2}, y1 = Y_{j-1}, y2 = Y_j
                for i in 0..w.y0.len() {
                    w.y1[i] = w.y0[i] + w1 * dt * w.k[i];
                }
                for j in 2..=stages {
                    let jf = j as f64;
                    let mu = (2.0 * jf - 1.0) / jf;
                    let nu = (1.0 - jf) / jf;
                    self.set_nodes(&w.y1);
                    self.evaluate(op, &mut w.k)?;
                    for i in 0..w.y0.len() {
                        w.y2[i] = mu * w.y1[i] + nu * w.y0[i] + mu * w1 * dt * w.k[i];
                    }
                    core::mem::swap(&mut w.y0, &mut w.y1);
                    core::mem::swap(&mut w.y1, &mut w.y2);
                }
                self.set_nodes(&w.y1);
            }
        }
        self.field.check_finite()?;
        self.field.time += dt;
        self.step_count += 1;
        self.close_ghosts()?;
        Ok(StepInfo {
            dt,
            lambda_max: lam,
            rate_mean,
            rate_spread,
            rate_sup,
        })
    }

    /// One flow step; never passes `config.t_end`.
    pub fn step(&mut self, config: &SolverConfig) -> Result<StepInfo> {
        self.advance(
            Operator::Flow,
            config.cfl_safety,
            config.integrator,
            Some(config.t_end),
            None,
        )
    }

    /// Largest violation of the boundary condition by the nodal values,
    /// with the normal derivative taken one-sided from inside.
    pub fn compatibility_residual(&self) -> f64 {
        let v = self.field.storage();
        let contact = self.bc.mode == BcMode::ContactAngle;
        // `un` is the outward normal derivative, `slope` the stored outward data
        let residual = |un: f64, slope: f64, t: f64| {
            if contact {
                let cos = slope / (1.0 + slope * slope).sqrt();
                (un - cos * (1.0 + un * un + t * t).sqrt()).abs()
            } else {
                (un - slope).abs()
            }
        };
        match &self.grid {
            Grid::Interval(g) => {
                let n = g.n;
                let left = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * g.dx);
                let right = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * g.dx);
                // the left slope is stored as u_x, the outward derivative is -u_x
                residual(-left, -self.boundary_slope[0], 0.0).max(residual(right, self.boundary_slope[1], 0.0))
            }
            Grid::Polar(g) => {
                let b = g.n_r - 1;
                let c = &v[g.ring_range(b)];
                let s1 = g.sample_ring(v, b - 1, b);
                let s2 = g.sample_ring(v, b - 2, b);
                let (_, ut) = g.boundary_rows(v);
                let mut worst = 0.0f64;
                for k in 0..c.len() {
                    let ur = (3.0 * c[k] - 4.0 * s1[k] + s2[k]) / (2.0 * g.dr);
                    worst = worst.max(residual(ur, self.boundary_slope[k], ut[k] / g.radius));
                }
                worst
            }
        }
    }

    /// Relaxes incompatible initial data with `steps` Euler steps at the
    /// step size frozen from the first evaluation, then resets the clock.
    /// Returns the compatibility residual before and after.
    pub fn project_initial(&mut self, sigma: f64, steps: usize) -> Result<(f64, f64)> {
        let before = self.compatibility_residual();
        let mut k = vec![0.0; self.grid.node_count()];
        let lam = self.rhs_all(&mut k)?;
        let dt = self.explicit_dt(sigma, lam, 0.0);
        for _ in 0..steps {
            self.advance(Operator::Flow, sigma, Integrator::Euler, None, Some(dt))?;
        }
        self.field.time = 0.0;
        self.step_count = 0;
        Ok((before, self.compatibility_residual()))
    }
}
