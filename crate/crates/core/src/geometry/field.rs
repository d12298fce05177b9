use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::{Error, Result};

/// Nodal values plus ghost (and auxiliary) slots, with the time they refer to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    values: Vec<f64>,
    pub time: f64,
    node_count: usize,
    ghosts_closed: bool,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            values: vec![0.0; grid.storage_len()],
            time: 0.0,
            node_count: grid.node_count(),
            ghosts_closed: false,
        }
    }

    /// Samples `f` at the nodes; ghosts are left stale.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let mut field = Self::zeros(grid);
        for i in 0..field.node_count {
            field.values[i] = f(grid.position(i));
        }
        field
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Node values only.
    pub fn nodes(&self) -> &[f64] {
        &self.values[..self.node_count]
    }

    /// Mutable node values; marks the ghosts stale.
    pub fn nodes_mut(&mut self) -> &mut [f64] {
        self.ghosts_closed = false;
        &mut self.values[..self.node_count]
    }

    /// Full storage including ghost slots.
    pub fn storage(&self) -> &[f64] {
        &self.values
    }

    /// Full mutable storage for ghost closure. The caller marks the result
    /// with [`Field::mark_closed`].
    pub fn storage_mut(&mut self) -> &mut [f64] {
        self.ghosts_closed = false;
        &mut self.values
    }

    pub fn mark_closed(&mut self) {
        self.ghosts_closed = true;
    }

    pub fn ghosts_closed(&self) -> bool {
        self.ghosts_closed
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.nodes().iter().position(|x| !x.is_finite()) {
            Some(node) => Err(Error::NonFiniteField { node }),
            None => Ok(()),
        }
    }

    pub fn min(&self) -> f64 {
        self.nodes().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.nodes().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn oscillation(&self) -> f64 {
        self.max() - self.min()
    }
}

/// Cartesian gradient and Hessian at `node` from second-order central differences.
pub fn discrete_derivatives(grid: &Grid, field: &Field, node: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if !field.ghosts_closed() {
        return Err(Error::GhostNotClosed);
    }
    if node >= grid.node_count() {
        return Err(Error::InvalidInput("node index out of range".into()));
    }
    let l = grid.local(field.storage(), node);
    Ok(match grid.dim() {
        1 => (vec![l.du[0]], DMatrix::from_element(1, 1, l.d2u[0])),
        _ => (
            vec![l.du[0], l.du[1]],
            DMatrix::from_row_slice(2, 2, &[l.d2u[0], l.d2u[1], l.d2u[1], l.d2u[2]]),
        ),
    })
}
