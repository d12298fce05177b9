use serde::{Deserialize, Serialize};

use crate::anisotropy::{default_directions, verify_decay, AnisotropyModel};
use crate::evolve::{data_norms, BoundaryCondition, DataNorms};
use crate::geometry::{ConvexDomain, Grid};

/// Smallness thresholds for the data and the anisotropy. The defaults are
/// choices of this crate; the theory only asks for "small enough".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub epsilon1: f64,
    pub epsilon2: f64,
    /// Largest admissible boundary-condition residual of the initial data.
    pub compatibility: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            epsilon1: 0.1,
            epsilon2: 0.05,
            compatibility: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// Boundary curvature bound; infinite (serialized as null) on an interval.
    pub k0_measured: f64,
    pub k1: f64,
    pub data: DataNorms,
    pub epsilon1_measured: f64,
    /// `c2 / c1`; `NaN` when the decay measurement failed.
    pub epsilon2_measured: f64,
    pub epsilon2_effective: f64,
    /// Residual of the initial data before and after projection.
    pub compatibility_before: Option<f64>,
    pub compatibility_after: Option<f64>,
    pub thresholds: Thresholds,
    pub domain_pass: bool,
    pub data_pass: bool,
    pub compatibility_pass: bool,
    pub anisotropy_pass: bool,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.domain_pass && self.data_pass && self.compatibility_pass && self.anisotropy_pass
    }

    /// Both smallness conditions hold.
    pub fn small_data(&self) -> bool {
        self.data_pass && self.anisotropy_pass
    }
}

pub const EPSILON2_S_GRID: [f64; 4] = [4.0, 8.0, 16.0, 32.0];

/// Measures every assumption quantity. Never fails: unmeasurable quantities
/// are reported as `NaN` with a failing flag.
pub fn check_assumptions(
    model: &AnisotropyModel,
    domain: &ConvexDomain,
    bc: &BoundaryCondition,
    grid: &Grid,
    compatibility: Option<(f64, f64)>,
    thresholds: Thresholds,
) -> AssumptionReport {
    let data = data_norms(bc, domain, grid);
    let epsilon1 = data.epsilon1();
    let directions = default_directions(model.dim(), 8);
    let (eps2, eps2_eff) = match verify_decay(model, &directions, &EPSILON2_S_GRID) {
        Ok(r) => (r.epsilon2, r.epsilon2_effective),
        Err(_) => (f64::NAN, f64::NAN),
    };
    let compatibility_pass = match compatibility {
        Some((_, after)) => after <= thresholds.compatibility,
        None => true,
    };
    AssumptionReport {
        k0_measured: domain.k0,
        k1: domain.k1,
        data,
        epsilon1_measured: epsilon1,
        epsilon2_measured: eps2,
        epsilon2_effective: eps2_eff,
        compatibility_before: compatibility.map(|c| c.0),
        compatibility_after: compatibility.map(|c| c.1),
        thresholds,
        domain_pass: domain.k0 > 0.0 && domain.k1 > 0.0,
        data_pass: epsilon1 <= thresholds.epsilon1 && epsilon1 < 1.0,
        compatibility_pass,
        anisotropy_pass: eps2 <= thresholds.epsilon2,
    }
}
