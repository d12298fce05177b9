use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
// Needed for float math under no_std; unused when std is in the graph.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{ConvexDomain, DomainKind, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcMode {
    /// `D_N u = -cos(theta) sqrt(1 + |Du|^2)`, data is `theta`.
    ContactAngle,
    /// `D_N u = phi`, data is `phi`.
    Neumann,
}

/// Boundary scalar: a constant plus up to four Fourier modes in the boundary
/// angle (disk), or one value per endpoint (interval).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryData {
    Fourier {
        constant: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    Endpoints { left: f64, right: f64 },
}

pub const MAX_FOURIER_MODES: usize = 4;

/// Value, gradient and Hessian `(xx, xy, yy)` of the data extended into the
/// domain. In 1-D only the first components are meaningful.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Extension {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCondition {
    pub mode: BcMode,
    pub data: BoundaryData,
}

impl BoundaryCondition {
    pub fn contact_angle(data: BoundaryData) -> Self {
        Self {
            mode: BcMode::ContactAngle,
            data,
        }
    }

    pub fn neumann(data: BoundaryData) -> Self {
        Self {
            mode: BcMode::Neumann,
            data,
        }
    }

    /// Constant data, usable on either domain.
    pub fn constant(mode: BcMode, value: f64) -> Self {
        Self {
            mode,
            data: BoundaryData::Fourier {
                constant: value,
                cos: Vec::new(),
                sin: Vec::new(),
            },
        }
    }

    pub fn validate(&self, domain: &ConvexDomain) -> Result<()> {
        match (&self.data, domain.kind) {
            (BoundaryData::Fourier { cos, sin, .. }, _) => {
                if cos.len() > MAX_FOURIER_MODES || sin.len() > MAX_FOURIER_MODES {
                    return Err(Error::InvalidInput("at most four Fourier modes are supported".into()));
                }
                if domain.dim() == 1 && (cos.iter().chain(sin).any(|c| *c != 0.0)) {
                    return Err(Error::InvalidInput("Fourier modes need a disk domain".into()));
                }
            }
            (BoundaryData::Endpoints { .. }, DomainKind::Disk { .. }) => {
                return Err(Error::InvalidInput("endpoint data needs an interval domain".into()));
            }
            _ => {}
        }
        let all = self.boundary_samples(domain, 256);
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("boundary data must be finite".into()));
        }
        if self.mode == BcMode::ContactAngle {
            for &theta in &all {
                if !(theta.sin() > 0.0) || theta.cos().abs() >= 1.0 {
                    return Err(Error::AngleOutOfRange { cos_theta: theta.cos() });
                }
            }
        }
        Ok(())
    }

    /// Data at a boundary point.
    pub fn boundary_value(&self, point: [f64; 2]) -> f64 {
        match &self.data {
            BoundaryData::Endpoints { left, right } => {
                if point[0] < 0.0 {
                    *left
                } else {
                    *right
                }
            }
            BoundaryData::Fourier { constant, cos, sin } => {
                let w = point[1].atan2(point[0]);
                let mut s = *constant;
                for (m, a) in cos.iter().enumerate() {
                    s += a * ((m + 1) as f64 * w).cos();
                }
                for (m, b) in sin.iter().enumerate() {
                    s += b * ((m + 1) as f64 * w).sin();
                }
                s
            }
        }
    }

    /// Harmonic extension on the disk, linear interpolation on the interval.
    pub fn extension(&self, domain: &ConvexDomain, point: [f64; 2]) -> Extension {
        let size = domain.size();
        match &self.data {
            BoundaryData::Endpoints { left, right } => {
                let slope = (right - left) / (2.0 * size);
                Extension {
                    value: left + slope * (point[0] + size),
                    grad: [slope, 0.0],
                    hess: [0.0; 3],
                }
            }
            BoundaryData::Fourier { constant, cos, sin } => {
                let mut e = Extension {
                    value: *constant,
                    ..Extension::default()
                };
                if domain.dim() == 1 {
                    return e;
                }
                // Re and Im of (z / R)^m and of its first two complex derivatives
                let z = (point[0] / size, point[1] / size);
                let modes = cos.len().max(sin.len());
                let mut pw = vec![(1.0, 0.0); modes + 1];
                for m in 1..=modes {
                    let (a, b) = pw[m - 1];
                    pw[m] = (a * z.0 - b * z.1, a * z.1 + b * z.0);
                }
                for m in 1..=modes {
                    let a = cos.get(m - 1).copied().unwrap_or(0.0);
                    let b = sin.get(m - 1).copied().unwrap_or(0.0);
                    let mf = m as f64;
                    let (re, im) = pw[m];
                    let (re1, im1) = pw[m - 1];
                    let (re2, im2) = if m >= 2 { pw[m - 2] } else { (0.0, 0.0) };
                    let c1 = mf / size;
                    let c2 = mf * (mf - 1.0) / (size * size);
                    e.value += a * re + b * im;
                    e.grad[0] += c1 * (a * re1 + b * im1);
                    e.grad[1] += c1 * (-a * im1 + b * re1);
                    e.hess[0] += c2 * (a * re2 + b * im2);
                    e.hess[1] += c2 * (-a * im2 + b * re2);
                    e.hess[2] -= c2 * (a * re2 + b * im2);
                }
                e
            }
        }
    }

    /// `g h` with `g = cot(theta)` or `g = -phi` on the extended data and
    /// `h = (|x|^2 - R^2) / 2R`. On the boundary `h = 0` and `Dh` is the unit
    /// outward normal, so this profile satisfies either condition exactly.
    pub fn compatible_value(&self, domain: &ConvexDomain, point: [f64; 2]) -> f64 {
        let size = domain.size();
        let r2 = match domain.dim() {
            1 => point[0] * point[0],
            _ => point[0] * point[0] + point[1] * point[1],
        };
        let h = (r2 - size * size) / (2.0 * size);
        let d = self.extension(domain, point).value;
        let g = match self.mode {
            BcMode::ContactAngle => d.cos() / d.sin(),
            BcMode::Neumann => -d,
        };
        g * h
    }

    /// Data at `count` equally spaced boundary angles, or at both endpoints.
    pub fn boundary_samples(&self, domain: &ConvexDomain, count: usize) -> Vec<f64> {
        let size = domain.size();
        if domain.dim() == 1 {
            return vec![self.boundary_value([-size, 0.0]), self.boundary_value([size, 0.0])];
        }
        (0..count)
            .map(|k| {
                let w = 2.0 * core::f64::consts::PI * k as f64 / count as f64;
                self.boundary_value([size * w.cos(), size * w.sin()])
            })
            .collect()
    }
}

/// Sizes of the boundary data relevant to the smallness assumptions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataNorms {
    /// `sup |cos theta|` (contact angle) or `sup |phi|` (Neumann).
    pub sup_value: f64,
    pub sup_grad: f64,
    pub sup_hess: f64,
}

impl DataNorms {
    /// `epsilon_1` as measured: the largest of the three.
    pub fn epsilon1(&self) -> f64 {
        self.sup_value.max(self.sup_grad).max(self.sup_hess)
    }
}

/// Measures the extended data over the grid nodes.
pub fn data_norms(bc: &BoundaryCondition, domain: &ConvexDomain, grid: &Grid) -> DataNorms {
    let mut out = DataNorms {
        sup_value: 0.0,
        sup_grad: 0.0,
        sup_hess: 0.0,
    };
    for i in 0..grid.node_count() {
        let e = bc.extension(domain, grid.position(i));
        let value = match bc.mode {
            BcMode::ContactAngle => e.value.cos(),
            BcMode::Neumann => e.value,
        };
        out.sup_value = out.sup_value.max(value.abs());
        out.sup_grad = out.sup_grad.max(e.grad[0].hypot(e.grad[1]));
        let h = crate::numerics::max_eig_2x2(e.hess[0], e.hess[1], e.hess[2])
            .abs()
            .max(crate::numerics::max_eig_2x2(-e.hess[0], -e.hess[1], -e.hess[2]).abs());
        out.sup_hess = out.sup_hess.max(h);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn harmonic_extension_matches_boundary_and_derivatives() {
        let d = ConvexDomain::disk(2.0).unwrap();
        let bc = BoundaryCondition::neumann(BoundaryData::Fourier {
            constant: 0.1,
            cos: vec![0.03, 0.0, -0.02],
            sin: vec![0.0, 0.05],
        });
        let w: f64 = 0.7;
        let p = [2.0 * w.cos(), 2.0 * w.sin()];
        assert_relative_eq!(bc.extension(&d, p).value, bc.boundary_value(p), epsilon = 1e-14);
        let x = [0.4, -0.9];
        let e = bc.extension(&d, x);
        let h = 1e-5;
        let f = |a: f64, b: f64| bc.extension(&d, [a, b]).value;
        assert_relative_eq!(e.grad[0], (f(x[0] + h, x[1]) - f(x[0] - h, x[1])) / (2.0 * h), epsilon = 1e-8);
        assert_relative_eq!(e.grad[1], (f(x[0], x[1] + h) - f(x[0], x[1] - h)) / (2.0 * h), epsilon = 1e-8);
        let g = |a: f64, b: f64| bc.extension(&d, [a, b]).grad;
        assert_relative_eq!(e.hess[0], (g(x[0] + h, x[1])[0] - g(x[0] - h, x[1])[0]) / (2.0 * h), epsilon = 1e-7);
        assert_relative_eq!(e.hess[1], (g(x[0] + h, x[1])[1] - g(x[0] - h, x[1])[1]) / (2.0 * h), epsilon = 1e-7);
        assert_relative_eq!(e.hess[2], (g(x[0], x[1] + h)[1] - g(x[0], x[1] - h)[1]) / (2.0 * h), epsilon = 1e-7);
    }

    #[test]
    fn angles_outside_open_interval_rejected() {
        let d = ConvexDomain::disk(1.0).unwrap();
        let bad = BoundaryCondition::constant(BcMode::ContactAngle, 0.0);
        assert!(matches!(bad.validate(&d), Err(Error::AngleOutOfRange { .. })));
        let ok = BoundaryCondition::constant(BcMode::ContactAngle, 1.2);
        assert!(ok.validate(&d).is_ok());
        let i = ConvexDomain::interval(1.0).unwrap();
        let e = BoundaryCondition::contact_angle(BoundaryData::Endpoints { left: 1.0, right: 4.0 });
        assert!(e.validate(&i).is_err());
    }
}
