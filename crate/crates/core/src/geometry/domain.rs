use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainKind {
    Interval { half_length: f64 },
    Disk { radius: f64 },
}

/// Strictly convex domain together with the bounds of its `h` function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexDomain {
    pub kind: DomainKind,
    /// Lower bound for the boundary curvature. `f64::INFINITY` for an interval,
    /// whose boundary is two points.
    pub k0: f64,
    /// `D^2 h >= k1 I`.
    pub k1: f64,
    /// `|D^2 h| <= m1` and `|D^3 h| <= m2`. Recorded only.
    pub m1: f64,
    pub m2: f64,
}

/// `(h, Dh, D^2h)` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct HValue {
    pub h: f64,
    pub dh: Vec<f64>,
    pub d2h: DMatrix<f64>,
}

impl ConvexDomain {
    pub fn interval(half_length: f64) -> Result<Self> {
        if !(half_length > 0.0) || !half_length.is_finite() {
            return Err(Error::InvalidInput("interval half length must be positive".into()));
        }
        Ok(Self {
            kind: DomainKind::Interval { half_length },
            k0: f64::INFINITY,
            k1: 1.0 / half_length,
            m1: 1.0 / half_length,
            m2: 0.0,
        })
    }

    pub fn disk(radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput("disk radius must be positive".into()));
        }
        Ok(Self {
            kind: DomainKind::Disk { radius },
            k0: 1.0 / radius,
            k1: 1.0 / radius,
            m1: 1.0 / radius,
            m2: 0.0,
        })
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            DomainKind::Interval { .. } => 1,
            DomainKind::Disk { .. } => 2,
        }
    }

    /// Half length or radius.
    pub fn size(&self) -> f64 {
        match self.kind {
            DomainKind::Interval { half_length } => half_length,
            DomainKind::Disk { radius } => radius,
        }
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        if point.len() != self.dim() {
            return false;
        }
        let r2: f64 = point.iter().map(|x| x * x).sum();
        let size = self.size();
        r2 <= size * size * (1.0 + 1e-12)
    }
}

/// `h(x) = (|x|^2 - R^2) / (2R)`: vanishes on the boundary, has inward normal
/// derivative `-1`, and `D^2h = I / R`.
pub fn h_function(domain: &ConvexDomain, point: &[f64]) -> Result<HValue> {
    if !domain.contains(point) {
        return Err(Error::OutsideDomain {
            point: point.to_vec(),
        });
    }
    let n = domain.dim();
    let size = domain.size();
    let (h, dh) = h_at(size, point);
    Ok(HValue {
        h,
        dh,
        d2h: DMatrix::identity(n, n) / size,
    })
}

pub(crate) fn h_at(size: f64, point: &[f64]) -> (f64, Vec<f64>) {
    let r2: f64 = point.iter().map(|x| x * x).sum();
    let mut dh = vec![0.0; point.len()];
    for (d, x) in dh.iter_mut().zip(point) {
        *d = x / size;
    }
    ((r2 - size * size) / (2.0 * size), dh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn disk_boundary_values() {
        let d = ConvexDomain::disk(1.0).unwrap();
        let hv = h_function(&d, &[1.0, 0.0]).unwrap();
        assert_eq!(hv.h, 0.0);
        assert_eq!(hv.dh, vec![1.0, 0.0]);
        let inward = [-1.0, 0.0];
        let dn: f64 = hv.dh.iter().zip(inward).map(|(a, b)| a * b).sum();
        assert_eq!(dn, -1.0);
        let c = h_function(&d, &[0.0, 0.0]).unwrap();
        assert_eq!(c.h, -0.5);
    }

    #[test]
    fn disk_convexity_constant() {
        let d = ConvexDomain::disk(2.0).unwrap();
        let hv = h_function(&d, &[0.3, -1.1]).unwrap();
        assert_relative_eq!(hv.d2h[(0, 0)], 0.5, epsilon = 1e-12);
        assert_eq!(d.k1, 0.5);
        assert_eq!(d.k0, 0.5);
    }

    #[test]
    fn interval_has_infinite_k0() {
        let d = ConvexDomain::interval(1.0).unwrap();
        assert!(d.k0.is_infinite());
        let hv = h_function(&d, &[-1.0]).unwrap();
        assert_eq!(hv.h, 0.0);
        // inward normal at the left end is +1
        assert_eq!(hv.dh[0], -1.0);
    }

    #[test]
    fn outside_points_rejected() {
        let d = ConvexDomain::disk(1.0).unwrap();
        assert!(matches!(h_function(&d, &[1.0, 0.5]), Err(Error::OutsideDomain { .. })));
    }
}
