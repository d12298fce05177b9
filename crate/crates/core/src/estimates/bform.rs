use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
// Needed for float math under no_std; unused when std is in the graph.
#[allow(unused_imports)]
use num_traits::Float;

use crate::anisotropy::{build_frame, AnisotropyModel, TensorFrame};
use crate::error::{Error, Result};
use crate::evolve::BcMode;
use crate::numerics::min_eigenvalue;

const SQRT_2: f64 = core::f64::consts::SQRT_2;

/// Boundary data at the evaluation point, as the bilinear form needs it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PointData {
    /// `cos(theta)` and `Dh` at the point; `S = Du / v - Dh cos(theta)`.
    ContactAngle { cos_theta: f64, dh: Vec<f64> },
    /// `DQ` at the point, `Q = -phi h`; `DW = Du - DQ`.
    Neumann { dq: Vec<f64> },
}

impl PointData {
    pub fn mode(&self) -> BcMode {
        match self {
            PointData::ContactAngle { .. } => BcMode::ContactAngle,
            PointData::Neumann { .. } => BcMode::Neumann,
        }
    }
}

/// The bilinear form in the coordinates
/// `gamma = (gamma^{11}, .., gamma^{n-1,n-1}, gamma^{1n}, .., gamma^{n-1,n}, gamma^{nn})`.
#[derive(Debug, Clone, PartialEq)]
pub struct BAssembly {
    pub mode: BcMode,
    pub frame: TensorFrame,
    /// Frame coordinates of `S` (contact angle) or `DW` (Neumann).
    pub rho: Vec<f64>,
    /// Frame coordinates of `D^2u S` or `D^2u DW`.
    pub eta: Vec<f64>,
    /// The Hessian in the coordinates above.
    pub gamma: Vec<f64>,
    pub matrix: DMatrix<f64>,
    pub min_eigenvalue: f64,
}

impl BAssembly {
    /// `gamma^T B gamma`.
    pub fn quadratic_form(&self, g: &[f64]) -> f64 {
        let m = self.matrix.nrows();
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                s += g[i] * self.matrix[(i, j)] * g[j];
            }
        }
        s
    }

    /// Whether `rho` satisfies the bounds expected once `|Du| >= 1`:
    /// `|rho^a| <= |cos theta|` and `1/4 <= rho^n <= 2` (contact angle),
    /// `3/4 |Du| <= rho^n <= 5/4 |Du|` (Neumann).
    pub fn rho_bounds_hold(&self, cos_theta: f64) -> bool {
        let n = self.rho.len();
        let rn = self.rho[n - 1];
        match self.mode {
            BcMode::ContactAngle => {
                self.rho[..n - 1].iter().all(|r| r.abs() <= cos_theta.abs() + 1e-12) && (0.25..=2.0).contains(&rn)
            }
            BcMode::Neumann => {
                let s = self.frame.grad_norm();
                rn >= 0.75 * s && rn <= 1.25 * s
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Assembles the bilinear form at one point from `Du`, `D^2u` and the
/// boundary data there.
pub fn assemble_b(
    model: &AnisotropyModel,
    p_prime: &[f64],
    hess_u: &DMatrix<f64>,
    data: &PointData,
) -> Result<BAssembly> {
    let frame = build_frame(model, p_prime, Some(hess_u))?;
    let n = frame.dim();
    let v = frame.v();
    let s_vec: Vec<f64> = match data {
        PointData::ContactAngle { cos_theta, dh } => {
            if dh.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: dh.len() });
            }
            (0..n).map(|i| p_prime[i] / v - dh[i] * cos_theta).collect()
        }
        PointData::Neumann { dq } => {
            if dq.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: dq.len() });
            }
            (0..n).map(|i| p_prime[i] - dq[i]).collect()
        }
    };
    let rho: Vec<f64> = frame.basis.iter().map(|phi| dot(phi, &s_vec)).collect();
    let gm = frame.gamma.as_ref().expect("frame built with a Hessian");
    let nn = n - 1;
    let mut gamma = vec![0.0; 2 * nn + 1];
    for a in 0..nn {
        gamma[a] = gm[(a, a)];
        gamma[nn + a] = gm[(a, nn)];
    }
    gamma[2 * nn] = gm[(nn, nn)];
    let mut eta = vec![0.0; n];
    for a in 0..nn {
        eta[a] = gamma[a] * rho[a] + gamma[nn + a] * rho[nn] / SQRT_2;
        eta[nn] += gamma[nn + a] * rho[a] / SQRT_2;
    }
    eta[nn] += gamma[2 * nn] * rho[nn];

    let matrix = b_matrix(&frame, &rho, data.mode());
    let min_eigenvalue = min_eigenvalue(&matrix);
    Ok(BAssembly {
        mode: data.mode(),
        frame,
        rho,
        eta,
        gamma,
        matrix,
        min_eigenvalue,
    })
}

fn b_matrix(frame: &TensorFrame, rho: &[f64], mode: BcMode) -> DMatrix<f64> {
    let n = frame.dim();
    let nn = n - 1;
    let v = frame.v();
    let tau = &frame.tau;
    let t = |a: usize, b: usize, c: usize| frame.t3.get(a, b, c);
    let rn = rho[nn];
    let dim = 2 * nn + 1;
    let (aa, an, ni) = (|a: usize| a, |a: usize| nn + a, 2 * nn);
    let mut m = DMatrix::zeros(dim, dim);
    // coefficient c of the monomial gamma_i gamma_j
    let mut add = |i: usize, j: usize, c: f64| {
        if i == j {
            m[(i, i)] += c;
        } else {
            m[(i, j)] += 0.5 * c;
            m[(j, i)] += 0.5 * c;
        }
    };
    // second-order coefficients: contact angle carries the 1/v and G weights
    let (w1, w3a, w3n, w4, w5, w7, w8) = match mode {
        BcMode::ContactAngle => {
            let v3 = v * v * v;
            (0.9 / v, 0.5 / v3, 0.5 / v, 0.5 / v3, SQRT_2 / v, 1.0 / v3, SQRT_2 / v3)
        }
        BcMode::Neumann => (0.9, 0.5, 0.5, 0.5, SQRT_2, 1.0, SQRT_2),
    };
    for a in 0..nn {
        add(aa(a), aa(a), w1 * tau[(a, a)] + rho[a] * t(a, a, a));
        add(
            an(a),
            an(a),
            rn * t(a, nn, a) + rho[a] * t(a, nn, nn) + w3a * tau[(a, a)] + w3n * tau[(nn, nn)],
        );
        add(
            aa(a),
            an(a),
            w5 * tau[(a, nn)] + rn / SQRT_2 * t(a, a, a) + rho[a] / SQRT_2 * t(a, a, nn) + SQRT_2 * rho[a] * t(a, nn, a),
        );
        add(
            an(a),
            ni,
            SQRT_2 * rn * t(a, nn, nn) + rn / SQRT_2 * t(nn, nn, a) + rho[a] / SQRT_2 * t(nn, nn, nn) + w8 * tau[(a, nn)],
        );
        add(aa(a), ni, rn * t(a, a, nn) + rho[a] * t(nn, nn, a));
        for b in 0..nn {
            if a == b {
                continue;
            }
            add(aa(a), aa(b), rho[b] * t(a, a, b));
            add(an(a), an(b), rn * t(a, nn, b) + rho[b] * t(a, nn, nn) + w4 * tau[(a, b)]);
            add(
                aa(a),
                an(b),
                rn / SQRT_2 * t(a, a, b) + rho[b] / SQRT_2 * t(a, a, nn) + SQRT_2 * rho[a] * t(b, nn, a),
            );
        }
    }
    add(ni, ni, rn * t(nn, nn, nn) + w7 * tau[(nn, nn)]);
    m
}

/// `T3(D^2u, V)` for `V` in Cartesian coordinates, computed by direct index
/// contraction and by the seven-group decomposition; the two must agree.
pub fn t3_contract(frame: &TensorFrame, v: &[f64]) -> Result<f64> {
    let groups = t3_groups(frame, v)?;
    let grouped: f64 = groups.iter().sum();
    let direct = t3_direct(frame, v)?;
    let scale = groups.iter().map(|g| g.abs()).sum::<f64>().max(direct.abs()).max(1.0);
    if (direct - grouped).abs() > 1e-10 * scale {
        return Err(Error::GroupMismatch { direct, grouped });
    }
    Ok(direct)
}

fn gamma_of(frame: &TensorFrame) -> Result<&DMatrix<f64>> {
    frame
        .gamma
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("frame has no Hessian coordinates".into()))
}

fn t3_direct(frame: &TensorFrame, v: &[f64]) -> Result<f64> {
    let g = gamma_of(frame)?;
    let n = frame.dim();
    let eta: Vec<f64> = frame.basis.iter().map(|phi| dot(phi, v)).collect();
    let mut s = 0.0;
    for a in 0..n {
        for b in 0..n {
            let m = if a == b { g[(a, a)] } else { g[(a, b)] / SQRT_2 };
            for c in 0..n {
                s += frame.t3.get(a, b, c) * m * eta[c];
            }
        }
    }
    Ok(s)
}

/// The seven groups `T3_1 .. T3_7` of the contraction.
pub fn t3_groups(frame: &TensorFrame, v: &[f64]) -> Result<[f64; 7]> {
    let g = gamma_of(frame)?;
    let n = frame.dim();
    let nn = n - 1;
    let t = |a: usize, b: usize, c: usize| frame.t3.get(a, b, c);
    let eta: Vec<f64> = frame.basis.iter().map(|phi| dot(phi, v)).collect();
    let mut out = [0.0; 7];
    for a in 0..nn {
        for b in 0..nn {
            out[0] += g[(a, a)] * eta[b] * t(a, a, b);
            if a != b {
                out[3] += SQRT_2 * g[(a, nn)] * eta[b] * t(a, nn, b);
            }
        }
        out[1] += g[(a, a)] * eta[nn] * t(a, a, nn);
        out[2] += SQRT_2 * g[(a, nn)] * eta[a] * t(a, nn, a);
        out[4] += SQRT_2 * g[(a, nn)] * eta[nn] * t(a, nn, nn);
        out[5] += g[(nn, nn)] * eta[a] * t(nn, nn, a);
    }
    out[6] = g[(nn, nn)] * eta[nn] * t(nn, nn, nn);
    Ok(out)
}
