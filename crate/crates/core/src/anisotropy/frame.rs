use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::model::{extend, norm, AnisotropyModel, Tensor3};
use crate::error::{Error, Result};

/// `p' = Du`, `p = (p', -1)`, `v = |p|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedGradient {
    pub p_prime: Vec<f64>,
    pub p: Vec<f64>,
    pub v: f64,
}

impl ExtendedGradient {
    pub fn new(p_prime: &[f64]) -> Self {
        let p = extend(p_prime);
        let v = norm(&p);
        Self {
            p_prime: p_prime.to_vec(),
            p,
            v,
        }
    }
}

/// Adapted orthonormal frame with the tensors expressed in it.
///
/// Index `n - 1` is always the gradient direction.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorFrame {
    pub gradient: ExtendedGradient,
    /// `basis[a]` is `phi^{a+1}`.
    pub basis: Vec<Vec<f64>>,
    pub tau: DMatrix<f64>,
    /// `t3.get(a, b, c) = T3(phi^a, phi^b, phi^c)`.
    pub t3: Tensor3,
    /// Symmetric matrix of Hessian coordinates: diagonal `gamma^{aa}`,
    /// off-diagonal `sqrt(2) phi^a . D^2u phi^b`.
    pub gamma: Option<DMatrix<f64>>,
}

impl TensorFrame {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn v(&self) -> f64 {
        self.gradient.v
    }

    pub fn grad_norm(&self) -> f64 {
        norm(&self.gradient.p_prime)
    }
}

/// `a = v [D^2F]_{n x n}` at `(p', -1)`.
pub fn coefficient_matrix(model: &AnisotropyModel, p_prime: &[f64]) -> Result<DMatrix<f64>> {
    let n = model.dim();
    if p_prime.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p_prime.len(),
        });
    }
    let mut out = vec![0.0; n * n];
    model.coefficient_matrix_into(p_prime, &mut out);
    Ok(DMatrix::from_row_slice(n, n, &out))
}

/// `T3_{ijl} = -|p| D^3F_{ijl} - D^2F_{ij} p_l / |p|` at `(p', -1)`, `i, j, l < n`.
pub fn t3_tensor(model: &AnisotropyModel, p_prime: &[f64]) -> Result<Tensor3> {
    let n = model.dim();
    if p_prime.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p_prime.len(),
        });
    }
    let p = extend(p_prime);
    let v = norm(&p);
    let d3 = model.third(&p)?;
    let d2 = model.hessian(&p)?;
    let mut t = Tensor3::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                t.set(i, j, l, -v * d3.get(i, j, l) - d2[(i, j)] * p[l] / v);
            }
        }
    }
    Ok(t)
}

/// Gram-Schmidt completion of `e_n` to an orthonormal basis; the coordinate
/// axis most parallel to `e_n` is skipped. Returns the `n - 1` new vectors.
fn complete_basis(e_n: &[f64]) -> Vec<Vec<f64>> {
    let n = e_n.len();
    let mut skip = 0;
    for i in 1..n {
        if e_n[i].abs() > e_n[skip].abs() {
            skip = i;
        }
    }
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
    for axis in 0..n {
        if axis == skip {
            continue;
        }
        let mut w = vec![0.0; n];
        w[axis] = 1.0;
        for _ in 0..2 {
            for q in core::iter::once(e_n).chain(out.iter().map(|v| v.as_slice())) {
                let d: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
                w.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
            }
        }
        let len = norm(&w);
        w.iter_mut().for_each(|a| *a /= len);
        out.push(w);
    }
    out
}

fn normalize_sign(v: &mut [f64]) {
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Eigenvectors of `hess` restricted to the complement of `e_n`, ascending
/// eigenvalue, ties broken lexicographically on components.
fn hessian_basis(e_n: &[f64], hess: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let n = e_n.len();
    let seed = complete_basis(e_n);
    let k = n - 1;
    if k == 0 {
        return seed;
    }
    let b = DMatrix::from_fn(n, k, |i, a| seed[a][i]);
    let restricted = b.transpose() * hess * &b;
    let restricted = 0.5 * (&restricted + restricted.transpose());
    let eig = SymmetricEigen::new(restricted);
    let scale = eig.eigenvalues.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..k)
        .map(|a| {
            let coords = eig.eigenvectors.column(a);
            let mut v: Vec<f64> = (0..n).map(|i| (0..k).map(|c| b[(i, c)] * coords[c]).sum()).collect();
            let len = norm(&v);
            v.iter_mut().for_each(|x| *x /= len);
            normalize_sign(&mut v);
            (eig.eigenvalues[a], v)
        })
        .collect();
    pairs.sort_by(|x, y| {
        if (x.0 - y.0).abs() > 1e-12 * scale {
            x.0.partial_cmp(&y.0).unwrap()
        } else {
            x.1.partial_cmp(&y.1).unwrap_or(core::cmp::Ordering::Equal)
        }
    });
    pairs.into_iter().map(|p| p.1).collect()
}

/// Adapted frame at `p'` with `tau`, `T3` and, if a Hessian is given,
/// its coordinates `gamma`.
pub fn build_frame(
    model: &AnisotropyModel,
    p_prime: &[f64],
    hess_u: Option<&DMatrix<f64>>,
) -> Result<TensorFrame> {
    let n = model.dim();
    if p_prime.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p_prime.len(),
        });
    }
    let s = norm(p_prime);
    if s < 1e-8 {
        return Err(Error::DegenerateGradient { norm: s });
    }
    if let Some(h) = hess_u {
        if h.nrows() != n || h.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: h.nrows(),
            });
        }
    }
    let e_n: Vec<f64> = p_prime.iter().map(|x| x / s).collect();
    let mut basis = match hess_u {
        Some(h) => hessian_basis(&e_n, h),
        None => complete_basis(&e_n),
    };
    basis.push(e_n);

    let a = coefficient_matrix(model, p_prime)?;
    let cart = t3_tensor(model, p_prime)?;
    let phi = DMatrix::from_fn(n, n, |i, c| basis[c][i]);
    let tau = phi.transpose() * &a * &phi;
    let mut t3 = Tensor3::zeros(n);
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                t3.set(x, y, z, cart.apply(&basis[x], &basis[y], &basis[z]));
            }
        }
    }
    let gamma = hess_u.map(|h| {
        let g = phi.transpose() * h * &phi;
        DMatrix::from_fn(n, n, |x, y| {
            if x == y {
                g[(x, x)]
            } else {
                core::f64::consts::SQRT_2 * 0.5 * (g[(x, y)] + g[(y, x)])
            }
        })
    });
    Ok(TensorFrame {
        gradient: ExtendedGradient::new(p_prime),
        basis,
        tau,
        t3,
        gamma,
    })
}
