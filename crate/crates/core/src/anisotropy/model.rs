use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
// Needed for float math under no_std; unused when std is in the graph.
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed-form families of 1-homogeneous convex integrands on R^{n+1}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    /// `F(p) = |p|`.
    Isotropic,
    /// `F(p) = sqrt(p^T M p)` with `M` symmetric positive definite, stored
    /// row-major as an `(n+1) x (n+1)` matrix.
    Ellipsoid { matrix: Vec<f64> },
    /// `F(p) = (|p|^4 + beta * sum_i p_i^4)^(1/4)`.
    QuarticBlend { beta: f64 },
}

/// Derivative of a requested order, see [`AnisotropyModel::derivatives`].
#[derive(Debug, Clone, PartialEq)]
pub enum Derivative {
    Gradient(Vec<f64>),
    Hessian(DMatrix<f64>),
    Third(Tensor3),
}

/// Dense cubic tensor `t[i][j][l]`, all indices in `0..dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor3 {
    dim: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, l: usize) -> f64 {
        self.data[(i * self.dim + j) * self.dim + l]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, l: usize, value: f64) {
        self.data[(i * self.dim + j) * self.dim + l] = value;
    }

    /// Trilinear form `T(a, b, c)`.
    pub fn apply(&self, a: &[f64], b: &[f64], c: &[f64]) -> f64 {
        let m = self.dim;
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                let ab = a[i] * b[j];
                if ab == 0.0 {
                    continue;
                }
                for l in 0..m {
                    acc += ab * c[l] * self.get(i, j, l);
                }
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// A positive, convex, positively 1-homogeneous integrand `F` on `R^{n+1}`
/// together with its derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnisotropyModel {
    family: Family,
    dim: usize,
    fd_step: f64,
}

pub const DEFAULT_FD_STEP: f64 = 1e-3;

impl AnisotropyModel {
    pub fn isotropic(dim: usize) -> Self {
        Self {
            family: Family::Isotropic,
            dim,
            fd_step: DEFAULT_FD_STEP,
        }
    }

    /// Quadratic-norm family. `matrix` must be symmetric positive definite.
    /// Vertical symmetry is *not* enforced here; `check_structure` reports
    /// models that couple the last coordinate to the others.
    pub fn ellipsoid(dim: usize, matrix: Vec<f64>) -> Result<Self> {
        let m = dim + 1;
        if matrix.len() != m * m {
            return Err(Error::DimensionMismatch {
                expected: m * m,
                got: matrix.len(),
            });
        }
        for i in 0..m {
            for j in 0..i {
                if (matrix[i * m + j] - matrix[j * m + i]).abs() > 1e-14 {
                    return Err(Error::InvalidInput("ellipsoid matrix is not symmetric".into()));
                }
            }
        }
        if DMatrix::from_row_slice(m, m, &matrix).cholesky().is_none() {
            return Err(Error::InvalidInput(
                "ellipsoid matrix is not positive definite".into(),
            ));
        }
        Ok(Self {
            family: Family::Ellipsoid { matrix },
            dim,
            fd_step: DEFAULT_FD_STEP,
        })
    }

    /// Ellipsoid with diagonal matrix `diag`, of length `dim + 1`.
    pub fn ellipsoid_diag(diag: &[f64]) -> Result<Self> {
        let m = diag.len();
        if m < 2 {
            return Err(Error::InvalidInput("need at least two diagonal entries".into()));
        }
        let mut matrix = vec![0.0; m * m];
        for (i, d) in diag.iter().enumerate() {
            matrix[i * m + i] = *d;
        }
        Self::ellipsoid(m - 1, matrix)
    }

    pub fn quartic_blend(dim: usize, beta: f64) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::InvalidInput("quartic blend needs a finite beta >= 0".into()));
        }
        Ok(Self {
            family: Family::QuarticBlend { beta },
            dim,
            fd_step: DEFAULT_FD_STEP,
        })
    }

    pub fn from_family(dim: usize, family: Family) -> Result<Self> {
        match family {
            Family::Isotropic => Ok(Self::isotropic(dim)),
            Family::Ellipsoid { matrix } => Self::ellipsoid(dim, matrix),
            Family::QuarticBlend { beta } => Self::quartic_blend(dim, beta),
        }
    }

    pub fn with_fd_step(mut self, fd_step: f64) -> Self {
        self.fd_step = fd_step;
        self
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Spatial dimension `n`; the model lives on `R^{n+1}`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim + 1
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                got: p.len(),
            });
        }
        if norm(p) < 1e-300 {
            return Err(Error::ZeroVector);
        }
        Ok(())
    }

    pub fn value(&self, p: &[f64]) -> Result<f64> {
        self.check_point(p)?;
        Ok(self.value_unchecked(p))
    }

    pub(crate) fn value_unchecked(&self, p: &[f64]) -> f64 {
        match &self.family {
            Family::Isotropic => norm(p),
            Family::Ellipsoid { matrix } => {
                let m = p.len();
                let mut acc = 0.0;
                for i in 0..m {
                    for j in 0..m {
                        acc += p[i] * matrix[i * m + j] * p[j];
                    }
                }
                acc.sqrt()
            }
            Family::QuarticBlend { beta } => {
                let s2: f64 = p.iter().map(|x| x * x).sum();
                let q: f64 = p.iter().map(|x| x * x * x * x).sum();
                (s2 * s2 + beta * q).sqrt().sqrt()
            }
        }
    }

    pub fn gradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.check_point(p)?;
        let mut out = vec![0.0; p.len()];
        self.gradient_unchecked(p, &mut out);
        Ok(out)
    }

    pub(crate) fn gradient_unchecked(&self, p: &[f64], out: &mut [f64]) {
        let m = p.len();
        match &self.family {
            Family::Isotropic => {
                let r = norm(p);
                for i in 0..m {
                    out[i] = p[i] / r;
                }
            }
            Family::Ellipsoid { matrix } => {
                let mut f2 = 0.0;
                for i in 0..m {
                    out[i] = (0..m).map(|j| matrix[i * m + j] * p[j]).sum();
                    f2 += p[i] * out[i];
                }
                let f = f2.sqrt();
                out.iter_mut().for_each(|x| *x /= f);
            }
            Family::QuarticBlend { beta } => {
                let s2: f64 = p.iter().map(|x| x * x).sum();
                let q: f64 = p.iter().map(|x| x * x * x * x).sum();
                let f = (s2 * s2 + beta * q).sqrt().sqrt();
                let f3 = f * f * f;
                for i in 0..m {
                    let gi = 4.0 * s2 * p[i] + 4.0 * beta * p[i] * p[i] * p[i];
                    out[i] = gi / (4.0 * f3);
                }
            }
        }
    }

    pub fn hessian(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.check_point(p)?;
        let m = p.len();
        let mut out = vec![0.0; m * m];
        self.hessian_unchecked(p, &mut out);
        Ok(DMatrix::from_row_slice(m, m, &out))
    }

    /// Row-major Hessian into `out` (length `(n+1)^2`).
    pub(crate) fn hessian_unchecked(&self, p: &[f64], out: &mut [f64]) {
        let m = p.len();
        match &self.family {
            Family::Isotropic => {
                let r2: f64 = p.iter().map(|x| x * x).sum();
                let r = r2.sqrt();
                for i in 0..m {
                    for j in 0..m {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        out[i * m + j] = (delta - p[i] * p[j] / r2) / r;
                    }
                }
            }
            Family::Ellipsoid { matrix } => {
                let mut mp = [0.0; 8];
                let mut mp_heap;
                let mp: &mut [f64] = if m <= 8 {
                    &mut mp[..m]
                } else {
                    mp_heap = vec![0.0; m];
                    &mut mp_heap
                };
                let mut f2 = 0.0;
                for i in 0..m {
                    mp[i] = (0..m).map(|j| matrix[i * m + j] * p[j]).sum();
                    f2 += p[i] * mp[i];
                }
                let f = f2.sqrt();
                for i in 0..m {
                    for j in 0..m {
                        out[i * m + j] = (matrix[i * m + j] - mp[i] * mp[j] / f2) / f;
                    }
                }
            }
            Family::QuarticBlend { beta } => {
                let s2: f64 = p.iter().map(|x| x * x).sum();
                let q: f64 = p.iter().map(|x| x * x * x * x).sum();
                let f = (s2 * s2 + beta * q).sqrt().sqrt();
                let f3 = f * f * f;
                let f7 = f3 * f3 * f;
                let grad = |i: usize| 4.0 * s2 * p[i] + 4.0 * beta * p[i] * p[i] * p[i];
                for i in 0..m {
                    let gi = grad(i);
                    for j in 0..m {
                        let gj = grad(j);
                        let mut gij = 8.0 * p[i] * p[j];
                        if i == j {
                            gij += 4.0 * s2 + 12.0 * beta * p[i] * p[i];
                        }
                        out[i * m + j] = gij / (4.0 * f3) - 3.0 * gi * gj / (16.0 * f7);
                    }
                }
            }
        }
    }

    /// Third derivative by central differences of the closed-form Hessian,
    /// step `fd_step * max(1, |p|)`, with one Richardson refinement.
    pub fn third(&self, p: &[f64]) -> Result<Tensor3> {
        self.check_point(p)?;
        let m = p.len();
        let step = self.fd_step * norm(p).max(1.0);
        if !(step >= 1e-12) {
            return Err(Error::StepUnderflow { step });
        }
        let mut out = Tensor3::zeros(m);
        let mut plus = vec![0.0; m * m];
        let mut minus = vec![0.0; m * m];
        let mut coarse = vec![0.0; m * m];
        let mut shifted = p.to_vec();
        for l in 0..m {
            for (k, h) in [step, 0.5 * step].into_iter().enumerate() {
                shifted[l] = p[l] + h;
                self.hessian_unchecked(&shifted, &mut plus);
                shifted[l] = p[l] - h;
                self.hessian_unchecked(&shifted, &mut minus);
                shifted[l] = p[l];
                for idx in 0..m * m {
                    let d = (plus[idx] - minus[idx]) / (2.0 * h);
                    if k == 0 {
                        coarse[idx] = d;
                    } else {
                        let (i, j) = (idx / m, idx % m);
                        out.set(i, j, l, (4.0 * d - coarse[idx]) / 3.0);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn derivatives(&self, p: &[f64], order: usize) -> Result<Derivative> {
        match order {
            1 => self.gradient(p).map(Derivative::Gradient),
            2 => self.hessian(p).map(Derivative::Hessian),
            3 => self.third(p).map(Derivative::Third),
            _ => Err(Error::InvalidInput("derivative order must be 1, 2 or 3".into())),
        }
    }

    /// `a = v * [D^2 F]_{n x n}` at `(p', -1)` written row-major into `out`.
    /// Allocation-free for `n <= 3`; this is the solver's inner kernel.
    pub fn coefficient_matrix_into(&self, p_prime: &[f64], out: &mut [f64]) {
        let n = p_prime.len();
        let m = n + 1;
        let mut p = [0.0; 4];
        let mut h = [0.0; 16];
        if m <= 4 {
            p[..n].copy_from_slice(p_prime);
            p[n] = -1.0;
            self.hessian_unchecked(&p[..m], &mut h[..m * m]);
            let v = (1.0 + p_prime.iter().map(|x| x * x).sum::<f64>()).sqrt();
            for i in 0..n {
                for j in 0..n {
                    out[i * n + j] = v * h[i * m + j];
                }
            }
        } else {
            let mut p = p_prime.to_vec();
            p.push(-1.0);
            let mut h = vec![0.0; m * m];
            self.hessian_unchecked(&p, &mut h);
            let v = norm(&p);
            for i in 0..n {
                for j in 0..n {
                    out[i * n + j] = v * h[i * m + j];
                }
            }
        }
    }
}

#[inline]
pub(crate) fn norm(p: &[f64]) -> f64 {
    p.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `(p', -1)`.
pub(crate) fn extend(p_prime: &[f64]) -> Vec<f64> {
    let mut p = p_prime.to_vec();
    p.push(-1.0);
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn isotropic_third(p: &[f64]) -> Tensor3 {
        // D^3 |p| = -(d_ab p_c + d_ac p_b + d_bc p_a)/|p|^3 + 3 p_a p_b p_c/|p|^5
        let m = p.len();
        let r = norm(p);
        let mut t = Tensor3::zeros(m);
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    let v = -(d(a, b) * p[c] + d(a, c) * p[b] + d(b, c) * p[a]) / r.powi(3)
                        + 3.0 * p[a] * p[b] * p[c] / r.powi(5);
                    t.set(a, b, c, v);
                }
            }
        }
        t
    }

    #[test]
    fn values_of_the_closed_forms() {
        let iso = AnisotropyModel::isotropic(2);
        assert_relative_eq!(iso.value(&[3.0, 4.0, -1.0]).unwrap(), 26f64.sqrt(), epsilon = 1e-14);
        let ell = AnisotropyModel::ellipsoid_diag(&[1.0, 2.0, 1.0]).unwrap();
        assert_relative_eq!(ell.value(&[1.0, 1.0, -1.0]).unwrap(), 2.0, epsilon = 1e-14);
        let flat = AnisotropyModel::quartic_blend(2, 0.0).unwrap();
        let p = [0.3, -1.7, -1.0];
        assert_relative_eq!(flat.value(&p).unwrap(), norm(&p), epsilon = 1e-14);
    }

    #[test]
    fn zero_vector_is_rejected() {
        let iso = AnisotropyModel::isotropic(1);
        assert_eq!(iso.value(&[0.0, 0.0]), Err(Error::ZeroVector));
        assert!(matches!(iso.third(&[0.0, 0.0]), Err(Error::ZeroVector)));
    }

    #[test]
    fn tiny_fd_step_underflows() {
        let iso = AnisotropyModel::isotropic(1).with_fd_step(1e-14);
        assert!(matches!(iso.third(&[0.5, -1.0]), Err(Error::StepUnderflow { .. })));
    }

    #[test]
    fn isotropic_hessian_at_diagonal_point() {
        let iso = AnisotropyModel::isotropic(1);
        let h = iso.hessian(&[0.0, 1.0]).unwrap();
        // (I - p p^T / |p|^2) / |p| with p = (0, 1) has h00 = 1
        assert_relative_eq!(h[(0, 0)], 1.0, epsilon = 1e-14);
        let h = AnisotropyModel::isotropic(2).hessian(&[0.0, 1.0, -1.0]).unwrap();
        assert_relative_eq!(h[(0, 0)], 1.0 / 2f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn fd_third_matches_isotropic_closed_form() {
        let iso = AnisotropyModel::isotropic(2);
        for p in [[0.3, -0.2, -1.0], [4.0, 1.0, -1.0], [30.0, -7.0, -1.0]] {
            let fd = iso.third(&p).unwrap();
            let exact = isotropic_third(&p);
            let scale = exact.max_abs();
            for a in 0..3 {
                for b in 0..3 {
                    for c in 0..3 {
                        assert!((fd.get(a, b, c) - exact.get(a, b, c)).abs() < 1e-9 * scale);
                    }
                }
            }
        }
    }

    #[test]
    fn gradients_match_central_differences_of_values() {
        let models = [
            AnisotropyModel::quartic_blend(2, 0.3).unwrap(),
            AnisotropyModel::ellipsoid_diag(&[1.0, 2.0, 1.5]).unwrap(),
        ];
        let p = [0.7, -1.3, -1.0];
        for model in &models {
            let g = model.gradient(&p).unwrap();
            let h = model.hessian(&p).unwrap();
            let eps = 1e-5;
            for i in 0..3 {
                let mut a = p;
                let mut b = p;
                a[i] += eps;
                b[i] -= eps;
                let fd = (model.value(&a).unwrap() - model.value(&b).unwrap()) / (2.0 * eps);
                assert_relative_eq!(g[i], fd, epsilon = 1e-8);
                let ga = model.gradient(&a).unwrap();
                let gb = model.gradient(&b).unwrap();
                for j in 0..3 {
                    assert_relative_eq!(h[(j, i)], (ga[j] - gb[j]) / (2.0 * eps), epsilon = 1e-7);
                }
            }
        }
    }

    #[test]
    fn ellipsoid_rejects_indefinite_matrices() {
        assert!(AnisotropyModel::ellipsoid_diag(&[1.0, -2.0, 1.0]).is_err());
        assert!(AnisotropyModel::ellipsoid(1, vec![1.0, 0.5, 0.0, 1.0]).is_err());
        assert!(AnisotropyModel::quartic_blend(2, -0.1).is_err());
    }

    #[test]
    fn coefficient_matrix_matches_isotropic_closed_form() {
        let iso = AnisotropyModel::isotropic(2);
        let mut a = [0.0; 4];
        iso.coefficient_matrix_into(&[1.0, 0.0], &mut a);
        assert_relative_eq!(a[0], 0.5, epsilon = 1e-14);
        assert_relative_eq!(a[3], 1.0, epsilon = 1e-14);
        assert_relative_eq!(a[1], 0.0, epsilon = 1e-14);
        iso.coefficient_matrix_into(&[0.0, 0.0], &mut a);
        assert_eq!(a, [1.0, 0.0, 0.0, 1.0]);
        let flat = AnisotropyModel::quartic_blend(2, 0.0).unwrap();
        let mut b = [0.0; 4];
        iso.coefficient_matrix_into(&[2.0, 1.0], &mut a);
        flat.coefficient_matrix_into(&[2.0, 1.0], &mut b);
        for k in 0..4 {
            assert!((a[k] - b[k]).abs() < 1e-10);
        }
    }
}
