//! The bilinear form checked against a Cartesian evaluation of the same
//! quadratic expression, with `T3` recomputed from a closed-form ellipsoid.

use aniflow_core::anisotropy::{build_frame, AnisotropyModel};
use aniflow_core::estimates::{assemble_b, t3_contract, PointData};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;

fn coeff(diag: &[f64], pp: &[f64]) -> DMatrix<f64> {
    let n = pp.len();
    let mut p = pp.to_vec();
    p.push(-1.0);
    let v = p.iter().map(|x| x * x).sum::<f64>().sqrt();
    let f = p.iter().zip(diag).map(|(x, d)| d * x * x).sum::<f64>().sqrt();
    DMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { diag[i] / f } else { 0.0 };
        v * (delta - diag[i] * p[i] * diag[j] * p[j] / (f * f * f))
    })
}

/// `-d a_ij / d p_l` by fourth-order central differences.
fn t3_fd(diag: &[f64], pp: &[f64]) -> Vec<DMatrix<f64>> {
    let h = 1e-3;
    (0..pp.len())
        .map(|l| {
            let at = |s: f64| {
                let mut q = pp.to_vec();
                q[l] += s * h;
                coeff(diag, &q)
            };
            -(at(-2.0) - at(2.0) * 1.0 + (at(1.0) - at(-1.0)) * 8.0) / (12.0 * h)
        })
        .collect()
}

/// Tangential eigenbasis of `hess` orthogonal to `pp`.
fn tangential(pp: &DVector<f64>, hess: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let n = pp.len();
    let e = pp.normalize();
    let proj = DMatrix::identity(n, n) - &e * e.transpose();
    let restricted = &proj * hess * &proj;
    let eig = SymmetricEigen::new(restricted);
    let mut out: Vec<(f64, DVector<f64>)> = (0..n)
        .map(|k| (eig.eigenvectors.column(k).dot(&e).abs(), eig.eigenvectors.column(k).into_owned()))
        .collect();
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out.into_iter().take(n - 1).map(|x| x.1).collect()
}

fn expected(diag: &[f64], pp: &[f64], hess: &DMatrix<f64>, contact: Option<(f64, &[f64])>, dq: &[f64]) -> f64 {
    let n = pp.len();
    let p = DVector::from_column_slice(pp);
    let v = (1.0 + p.norm_squared()).sqrt();
    let a = coeff(diag, pp);
    let (j1, s, weight) = match contact {
        Some((cos, dh)) => {
            let g = DMatrix::identity(n, n) - &p * p.transpose() / (v * v);
            let s = &p / v - DVector::from_column_slice(dh) * cos;
            ((&a * hess * g * hess).trace() / v, s, 1.0 / (10.0 * v))
        }
        None => ((hess * &a * hess).trace(), &p - DVector::from_column_slice(dq), 0.1),
    };
    let mut correction = 0.0;
    for e in tangential(&p, hess) {
        let g = e.dot(&(hess * &e));
        correction += g * g * e.dot(&(&a * &e));
    }
    let hs = hess * s;
    let t = t3_fd(diag, pp);
    let mut j2 = 0.0;
    for l in 0..n {
        j2 += (t[l].component_mul(hess)).sum() * hs[l];
    }
    j1 - weight * correction + j2
}

fn sym(n: usize, entries: &[f64]) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |i, j| entries[i * n + j]);
    (&m + m.transpose()) * 0.5
}

fn check(n: usize, diag: &[f64], pp: &[f64], h: &[f64], cos: f64, extra: &[f64]) {
    let model = AnisotropyModel::ellipsoid_diag(diag).unwrap();
    let hess = sym(n, h);
    let dh: Vec<f64> = extra[..n].to_vec();
    let contact = assemble_b(&model, pp, &hess, &PointData::ContactAngle { cos_theta: cos, dh: dh.clone() }).unwrap();
    let want = expected(diag, pp, &hess, Some((cos, &dh)), &[]);
    let got = contact.quadratic_form(&contact.gamma);
    assert!((got - want).abs() <= 1e-6 * (1.0 + want.abs()), "contact {got} vs {want}");

    let neumann = assemble_b(&model, pp, &hess, &PointData::Neumann { dq: dh.clone() }).unwrap();
    let want = expected(diag, pp, &hess, None, &dh);
    let got = neumann.quadratic_form(&neumann.gamma);
    assert!((got - want).abs() <= 1e-6 * (1.0 + want.abs()), "neumann {got} vs {want}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quadratic_form_matches_cartesian_2d(
        d in prop::collection::vec(0.6f64..1.6, 3),
        pp in prop::collection::vec(-3.0f64..3.0, 2),
        h in prop::collection::vec(-2.0f64..2.0, 4),
        cos in -0.5f64..0.5,
        extra in prop::collection::vec(-1.0f64..1.0, 2),
    ) {
        prop_assume!(pp[0].hypot(pp[1]) > 0.2);
        check(2, &d, &pp, &h, cos, &extra);
    }

    #[test]
    fn quadratic_form_matches_cartesian_3d(
        d in prop::collection::vec(0.6f64..1.6, 4),
        pp in prop::collection::vec(-3.0f64..3.0, 3),
        h in prop::collection::vec(-2.0f64..2.0, 9),
        cos in -0.5f64..0.5,
        extra in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        prop_assume!(pp.iter().map(|x| x * x).sum::<f64>() > 0.04);
        check(3, &d, &pp, &h, cos, &extra);
    }

    #[test]
    fn grouped_contraction_matches_direct(
        beta in 0.0f64..2.0,
        pp in prop::collection::vec(-4.0f64..4.0, 2),
        h in prop::collection::vec(-2.0f64..2.0, 4),
        w in prop::collection::vec(-2.0f64..2.0, 2),
    ) {
        prop_assume!(pp[0].hypot(pp[1]) > 0.2);
        let model = AnisotropyModel::quartic_blend(2, beta).unwrap();
        let frame = build_frame(&model, &pp, Some(&sym(2, &h))).unwrap();
        prop_assert!(t3_contract(&frame, &w).is_ok());
    }
}

#[test]
fn isotropic_form_is_positive_for_right_angle_at_large_slope() {
    let model = AnisotropyModel::isotropic(2);
    let hess = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, -0.5]);
    for s in [2.0, 5.0, 10.0] {
        let b = assemble_b(&model, &[s, 0.0], &hess, &PointData::ContactAngle { cos_theta: 0.0, dh: vec![1.0, 0.0] }).unwrap();
        assert!(b.min_eigenvalue > 0.0, "s = {s}: {}", b.min_eigenvalue);
        assert!(b.rho_bounds_hold(0.0));
    }
}
