use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{norm, AnisotropyModel};
use crate::error::{Error, Result};
use crate::numerics::min_eigenvalue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityKind {
    Euler,
    Symmetry,
}

/// Worst violation of one identity over the samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub kind: IdentityKind,
    pub max_violation: f64,
    pub tolerance: f64,
    pub worst_sample: Vec<f64>,
}

impl IdentityCheck {
    fn new(name: &str, kind: IdentityKind, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            kind,
            max_violation: 0.0,
            tolerance,
            worst_sample: Vec::new(),
        }
    }

    fn record(&mut self, violation: f64, sample: &[f64]) {
        let violation = if violation.is_nan() { f64::INFINITY } else { violation };
        if self.worst_sample.is_empty() || violation > self.max_violation {
            self.max_violation = violation;
            self.worst_sample = sample.to_vec();
        }
    }

    pub fn passed(&self) -> bool {
        self.max_violation <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub sample_count: usize,
    pub checks: Vec<IdentityCheck>,
}

impl StructureReport {
    pub fn check(&self, name: &str) -> Option<&IdentityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(IdentityCheck::passed)
    }

    /// First failing identity as an error. Homogeneity, Euler and convexity
    /// failures take precedence over symmetry failures.
    pub fn verdict(&self) -> Result<()> {
        for kind in [IdentityKind::Euler, IdentityKind::Symmetry] {
            if let Some(c) = self.checks.iter().find(|c| c.kind == kind && !c.passed()) {
                let (identity, violation, sample) =
                    (c.name.clone(), c.max_violation, c.worst_sample.clone());
                return Err(match kind {
                    IdentityKind::Euler => Error::IdentityViolation {
                        identity,
                        violation,
                        sample,
                    },
                    IdentityKind::Symmetry => Error::SymmetryViolation {
                        identity,
                        violation,
                        sample,
                    },
                });
            }
        }
        Ok(())
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

/// Samples `p = (p', -1)` with `p'` uniform in `[-3, 3]^n` and checks the
/// homogeneity, Euler, convexity and vertical-symmetry identities.
pub fn check_structure(
    model: &AnisotropyModel,
    sample_count: usize,
    rng_seed: u64,
) -> Result<StructureReport> {
    if sample_count == 0 {
        return Err(Error::InvalidInput("sample_count must be at least 1".into()));
    }
    let n = model.dim();
    let m = n + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    let mut homogeneity = IdentityCheck::new("homogeneity", IdentityKind::Euler, 1e-12);
    let mut euler1 = IdentityCheck::new("euler_order1", IdentityKind::Euler, 1e-9);
    let mut euler2 = IdentityCheck::new("euler_order2", IdentityKind::Euler, 1e-9);
    let mut euler3 = IdentityCheck::new("euler_order3", IdentityKind::Euler, 1e-5);
    let mut convexity = IdentityCheck::new("hessian_psd", IdentityKind::Euler, 1e-9);
    let mut sym_value = IdentityCheck::new("vertical_value", IdentityKind::Symmetry, 1e-12);
    let mut sym_grad = IdentityCheck::new("vertical_gradient", IdentityKind::Symmetry, 1e-9);
    let mut sym_hess = IdentityCheck::new("vertical_hessian", IdentityKind::Symmetry, 1e-9);
    let mut sym_third = IdentityCheck::new("vertical_third_mixed", IdentityKind::Symmetry, 1e-5);
    let mut sym_third_v = IdentityCheck::new("vertical_third_pure", IdentityKind::Symmetry, 1e-5);

    let mut p = vec![0.0; m];
    let mut flat = vec![0.0; m];
    for _ in 0..sample_count {
        for i in 0..n {
            p[i] = rng.random_range(-3.0..3.0);
        }
        p[n] = -1.0;
        let f = model.value(&p)?;
        for lambda in [0.5, 2.0, 10.0] {
            let scaled: Vec<f64> = p.iter().map(|x| lambda * x).collect();
            let fl = model.value(&scaled)?;
            homogeneity.record((fl - lambda * f).abs() / (lambda * f), &p);
        }

        let g = model.gradient(&p)?;
        let dot: f64 = g.iter().zip(&p).map(|(a, b)| a * b).sum();
        euler1.record((dot - f).abs() / f, &p);

        let h = model.hessian(&p)?;
        let hn = max_abs(&h);
        let hp = &h * nalgebra::DVector::from_column_slice(&p);
        euler2.record(hp.amax() / (hn * norm(&p)), &p);
        convexity.record((-min_eigenvalue(&h)).max(0.0) / hn.max(1.0), &p);

        let t = model.third(&p)?;
        let mut e3: f64 = 0.0;
        for j in 0..m {
            for l in 0..m {
                let contracted: f64 = (0..m).map(|i| p[i] * t.get(i, j, l)).sum();
                e3 = e3.max((contracted + h[(j, l)]).abs());
            }
        }
        euler3.record(e3 / hn, &p);

        let mut up = p.clone();
        up[n] = 1.0;
        sym_value.record((model.value(&up)? - f).abs() / f, &p);

        // auxiliary point (p', 0)
        flat[..n].copy_from_slice(&p[..n]);
        flat[n] = 0.0;
        if norm(&flat) < 1e-6 {
            continue;
        }
        let g0 = model.gradient(&flat)?;
        sym_grad.record(g0[n].abs() / norm(&g0), &flat);
        let h0 = model.hessian(&flat)?;
        let h0n = max_abs(&h0);
        let mixed = (0..n).fold(0.0f64, |a, q| a.max(h0[(n, q)].abs()));
        sym_hess.record(mixed / h0n, &flat);
        let t0 = model.third(&flat)?;
        let t0n = t0.max_abs();
        let mut worst: f64 = 0.0;
        for q in 0..n {
            for r in 0..n {
                worst = worst.max(t0.get(n, q, r).abs());
            }
        }
        sym_third.record(worst / t0n, &flat);
        sym_third_v.record(t0.get(n, n, n).abs() / t0n, &flat);
    }

    Ok(StructureReport {
        sample_count,
        checks: vec![
            homogeneity,
            euler1,
            euler2,
            euler3,
            convexity,
            sym_value,
            sym_grad,
            sym_hess,
            sym_third,
            sym_third_v,
        ],
    })
}
