use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

// Needed for float math under no_std; unused when std is in the graph.
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::frame::build_frame;
use super::model::{extend, norm, AnisotropyModel};
use crate::error::{Error, Result};
use crate::numerics::loglog_slope;

/// How a decay rate is asserted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// The quantity decays at exactly the target rate.
    Exact,
    /// The quantity decays at least as fast as the target rate.
    Upper,
    /// Positive and decaying at exactly the target rate.
    TwoSided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub quantity: String,
    pub kind: BoundKind,
    /// Decay variable: `"s"` for `|p'|` and `"v"` for `|p|`.
    pub variable: String,
    pub target: f64,
    pub fitted: f64,
    pub residual: f64,
    /// Sup and inf over the grid of `variable^(-target) * quantity`.
    pub scaled_sup: f64,
    pub scaled_inf: f64,
    /// Quantity at or below round-off for every sample; no slope is meaningful.
    pub negligible: bool,
    /// `|fitted - target| <= 0.1` for exact and two-sided bounds (two-sided
    /// also requires `scaled_inf > 0`); `fitted <= target + 0.1` for upper bounds.
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub epsilon2: f64,
    pub lemma_constants: LemmaConstants,
    pub slope_fits: Vec<SlopeFit>,
    /// Whether the measured constants already satisfy `c1 <= C5` and `C4 <= c2`.
    pub c1_le_c5: bool,
    pub c4_le_c2: bool,
    /// Ratio after shrinking `c1` to `min(c1, C5)` and growing `c2` to `max(c2, C4)`.
    pub epsilon2_effective: f64,
}

impl ConstantsReport {
    pub fn fit(&self, quantity: &str) -> Option<&SlopeFit> {
        self.slope_fits.iter().find(|f| f.quantity == quantity)
    }
}

struct Series {
    name: &'static str,
    kind: BoundKind,
    in_v: bool,
    target: f64,
    /// Max over directions of |q|.
    abs_max: Vec<f64>,
    /// Min over directions of q (signed).
    signed_min: Vec<f64>,
    present: bool,
}

impl Series {
    fn new(name: &'static str, kind: BoundKind, in_v: bool, target: f64, len: usize) -> Self {
        Self {
            name,
            kind,
            in_v,
            target,
            abs_max: vec![0.0; len],
            signed_min: vec![f64::INFINITY; len],
            present: false,
        }
    }

    fn push(&mut self, k: usize, value: f64) {
        self.present = true;
        self.abs_max[k] = self.abs_max[k].max(value.abs());
        self.signed_min[k] = self.signed_min[k].min(value);
    }
}

const NEGLIGIBLE: f64 = 1e-7;

/// Measures the decay lemmas along rays `p' = s d` and the constants of
/// the `tau` bounds over the sampled frames.
pub fn verify_decay(
    model: &AnisotropyModel,
    directions: &[Vec<f64>],
    s_grid: &[f64],
) -> Result<ConstantsReport> {
    let n = model.dim();
    if s_grid.len() < 4 || s_grid.iter().any(|s| !(*s >= 2.0)) {
        return Err(Error::InvalidInput("s_grid needs at least 4 points, all >= 2".into()));
    }
    if directions.is_empty() {
        return Err(Error::InvalidInput("at least one direction is required".into()));
    }
    for d in directions {
        if d.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: d.len(),
            });
        }
        if (norm(d) - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput("directions must be unit vectors".into()));
        }
    }
    let len = s_grid.len();
    let mut series = vec![
        Series::new("hessian_radial", BoundKind::Exact, false, -2.0, len),
        Series::new("third_vertical_mixed", BoundKind::Exact, false, -3.0, len),
        Series::new("third_vertical_pure", BoundKind::Exact, false, -3.0, len),
        Series::new("t3_aab", BoundKind::Upper, true, -1.0, len),
        Series::new("t3_aan", BoundKind::Upper, true, -3.0, len),
        Series::new("t3_ann", BoundKind::Upper, true, -3.0, len),
        Series::new("t3_nna", BoundKind::Upper, true, -3.0, len),
        Series::new("t3_anb", BoundKind::Upper, true, -1.0, len),
        Series::new("t3_ana", BoundKind::TwoSided, true, -1.0, len),
        Series::new("t3_nnn", BoundKind::TwoSided, true, -3.0, len),
    ];
    let mut v_grid = vec![0.0; len];
    let mut e = vec![0.0; n + 1];
    e[n] = 1.0;

    for d in directions {
        for (k, &s) in s_grid.iter().enumerate() {
            let p_prime: Vec<f64> = d.iter().map(|x| s * x).collect();
            let p = extend(&p_prime);
            v_grid[k] = norm(&p);
            let h = model.hessian(&p)?;
            let t = model.third(&p)?;
            let radial: Vec<f64> = p_prime.iter().copied().chain([0.0]).collect();
            let unit: Vec<f64> = d.iter().copied().chain([0.0]).collect();
            let hv: f64 = (0..=n)
                .map(|i| (0..=n).map(|j| radial[i] * h[(i, j)] * unit[j]).sum::<f64>())
                .sum();
            series[0].push(k, hv);

            let frame = build_frame(model, &p_prime, None)?;
            let mut mixed = t.apply(&e, &unit, &unit).abs();
            if n >= 2 {
                let perp: Vec<f64> = frame.basis[0].iter().copied().chain([0.0]).collect();
                mixed = mixed.max(t.apply(&e, &perp, &perp).abs());
            }
            series[1].push(k, mixed);
            series[2].push(k, t.apply(&e, &e, &e));

            let t3 = &frame.t3;
            let nn = n - 1;
            series[9].push(k, t3.get(nn, nn, nn));
            for a in 0..nn {
                series[4].push(k, t3.get(a, a, nn));
                series[5].push(k, t3.get(a, nn, nn));
                series[6].push(k, t3.get(nn, nn, a));
                series[8].push(k, t3.get(a, nn, a));
                for b in 0..nn {
                    series[3].push(k, t3.get(a, a, b));
                    if a != b {
                        series[7].push(k, t3.get(a, nn, b));
                    }
                }
            }
        }
    }

    let mut fits = Vec::new();
    for sr in series.iter().filter(|s| s.present) {
        let x = if sr.in_v { &v_grid[..] } else { s_grid };
        let scaled: Vec<f64> = x
            .iter()
            .zip(&sr.abs_max)
            .map(|(x, q)| q * x.powf(-sr.target))
            .collect();
        let scaled_min: Vec<f64> = x
            .iter()
            .zip(&sr.signed_min)
            .map(|(x, q)| q * x.powf(-sr.target))
            .collect();
        let scaled_sup = scaled.iter().fold(0.0f64, |a, b| a.max(*b));
        let scaled_inf = scaled_min.iter().fold(f64::INFINITY, |a, b| a.min(*b));
        let negligible = scaled_sup < NEGLIGIBLE;
        let (fitted, residual) = if negligible {
            (f64::NAN, f64::NAN)
        } else {
            loglog_slope(x, &sr.abs_max)
        };
        let holds = match sr.kind {
            _ if negligible => sr.kind == BoundKind::Upper,
            BoundKind::Exact => (fitted - sr.target).abs() <= 0.1,
            BoundKind::Upper => fitted <= sr.target + 0.1,
            BoundKind::TwoSided => scaled_inf > 0.0 && (fitted - sr.target).abs() <= 0.1,
        };
        let mismatch = match sr.kind {
            _ if negligible => false,
            BoundKind::Upper => fitted > sr.target + 0.3,
            _ => !((fitted - sr.target).abs() <= 0.3),
        };
        if mismatch {
            return Err(Error::SlopeMismatch {
                quantity: sr.name.into(),
                fitted,
                target: sr.target,
            });
        }
        fits.push(SlopeFit {
            quantity: sr.name.into(),
            kind: sr.kind,
            variable: if sr.in_v { "v".into() } else { "s".into() },
            target: sr.target,
            fitted,
            residual,
            scaled_sup,
            scaled_inf: if negligible { 0.0 } else { scaled_inf },
            negligible,
            holds,
        });
    }

    let sup_of = |name: &str| fits.iter().find(|f| f.quantity == name).map_or(0.0, |f| f.scaled_sup);
    let inf_of = |name: &str| fits.iter().find(|f| f.quantity == name).map_or(f64::INFINITY, |f| f.scaled_inf);
    let c4 = ["t3_aab", "t3_aan", "t3_ann", "t3_nna", "t3_anb"]
        .iter()
        .map(|q| sup_of(q))
        .fold(0.0f64, f64::max);
    let c5 = inf_of("t3_ana").min(inf_of("t3_nnn"));
    let c6 = sup_of("t3_ana").max(sup_of("t3_nnn"));

    // tau bounds over every sampled frame, including moderate gradients
    let mut c1 = f64::INFINITY;
    let mut c2: f64 = 0.0;
    let mut c3: f64 = 0.0;
    let extra = [0.25, 0.5, 1.0, 2.0];
    for d in directions {
        for &s in extra.iter().chain(s_grid) {
            let p_prime: Vec<f64> = d.iter().map(|x| s * x).collect();
            let frame = build_frame(model, &p_prime, None)?;
            let v2 = frame.v() * frame.v();
            let nn = n - 1;
            let tnn = v2 * frame.tau[(nn, nn)];
            c1 = c1.min(tnn);
            c3 = c3.max(tnn);
            for a in 0..nn {
                c1 = c1.min(frame.tau[(a, a)]);
                c3 = c3.max(frame.tau[(a, a)]);
                c2 = c2.max(v2 * frame.tau[(a, nn)].abs());
                for b in 0..nn {
                    if a != b {
                        c2 = c2.max(frame.tau[(a, b)].abs());
                    }
                }
            }
        }
    }

    Ok(ConstantsReport {
        c1,
        c2,
        c3,
        epsilon2: c2 / c1,
        lemma_constants: LemmaConstants {
            c1: sup_of("hessian_radial"),
            c2: sup_of("third_vertical_mixed"),
            c3: sup_of("third_vertical_pure"),
            c4,
            c5,
            c6,
        },
        slope_fits: fits,
        c1_le_c5: c1 <= c5,
        c4_le_c2: c4 <= c2,
        epsilon2_effective: c2.max(c4) / c1.min(c5),
    })
}

/// `count` unit vectors in the plane spread over a half turn, or `e_1` in 1-D.
pub fn default_directions(dim: usize, count: usize) -> Vec<Vec<f64>> {
    if dim == 1 {
        return vec![vec![1.0]];
    }
    (0..count)
        .map(|k| {
            let angle = core::f64::consts::PI * (k as f64 + 0.5) / count as f64;
            let mut d = vec![0.0; dim];
            d[0] = angle.cos();
            d[1] = angle.sin();
            d
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const GRID: [f64; 4] = [16.0, 32.0, 64.0, 128.0];

    #[test]
    fn isotropic_constants() {
        let r = verify_decay(&AnisotropyModel::isotropic(2), &default_directions(2, 5), &GRID).unwrap();
        assert!(r.c2 < 1e-10);
        assert!(r.epsilon2 < 1e-10);
        assert_relative_eq!(r.c1, 1.0, epsilon = 1e-10);
        assert_relative_eq!(r.c3, 1.0, epsilon = 1e-10);
        for f in &r.slope_fits {
            assert!(f.holds, "{f:?}");
        }
    }

    #[test]
    fn ellipsoid_hessian_decays_quadratically() {
        let model = AnisotropyModel::ellipsoid_diag(&[1.0, 2.0, 1.0]).unwrap();
        let r = verify_decay(&model, &default_directions(2, 5), &GRID).unwrap();
        assert!((r.fit("hessian_radial").unwrap().fitted + 2.0).abs() < 0.1);
        assert!(r.c1 <= r.c3);
    }

    #[test]
    fn quartic_blend_epsilon2_grows_with_beta() {
        let mut last = -1.0;
        for beta in [0.0, 0.05, 0.1, 0.2] {
            let model = AnisotropyModel::quartic_blend(2, beta).unwrap();
            let r = verify_decay(&model, &default_directions(2, 7), &[4.0, 8.0, 16.0, 32.0]).unwrap();
            assert!(r.epsilon2 > last);
            last = r.epsilon2;
        }
    }

    #[test]
    fn rejects_short_grids() {
        let model = AnisotropyModel::isotropic(2);
        assert!(verify_decay(&model, &default_directions(2, 3), &[4.0, 8.0, 16.0]).is_err());
    }
}
