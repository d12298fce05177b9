use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::Range;

// Needed for float math under no_std; unused when std is in the graph.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Cartesian derivatives at one node. In 1-D only `du[0]` and `d2u[0]` are used;
/// in 2-D `d2u = (u_xx, u_xy, u_yy)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Local {
    pub du: [f64; 2],
    pub d2u: [f64; 3],
}

/// Uniform nodes `x_i = -L + i dx`, `i < n`, endpoints included. Storage holds
/// the left ghost at index `n` and the right ghost at `n + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalGrid {
    pub half_length: f64,
    pub n: usize,
    pub dx: f64,
}

impl IntervalGrid {
    pub fn new(half_length: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidInput("interval grid needs at least 3 nodes".into()));
        }
        if !(half_length > 0.0) {
            return Err(Error::InvalidInput("interval half length must be positive".into()));
        }
        Ok(Self {
            half_length,
            n,
            dx: 2.0 * half_length / (n - 1) as f64,
        })
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.half_length
        } else {
            -self.half_length + i as f64 * self.dx
        }
    }

    pub fn left_ghost(&self) -> usize {
        self.n
    }

    pub fn right_ghost(&self) -> usize {
        self.n + 1
    }

    #[inline]
    fn neighbors(&self, i: usize) -> (usize, usize) {
        let left = if i == 0 { self.n } else { i - 1 };
        let right = if i + 1 == self.n { self.n + 1 } else { i + 1 };
        (left, right)
    }

    #[inline]
    pub fn local(&self, v: &[f64], i: usize) -> Local {
        let (l, r) = self.neighbors(i);
        let inv = 1.0 / self.dx;
        Local {
            du: [0.5 * (v[r] - v[l]) * inv, 0.0],
            d2u: [(v[r] - 2.0 * v[i] + v[l]) * inv * inv, 0.0, 0.0],
        }
    }
}


#[derive(Debug, Clone, PartialEq)]
enum ThetaOp {
    /// Three-point differences with quotients exact on the first harmonic.
    Fd { q1: f64, q2: f64 },
    /// Circulant rows of the band-limited derivative, indexed by offset.
    Spectral { w1: Vec<f64>, w2: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
enum Inner {
    /// Ring 0: the point across the pole lies on the same ring.
    Mirror,
    Same { start: usize },
    /// Dense `len x n_in` trigonometric interpolation from the inner ring.
    Interp { start: usize, n_in: usize, w: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
struct Ring {
    start: usize,
    len: usize,
    r: f64,
    op: ThetaOp,
    outer_start: usize,
    outer_stride: usize,
    /// Ring `j + 2`, when it is a node ring: `u_r` then uses a third-order
    /// stencil, keeping `u_r / r` second order near the pole.
    far: Option<(usize, usize)>,
    inner: Inner,
    stiffness: f64,
}

/// Disk grid on rings `r_j = (j + 1/2) dr`, `j < n_r`, the last ring on the
/// boundary. Ring sizes shrink by powers of two towards the pole. One ghost
/// ring of `n_theta` nodes at `R + dr` follows the nodes in storage.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    pub radius: f64,
    pub n_r: usize,
    pub n_theta: usize,
    pub dr: f64,
    rings: Vec<Ring>,
    node_count: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
    inv_r: Vec<f64>,
    ring_index: Vec<u32>,
    weights: Vec<f64>,
    delta_min: f64,
}

fn theta_op(len: usize, modes: usize, r: f64) -> (ThetaOp, f64) {
    let n = len as f64;
    if modes * 2 + 2 > len {
        let h = 2.0 * PI / n;
        let q1 = 1.0 / (2.0 * h.sin());
        let q2 = 1.0 / (2.0 * (1.0 - h.cos()));
        (ThetaOp::Fd { q1, q2 }, 4.0 * q2 / (r * r))
    } else {
        let mut w1 = vec![0.0; len];
        let mut w2 = vec![0.0; len];
        for d in 0..len {
            let th = 2.0 * PI * d as f64 / n;
            let (mut s1, mut s2) = (0.0, 0.0);
            for m in 1..=modes {
                let m = m as f64;
                s1 += m * (m * th).sin();
                s2 += m * m * (m * th).cos();
            }
            w1[d] = 2.0 * s1 / n;
            w2[d] = -2.0 * s2 / n;
        }
        let m = modes as f64;
        (ThetaOp::Spectral { w1, w2 }, m * m / (r * r))
    }
}

fn interp_weights(len: usize, n_in: usize) -> Vec<f64> {
    let half = n_in / 2;
    let mut w = vec![0.0; len * n_in];
    for k in 0..len {
        let phi = 2.0 * PI * k as f64 / len as f64;
        for l in 0..n_in {
            let delta = phi - 2.0 * PI * l as f64 / n_in as f64;
            let mut s = 1.0 + (half as f64 * delta).cos();
            for m in 1..half {
                s += 2.0 * (m as f64 * delta).cos();
            }
            w[k * n_in + l] = s / n_in as f64;
        }
    }
    w
}

impl ThetaOp {
    fn apply(&self, row: &[f64], d1: &mut [f64], d2: &mut [f64]) {
        let n = row.len();
        match self {
            ThetaOp::Fd { q1, q2 } => {
                for k in 0..n {
                    let p = row[if k + 1 == n { 0 } else { k + 1 }];
                    let m = row[if k == 0 { n - 1 } else { k - 1 }];
                    d1[k] = q1 * (p - m);
                    d2[k] = q2 * (p - 2.0 * row[k] + m);
                }
            }
            ThetaOp::Spectral { w1, w2 } => {
                let twice = doubled(row);
                for k in 0..n {
                    let x = &twice[k..k + n];
                    d1[k] = dot(w1, x);
                    d2[k] = dot(w2, x);
                }
            }
        }
    }

    fn apply_d1(&self, row: &[f64], d1: &mut [f64]) {
        let n = row.len();
        match self {
            ThetaOp::Fd { q1, .. } => {
                for k in 0..n {
                    let p = row[if k + 1 == n { 0 } else { k + 1 }];
                    let m = row[if k == 0 { n - 1 } else { k - 1 }];
                    d1[k] = q1 * (p - m);
                }
            }
            ThetaOp::Spectral { w1, .. } => {
                let twice = doubled(row);
                for k in 0..n {
                    d1[k] = dot(w1, &twice[k..k + n]);
                }
            }
        }
    }
}

/// `row` twice in a row, so every cyclic shift is a contiguous slice.
fn doubled(row: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * row.len());
    out.extend_from_slice(row);
    out.extend_from_slice(row);
    out
}

/// Dot product with four independent accumulators, which lets the compiler
/// vectorize it.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Per-ring work rows.
struct Scratch {
    north: Vec<f64>,
    south: Vec<f64>,
    diff: Vec<f64>,
    ut: Vec<f64>,
    utt: Vec<f64>,
    urt: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            north: vec![0.0; n],
            south: vec![0.0; n],
            diff: vec![0.0; n],
            ut: vec![0.0; n],
            utt: vec![0.0; n],
            urt: vec![0.0; n],
        }
    }
}

impl PolarGrid {
    pub fn new(radius: f64, n_r: usize, n_theta: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput("disk radius must be positive".into()));
        }
        if n_r < 3 {
            return Err(Error::InvalidInput("polar grid needs at least 3 rings".into()));
        }
        if n_theta < 8 || n_theta % 2 != 0 {
            return Err(Error::InvalidInput("n_theta must be even and at least 8".into()));
        }
        let dr = radius / (n_r as f64 - 0.5);

        let mut lens = Vec::with_capacity(n_r);
        let mut modes = Vec::with_capacity(n_r);
        for j in 0..n_r {
            let m = (2 * j + 1).max(3);
            let need = (2 * m + 2).max(8);
            let mut len = n_theta;
            while len % 2 == 0 && len / 2 >= need {
                len /= 2;
            }
            lens.push(len);
            modes.push(m);
        }
        let mut starts = Vec::with_capacity(n_r + 1);
        let mut acc = 0;
        for &len in &lens {
            starts.push(acc);
            acc += len;
        }
        let node_count = acc;
        starts.push(node_count);
        lens.push(n_theta);

        let mut rings = Vec::with_capacity(n_r);
        for j in 0..n_r {
            let len = lens[j];
            let r = if j + 1 == n_r { radius } else { (j as f64 + 0.5) * dr };
            let (op, lam_theta) = theta_op(len, modes[j], r);
            let inner = if j == 0 {
                Inner::Mirror
            } else if lens[j - 1] == len {
                Inner::Same { start: starts[j - 1] }
            } else {
                Inner::Interp {
                    start: starts[j - 1],
                    n_in: lens[j - 1],
                    w: interp_weights(len, lens[j - 1]),
                }
            };
            rings.push(Ring {
                start: starts[j],
                len,
                r,
                op,
                outer_start: starts[j + 1],
                outer_stride: lens[j + 1] / len,
                far: (j + 2 < n_r).then(|| (starts[j + 2], lens[j + 2] / len)),
                inner,
                stiffness: 4.0 / (dr * dr) + lam_theta,
            });
        }

        let mut cos = Vec::with_capacity(node_count);
        let mut sin = Vec::with_capacity(node_count);
        let mut inv_r = Vec::with_capacity(node_count);
        let mut ring_index = Vec::with_capacity(node_count);
        let mut weights = Vec::with_capacity(node_count);
        for (j, ring) in rings.iter().enumerate() {
            let r_in = (ring.r - 0.5 * dr).max(0.0);
            let r_out = (ring.r + 0.5 * dr).min(radius);
            let w = PI * (r_out * r_out - r_in * r_in) / ring.len as f64;
            for k in 0..ring.len {
                let th = 2.0 * PI * k as f64 / ring.len as f64;
                cos.push(th.cos());
                sin.push(th.sin());
                inv_r.push(1.0 / ring.r);
                ring_index.push(j as u32);
                weights.push(w);
            }
        }
        let lam_max = rings.iter().map(|r| r.stiffness).fold(0.0, f64::max);
        Ok(Self {
            radius,
            n_r,
            n_theta,
            dr,
            rings,
            node_count,
            cos,
            sin,
            inv_r,
            ring_index,
            weights,
            delta_min: (8.0 / lam_max).sqrt(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn storage_len(&self) -> usize {
        self.node_count + self.n_theta
    }

    /// Slots of ring `j`; `j == n_r` is the ghost ring.
    pub fn ring_range(&self, j: usize) -> Range<usize> {
        if j == self.n_r {
            self.node_count..self.node_count + self.n_theta
        } else {
            let r = &self.rings[j];
            r.start..r.start + r.len
        }
    }

    pub fn ring_len(&self, j: usize) -> usize {
        if j == self.n_r {
            self.n_theta
        } else {
            self.rings[j].len
        }
    }

    pub fn ghost_range(&self) -> Range<usize> {
        self.ring_range(self.n_r)
    }

    /// Ring of a node or ghost slot.
    pub fn ring_of(&self, slot: usize) -> usize {
        if slot >= self.node_count {
            self.n_r
        } else {
            self.ring_index[slot] as usize
        }
    }

    pub fn radius_of(&self, slot: usize) -> f64 {
        let j = self.ring_of(slot);
        if j == self.n_r {
            self.radius + self.dr
        } else {
            self.rings[j].r
        }
    }

    pub fn angle_cos_sin(&self, slot: usize) -> (f64, f64) {
        if slot >= self.node_count {
            let th = 2.0 * PI * (slot - self.node_count) as f64 / self.n_theta as f64;
            (th.cos(), th.sin())
        } else {
            (self.cos[slot], self.sin[slot])
        }
    }

    pub fn position(&self, slot: usize) -> [f64; 2] {
        let r = self.radius_of(slot);
        let (c, s) = self.angle_cos_sin(slot);
        [r * c, r * s]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Spacing for which `dt = sigma delta^2 / (2 n Lambda)` is the explicit
    /// Euler bound of the discrete operator.
    pub fn delta_min(&self) -> f64 {
        self.delta_min
    }

    fn rows(&self, v: &[f64], ring: &Ring, north: &mut [f64], south: &mut [f64]) {
        let n = ring.len;
        for k in 0..n {
            north[k] = v[ring.outer_start + k * ring.outer_stride];
        }
        match &ring.inner {
            Inner::Mirror => {
                for k in 0..n {
                    south[k] = v[ring.start + (k + n / 2) % n];
                }
            }
            Inner::Same { start } => south[..n].copy_from_slice(&v[*start..*start + n]),
            Inner::Interp { start, n_in, w } => {
                let src = &v[*start..*start + *n_in];
                for k in 0..n {
                    let row = &w[k * n_in..(k + 1) * n_in];
                    south[k] = row.iter().zip(src).map(|(a, b)| a * b).sum();
                }
            }
        }
    }

    fn ring_derivatives(&self, v: &[f64], j: usize, s: &mut Scratch, out: &mut [Local]) {
        let ring = &self.rings[j];
        let n = ring.len;
        let (north, south) = (&mut s.north[..n], &mut s.south[..n]);
        self.rows(v, ring, north, south);
        let c = &v[ring.start..ring.start + n];
        ring.op.apply(c, &mut s.ut[..n], &mut s.utt[..n]);
        match ring.far {
            Some((start, stride)) => {
                let h6 = 1.0 / (6.0 * self.dr);
                for k in 0..n {
                    let nn = v[start + k * stride];
                    s.diff[k] = (6.0 * north[k] - 3.0 * c[k] - 2.0 * south[k] - nn) * h6;
                }
            }
            None => {
                let h2 = 1.0 / (2.0 * self.dr);
                for k in 0..n {
                    s.diff[k] = (north[k] - south[k]) * h2;
                }
            }
        }
        ring.op.apply_d1(&s.diff[..n], &mut s.urt[..n]);
        let hh = 1.0 / (self.dr * self.dr);
        let ir = 1.0 / ring.r;
        let ir2 = ir * ir;
        for k in 0..n {
            let i = ring.start + k;
            let (co, si) = (self.cos[i], self.sin[i]);
            let ur = s.diff[k];
            let urr = (north[k] - 2.0 * c[k] + south[k]) * hh;
            let urt = s.urt[k];
            let (ut, utt) = (s.ut[k], s.utt[k]);
            let (cc, ss, sc) = (co * co, si * si, si * co);
            let a = ir * ur + ir2 * utt;
            let b = ir * urt - ir2 * ut;
            out[k] = Local {
                du: [co * ur - si * ir * ut, si * ur + co * ir * ut],
                d2u: [
                    cc * urr + ss * a - 2.0 * sc * b,
                    sc * urr - sc * a + (cc - ss) * b,
                    ss * urr + cc * a + 2.0 * sc * b,
                ],
            };
        }
    }

    /// Derivatives at every node. `v` must hold a closed ghost ring.
    pub fn derivatives_all(&self, v: &[f64], out: &mut [Local]) {
        let mut s = Scratch::new(self.n_theta);
        for (j, ring) in self.rings.iter().enumerate() {
            let range = ring.start..ring.start + ring.len;
            self.ring_derivatives(v, j, &mut s, &mut out[range]);
        }
    }

    /// Derivatives at one node. Costs a full ring evaluation.
    pub fn local(&self, v: &[f64], node: usize) -> Local {
        let j = self.ring_of(node);
        let ring = &self.rings[j];
        let mut s = Scratch::new(ring.len);
        let mut out = vec![Local::default(); ring.len];
        self.ring_derivatives(v, j, &mut s, &mut out);
        out[node - ring.start]
    }

    /// Values of ring `src` at the angles of ring `dst`, by subsampling or
    /// trigonometric interpolation.
    pub fn sample_ring(&self, v: &[f64], src: usize, dst: usize) -> Vec<f64> {
        let from = self.ring_range(src);
        let (n_src, n_dst) = (from.len(), self.ring_len(dst));
        if n_src >= n_dst {
            let stride = n_src / n_dst;
            (0..n_dst).map(|k| v[from.start + k * stride]).collect()
        } else {
            let w = interp_weights(n_dst, n_src);
            let src = &v[from];
            (0..n_dst)
                .map(|k| w[k * n_src..(k + 1) * n_src].iter().zip(src).map(|(a, b)| a * b).sum())
                .collect()
        }
    }

    /// Inner-neighbour row and `u_theta` on the boundary ring, for closing the
    /// ghost ring: the ghost value at angle `k` is `south[k] + 2 dr u_r[k]`.
    pub fn boundary_rows(&self, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let ring = &self.rings[self.n_r - 1];
        let n = ring.len;
        let mut north = vec![0.0; n];
        let mut south = vec![0.0; n];
        // the north row reads the ghost ring; only the south row is used
        self.rows(v, ring, &mut north, &mut south);
        let mut ut = vec![0.0; n];
        ring.op.apply_d1(&v[ring.start..ring.start + n], &mut ut);
        (south, ut)
    }
}

/// Either grid, with the operations the solver needs.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Interval(IntervalGrid),
    Polar(PolarGrid),
}

impl Grid {
    pub fn dim(&self) -> usize {
        match self {
            Grid::Interval(_) => 1,
            Grid::Polar(_) => 2,
        }
    }

    /// Interior and boundary nodes.
    pub fn node_count(&self) -> usize {
        match self {
            Grid::Interval(g) => g.n,
            Grid::Polar(g) => g.node_count(),
        }
    }

    /// Nodes, ghosts and any auxiliary slots.
    pub fn storage_len(&self) -> usize {
        match self {
            Grid::Interval(g) => g.n + 2,
            Grid::Polar(g) => g.storage_len(),
        }
    }

    pub fn position(&self, node: usize) -> [f64; 2] {
        match self {
            Grid::Interval(g) => [g.x(node), 0.0],
            Grid::Polar(g) => g.position(node),
        }
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        match self {
            Grid::Interval(g) => vec![0, g.n - 1],
            Grid::Polar(g) => g.ring_range(g.n_r - 1).collect(),
        }
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        match self {
            Grid::Interval(g) => node == 0 || node + 1 == g.n,
            Grid::Polar(g) => g.ring_of(node) + 1 == g.n_r,
        }
    }

    /// Quadrature weights summing to the domain measure.
    pub fn weights(&self) -> Vec<f64> {
        match self {
            Grid::Interval(g) => {
                let mut w = vec![g.dx; g.n];
                w[0] *= 0.5;
                w[g.n - 1] *= 0.5;
                w
            }
            Grid::Polar(g) => g.weights().to_vec(),
        }
    }

    pub fn delta_min(&self) -> f64 {
        match self {
            Grid::Interval(g) => g.dx,
            Grid::Polar(g) => g.delta_min(),
        }
    }

    #[inline]
    pub fn local(&self, v: &[f64], node: usize) -> Local {
        match self {
            Grid::Interval(g) => g.local(v, node),
            Grid::Polar(g) => g.local(v, node),
        }
    }

    /// Derivatives at every node into `out[..node_count]`.
    pub fn derivatives_all(&self, v: &[f64], out: &mut [Local]) {
        match self {
            Grid::Interval(g) => {
                for (i, o) in out[..g.n].iter_mut().enumerate() {
                    *o = g.local(v, i);
                }
            }
            Grid::Polar(g) => g.derivatives_all(v, out),
        }
    }

    /// Value at the domain center or interval midpoint.
    pub fn reference_value(&self, v: &[f64]) -> f64 {
        match self {
            Grid::Interval(g) => {
                if g.n % 2 == 1 {
                    v[g.n / 2]
                } else {
                    0.5 * (v[g.n / 2 - 1] + v[g.n / 2])
                }
            }
            Grid::Polar(g) => {
                // mean over the innermost ring: second-order accurate at r = 0
                let ring = g.ring_range(0);
                let len = ring.len() as f64;
                v[ring].iter().sum::<f64>() / len
            }
        }
    }
}
