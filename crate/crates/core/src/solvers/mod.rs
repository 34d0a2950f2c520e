//! Closed-form catalog and theta-scheme finite differences for `n ≤ 2`.
//!
//! The operators are discretized as
//! `L u = Σ_a (δ²_a u − b_a δ_a u) − c u` with `b = 2x`, `c = 0` (OU),
//! `b = 0`, `c = |x|²` (Hermite), `b = c = 0` (heat). The drift uses centred
//! differences while the cell Péclet number `|b_a| h` is at most 2, and
//! upwind differences beyond, so the implicit matrices stay M-matrices.

mod catalog;
pub mod linalg;

pub use catalog::{catalog, catalog_equation, catalog_ids, catalog_on, hermite_poly, nonsolution_ids, FUNDAMENTAL_MARGIN, FUNDAMENTAL_SOURCE_T};

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{Equation, FieldKind, ScalarField};
use crate::geometry::DomainBox;
use crate::point::SpaceTimePoint;

/// Residual target of the iterative solver used for `n = 2`.
pub const LINEAR_TOL: f64 = 1e-10;
const PECLET_LIMIT: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scheme {
    /// 0 explicit, 1/2 Crank–Nicolson, 1 fully implicit.
    pub theta: f64,
    pub h: f64,
    pub dt: f64,
}

impl Scheme {
    pub fn new(theta: f64, h: f64, dt: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) || !(h > 0.0) || !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("bad scheme theta = {theta}, h = {h}, dt = {dt}")));
        }
        Ok(Self { theta, h, dt })
    }

    pub fn crank_nicolson(h: f64, dt: f64) -> Self {
        Self { theta: 0.5, h, dt }
    }
}

/// Grid solution on a uniform space-time grid, values stored layer by layer
/// with the first spatial axis varying fastest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSolution {
    pub equation: Equation,
    pub x_lo: Vec<f64>,
    /// Actual spatial step per axis (the requested step adjusted to fit the box).
    pub h: Vec<f64>,
    /// Nodes per axis.
    pub counts: Vec<usize>,
    pub t_lo: f64,
    pub dt: f64,
    /// Number of time steps; there are `steps + 1` layers.
    pub steps: usize,
    pub values: Vec<f64>,
    pub boundary: String,
    pub initial: String,
    pub scheme: Scheme,
    /// Richardson estimate `max|u_h − u_{2h}|/3` from a coarse companion solve.
    pub truncation_estimate: Option<f64>,
    /// Largest linear-solve residual over all steps.
    pub max_linear_residual: f64,
}

impl GridSolution {
    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn nodes_per_layer(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn layers(&self) -> usize {
        self.steps + 1
    }

    pub fn t_hi(&self) -> f64 {
        self.t_lo + self.dt * self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t_lo + self.dt * k as f64
    }

    pub fn layer(&self, k: usize) -> &[f64] {
        let m = self.nodes_per_layer();
        &self.values[k * m..(k + 1) * m]
    }

    /// Multi-index of a flat spatial index.
    pub fn index(&self, mut flat: usize) -> Vec<usize> {
        self.counts
            .iter()
            .map(|&c| {
                let i = flat % c;
                flat /= c;
                i
            })
            .collect()
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        self.index(flat).iter().enumerate().map(|(a, &i)| self.x_lo[a] + self.h[a] * i as f64).collect()
    }

    pub fn is_boundary_node(&self, flat: usize) -> bool {
        self.index(flat).iter().zip(&self.counts).any(|(&i, &c)| i == 0 || i + 1 == c)
    }

    /// Grid hull as a domain box.
    pub fn hull(&self) -> DomainBox {
        let x_hi = (0..self.dim()).map(|a| self.x_lo[a] + self.h[a] * (self.counts[a] - 1) as f64).collect();
        DomainBox::from_parts(self.x_lo.clone(), x_hi, self.t_lo, self.t_hi())
    }

    /// Wraps the grid as a field on its hull.
    pub fn to_field(self: &Arc<Self>, label: impl Into<String>) -> ScalarField {
        let g = Arc::clone(self);
        ScalarField::from_fallible(label, FieldKind::Grid, self.equation, self.hull(), move |x, t| sample_xt(&g, x, t))
    }
}

/// Multilinear interpolation in space, linear in time.
pub fn sample(g: &GridSolution, p: &SpaceTimePoint) -> Result<f64> {
    sample_xt(g, &p.x, p.t)
}

fn locate(v: f64, lo: f64, h: f64, count: usize) -> Option<(usize, f64)> {
    let u = (v - lo) / h;
    let last = (count - 1) as f64;
    let eps = 1e-9;
    if !(u >= -eps && u <= last + eps) {
        return None;
    }
    let u = u.clamp(0.0, last);
    let i = (u.floor() as usize).min(count.saturating_sub(2));
    Some((i, u - i as f64))
}

fn sample_xt(g: &GridSolution, x: &[f64], t: f64) -> Result<f64> {
    let n = g.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    let outside = || Error::OutsideDomain { field: "grid".into(), point: format!("{x:?}, t = {t}") };
    let (k, ft) = locate(t, g.t_lo, g.dt, g.layers()).ok_or_else(outside)?;
    let mut cell = Vec::with_capacity(n);
    for a in 0..n {
        cell.push(locate(x[a], g.x_lo[a], g.h[a], g.counts[a]).ok_or_else(outside)?);
    }
    let layer_val = |kk: usize| -> f64 {
        let layer = g.layer(kk);
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut flat = 0;
            let mut stride = 1;
            for (a, &(i, f)) in cell.iter().enumerate() {
                let up = (corner >> a) & 1 == 1;
                w *= if up { f } else { 1.0 - f };
                let idx = if up { (i + 1).min(g.counts[a] - 1) } else { i };
                flat += idx * stride;
                stride *= g.counts[a];
            }
            if w != 0.0 {
                acc += w * layer[flat];
            }
        }
        acc
    };
    let v0 = layer_val(k);
    if ft == 0.0 || k + 1 >= g.layers() {
        return Ok(v0);
    }
    Ok((1.0 - ft) * v0 + ft * layer_val(k + 1))
}

/// Five-point (or three-point) stencil of `L` at one interior node.
#[derive(Debug, Clone)]
struct Stencil {
    node: usize,
    diag: f64,
    /// `(lower, upper)` neighbour coefficients per axis.
    off: Vec<(f64, f64)>,
}

struct Layout {
    counts: Vec<usize>,
    h: Vec<f64>,
    x_lo: Vec<f64>,
}

impl Layout {
    fn total(&self) -> usize {
        self.counts.iter().product()
    }

    fn coords(&self, flat: usize) -> (Vec<usize>, Vec<f64>) {
        let mut rem = flat;
        let mut idx = Vec::with_capacity(self.counts.len());
        for &c in &self.counts {
            idx.push(rem % c);
            rem /= c;
        }
        let x = idx.iter().enumerate().map(|(a, &i)| self.x_lo[a] + self.h[a] * i as f64).collect();
        (idx, x)
    }
}

fn coefficients(eq: Equation, x: &[f64]) -> (Vec<f64>, f64) {
    match eq {
        Equation::Ou => (x.iter().map(|v| 2.0 * v).collect(), 0.0),
        Equation::Hermite => (vec![0.0; x.len()], x.iter().map(|v| v * v).sum()),
        _ => (vec![0.0; x.len()], 0.0),
    }
}

fn stencils(eq: Equation, lay: &Layout) -> (Vec<Stencil>, Vec<Option<usize>>) {
    let total = lay.total();
    let mut out = Vec::new();
    let mut slot = vec![None; total];
    for flat in 0..total {
        let (idx, x) = lay.coords(flat);
        if idx.iter().zip(&lay.counts).any(|(&i, &c)| i == 0 || i + 1 == c) {
            continue;
        }
        let (b, c) = coefficients(eq, &x);
        let mut diag = -c;
        let mut off = Vec::with_capacity(idx.len());
        for a in 0..idx.len() {
            let h = lay.h[a];
            let h2 = h * h;
            let (mut lo, mut hi) = (1.0 / h2, 1.0 / h2);
            diag -= 2.0 / h2;
            let ba = b[a];
            if ba.abs() * h <= PECLET_LIMIT {
                lo += ba / (2.0 * h);
                hi -= ba / (2.0 * h);
            } else if ba > 0.0 {
                lo += ba / h;
                diag -= ba / h;
            } else {
                hi -= ba / h;
                diag += ba / h;
            }
            off.push((lo, hi));
        }
        slot[flat] = Some(out.len());
        out.push(Stencil { node: flat, diag, off });
    }
    (out, slot)
}

fn apply_l(st: &Stencil, u: &[f64], strides: &[usize]) -> f64 {
    let mut v = st.diag * u[st.node];
    for (a, &(lo, hi)) in st.off.iter().enumerate() {
        v += lo * u[st.node - strides[a]] + hi * u[st.node + strides[a]];
    }
    v
}

/// Largest explicit step for the given scheme: `h²/((1 − 2θ)(2n + max Σ|b|h + max c h²))`.
pub fn stability_limit(eq: Equation, domain: &DomainBox, scheme: &Scheme) -> f64 {
    if scheme.theta >= 0.5 {
        return f64::INFINITY;
    }
    let n = domain.dim() as f64;
    let h = scheme.h;
    let xmax: Vec<f64> = (0..domain.dim()).map(|a| domain.x_lo[a].abs().max(domain.x_hi[a].abs())).collect();
    let (b, c) = coefficients(eq, &xmax);
    let bsum: f64 = b.iter().map(|v| v.abs() * h).sum();
    h * h / ((1.0 - 2.0 * scheme.theta) * (2.0 * n + bsum + c * h * h))
}

/// Solves `∂t u = L u` on `domain` with `u = initial` at `t_lo` and
/// `u = boundary` on the lateral boundary, by the theta scheme.
pub fn solve_fd(eq: Equation, domain: &DomainBox, initial: &ScalarField, boundary: &ScalarField, scheme: Scheme) -> Result<GridSolution> {
    let fine = solve_core(eq, domain, initial, boundary, scheme)?;
    let coarse_scheme = Scheme { h: 2.0 * scheme.h, dt: 2.0 * scheme.dt, ..scheme };
    let even = fine.counts.iter().all(|c| (c - 1) % 2 == 0 && *c >= 5) && fine.steps % 2 == 0 && fine.steps >= 2;
    let mut fine = fine;
    if even {
        if let Ok(coarse) = solve_core(eq, domain, initial, boundary, coarse_scheme) {
            if coarse.counts.iter().zip(&fine.counts).all(|(c, f)| 2 * (c - 1) == f - 1) && 2 * coarse.steps == fine.steps {
                fine.truncation_estimate = Some(richardson(&fine, &coarse));
            }
        }
    }
    Ok(fine)
}

fn richardson(fine: &GridSolution, coarse: &GridSolution) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..coarse.layers() {
        let fl = fine.layer(2 * k);
        let cl = coarse.layer(k);
        for (flat, cv) in cl.iter().enumerate() {
            let idx = coarse.index(flat);
            let mut ff = 0;
            let mut stride = 1;
            for (a, &i) in idx.iter().enumerate() {
                ff += 2 * i * stride;
                stride *= fine.counts[a];
            }
            worst = worst.max((fl[ff] - cv).abs());
        }
    }
    worst / 3.0
}

fn solve_core(eq: Equation, domain: &DomainBox, initial: &ScalarField, boundary: &ScalarField, scheme: Scheme) -> Result<GridSolution> {
    let n = domain.dim();
    if n == 0 || n > 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    if eq == Equation::None {
        return Err(Error::InvalidArgument("equation must be heat, ou or hermite".into()));
    }
    let scheme = Scheme::new(scheme.theta, scheme.h, scheme.dt)?;
    let mut counts = Vec::with_capacity(n);
    let mut h = Vec::with_capacity(n);
    for a in 0..n {
        let ext = domain.x_hi[a] - domain.x_lo[a];
        let cells = ((ext / scheme.h) - 1e-9).ceil().max(2.0) as usize;
        counts.push(cells + 1);
        h.push(ext / cells as f64);
    }
    let span = domain.t_hi - domain.t_lo;
    let steps = ((span / scheme.dt) - 1e-9).ceil().max(1.0) as usize;
    let dt = span / steps as f64;
    let limit = stability_limit(eq, domain, &Scheme { h: h.iter().cloned().fold(f64::INFINITY, f64::min), ..scheme });
    if dt > limit {
        return Err(Error::Unstable { dt, limit });
    }
    let mut strides = Vec::with_capacity(n);
    let mut s = 1;
    for &c in &counts {
        strides.push(s);
        s *= c;
    }
    let lay = Layout { counts: counts.clone(), h: h.clone(), x_lo: domain.x_lo.clone() };
    let total = lay.total();
    let (st, slot) = stencils(eq, &lay);
    let nodes: Vec<Vec<f64>> = (0..total).map(|f| lay.coords(f).1).collect();
    let boundary_nodes: Vec<usize> = (0..total).filter(|f| slot[*f].is_none()).collect();

    let mut values = Vec::with_capacity(total * (steps + 1));
    for x in &nodes {
        values.push(initial.eval_at(x, domain.t_lo)?);
    }
    for &b in &boundary_nodes {
        let bv = boundary.eval_at(&nodes[b], domain.t_lo)?;
        let iv = values[b];
        if (bv - iv).abs() > 1e-6 * iv.abs().max(1.0) {
            return Err(Error::Precondition(format!(
                "initial and boundary data disagree at {:?}: {iv} vs {bv}",
                nodes[b]
            )));
        }
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Precondition(format!("non-finite initial value {v}")));
    }

    let theta = scheme.theta;
    let m = st.len();
    let mut max_res = 0.0f64;
    let mut u = values.clone();
    // matrix of the implicit step on interior unknowns: I − θΔt L
    let diag_impl: Vec<f64> = st.iter().map(|s| 1.0 - theta * dt * s.diag).collect();
    for k in 0..steps {
        let t_next = domain.t_lo + dt * (k + 1) as f64;
        let mut next = vec![0.0; total];
        for &b in &boundary_nodes {
            next[b] = boundary.eval_at(&nodes[b], t_next)?;
        }
        // right-hand side with the known boundary values of the new layer
        let mut rhs: Vec<f64> = st.iter().map(|s| u[s.node] + (1.0 - theta) * dt * apply_l(s, &u, &strides)).collect();
        if theta > 0.0 {
            for (r, s) in rhs.iter_mut().zip(&st) {
                for (a, &(lo, hi)) in s.off.iter().enumerate() {
                    let (dn, up) = (s.node - strides[a], s.node + strides[a]);
                    if slot[dn].is_none() {
                        *r += theta * dt * lo * next[dn];
                    }
                    if slot[up].is_none() {
                        *r += theta * dt * hi * next[up];
                    }
                }
            }
        }
        let sol = if theta == 0.0 {
            rhs
        } else if n == 1 {
            let lower: Vec<f64> = st.iter().enumerate().map(|(i, s)| if i == 0 { 0.0 } else { -theta * dt * s.off[0].0 }).collect();
            let upper: Vec<f64> = st.iter().enumerate().map(|(i, s)| if i + 1 == m { 0.0 } else { -theta * dt * s.off[0].1 }).collect();
            linalg::thomas(&lower, &diag_impl, &upper, &rhs)?
        } else {
            let apply = |v: &[f64], out: &mut [f64]| {
                for (i, s) in st.iter().enumerate() {
                    let mut acc = diag_impl[i] * v[i];
                    for (a, &(lo, hi)) in s.off.iter().enumerate() {
                        if let Some(j) = slot[s.node - strides[a]] {
                            acc -= theta * dt * lo * v[j];
                        }
                        if let Some(j) = slot[s.node + strides[a]] {
                            acc -= theta * dt * hi * v[j];
                        }
                    }
                    out[i] = acc;
                }
            };
            let x0: Vec<f64> = st.iter().map(|s| u[s.node]).collect();
            let (x, res) = linalg::bicgstab(apply, &diag_impl, &rhs, x0, LINEAR_TOL, 10_000)?;
            max_res = max_res.max(res);
            x
        };
        for (s, v) in st.iter().zip(sol) {
            next[s.node] = v;
        }
        if let Some(v) = next.iter().find(|v| !v.is_finite()) {
            return Err(Error::NoConvergence(*v));
        }
        values.extend_from_slice(&next);
        u = next;
    }
    Ok(GridSolution {
        equation: eq,
        x_lo: domain.x_lo.clone(),
        h,
        counts,
        t_lo: domain.t_lo,
        dt,
        steps,
        values,
        boundary: boundary.label().to_string(),
        initial: initial.label().to_string(),
        scheme,
        truncation_estimate: None,
        max_linear_residual: max_res,
    })
}

/// Discrete mass bookkeeping for heat solutions: the change of the
/// trapezoidal mass over the run against the time-integrated boundary flux.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MassBalance {
    pub initial_mass: f64,
    pub final_mass: f64,
    pub boundary_flux: f64,
    /// `|final − initial − flux|`.
    pub defect: f64,
}

/// Mass balance of a heat solution, `n = 1` or `2`. The flux is the
/// second-order one-sided normal derivative on each face, integrated by the
/// trapezoid rule in space and time.
pub fn mass_balance(g: &GridSolution) -> Result<MassBalance> {
    if g.equation != Equation::Heat {
        return Err(Error::InvalidArgument("mass balance is defined for the heat equation".into()));
    }
    let mass = |k: usize| -> f64 {
        let layer = g.layer(k);
        let mut acc = 0.0;
        for (flat, v) in layer.iter().enumerate() {
            let idx = g.index(flat);
            let w: f64 = idx
                .iter()
                .zip(&g.counts)
                .zip(&g.h)
                .map(|((&i, &c), &h)| if i == 0 || i + 1 == c { 0.5 * h } else { h })
                .product();
            acc += w * v;
        }
        acc
    };
    let flux = |k: usize| -> f64 {
        let layer = g.layer(k);
        let mut acc = 0.0;
        for (flat, _) in layer.iter().enumerate() {
            let idx = g.index(flat);
            for a in 0..g.dim() {
                let c = g.counts[a];
                let sign = match idx[a] {
                    0 => -1.0,
                    j if j + 1 == c => 1.0,
                    _ => continue,
                };
                let stride: usize = g.counts[..a].iter().product();
                // outward derivative, second order one-sided
                let at = |off: isize| layer[(flat as isize + off * stride as isize) as usize];
                let d = if sign > 0.0 {
                    (3.0 * at(0) - 4.0 * at(-1) + at(-2)) / (2.0 * g.h[a])
                } else {
                    (3.0 * at(0) - 4.0 * at(1) + at(2)) / (2.0 * g.h[a])
                };
                let w: f64 = (0..g.dim())
                    .filter(|&b| b != a)
                    .map(|b| if idx[b] == 0 || idx[b] + 1 == g.counts[b] { 0.5 * g.h[b] } else { g.h[b] })
                    .product();
                acc += w * d;
            }
        }
        acc
    };
    let mut total = 0.0;
    for k in 0..g.steps {
        total += 0.5 * g.dt * (flux(k) + flux(k + 1));
    }
    let (m0, m1) = (mass(0), mass(g.steps));
    Ok(MassBalance { initial_mass: m0, final_mass: m1, boundary_flux: total, defect: (m1 - m0 - total).abs() })
}
