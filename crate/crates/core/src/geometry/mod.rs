//! Heat balls and the sets built from them.
//!
//! All membership predicates are open conditions: points on a ball's
//! boundary (including the top point `(x,t)` itself) are not members.

mod raster;

pub use raster::{lambda_reachable, Raster, DEFAULT_CELLS_PER_UNIT};

use serde::{Deserialize, Serialize};
use std::f64::consts::E;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::point::{dist_sq, SpaceTimePoint};
use crate::transference::{phi, phi_inverse_time, phi_time};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallFamily {
    /// Classical heat ball `Ω(x,t;r)`.
    Omega,
    /// `Ξ(x,t;r) = φ⁻¹(Ω(φ(x,t); r))`.
    Xi,
    /// Descent ball `Ω_m(x,t;r)`.
    OmegaM,
    /// `φ⁻¹(Ω_m(φ(x,t); r))`, the domain of the descent OU/Hermite kernels.
    XiM,
    /// Hermite cylinder `Γ_R(x,t)`.
    GammaCyl,
}

/// A ball descriptor. For `GammaCyl` the radius is `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatBall {
    pub family: BallFamily,
    pub center: SpaceTimePoint,
    pub radius: f64,
    /// Descent dimension; zero unless the family is `OmegaM` or `XiM`.
    pub m: usize,
}

impl HeatBall {
    pub fn new(family: BallFamily, center: SpaceTimePoint, radius: f64, m: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
        }
        let descent = matches!(family, BallFamily::OmegaM | BallFamily::XiM);
        if !descent && m != 0 {
            return Err(Error::InvalidArgument("m must be 0 for non-descent families".into()));
        }
        if descent && m == 0 {
            return Err(Error::InvalidArgument("descent families need m >= 1".into()));
        }
        if matches!(family, BallFamily::Xi | BallFamily::XiM) && center.t.is_nan() {
            return Err(Error::InvalidArgument("bad center".into()));
        }
        Ok(Self { family, center, radius, m })
    }

    pub fn omega(center: SpaceTimePoint, r: f64) -> Result<Self> {
        Self::new(BallFamily::Omega, center, r, 0)
    }

    pub fn xi(center: SpaceTimePoint, r: f64) -> Result<Self> {
        Self::new(BallFamily::Xi, center, r, 0)
    }

    pub fn omega_m(center: SpaceTimePoint, r: f64, m: usize) -> Result<Self> {
        Self::new(BallFamily::OmegaM, center, r, m)
    }

    pub fn xi_m(center: SpaceTimePoint, r: f64, m: usize) -> Result<Self> {
        Self::new(BallFamily::XiM, center, r, m)
    }

    pub fn gamma(center: SpaceTimePoint, big_r: f64) -> Result<Self> {
        Self::new(BallFamily::GammaCyl, center, big_r, 0)
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// `n + m`, the dimension that enters the ball's log-radius profile.
    pub fn effective_dim(&self) -> usize {
        self.dim() + self.m
    }

    pub fn contains(&self, p: &SpaceTimePoint) -> bool {
        match self.family {
            BallFamily::Omega | BallFamily::OmegaM => omega_contains(self, p),
            BallFamily::Xi | BallFamily::XiM => xi_contains(self, p),
            BallFamily::GammaCyl => gamma_contains(&self.center.x, self.center.t, self.radius, p),
        }
    }

    pub fn bounds(&self) -> DomainBox {
        match self.family {
            BallFamily::Omega | BallFamily::OmegaM => omega_bounds(self),
            BallFamily::Xi | BallFamily::XiM => xi_bounds(self),
            BallFamily::GammaCyl => gamma_bounds(&self.center.x, self.center.t, self.radius),
        }
    }

    /// Time extent `(t_lo, t_hi)` of the ball (open interval).
    pub fn time_range(&self) -> (f64, f64) {
        let (t0, r) = (self.center.t, self.radius);
        match self.family {
            BallFamily::Omega | BallFamily::OmegaM => (t0 - r, t0),
            BallFamily::Xi | BallFamily::XiM => (phi_inverse_time(phi_time(t0) - r), t0),
            BallFamily::GammaCyl => (t0 - r * r, t0),
        }
    }

    /// Spatial cross-section at time `s`: a Euclidean ball `(center, radius)`,
    /// or `None` when `s` is outside the open time range.
    pub fn slice(&self, s: f64) -> Option<(Vec<f64>, f64)> {
        let (lo, hi) = self.time_range();
        if !(s > lo && s < hi) {
            return None;
        }
        let ne = self.effective_dim() as f64;
        let (x0, t0, r) = (&self.center.x, self.center.t, self.radius);
        match self.family {
            BallFamily::Omega | BallFamily::OmegaM => {
                let tau = t0 - s;
                let rho2 = 2.0 * ne * tau * (r / tau).ln();
                (rho2 > 0.0).then(|| (x0.clone(), rho2.sqrt()))
            }
            BallFamily::Xi | BallFamily::XiM => {
                let tau = xi_time_gap(t0, s);
                let rho2 = 2.0 * ne * tau * (r / tau).ln();
                let scale = (2.0 * s).exp();
                let c = x0.iter().map(|v| v * (-2.0 * t0).exp() * scale).collect();
                (rho2 > 0.0).then(|| (c, rho2.sqrt() * scale))
            }
            BallFamily::GammaCyl => {
                let f = (-2.0 * (t0 - s)).exp();
                Some((x0.iter().map(|v| v * f).collect(), r * f))
            }
        }
    }
}

/// `φ_t(t0) − φ_t(s) = (e^{−4s} − e^{−4t0})/4`, computed without cancellation.
#[inline]
pub(crate) fn xi_time_gap(t0: f64, s: f64) -> f64 {
    0.25 * (-4.0 * t0).exp() * (4.0 * (t0 - s)).exp_m1()
}

/// Membership in `Ω(x,t;r)` or `Ω_m(x,t;r)`:
/// `s ∈ (t − r, t)` and `|y − x|² < 2(n+m)(t − s) ln(r/(t − s))`.
pub fn omega_contains(ball: &HeatBall, p: &SpaceTimePoint) -> bool {
    debug_assert!(matches!(ball.family, BallFamily::Omega | BallFamily::OmegaM));
    if p.dim() != ball.dim() {
        return false;
    }
    let tau = ball.center.t - p.t;
    if !(tau > 0.0 && tau < ball.radius) {
        return false;
    }
    let ne = ball.effective_dim() as f64;
    dist_sq(&p.x, &ball.center.x) < 2.0 * ne * tau * (ball.radius / tau).ln()
}

/// Tight bounding box of `Ω`/`Ω_m`. The slice radius `2(n+m)τ ln(r/τ)` peaks
/// at `τ = r/e`, giving half-width `√(2(n+m) r / e)`.
pub fn omega_bounds(ball: &HeatBall) -> DomainBox {
    let ne = ball.effective_dim() as f64;
    let w = (2.0 * ne * ball.radius / E).sqrt();
    let lower = ball.center.x.iter().map(|c| c - w).collect();
    let upper = ball.center.x.iter().map(|c| c + w).collect();
    DomainBox::from_parts(lower, upper, ball.center.t - ball.radius, ball.center.t)
}

/// Membership in `Ξ(x₀,t₀;r)` (or its descent variant), evaluated in the
/// original coordinates:
/// `|x e^{−2t} − x₀ e^{−2t₀}|² < ((n+m)/2) D ln(4r/D)`, `D = e^{−4t} − e^{−4t₀} > 0`.
pub fn xi_contains(ball: &HeatBall, p: &SpaceTimePoint) -> bool {
    debug_assert!(matches!(ball.family, BallFamily::Xi | BallFamily::XiM));
    if p.dim() != ball.dim() {
        return false;
    }
    let (x0, t0, r) = (&ball.center.x, ball.center.t, ball.radius);
    if !(p.t < t0) {
        return false;
    }
    // D = 4 (φ_t(t0) − φ_t(t)); the lower time bound φ_t(t) > φ_t(t0) − r is D < 4r
    let d = 4.0 * xi_time_gap(t0, p.t);
    if !(d > 0.0 && d < 4.0 * r) {
        return false;
    }
    let e0 = (-2.0 * t0).exp();
    let e1 = (-2.0 * p.t).exp();
    let lhs: f64 = p.x.iter().zip(x0).map(|(x, c)| (x * e1 - c * e0).powi(2)).sum();
    let ne = ball.effective_dim() as f64;
    lhs < 0.5 * ne * d * (4.0 * r / d).ln()
}

/// Conservative bounding box of `Ξ`: the classical box at `φ(center)` mapped
/// back through `φ⁻¹` corner by corner, padded by 1%.
pub fn xi_bounds(ball: &HeatBall) -> DomainBox {
    let image_center = phi(&ball.center);
    let classical = HeatBall {
        family: if ball.m > 0 { BallFamily::OmegaM } else { BallFamily::Omega },
        center: image_center,
        radius: ball.radius,
        m: ball.m,
    };
    let cb = omega_bounds(&classical);
    let t_lo = phi_inverse_time(cb.t_lo);
    let t_hi = ball.center.t;
    // y = ỹ e^{2s}; e^{2s} ranges over [e^{2 t_lo}, e^{2 t_hi}]
    let scales = [(2.0 * t_lo).exp(), (2.0 * t_hi).exp()];
    let n = ball.dim();
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 0..n {
        let cands = [
            cb.x_lo[i] * scales[0],
            cb.x_lo[i] * scales[1],
            cb.x_hi[i] * scales[0],
            cb.x_hi[i] * scales[1],
        ];
        let lo = cands.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = cands.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let pad = 0.01 * (hi - lo);
        lower[i] = lo - pad;
        upper[i] = hi + pad;
    }
    let pad_t = 0.01 * (t_hi - t_lo);
    DomainBox::from_parts(lower, upper, t_lo - pad_t, t_hi)
}

/// Membership in the Hermite cylinder
/// `Γ_R(x₀,t₀) = {|e^{2(t₀−t)}x − x₀| < R, t ∈ (t₀ − R², t₀)}`.
pub fn gamma_contains(x0: &[f64], t0: f64, big_r: f64, p: &SpaceTimePoint) -> bool {
    if p.dim() != x0.len() || !(p.t < t0 && p.t > t0 - big_r * big_r) {
        return false;
    }
    let f = (2.0 * (t0 - p.t)).exp();
    let d: f64 = p.x.iter().zip(x0).map(|(x, c)| (f * x - c).powi(2)).sum();
    d < big_r * big_r
}

pub fn gamma_bounds(x0: &[f64], t0: f64, big_r: f64) -> DomainBox {
    let fmin = (-2.0 * big_r * big_r).exp();
    let mut lower = Vec::with_capacity(x0.len());
    let mut upper = Vec::with_capacity(x0.len());
    for c in x0 {
        let cands = [fmin * (c - big_r), fmin * (c + big_r), c - big_r, c + big_r];
        lower.push(cands.iter().cloned().fold(f64::INFINITY, f64::min));
        upper.push(cands.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    }
    DomainBox::from_parts(lower, upper, t0 - big_r * big_r, t0)
}

/// The symmetry axis `x₀ e^{2(t − t₀)}` of the `Ξ` balls centred at `(x₀,t₀)`.
pub fn axis_curve(x0: &[f64], t0: f64, t: f64) -> Vec<f64> {
    let f = (2.0 * (t - t0)).exp();
    x0.iter().map(|v| v * f).collect()
}

/// Conservative test that the closed ball lies inside the open set `E`: the
/// ball's bounding box, dilated by one raster cell, must sit strictly inside
/// `E`'s box and (when `E` carries a mask) cover only mask cells.
pub fn ball_closure_in_domain(ball: &HeatBall, domain: &DomainBox) -> bool {
    if ball.dim() != domain.dim() {
        return false;
    }
    let cell = domain.mask.as_ref().map_or(1.0 / DEFAULT_CELLS_PER_UNIT, |m| m.cell);
    let b = ball.bounds().dilated(cell);
    let strictly_inside = (0..domain.dim()).all(|i| b.x_lo[i] > domain.x_lo[i] && b.x_hi[i] < domain.x_hi[i])
        && b.t_lo > domain.t_lo
        && b.t_hi < domain.t_hi;
    if !strictly_inside {
        return false;
    }
    match &domain.mask {
        None => true,
        Some(mask) => mask.box_inside(&b),
    }
}

/// Axis-aligned space-time box, optionally restricted by a raster mask for
/// non-box open sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    pub x_lo: Vec<f64>,
    pub x_hi: Vec<f64>,
    pub t_lo: f64,
    pub t_hi: f64,
    #[serde(skip)]
    pub mask: Option<Arc<Raster>>,
}

impl DomainBox {
    pub fn new(x_lo: Vec<f64>, x_hi: Vec<f64>, t_lo: f64, t_hi: f64) -> Result<Self> {
        if x_lo.is_empty() || x_lo.len() != x_hi.len() {
            return Err(Error::InvalidArgument("corner dimensions disagree".into()));
        }
        if x_lo.iter().zip(&x_hi).any(|(a, b)| !(a < b)) || !(t_lo < t_hi) {
            return Err(Error::InvalidArgument("lower corner must be below upper corner".into()));
        }
        Ok(Self::from_parts(x_lo, x_hi, t_lo, t_hi))
    }

    pub(crate) fn from_parts(x_lo: Vec<f64>, x_hi: Vec<f64>, t_lo: f64, t_hi: f64) -> Self {
        Self { x_lo, x_hi, t_lo, t_hi, mask: None }
    }

    /// `[-half, half]ⁿ × [t_lo, t_hi]`.
    pub fn cube(n: usize, half: f64, t_lo: f64, t_hi: f64) -> Self {
        Self::from_parts(vec![-half; n], vec![half; n], t_lo, t_hi)
    }

    /// Default box for closed-form fields: `|x_i| ≤ 8`, `|t| ≤ 4`.
    pub fn default_for(n: usize) -> Self {
        Self::cube(n, 8.0, -4.0, 4.0)
    }

    /// Restricts the box to the cells of `E` where `inside` holds.
    pub fn with_mask<F>(mut self, cells_per_unit: f64, inside: F) -> Self
    where
        F: Fn(&[f64], f64) -> bool,
    {
        self.mask = Some(Arc::new(Raster::from_predicate(&self, cells_per_unit, inside)));
        self
    }

    pub fn dim(&self) -> usize {
        self.x_lo.len()
    }

    /// Closed-box membership (and mask membership when present).
    pub fn contains(&self, p: &SpaceTimePoint) -> bool {
        self.contains_xt(&p.x, p.t)
    }

    pub fn contains_xt(&self, x: &[f64], t: f64) -> bool {
        if x.len() != self.dim() || !(t >= self.t_lo && t <= self.t_hi) {
            return false;
        }
        if !x.iter().zip(self.x_lo.iter().zip(&self.x_hi)).all(|(v, (lo, hi))| *v >= *lo && *v <= *hi) {
            return false;
        }
        self.mask.as_ref().map_or(true, |m| m.inside_xt(x, t))
    }

    pub fn contains_box(&self, other: &DomainBox) -> bool {
        other.dim() == self.dim()
            && (0..self.dim()).all(|i| other.x_lo[i] >= self.x_lo[i] && other.x_hi[i] <= self.x_hi[i])
            && other.t_lo >= self.t_lo
            && other.t_hi <= self.t_hi
    }

    pub fn dilated(&self, d: f64) -> DomainBox {
        DomainBox::from_parts(
            self.x_lo.iter().map(|v| v - d).collect(),
            self.x_hi.iter().map(|v| v + d).collect(),
            self.t_lo - d,
            self.t_hi + d,
        )
    }

    /// The box rasterized at `cells_per_unit`, reusing the mask if there is one.
    pub fn raster(&self, cells_per_unit: f64) -> Arc<Raster> {
        match &self.mask {
            Some(m) => m.clone(),
            None => Arc::new(Raster::from_predicate(self, cells_per_unit, |_, _| true)),
        }
    }

    /// Conservative box containing `φ(self)` (the box must lie in `t < ∞`).
    pub fn phi_image(&self) -> DomainBox {
        let smax = (-2.0 * self.t_lo).exp().max((-2.0 * self.t_hi).exp());
        let smin = (-2.0 * self.t_lo).exp().min((-2.0 * self.t_hi).exp());
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for i in 0..self.dim() {
            let c = [self.x_lo[i] * smax, self.x_lo[i] * smin, self.x_hi[i] * smax, self.x_hi[i] * smin];
            lo.push(c.iter().cloned().fold(f64::INFINITY, f64::min));
            hi.push(c.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        }
        DomainBox::from_parts(lo, hi, phi_time(self.t_lo), phi_time(self.t_hi))
    }
}

/// One boundary sample of a ball: a time and a spatial point on the slice boundary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundarySample {
    pub t: f64,
    pub x: Vec<f64>,
}

/// Boundary polylines of a ball for plotting: for `n = 1` the two interval
/// endpoints per time slice, for `n = 2` a circle of `angles` points per slice.
pub fn boundary_samples(ball: &HeatBall, slices: usize, angles: usize) -> Result<Vec<BoundarySample>> {
    let n = ball.dim();
    if n > 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    let (lo, hi) = ball.time_range();
    let mut out = Vec::new();
    for k in 0..slices {
        // slices at interior times, clustered toward both ends
        let u = (k as f64 + 0.5) / slices as f64;
        let s = lo + (hi - lo) * 0.5 * (1.0 - (std::f64::consts::PI * u).cos());
        let Some((c, rad)) = ball.slice(s) else { continue };
        if n == 1 {
            out.push(BoundarySample { t: s, x: vec![c[0] - rad] });
            out.push(BoundarySample { t: s, x: vec![c[0] + rad] });
        } else {
            for j in 0..angles {
                let a = 2.0 * std::f64::consts::PI * j as f64 / angles as f64;
                out.push(BoundarySample { t: s, x: vec![c[0] + rad * a.cos(), c[1] + rad * a.sin()] });
            }
        }
    }
    Ok(out)
}
