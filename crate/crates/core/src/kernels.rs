//! Fundamental solution and mean-value kernels.
//!
//! With `τ = t − s`, `L = ln(r/τ)` and `N = n + m`, the descent kernel is
//!
//! ```text
//!     K^m = c_m (|x − y|²/τ² + a_{n,m} L/τ) R^m,   R² = (2Nτ L − |x − y|²)/r,
//!     c_m = ω_m / (2(m+2)(4π)^{m/2}) = 1/(2^{m+1}(m+2)Γ(m/2 + 1)),
//!     a_{n,m} = m(n + m),
//! ```
//!
//! obtained by regarding an `n`-dimensional temperature as one in `n + m`
//! dimensions that is constant in the extra variables, and integrating the
//! classical kernel over the extra `m`-ball of radius `√r R`. For `m = 3`,
//! `c_3 = 1/(60√π)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{BallFamily, HeatBall};
use crate::point::{dist_sq, norm_sq, unit_ball_volume, SpaceTimePoint};
use crate::transference::{phi, phi_inverse};

/// Time separations below this are rejected by the plain kernels.
pub const NEAR_ANCHOR: f64 = 1e-14;

const LOG_SPACE_THRESHOLD: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Classical,
    Ou,
    Hermite,
    DescentClassical,
    DescentOu,
    DescentHermite,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 6] = [
        KernelFamily::Classical,
        KernelFamily::Ou,
        KernelFamily::Hermite,
        KernelFamily::DescentClassical,
        KernelFamily::DescentOu,
        KernelFamily::DescentHermite,
    ];

    pub fn is_descent(self) -> bool {
        matches!(self, KernelFamily::DescentClassical | KernelFamily::DescentOu | KernelFamily::DescentHermite)
    }

    /// The ball family the kernel integrates over.
    pub fn ball_family(self) -> BallFamily {
        match self {
            KernelFamily::Classical => BallFamily::Omega,
            KernelFamily::Ou | KernelFamily::Hermite => BallFamily::Xi,
            KernelFamily::DescentClassical => BallFamily::OmegaM,
            KernelFamily::DescentOu | KernelFamily::DescentHermite => BallFamily::XiM,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            KernelFamily::Classical => "classical",
            KernelFamily::Ou => "ou",
            KernelFamily::Hermite => "hermite",
            KernelFamily::DescentClassical => "descent_classical",
            KernelFamily::DescentOu => "descent_ou",
            KernelFamily::DescentHermite => "descent_hermite",
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        KernelFamily::ALL
            .into_iter()
            .find(|k| k.as_str() == s.to_ascii_lowercase().replace('-', "_"))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown kernel family `{s}`")))
    }
}

/// A kernel `K_{x,t}` with its ball radius and, for descent families, `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub n: usize,
    /// Descent dimension, ignored by the plain families.
    pub m: usize,
    pub r: f64,
    pub anchor: SpaceTimePoint,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, anchor: SpaceTimePoint, r: f64, m: usize) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
        }
        if family.is_descent() && m == 0 {
            return Err(Error::InvalidArgument("descent kernels need m >= 1".into()));
        }
        let m = if family.is_descent() { m } else { 0 };
        Ok(Self { family, n: anchor.dim(), m, r, anchor })
    }

    /// The kernel matching `ball` (descent balls give descent kernels).
    pub fn for_ball(ball: &HeatBall, hermite: bool) -> Result<Self> {
        let family = match (ball.family, hermite) {
            (BallFamily::Omega, false) => KernelFamily::Classical,
            (BallFamily::Xi, false) => KernelFamily::Ou,
            (BallFamily::Xi, true) => KernelFamily::Hermite,
            (BallFamily::OmegaM, false) => KernelFamily::DescentClassical,
            (BallFamily::XiM, false) => KernelFamily::DescentOu,
            (BallFamily::XiM, true) => KernelFamily::DescentHermite,
            (f, h) => return Err(Error::Incompatible(format!("no kernel for {f:?} (hermite = {h})"))),
        };
        Self::new(family, ball.center.clone(), ball.radius, ball.m)
    }

    /// The ball this kernel integrates over.
    pub fn ball(&self) -> Result<HeatBall> {
        HeatBall::new(self.family.ball_family(), self.anchor.clone(), self.r, self.m)
    }

    /// Checks that the kernel may be integrated over `ball`.
    pub fn check_compatible(&self, ball: &HeatBall) -> Result<()> {
        let same = ball.family == self.family.ball_family()
            && ball.center == self.anchor
            && ball.radius == self.r
            && ball.m == self.m;
        if same {
            Ok(())
        } else {
            Err(Error::Incompatible(format!(
                "{} kernel (m = {}, r = {}) does not match {:?} ball (m = {}, r = {})",
                self.family, self.m, self.r, ball.family, ball.m, ball.radius
            )))
        }
    }

    pub fn eval(&self, p: &SpaceTimePoint) -> Result<f64> {
        match self.family {
            KernelFamily::Classical => k_classical(&self.anchor, p),
            KernelFamily::Ou => k_ou(&self.anchor, p),
            KernelFamily::Hermite => k_hermite(&self.anchor, p),
            KernelFamily::DescentClassical => k_descent_classical(self, p),
            KernelFamily::DescentOu => k_descent_ou(self, p),
            KernelFamily::DescentHermite => k_descent_hermite(self, p),
        }
    }
}

/// `Φ(x,t) = e^{−|x|²/4t}/(4πt)^{n/2}` for `t > 0`, zero otherwise.
pub fn fundamental_solution(x: &[f64], t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let n = x.len() as f64;
    (-norm_sq(x) / (4.0 * t)).exp() / (4.0 * PI * t).powf(0.5 * n)
}

fn check_pair(anchor: &SpaceTimePoint, p: &SpaceTimePoint) -> Result<()> {
    p.check_dim(anchor.dim())?;
    if (anchor.t - p.t).abs() < NEAR_ANCHOR {
        return Err(Error::NearAnchor(anchor.t - p.t));
    }
    Ok(())
}

/// `|x − y|²/(4(t − s)²)`, for `s < t`.
pub fn k_classical(anchor: &SpaceTimePoint, p: &SpaceTimePoint) -> Result<f64> {
    check_pair(anchor, p)?;
    let tau = anchor.t - p.t;
    if tau < 0.0 {
        return Err(Error::Precondition(format!("kernel needs s < t, got s - t = {}", -tau)));
    }
    Ok(dist_sq(&anchor.x, &p.x) / (4.0 * tau * tau))
}

/// `ln K^OU` pieces: returns `(log-prefactor, |x e^{−2τ} − y|², expm1(−4τ)²)`
/// with `K^OU = 4 e^{log-prefactor} · num / den`.
fn ou_parts(anchor: &SpaceTimePoint, p: &SpaceTimePoint) -> (f64, f64, f64) {
    // K^OU = 4 e^{−2(n+2)s}|x e^{−2t} − y e^{−2s}|²/(e^{−4t} − e^{−4s})²
    //      = 4 e^{−2ns}|x e^{−2τ} − y|²/expm1(−4τ)²
    let n = anchor.dim() as f64;
    let tau = anchor.t - p.t;
    let f = (-2.0 * tau).exp();
    let num: f64 = anchor.x.iter().zip(&p.x).map(|(x, y)| (x * f - y).powi(2)).sum();
    let den = (-4.0 * tau).exp_m1().powi(2);
    (-2.0 * n * p.t, num, den)
}

fn large(anchor: &SpaceTimePoint, p: &SpaceTimePoint) -> bool {
    anchor.t.abs() > LOG_SPACE_THRESHOLD || p.t.abs() > LOG_SPACE_THRESHOLD
}

/// `K^OU_{x,t}(y,s) = 4 e^{−2(n+2)s}|x e^{−2t} − y e^{−2s}|²/(e^{−4t} − e^{−4s})²`,
/// the pullback of the classical kernel through `φ` times the Jacobian of `φ`.
pub fn k_ou(anchor: &SpaceTimePoint, p: &SpaceTimePoint) -> Result<f64> {
    check_pair(anchor, p)?;
    let (lp, num, den) = ou_parts(anchor, p);
    if num == 0.0 {
        return Ok(0.0);
    }
    if large(anchor, p) {
        Ok((4f64.ln() + lp + num.ln() - den.ln()).exp())
    } else {
        Ok(4.0 * lp.exp() * num / den)
    }
}

/// Log of the Hermite weight ratio `e^{(s−t)n} e^{(|y|² − |x|²)/2}`.
fn hermite_log_ratio(anchor: &SpaceTimePoint, p: &SpaceTimePoint) -> f64 {
    let n = anchor.dim() as f64;
    (p.t - anchor.t) * n + 0.5 * (norm_sq(&p.x) - norm_sq(&anchor.x))
}

/// `K^H = e^{(s−t)n} e^{(|y|² − |x|²)/2} K^OU`.
pub fn k_hermite(anchor: &SpaceTimePoint, p: &SpaceTimePoint) -> Result<f64> {
    check_pair(anchor, p)?;
    let (lp, num, den) = ou_parts(anchor, p);
    if num == 0.0 {
        return Ok(0.0);
    }
    let lr = hermite_log_ratio(anchor, p);
    if large(anchor, p) {
        Ok((4f64.ln() + lp + lr + num.ln() - den.ln()).exp())
    } else {
        Ok(lr.exp() * (4.0 * lp.exp() * num / den))
    }
}

/// `c_m = 1/(2^{m+1}(m+2)Γ(m/2 + 1))`.
pub fn descent_c(m: usize) -> f64 {
    unit_ball_volume(m) / (2.0 * (m as f64 + 2.0) * (4.0 * PI).powf(0.5 * m as f64))
}

/// `a_{n,m} = m(n + m)`.
pub fn descent_a(n: usize, m: usize) -> f64 {
    (m * (n + m)) as f64
}

/// Descent kernel on `Ω_m(x,t;r)`. Zero on the lateral boundary.
pub fn k_descent_classical(spec: &KernelSpec, p: &SpaceTimePoint) -> Result<f64> {
    p.check_dim(spec.n)?;
    descent_raw(spec.n, spec.m, spec.r, &spec.anchor.x, spec.anchor.t, &p.x, p.t)
}

fn descent_raw(n: usize, m: usize, r: f64, x: &[f64], t: f64, y: &[f64], s: f64) -> Result<f64> {
    let tau = t - s;
    if !(tau > 0.0 && tau < r) {
        return Err(Error::OutsideBall(format!("t - s = {tau} not in (0, {r})")));
    }
    let l = (r / tau).ln();
    let d2 = dist_sq(x, y);
    let big_n = (n + m) as f64;
    let rr2 = (2.0 * big_n * tau * l - d2) / r;
    if rr2 < 0.0 {
        return Err(Error::OutsideBall(format!("R^2 = {rr2} < 0")));
    }
    let bracket = d2 / (tau * tau) + descent_a(n, m) * l / tau;
    Ok(descent_c(m) * bracket * rr2.powf(0.5 * m as f64))
}

/// `e^{−2(n+2)s} K^m_{φ(x,t)}(φ(y,s))`, supported on `φ⁻¹(Ω_m(φ(x,t); r))`.
pub fn k_descent_ou(spec: &KernelSpec, p: &SpaceTimePoint) -> Result<f64> {
    p.check_dim(spec.n)?;
    let a = phi(&spec.anchor);
    let q = phi(p);
    let core = descent_raw(spec.n, spec.m, spec.r, &a.x, a.t, &q.x, q.t)?;
    let lj = -2.0 * (spec.n as f64 + 2.0) * p.t;
    if core == 0.0 {
        return Ok(0.0);
    }
    if p.t.abs() > LOG_SPACE_THRESHOLD {
        Ok((lj + core.ln()).exp())
    } else {
        Ok(lj.exp() * core)
    }
}

/// Hermite weight times [`k_descent_ou`].
pub fn k_descent_hermite(spec: &KernelSpec, p: &SpaceTimePoint) -> Result<f64> {
    let k = k_descent_ou(spec, p)?;
    if k == 0.0 {
        return Ok(0.0);
    }
    Ok((hermite_log_ratio(&spec.anchor, p) + k.ln()).exp())
}

/// Result of [`kernel_bound_estimate`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundEstimate {
    /// Sampled sup over all samples.
    pub estimate: f64,
    /// Sampled sup over the first half of the samples.
    pub half_estimate: f64,
    pub samples: usize,
}

impl BoundEstimate {
    pub fn relative_change(&self) -> f64 {
        (self.estimate - self.half_estimate).abs() / self.estimate
    }
}

const BOUND_SHARDS: usize = 64;

/// Monte-Carlo estimate of `sup r K^m` (classical) or `sup r e^{2(n+2)s} K^m_OU`
/// over anchors, radii and ball points. Anchors are drawn from
/// `spec.anchor + [−5,5]ⁿ × [−2,2]`, radii log-uniformly from `[10⁻³, 10]`, and points
/// uniformly in `(τ, y)` within the ball. Deterministic for a given seed.
pub fn kernel_bound_estimate(spec: &KernelSpec, sample_count: usize, seed: u64) -> Result<BoundEstimate> {
    if !spec.family.is_descent() {
        return Err(Error::UnboundedKernel(format!(
            "{} kernel is unbounded near its anchor",
            spec.family
        )));
    }
    if sample_count < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let per = sample_count.div_ceil(BOUND_SHARDS);
    let shard_max: Vec<(f64, f64)> = (0..BOUND_SHARDS)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard as u64);
            let start = (shard * per).min(sample_count);
            let end = ((shard + 1) * per).min(sample_count);
            let (mut all, mut half) = (0.0f64, 0.0f64);
            for i in start..end {
                let v = bound_sample(&mut rng, spec);
                all = all.max(v);
                if i < sample_count / 2 {
                    half = half.max(v);
                }
            }
            (all, half)
        })
        .collect();
    let estimate = shard_max.iter().map(|p| p.0).fold(0.0, f64::max);
    let half_estimate = shard_max.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(BoundEstimate { estimate, half_estimate, samples: sample_count })
}

/// One scaled kernel value at a random (anchor, r, point).
fn bound_sample(rng: &mut ChaCha8Rng, base: &KernelSpec) -> f64 {
    let (family, n, m) = (base.family, base.n, base.m);
    let x: Vec<f64> = base.anchor.x.iter().map(|c| c + rng.gen_range(-5.0..5.0)).collect();
    let t: f64 = base.anchor.t + rng.gen_range(-2.0..2.0);
    let r = 10f64.powf(rng.gen_range(-3.0..1.0));
    let anchor = SpaceTimePoint { x, t };
    // point in the classical image ball, in φ-coordinates for the OU family
    let centre = if family == KernelFamily::DescentClassical { anchor.clone() } else { phi(&anchor) };
    let tau = r * rng.gen::<f64>();
    if tau <= 0.0 {
        return 0.0;
    }
    let rho = (2.0 * (n + m) as f64 * tau * (r / tau).ln()).sqrt();
    let dir = uniform_in_ball(rng, n);
    let q = SpaceTimePoint {
        x: centre.x.iter().zip(&dir).map(|(c, d)| c + rho * d).collect(),
        t: centre.t - tau,
    };
    let spec = KernelSpec { family, n, m, r, anchor };
    match family {
        KernelFamily::DescentClassical => k_descent_classical(&spec, &q).map_or(0.0, |k| r * k),
        _ => {
            let Ok(p) = phi_inverse(&q) else { return 0.0 };
            match k_descent_ou(&spec, &p) {
                Ok(k) => r * (2.0 * (n as f64 + 2.0) * p.t + k.ln()).exp(),
                Err(_) => 0.0,
            }
        }
    }
}

/// Uniform point in the unit ball by rejection.
pub(crate) fn uniform_in_ball<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if norm_sq(&v) < 1.0 {
            return v;
        }
    }
}

/// Fitted exponent `β` in `K ~ (t − s)^{−β}` along the parabolic approach
/// `y = axis + ½√τ e₁` to the anchor of a plain kernel, over
/// `τ ∈ [10⁻⁸ r, 10⁻³ r]` (τ measured in `φ`-time for the OU and Hermite kernels).
pub fn divergence_exponent(spec: &KernelSpec) -> Result<f64> {
    if spec.family.is_descent() {
        return Err(Error::InvalidArgument("descent kernels are bounded".into()));
    }
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for k in 0..=20 {
        let tau = spec.r * 10f64.powf(-8.0 + 5.0 * k as f64 / 20.0);
        let p = match spec.family {
            KernelFamily::Classical => {
                let mut y = spec.anchor.x.clone();
                y[0] += 0.5 * tau.sqrt();
                SpaceTimePoint { x: y, t: spec.anchor.t - tau }
            }
            _ => {
                let a = phi(&spec.anchor);
                let mut y = a.x.clone();
                y[0] += 0.5 * tau.sqrt();
                phi_inverse(&SpaceTimePoint { x: y, t: a.t - tau })?
            }
        };
        let kv = spec.eval(&p)?;
        lx.push(tau.ln());
        ly.push(kv.ln());
    }
    Ok(-crate::stats::fit_slope(&lx, &ly))
}

/// Kernel values on a regular grid over the ball's bounding box (points
/// inside the ball only), as `(y, s, K)` rows.
pub fn kernel_profile(spec: &KernelSpec, ny: usize, ns: usize) -> Result<Vec<(Vec<f64>, f64, f64)>> {
    let ball = spec.ball()?;
    let b = ball.bounds();
    let n = spec.n;
    let mut rows = Vec::new();
    let total = ny.pow(n as u32);
    for js in 0..ns {
        let s = b.t_lo + (b.t_hi - b.t_lo) * (js as f64 + 0.5) / ns as f64;
        for idx in 0..total {
            let mut rem = idx;
            let y: Vec<f64> = (0..n)
                .map(|i| {
                    let k = rem % ny;
                    rem /= ny;
                    b.x_lo[i] + (b.x_hi[i] - b.x_lo[i]) * (k as f64 + 0.5) / ny as f64
                })
                .collect();
            let p = SpaceTimePoint { x: y, t: s };
            if ball.contains(&p) {
                if let Ok(k) = spec.eval(&p) {
                    rows.push((p.x, s, k));
                }
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(x: f64, t: f64) -> SpaceTimePoint {
        SpaceTimePoint::scalar(x, t)
    }

    #[test]
    fn fundamental_solution_examples() {
        assert!((fundamental_solution(&[0.0], 0.5) - (2.0 * PI).powf(-0.5)).abs() < 1e-15);
        assert!((fundamental_solution(&[0.0, 0.0], 0.25) - 1.0 / PI).abs() < 1e-15);
        assert_eq!(fundamental_solution(&[0.3], 0.0), 0.0);
        assert_eq!(fundamental_solution(&[0.3], -1.0), 0.0);
        // trapezoid on [-12, 12] is spectrally accurate for a Gaussian
        let h = 1e-3;
        let mass: f64 = (-12000..=12000).map(|i| fundamental_solution(&[i as f64 * h], 0.5) * h).sum();
        assert!((mass - 1.0).abs() < 1e-8);
    }

    #[test]
    fn classical_examples() {
        assert_eq!(k_classical(&pt(0.0, 0.0), &pt(1.0, -1.0)).unwrap(), 0.25);
        assert_eq!(k_classical(&pt(0.4, 0.0), &pt(0.4, -0.3)).unwrap(), 0.0);
        let a = k_classical(&pt(0.0, 0.0), &pt(0.7, -0.2)).unwrap();
        let b = k_classical(&pt(0.0, 0.0), &pt(-0.7, -0.2)).unwrap();
        assert_eq!(a, b);
        assert!(k_classical(&pt(0.0, 0.0), &pt(0.0, 0.1)).is_err());
        assert!(matches!(k_classical(&pt(0.0, 0.0), &pt(1.0, -1e-16)), Err(Error::NearAnchor(_))));
    }

    #[test]
    fn ou_examples() {
        let v = k_ou(&pt(0.0, 0.0), &pt(1.0, -0.25)).unwrap();
        let e = std::f64::consts::E;
        let want = 4.0 * e.powf(2.5) / (e - 1.0).powi(2);
        assert!((v - want).abs() < 1e-13 * want);
        // on the axis curve
        let x = 0.8;
        let (t, s) = (0.3, 0.1);
        let y = x * (2.0f64 * (s - t)).exp();
        assert!(k_ou(&pt(x, t), &pt(y, s)).unwrap().abs() < 1e-28);
        assert!(k_ou(&pt(x, t), &pt(y, t)).is_err());
    }

    #[test]
    fn ou_log_space_agrees() {
        // both branches on a point just inside the threshold
        let a = SpaceTimePoint::new(vec![0.3, -0.2], 19.9).unwrap();
        let p = SpaceTimePoint::new(vec![0.5, 0.1], 19.8).unwrap();
        let direct = k_ou(&a, &p).unwrap();
        let (lp, num, den) = ou_parts(&a, &p);
        let logged = (4f64.ln() + lp + num.ln() - den.ln()).exp();
        assert!((direct - logged).abs() < 1e-12 * direct);
        // far in the past the naive formula would overflow
        let a = pt(1.0, -200.0);
        let v = k_ou(&a, &pt(1.0 * (-0.2f64).exp() * 1.001, -200.1)).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn literal_factor_eight_normalizes_to_two() {
        // Integrating (4πr)^{-1/2} K over Ξ with the constant 8 in place of 4 gives 2.
        let anchor = pt(0.3, 0.2);
        let r = 0.5;
        let spec = KernelSpec::new(KernelFamily::Ou, anchor, r, 0).unwrap();
        let ball = spec.ball().unwrap();
        let res = crate::quadrature::mv_integral(
            &crate::field::ScalarField::constant(1.0, crate::Equation::Ou, crate::DomainBox::default_for(1)),
            &ball,
            &spec,
            &crate::quadrature::MvConfig::default_for(1),
        )
        .unwrap();
        assert!((2.0 * res.value - 2.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn pushforward_identity(x in -2.0f64..2.0, t in -1.0f64..1.0, r in 0.01f64..2.0, a in 0.0f64..1.0, b in -0.99f64..0.99) {
            // K^OU(y,s) = e^{-2(n+2)s} K_classical(φ(x,t), φ(y,s)) at points of Ξ
            let anchor = pt(x, t);
            let c = phi(&anchor);
            let tau = r * a.max(1e-6);
            let rho = (2.0 * tau * (r / tau).ln()).sqrt();
            let q = pt(c.x[0] + b * rho, c.t - tau);
            let p = phi_inverse(&q).unwrap();
            let lhs = k_ou(&anchor, &p).unwrap();
            let rhs = (-6.0 * p.t).exp() * k_classical(&c, &q).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
            let h = k_hermite(&anchor, &p).unwrap();
            let w = ((p.t - t) + 0.5 * (p.x[0] * p.x[0] - x * x)).exp();
            if lhs > 0.0 {
                prop_assert!((h / lhs - w).abs() <= 1e-12 * w);
            }
        }

        #[test]
        fn ou_nonnegative(x in -2.0f64..2.0, y in -2.0f64..2.0, t in -1.0f64..1.0, d in 1e-6f64..1.0) {
            prop_assert!(k_ou(&pt(x, t), &pt(y, t - d)).unwrap() >= 0.0);
        }
    }

    #[test]
    fn hermite_examples() {
        let a = pt(0.6, 0.4);
        let p = pt(0.6, 0.1);
        let ratio = k_hermite(&a, &p).unwrap() / k_ou(&a, &p).unwrap();
        assert!((ratio - (-0.3f64).exp()).abs() < 1e-14);
        let axis = pt(0.6 * (-0.6f64).exp(), 0.1);
        assert_eq!(k_hermite(&a, &axis).unwrap(), 0.0);
    }

    #[test]
    fn descent_constants() {
        assert!((descent_c(3) - 1.0 / (60.0 * PI.sqrt())).abs() < 1e-16);
        assert!((descent_c(1) - 1.0 / (6.0 * PI.sqrt())).abs() < 1e-16);
        assert!((descent_c(2) - 1.0 / 32.0).abs() < 1e-16);
        assert_eq!(descent_a(1, 3), 12.0);
        assert_eq!(descent_a(2, 3), 15.0);
    }

    #[test]
    fn descent_vanishes_on_boundary_and_rejects_outside() {
        let spec = KernelSpec::new(KernelFamily::DescentClassical, pt(0.0, 0.0), 1.0, 3).unwrap();
        let tau: f64 = 0.3;
        let rho = (8.0 * tau * (1.0 / tau).ln()).sqrt();
        let on = k_descent_classical(&spec, &pt(rho * (1.0 - 1e-15), -tau)).unwrap();
        assert!(on < 1e-18);
        assert!(matches!(k_descent_classical(&spec, &pt(rho * 1.01, -tau)), Err(Error::OutsideBall(_))));
        assert!(k_descent_classical(&spec, &pt(0.0, -1.5)).is_err());
        // order-m vanishing: K ~ dist^{3/2} near the lateral boundary
        let k1 = k_descent_classical(&spec, &pt(rho * (1.0 - 1e-4), -tau)).unwrap();
        let k2 = k_descent_classical(&spec, &pt(rho * (1.0 - 1e-6), -tau)).unwrap();
        assert!(((k1 / k2).log10() - 3.0).abs() < 0.01);
    }

    #[test]
    fn descent_ou_is_pullback() {
        let anchor = SpaceTimePoint::new(vec![0.2, -0.4], 0.5).unwrap();
        let spec = KernelSpec::new(KernelFamily::DescentOu, anchor.clone(), 0.3, 3).unwrap();
        let c = phi(&anchor);
        let q = SpaceTimePoint::new(vec![c.x[0] + 0.1, c.x[1]], c.t - 0.05).unwrap();
        let p = phi_inverse(&q).unwrap();
        let cl = KernelSpec::new(KernelFamily::DescentClassical, c, 0.3, 3).unwrap();
        let want = (-8.0 * p.t).exp() * k_descent_classical(&cl, &q).unwrap();
        assert!((k_descent_ou(&spec, &p).unwrap() - want).abs() < 1e-12 * want);
        let h = KernelSpec { family: KernelFamily::DescentHermite, ..spec.clone() };
        let w = (2.0 * (p.t - 0.5) + 0.5 * (norm_sq(&p.x) - norm_sq(&anchor.x))).exp();
        assert!((h.eval(&p).unwrap() - w * want).abs() < 1e-12 * want);
    }

    #[test]
    fn bound_estimates() {
        let plain = KernelSpec::new(KernelFamily::Ou, pt(0.0, 0.0), 1.0, 0).unwrap();
        assert!(matches!(kernel_bound_estimate(&plain, 100, 1), Err(Error::UnboundedKernel(_))));
        let spec = KernelSpec::new(KernelFamily::DescentClassical, pt(0.0, 0.0), 1.0, 3).unwrap();
        let a = kernel_bound_estimate(&spec, 20_000, 7).unwrap();
        let b = kernel_bound_estimate(&spec, 20_000, 7).unwrap();
        assert_eq!(a.estimate, b.estimate);
        assert!(a.estimate.is_finite() && a.estimate > 0.0);
        assert!(a.half_estimate <= a.estimate);
        let moved = KernelSpec { anchor: pt(3.0, 1.0), ..spec };
        let c = kernel_bound_estimate(&moved, 20_000, 7).unwrap();
        assert!((a.estimate - c.estimate).abs() < 1e-9 * a.estimate);
    }

    #[test]
    fn plain_kernels_diverge_like_inverse_tau() {
        for fam in [KernelFamily::Classical, KernelFamily::Ou, KernelFamily::Hermite] {
            let spec = KernelSpec::new(fam, SpaceTimePoint::new(vec![0.4, 0.1], 0.3).unwrap(), 1.0, 0).unwrap();
            let beta = divergence_exponent(&spec).unwrap();
            assert!((0.9..=1.1).contains(&beta), "{fam}: {beta}");
        }
    }

    #[test]
    fn family_parse() {
        for f in KernelFamily::ALL {
            assert_eq!(f.to_string().parse::<KernelFamily>().unwrap(), f);
        }
        assert_eq!("descent-ou".parse::<KernelFamily>().unwrap(), KernelFamily::DescentOu);
    }
}
