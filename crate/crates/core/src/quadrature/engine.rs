//! Tensor-product Gauss rules over heat balls, for `n ≤ 2`.
//!
//! Every ball is handled in the coordinates where it is a classical heat ball
//! `Ω̃` of radius `r` about `c̃` (for `Ξ` balls these are the `φ`-coordinates;
//! the kernel `K^OU` and the Jacobian of `φ⁻¹` cancel to the classical kernel).
//! With `τ = r e^{−v²}`, `ρ² = 2Nτv²` and `ỹ = c̃ + ρw`, `w` in the unit ball,
//!
//! ```text
//!     K dỹ dτ = N v³ |w|² ρⁿ dw dv                                    (plain)
//!     K dỹ dτ = 2 c_m N v³ (2|w|² + m) (ρ²(1 − |w|²)/r)^{m/2} ρⁿ dw dv  (descent)
//! ```
//!
//! which is smooth in `v` and decays like `e^{−n v²/2}`. The unit ball is
//! parametrized by `w = sin θ` (and an angle for `n = 2`) so that the
//! `(1 − |w|²)^{m/2}` factor becomes a power of `cos θ`.

use rayon::prelude::*;
use std::f64::consts::PI;

use super::gauss::gauss_legendre_on;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{BallFamily, HeatBall};
use crate::kernels::{descent_c, KernelFamily, KernelSpec};
use crate::point::norm_sq;
use crate::transference::phi;

/// Upper limit of the `v` integral; the neglected tail is below `10⁻¹¹`.
const V_MAX: f64 = 8.0;

/// A heat ball seen in its classical coordinates, with the map back to the
/// coordinates of the field.
pub(crate) struct Frame {
    pub n: usize,
    pub m: usize,
    pub r: f64,
    /// Centre in classical coordinates.
    pub c: Vec<f64>,
    /// Physical centre.
    pub x0: Vec<f64>,
    pub t0: f64,
    pub pulled_back: bool,
    pub hermite: bool,
}

impl Frame {
    pub fn new(ball: &HeatBall, kernel: &KernelSpec) -> Self {
        let pulled_back = matches!(ball.family, BallFamily::Xi | BallFamily::XiM);
        let c = if pulled_back { phi(&ball.center).x } else { ball.center.x.clone() };
        Self {
            n: ball.dim(),
            m: ball.m,
            r: ball.radius,
            c,
            x0: ball.center.x.clone(),
            t0: ball.center.t,
            pulled_back,
            hermite: matches!(kernel.family, KernelFamily::Hermite | KernelFamily::DescentHermite),
        }
    }

    /// Physical time gap `t0 − s` for a classical gap `τ̃`.
    pub fn physical_gap(&self, tau: f64) -> f64 {
        if self.pulled_back {
            0.25 * (4.0 * tau * (4.0 * self.t0).exp()).ln_1p()
        } else {
            tau
        }
    }

    /// `G(ỹ, t̃0 − τ̃)`: the field pulled back to classical coordinates, times
    /// the Hermite weight ratio when integrating against `K^H`.
    pub fn integrand(&self, f: &ScalarField, y_cl: &[f64], tau: f64) -> Result<f64> {
        if !self.pulled_back {
            return f.eval_at(y_cl, self.t0 - tau);
        }
        let gap = self.physical_gap(tau);
        let s = self.t0 - gap;
        let scale = (2.0 * s).exp();
        let y: Vec<f64> = y_cl.iter().map(|v| v * scale).collect();
        let val = f.eval_at(&y, s)?;
        if self.hermite {
            let lw = -(self.n as f64) * gap + 0.5 * (norm_sq(&y) - norm_sq(&self.x0));
            Ok(val * lw.exp())
        } else {
            Ok(val)
        }
    }
}

/// Spatial rule on the unit ball: `(w, weight)` pairs.
fn unit_ball_rule(n: usize, level: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    match n {
        1 => {
            let (th, wt) = gauss_legendre_on(12 << level, -0.5 * PI, 0.5 * PI);
            Ok(th.iter().zip(&wt).map(|(t, w)| (vec![t.sin()], w * t.cos())).collect())
        }
        2 => {
            let (th, wt) = gauss_legendre_on(12 << level, 0.0, 0.5 * PI);
            let na = 24 << level;
            let da = 2.0 * PI / na as f64;
            let mut out = Vec::with_capacity(th.len() * na);
            for (t, w) in th.iter().zip(&wt) {
                let om = t.sin();
                for k in 0..na {
                    let a = da * k as f64;
                    out.push((vec![om * a.cos(), om * a.sin()], w * t.cos() * om * da));
                }
            }
            Ok(out)
        }
        _ => Err(Error::UnsupportedDimension(n)),
    }
}

/// `(value, node count)` of the mean value at refinement `level`.
pub(crate) fn tensor_level(f: &ScalarField, frame: &Frame, level: usize) -> Result<(f64, usize)> {
    let n = frame.n;
    let m = frame.m;
    let big_n = (n + m) as f64;
    let spatial = unit_ball_rule(n, level)?;
    let (vs, wv) = gauss_legendre_on(24 << level, 0.0, V_MAX);
    let cm = if m > 0 { descent_c(m) } else { 0.0 };
    let r = frame.r;
    let slices: Vec<Result<f64>> = vs
        .par_iter()
        .zip(wv.par_iter())
        .map(|(&v, &wvi)| {
            let tau = r * (-v * v).exp();
            if tau <= 0.0 {
                return Ok(0.0);
            }
            let rho2 = 2.0 * big_n * tau * v * v;
            let rho = rho2.sqrt();
            let rho_n = rho.powi(n as i32);
            let v3 = v * v * v;
            let mut acc = 0.0;
            let mut y = vec![0.0; n];
            for (w, ww) in &spatial {
                let w2 = norm_sq(w);
                let kern = if m == 0 {
                    big_n * v3 * w2 * rho_n
                } else {
                    let rr2 = (rho2 * (1.0 - w2) / r).max(0.0);
                    2.0 * cm * big_n * v3 * (2.0 * w2 + m as f64) * rr2.powf(0.5 * m as f64) * rho_n
                };
                if kern == 0.0 {
                    continue;
                }
                for i in 0..n {
                    y[i] = frame.c[i] + rho * w[i];
                }
                acc += ww * kern * frame.integrand(f, &y, tau)?;
            }
            Ok(wvi * acc)
        })
        .collect();
    let mut total = 0.0;
    for s in slices {
        total += s?;
    }
    let nodes = vs.len() * spatial.len();
    Ok((total * (4.0 * PI * r).powf(-0.5 * n as f64), nodes))
}
