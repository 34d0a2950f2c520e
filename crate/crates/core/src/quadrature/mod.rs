//! Mean-value integrals, residuals and the sub/super classifier.

mod engine;
pub mod gauss;
mod montecarlo;

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::field::{Equation, ScalarField};
use crate::geometry::{ball_closure_in_domain, HeatBall};
use crate::kernels::KernelSpec;
use crate::point::SpaceTimePoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MvMethod {
    /// Tensor Gauss rules, `n ≤ 2`.
    Tensor,
    MonteCarlo,
}

impl std::str::FromStr for MvMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tensor" => Ok(MvMethod::Tensor),
            "montecarlo" | "monte-carlo" | "mc" => Ok(MvMethod::MonteCarlo),
            _ => Err(Error::InvalidArgument(format!("unknown method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MvConfig {
    pub method: MvMethod,
    /// Bound on the tensor error estimate.
    pub tol: f64,
    /// Finest tensor refinement level; level `k` uses `24·2^k` time nodes.
    pub max_level: usize,
    pub mc_target_se: f64,
    pub mc_min_samples: usize,
    pub mc_max_samples: usize,
    pub seed: u64,
    /// Use the descent kernels `K^m` (and balls `Ω_m`, `φ⁻¹Ω_m`) for residuals.
    pub descent_m: Option<usize>,
}

impl MvConfig {
    /// Tolerance `10⁻⁶` for `n = 1`, `10⁻⁵` for `n = 2`; Monte Carlo for `n ≥ 3`.
    pub fn default_for(n: usize) -> Self {
        Self {
            method: if n <= 2 { MvMethod::Tensor } else { MvMethod::MonteCarlo },
            tol: if n <= 1 { 1e-6 } else { 1e-5 },
            max_level: if n <= 1 { 4 } else { 2 },
            mc_target_se: 1e-3,
            mc_min_samples: 1 << 17,
            mc_max_samples: 10_000_000,
            seed: 0x5eed,
            descent_m: None,
        }
    }

    pub fn monte_carlo(mut self) -> Self {
        self.method = MvMethod::MonteCarlo;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MvResult {
    pub value: f64,
    /// Difference between the two finest tensor levels, or the Monte-Carlo
    /// standard error.
    pub error_estimate: f64,
    pub method: MvMethod,
    pub nodes_or_samples: usize,
}

/// `(4πr)^{−n/2} ∬_ball f K`.
pub fn mv_integral(f: &ScalarField, ball: &HeatBall, kernel: &KernelSpec, cfg: &MvConfig) -> Result<MvResult> {
    kernel.check_compatible(ball)?;
    if ball.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: ball.dim() });
    }
    if !ball_closure_in_domain(ball, f.domain()) {
        return Err(Error::OutsideDomain {
            field: f.label().to_string(),
            point: format!("closure of {:?} ball at {} with r = {}", ball.family, ball.center, ball.radius),
        });
    }
    match cfg.method {
        MvMethod::Tensor => tensor(f, ball, kernel, cfg),
        MvMethod::MonteCarlo => {
            let out = montecarlo::monte_carlo(f, ball, kernel, cfg)?;
            if !(out.std_error <= cfg.mc_target_se) {
                return Err(Error::ToleranceNotReached { tol: cfg.mc_target_se, estimate: out.std_error });
            }
            Ok(MvResult {
                value: out.value,
                error_estimate: out.std_error,
                method: MvMethod::MonteCarlo,
                nodes_or_samples: out.samples,
            })
        }
    }
}

fn tensor(f: &ScalarField, ball: &HeatBall, kernel: &KernelSpec, cfg: &MvConfig) -> Result<MvResult> {
    let frame = engine::Frame::new(ball, kernel);
    let (mut prev, mut nodes) = engine::tensor_level(f, &frame, 0)?;
    let mut est = f64::INFINITY;
    for level in 1..=cfg.max_level.max(1) {
        let (val, nn) = engine::tensor_level(f, &frame, level)?;
        nodes += nn;
        est = (val - prev).abs();
        prev = val;
        if est <= cfg.tol {
            break;
        }
    }
    if !(est <= cfg.tol) {
        return Err(Error::ToleranceNotReached { tol: cfg.tol, estimate: est });
    }
    if !prev.is_finite() {
        return Err(Error::NoConvergence(prev));
    }
    Ok(MvResult { value: prev, error_estimate: est, method: MvMethod::Tensor, nodes_or_samples: nodes })
}

/// Ball and kernel used for `equation` at `center` with radius `r`.
pub fn matching_ball(center: &SpaceTimePoint, r: f64, equation: Equation, descent_m: Option<usize>) -> Result<(HeatBall, KernelSpec)> {
    let ball = match (equation, descent_m) {
        (Equation::Heat, None) => HeatBall::omega(center.clone(), r)?,
        (Equation::Heat, Some(m)) => HeatBall::omega_m(center.clone(), r, m)?,
        (Equation::Ou | Equation::Hermite, None) => HeatBall::xi(center.clone(), r)?,
        (Equation::Ou | Equation::Hermite, Some(m)) => HeatBall::xi_m(center.clone(), r, m)?,
        (Equation::None, _) => return Err(Error::InvalidArgument("equation must be heat, ou or hermite".into())),
    };
    let kernel = KernelSpec::for_ball(&ball, equation == Equation::Hermite)?;
    Ok((ball, kernel))
}

/// `f(center) − mv_integral(f)` over the ball and kernel matching `equation`:
/// zero for temperatures, `≤ 0` for subtemperatures, `≥ 0` for supertemperatures.
pub fn mv_residual(f: &ScalarField, center: &SpaceTimePoint, r: f64, equation: Equation, cfg: &MvConfig) -> Result<f64> {
    Ok(residual_with_error(f, center, r, equation, cfg)?.0)
}

/// Residual together with the integral's error estimate.
pub fn residual_with_error(
    f: &ScalarField,
    center: &SpaceTimePoint,
    r: f64,
    equation: Equation,
    cfg: &MvConfig,
) -> Result<(f64, f64)> {
    let (ball, kernel) = matching_ball(center, r, equation, cfg.descent_m)?;
    let mv = mv_integral(f, &ball, &kernel, cfg)?;
    Ok((f.eval(center)? - mv.value, mv.error_estimate))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Temperature,
    Sub,
    Super,
    Neither,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Temperature => "temperature",
            Classification::Sub => "sub",
            Classification::Super => "super",
            Classification::Neither => "neither",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifyReport {
    pub label: Classification,
    /// `(r, residual)` for each radius.
    pub residuals: Vec<(f64, f64)>,
    pub tol: f64,
}

/// Label from a residual sequence.
pub fn classify_residuals(residuals: &[f64], tol: f64) -> Classification {
    if residuals.iter().all(|r| r.abs() <= tol) {
        Classification::Temperature
    } else if residuals.iter().all(|&r| r <= tol) {
        Classification::Sub
    } else if residuals.iter().all(|&r| r >= -tol) {
        Classification::Super
    } else {
        Classification::Neither
    }
}

/// Classifies `f` at `center` from residuals over a decreasing radius sequence.
pub fn classify_point(
    f: &ScalarField,
    center: &SpaceTimePoint,
    radii: &[f64],
    equation: Equation,
    tol: f64,
    cfg: &MvConfig,
) -> Result<ClassifyReport> {
    if radii.is_empty() || radii.windows(2).any(|w| !(w[1] < w[0])) || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidArgument("radii must be positive and strictly decreasing".into()));
    }
    let mut residuals = Vec::with_capacity(radii.len());
    for &r in radii {
        residuals.push((r, mv_residual(f, center, r, equation, cfg)?));
    }
    let vals: Vec<f64> = residuals.iter().map(|p| p.1).collect();
    Ok(ClassifyReport { label: classify_residuals(&vals, tol), residuals, tol })
}

/// Sign of the finite-difference operator `∂t f − L f` over sample points
/// around `center`: `Temperature` if it vanishes to `tol`, `Sub` if `≤ 0`,
/// `Super` if `≥ 0`, `Neither` if both signs occur.
pub fn operator_sign(f: &ScalarField, points: &[SpaceTimePoint], equation: Equation, tol: f64, h: f64) -> Result<Classification> {
    let mut vals = Vec::with_capacity(points.len());
    for p in points {
        // residual of the MV sign convention: sub ⇔ ∂t f − L f ≤ 0
        vals.push(crate::transference::operator_residual(f, equation, p, h)?);
    }
    Ok(classify_residuals(&vals, tol))
}
