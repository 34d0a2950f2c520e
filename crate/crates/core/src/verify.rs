//! Maximum principles, infinite propagation and Harnack quotients as
//! numerical checks on grid solutions and closed-form fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Equation, ScalarField};
use crate::geometry::{ball_closure_in_domain, gamma_contains, lambda_reachable, DomainBox, HeatBall, Raster};
use crate::kernels::{fundamental_solution, uniform_in_ball};
use crate::point::{norm_sq, SpaceTimePoint};
use crate::solvers::GridSolution;
use crate::stats::{fit_slope, mean_and_se};
use crate::transference::{heat_to_ou, phi, phi_inverse, phi_time};

const SHARDS: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Violation,
    NotApplicable,
    Degenerate,
}

#[derive(Debug, Clone, Serialize)]
pub struct MaxPrincipleReport {
    pub equation: Equation,
    pub t0: f64,
    pub interior_max: (f64, SpaceTimePoint),
    pub parabolic_boundary_max: f64,
    pub violation: bool,
    pub tolerance: f64,
    pub status: CheckStatus,
}

fn tolerance_for(g: &GridSolution) -> f64 {
    let scale = g.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    10.0 * g.truncation_estimate.unwrap_or(0.0) + 1e-12 * scale
}

fn point(g: &GridSolution, flat: usize, k: usize) -> SpaceTimePoint {
    SpaceTimePoint { x: g.node(flat), t: g.time(k) }
}

/// Weak maximum principle on the part of the grid with `t ≤ t0`. The
/// tolerance is ten times the solution's truncation estimate.
///
/// For Hermite solutions the principle needs a nonnegative interior sup; a
/// negative one gives `NotApplicable`.
pub fn check_weak_max(g: &GridSolution, t0: f64) -> Result<MaxPrincipleReport> {
    if !(t0 >= g.t_lo && t0 <= g.t_hi() + 1e-12) {
        return Err(Error::InvalidArgument(format!("t0 = {t0} outside [{}, {}]", g.t_lo, g.t_hi())));
    }
    let kmax = (((t0 - g.t_lo) / g.dt) + 1e-9).floor() as usize;
    let kmax = kmax.min(g.steps);
    let mut interior = (f64::NEG_INFINITY, 0usize, 0usize);
    let mut boundary = f64::NEG_INFINITY;
    for k in 0..=kmax {
        for (flat, &v) in g.layer(k).iter().enumerate() {
            if k == 0 || g.is_boundary_node(flat) {
                boundary = boundary.max(v);
            } else if v > interior.0 {
                interior = (v, flat, k);
            }
        }
    }
    if interior.0 == f64::NEG_INFINITY {
        return Err(Error::Precondition("no interior nodes at or below t0".into()));
    }
    let tolerance = tolerance_for(g);
    let loc = point(g, interior.1, interior.2);
    let (violation, status) = if g.equation == Equation::Hermite && interior.0 < 0.0 {
        (false, CheckStatus::NotApplicable)
    } else if interior.0 > boundary + tolerance {
        (true, CheckStatus::Violation)
    } else {
        (false, CheckStatus::Pass)
    };
    Ok(MaxPrincipleReport {
        equation: g.equation,
        t0,
        interior_max: (interior.0, loc),
        parabolic_boundary_max: boundary,
        violation,
        tolerance,
        status,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FlaggedNode {
    pub point: SpaceTimePoint,
    pub value: f64,
    pub lambda_sup: f64,
    pub lambda_range: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StrongMaxReport {
    /// Interior nodes that attain the sup over their Λ-set.
    pub attaining: usize,
    pub flagged: Vec<FlaggedNode>,
    pub tolerance: f64,
    pub violation: bool,
}

/// The grid as a raster with one cell per node.
fn node_raster(g: &GridSolution) -> Result<Raster> {
    let mut origin: Vec<f64> = g.x_lo.iter().zip(&g.h).map(|(x, h)| x - 0.5 * h).collect();
    origin.push(g.t_lo - 0.5 * g.dt);
    let mut steps = g.h.clone();
    steps.push(g.dt);
    let mut counts = g.counts.clone();
    counts.push(g.layers());
    let total = counts.iter().product();
    Raster::from_cells(origin, steps, counts, vec![true; total])
}

/// Strong maximum principle: every interior node whose value reaches the sup
/// of `g` over its Λ-lower set (within `tol`) must see `g` constant on that
/// set. Nodes where this fails are flagged.
pub fn check_strong_max(g: &GridSolution, tol: f64) -> Result<StrongMaxReport> {
    let raster = node_raster(g)?;
    let m = g.nodes_per_layer();
    // cheap necessary filter: the Λ-set lies in the earlier layers
    let mut prefix_max = f64::NEG_INFINITY;
    let mut attaining = 0;
    let mut flagged = Vec::new();
    for k in 1..g.layers() {
        prefix_max = prefix_max.max(g.layer(k - 1).iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        let layer = g.layer(k);
        let cands: Vec<usize> = (0..m).filter(|&s| !g.is_boundary_node(s) && layer[s] >= prefix_max - tol).collect();
        if cands.is_empty() {
            continue;
        }
        let first = point(g, cands[0], k);
        let reach = raster.lambda_set(&first.x, first.t)?;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (kk, flags) in reach.iter().enumerate().take(k) {
            for (s, &f) in flags.iter().enumerate() {
                if f {
                    let v = g.layer(kk)[s];
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
        }
        for s in cands {
            let v = layer[s];
            let sup = hi.max(v);
            if v < sup - tol {
                continue;
            }
            attaining += 1;
            let range = sup - lo.min(v);
            if range > tol {
                flagged.push(FlaggedNode { point: point(g, s, k), value: v, lambda_sup: sup, lambda_range: range });
            }
        }
    }
    let violation = !flagged.is_empty();
    Ok(StrongMaxReport { attaining, flagged, tolerance: tol, violation })
}

#[derive(Debug, Clone, Serialize)]
pub struct PropagationReport {
    pub t_probe: f64,
    pub min_interior: f64,
    pub location: Option<SpaceTimePoint>,
    pub status: CheckStatus,
}

/// Minimum of `g` over interior nodes with `t ≥ t_probe` (default: first
/// step). Passes iff strictly positive.
pub fn check_infinite_propagation(g: &GridSolution, t_probe: Option<f64>) -> Result<PropagationReport> {
    let scale = g.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let data_min = (0..g.layers())
        .flat_map(|k| g.layer(k).iter().enumerate().filter(move |(s, _)| k == 0 || g.is_boundary_node(*s)).map(|(_, v)| *v))
        .fold(f64::INFINITY, f64::min);
    if data_min < -1e-14 * scale.max(1.0) {
        return Err(Error::Precondition(format!("parabolic boundary data not nonnegative (min {data_min:e})")));
    }
    let t_probe = t_probe.unwrap_or_else(|| g.time(1));
    let init_max = g.layer(0).iter().cloned().fold(0.0f64, f64::max);
    if init_max <= 0.0 {
        return Ok(PropagationReport { t_probe, min_interior: 0.0, location: None, status: CheckStatus::Degenerate });
    }
    let mut best = (f64::INFINITY, None);
    for k in 1..g.layers() {
        if g.time(k) < t_probe - 1e-12 {
            continue;
        }
        for (s, &v) in g.layer(k).iter().enumerate() {
            if !g.is_boundary_node(s) && v < best.0 {
                best = (v, Some(point(g, s, k)));
            }
        }
    }
    if best.1.is_none() {
        return Err(Error::Precondition(format!("no interior nodes with t >= {t_probe}")));
    }
    let status = if best.0 > 0.0 { CheckStatus::Pass } else { CheckStatus::Violation };
    Ok(PropagationReport { t_probe, min_interior: best.0, location: best.1, status })
}

/// The measure `μ` on the right of a Harnack inequality.
#[derive(Debug, Clone, Serialize)]
pub enum HarnackMeasure {
    PointMass(SpaceTimePoint),
    Uniform(Vec<SpaceTimePoint>),
}

#[derive(Debug, Clone, Serialize)]
pub struct HarnackConfig {
    /// `"K"` for a point sample, `"gamma"` for Hermite cylinders.
    pub set: String,
    pub measure: String,
    pub x0: Vec<f64>,
    pub t0: f64,
    pub radius: Option<f64>,
    pub q: Option<f64>,
    pub lhs_points: usize,
    pub rhs_samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct HarnackReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// Monte Carlo standard error of `rhs`, when sampled.
    pub rhs_std_error: Option<f64>,
    pub config: HarnackConfig,
}

/// `max_K U / ∫U dμ`. For a point mass every point of `K` must lie in
/// `Λ((x₀,t₀), E)` on the raster of `U`'s domain.
pub fn harnack_ratio(u: &ScalarField, k: &[SpaceTimePoint], mu: &HarnackMeasure, cells_per_unit: f64) -> Result<HarnackReport> {
    if k.is_empty() {
        return Err(Error::InvalidArgument("empty K".into()));
    }
    let (rhs, center, label) = match mu {
        HarnackMeasure::PointMass(c) => {
            let raster = u.domain().raster(cells_per_unit);
            for p in k {
                if !lambda_reachable(&raster, c, p)? {
                    return Err(Error::Precondition(format!("{p} is not in the lower set of {c}")));
                }
            }
            (u.eval(c)?, c.clone(), "point-mass")
        }
        HarnackMeasure::Uniform(pts) => {
            if pts.is_empty() {
                return Err(Error::InvalidArgument("empty support".into()));
            }
            let vals: Vec<f64> = pts.iter().map(|p| u.eval(p)).collect::<Result<_>>()?;
            (vals.iter().sum::<f64>() / vals.len() as f64, pts[0].clone(), "uniform")
        }
    };
    let lhs = k.iter().map(|p| u.eval(p)).collect::<Result<Vec<_>>>()?.into_iter().fold(f64::NEG_INFINITY, f64::max);
    let ratio = ratio_of(lhs, rhs)?;
    Ok(HarnackReport {
        lhs,
        rhs,
        ratio,
        rhs_std_error: None,
        config: HarnackConfig {
            set: "K".into(),
            measure: label.into(),
            x0: center.x,
            t0: center.t,
            radius: None,
            q: None,
            lhs_points: k.len(),
            rhs_samples: match mu {
                HarnackMeasure::PointMass(_) => 1,
                HarnackMeasure::Uniform(p) => p.len(),
            },
        },
    })
}

fn ratio_of(lhs: f64, rhs: f64) -> Result<f64> {
    if rhs < 0.0 || lhs < 0.0 {
        return Err(Error::Precondition(format!("negative values (lhs {lhs}, rhs {rhs})")));
    }
    if rhs == 0.0 {
        return if lhs > 0.0 { Err(Error::UnboundedRatio(lhs)) } else { Ok(f64::NAN) };
    }
    Ok(lhs / rhs)
}

/// Empirical `κ̂`: the largest Harnack ratio over a field family, with the
/// individual ratios.
pub fn empirical_kappa(fields: &[ScalarField], k: &[SpaceTimePoint], mu: &HarnackMeasure, cells_per_unit: f64) -> Result<(f64, Vec<f64>)> {
    let ratios: Vec<f64> =
        fields.par_iter().map(|u| harnack_ratio(u, k, mu, cells_per_unit).map(|r| r.ratio)).collect::<Result<_>>()?;
    Ok((ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max), ratios))
}

/// Positive OU temperature on `domain`: the heat kernel with source
/// `(ξ, φ_time(t_src))` composed with `φ`. Needs `t_src` below the domain.
pub fn ou_source_field(xi: &[f64], t_src: f64, domain: DomainBox) -> Result<ScalarField> {
    if xi.len() != domain.dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), got: xi.len() });
    }
    if !(t_src < domain.t_lo) {
        return Err(Error::Precondition(format!("source time {t_src} must lie below the domain")));
    }
    let sigma = phi_time(t_src);
    let xi = xi.to_vec();
    let label = format!("ou.source({xi:?}, {t_src})");
    let heat = ScalarField::closed_form(label.clone(), Equation::Heat, domain.phi_image().dilated(1e-9), move |y, s| {
        let d: Vec<f64> = y.iter().zip(&xi).map(|(a, b)| a - b).collect();
        fundamental_solution(&d, s - sigma)
    });
    Ok(heat_to_ou(&heat, domain).with_label(label))
}

/// `ν(Γ_R(x₀,t₀)) = ω_n Rⁿ e^{−2(n+2)t₀}(e^{4R²} − 1)/4` with
/// `dν = e^{−2(n+2)t} dx dt`.
pub fn gamma_measure(n: usize, t0: f64, big_r: f64) -> f64 {
    unit_ball_volume(n) * big_r.powi(n as i32) * (-2.0 * (n as f64 + 2.0) * t0).exp() * (4.0 * big_r * big_r).exp_m1() / 4.0
}

fn unit_ball_volume(n: usize) -> f64 {
    let nf = n as f64;
    std::f64::consts::PI.powf(nf / 2.0) / gamma_fn(nf / 2.0 + 1.0)
}

/// `Γ(x)` for half-integers `x ≥ 1/2`.
fn gamma_fn(x: f64) -> f64 {
    if (x - 0.5).abs() < 1e-12 {
        return std::f64::consts::PI.sqrt();
    }
    if (x - 1.0).abs() < 1e-12 {
        return 1.0;
    }
    (x - 1.0) * gamma_fn(x - 1.0)
}

/// Monte Carlo estimate `(value, std_error)` of `ν(Γ_R)` by uniform sampling
/// of the cylinder's bounding box.
pub fn gamma_measure_mc(x0: &[f64], t0: f64, big_r: f64, samples: usize, seed: u64) -> (f64, f64) {
    let b = crate::geometry::gamma_bounds(x0, t0, big_r);
    let n = x0.len();
    let vol: f64 = (0..n).map(|a| b.x_hi[a] - b.x_lo[a]).product::<f64>() * (b.t_hi - b.t_lo);
    let per = samples.div_ceil(SHARDS as usize);
    let shard_means: Vec<f64> = (0..SHARDS)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s);
            let mut acc = 0.0;
            for _ in 0..per {
                let x: Vec<f64> = (0..n).map(|a| rng.gen_range(b.x_lo[a]..b.x_hi[a])).collect();
                let t = rng.gen_range(b.t_lo..b.t_hi);
                let p = SpaceTimePoint { x, t };
                if gamma_contains(x0, t0, big_r, &p) {
                    acc += (-2.0 * (n as f64 + 2.0) * t).exp();
                }
            }
            vol * acc / per as f64
        })
        .collect();
    mean_and_se(&shard_means)
}

/// Log-log slope of `ν(Γ_R)` against `R` at fixed `t₀`.
pub fn gamma_measure_slope(n: usize, t0: f64, radii: &[f64]) -> f64 {
    let lx: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = radii.iter().map(|&r| gamma_measure(n, t0, r).ln()).collect();
    fit_slope(&lx, &ly)
}

/// Point of `Γ_ρ(x₀,t₀)` from a unit-ball point `w` and `τ = t₀ − t`.
fn gamma_point(x0: &[f64], t0: f64, rho: f64, w: &[f64], tau: f64) -> SpaceTimePoint {
    let f = (-2.0 * tau).exp();
    SpaceTimePoint { x: x0.iter().zip(w).map(|(c, wi)| f * (c + rho * wi)).collect(), t: t0 - tau }
}

/// `max_{Γ_R} U` against `(⨍_{Γ_{4R}} U^q dν)^{1/q}`. The average is sampled
/// exactly from `ν` restricted to the cylinder: `w` uniform in the unit ball
/// and `t` with density `∝ e^{−4t}`, since `dν = (4R)ⁿ e^{−2nt₀} e^{−4t} dw dt`
/// in those coordinates.
pub fn harnack_mintq(u: &ScalarField, x0: &[f64], t0: f64, big_r: f64, q: f64, samples: usize, seed: u64) -> Result<HarnackReport> {
    let n = x0.len();
    if n != u.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), got: n });
    }
    if !(big_r > 0.0 && big_r <= 1.0) {
        return Err(Error::InvalidArgument(format!("R must lie in (0, 1], got {big_r}")));
    }
    if !(q > 0.0) {
        return Err(Error::InvalidArgument(format!("q must be positive, got {q}")));
    }
    let outer = HeatBall::gamma(SpaceTimePoint::new(x0.to_vec(), t0)?, 4.0 * big_r)?;
    if !ball_closure_in_domain(&outer, u.domain()) {
        return Err(Error::OutsideDomain { field: u.label().into(), point: format!("closure of Γ_4R({x0:?}, {t0})") });
    }
    let per = samples.div_ceil(SHARDS as usize).max(2);
    let rho = 4.0 * big_r;
    let em = (-4.0 * rho * rho).exp_m1();
    let shards: Vec<(f64, f64)> = (0..SHARDS)
        .into_par_iter()
        .map(|s| -> Result<(f64, f64)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s);
            let (mut acc, mut top) = (0.0, f64::NEG_INFINITY);
            for _ in 0..per {
                let w = uniform_in_ball(&mut rng, n);
                let uu: f64 = rng.gen();
                // τ = t₀ − t, with t ∝ e^{−4t} on (t₀ − ρ², t₀)
                let tau = rho * rho + 0.25 * (uu * em).ln_1p();
                let v = u.eval(&gamma_point(x0, t0, rho, &w, tau.max(0.0)))?;
                if v < 0.0 {
                    return Err(Error::Precondition(format!("U is negative ({v})")));
                }
                acc += v.powf(q);
                let w = uniform_in_ball(&mut rng, n);
                let tau: f64 = rng.gen::<f64>() * big_r * big_r;
                top = top.max(u.eval(&gamma_point(x0, t0, big_r, &w, tau))?);
            }
            Ok((acc / per as f64, top))
        })
        .collect::<Result<_>>()?;
    let means: Vec<f64> = shards.iter().map(|s| s.0).collect();
    let lhs = shards.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let (m, se) = mean_and_se(&means);
    let rhs = m.powf(1.0 / q);
    let rhs_se = if m > 0.0 { rhs / (q * m) * se } else { 0.0 };
    let ratio = ratio_of(lhs, rhs)?;
    Ok(HarnackReport {
        lhs,
        rhs,
        ratio,
        rhs_std_error: Some(rhs_se),
        config: HarnackConfig {
            set: "gamma".into(),
            measure: "nu".into(),
            x0: x0.to_vec(),
            t0,
            radius: Some(big_r),
            q: Some(q),
            lhs_points: per * SHARDS as usize,
            rhs_samples: per * SHARDS as usize,
        },
    })
}

/// Sampled check of `C_r(y₀,s₀) ⊂ φ(Γ_R(x₀,t₀)) ⊂ C_{λr}(y₀,s₀)` with
/// `(y₀,s₀) = φ(x₀,t₀)`, `r = R e^{−2t₀}` and `C_r(y,s) = B_r(y) × (s − r², s)`,
/// plus the range of `|x|/|x₀|` over `Γ_R`.
#[derive(Debug, Clone, Serialize)]
pub struct GinclReport {
    pub lambda: f64,
    pub samples: usize,
    pub left_violations: usize,
    pub right_violations: usize,
    pub min_norm_ratio: f64,
    pub max_norm_ratio: f64,
}

pub fn gincl_check(x0: &[f64], t0: f64, big_r: f64, lambda: f64, samples: usize, seed: u64) -> Result<GinclReport> {
    let n = x0.len();
    let c = SpaceTimePoint::new(x0.to_vec(), t0)?;
    let y0 = phi(&c);
    let r = big_r * (-2.0 * t0).exp();
    let x0n = norm_sq(x0).sqrt();
    let per = samples.div_ceil(2 * SHARDS as usize);
    let parts: Vec<(usize, usize, f64, f64)> = (0..SHARDS)
        .into_par_iter()
        .map(|s| -> Result<_> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s);
            let (mut left, mut right) = (0, 0);
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for _ in 0..per {
                // left: C_r ⊂ φ(Γ_R)
                let w = uniform_in_ball(&mut rng, n);
                let ds: f64 = rng.gen::<f64>() * r * r;
                let q = SpaceTimePoint { x: y0.x.iter().zip(&w).map(|(a, b)| a + r * b).collect(), t: y0.t - ds };
                if ds > 0.0 && !gamma_contains(x0, t0, big_r, &phi_inverse(&q)?) {
                    left += 1;
                }
                // right: φ(Γ_R) ⊂ C_{λr}
                let w = uniform_in_ball(&mut rng, n);
                let tau: f64 = rng.gen::<f64>() * big_r * big_r;
                let p = gamma_point(x0, t0, big_r, &w, tau);
                let y = phi(&p);
                let dy: f64 = y.x.iter().zip(&y0.x).map(|(a, b)| (a - b).powi(2)).sum();
                let ds = y0.t - y.t;
                if !(dy < (lambda * r).powi(2) && ds >= 0.0 && ds < (lambda * r).powi(2)) {
                    right += 1;
                }
                if x0n > 0.0 {
                    let ratio = norm_sq(&p.x).sqrt() / x0n;
                    lo = lo.min(ratio);
                    hi = hi.max(ratio);
                }
            }
            Ok((left, right, lo, hi))
        })
        .collect::<Result<_>>()?;
    Ok(GinclReport {
        lambda,
        samples: 2 * per * SHARDS as usize,
        left_violations: parts.iter().map(|p| p.0).sum(),
        right_violations: parts.iter().map(|p| p.1).sum(),
        min_norm_ratio: parts.iter().map(|p| p.2).fold(f64::INFINITY, f64::min),
        max_norm_ratio: parts.iter().map(|p| p.3).fold(0.0, f64::max),
    })
}
