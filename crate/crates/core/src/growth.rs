//! Täcklind growth-class diagnostics.
//!
//! Uniqueness for the Cauchy problem in the class `|u| ≤ A e^{|x| p(|x|)}`
//! holds iff `∫₁^∞ dr/p̄ = ∞`, with `p̄(r) = inf_{s ≥ r} p(s)`. Everything
//! here is computed on a finite geometric grid over `[1, R_max]`, so
//! divergence verdicts are trends read off the octave increments of the
//! partial integrals, never decisions.

use serde::Serialize;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::stats::fit_line;

/// Grid points per octave.
pub const DEFAULT_PER_OCTAVE: usize = 64;
/// Default horizon `2^128`.
pub const DEFAULT_R_MAX: f64 = 3.402_823_669_209_385e38;
/// Relative tolerance for `p̄ = p` at closed-form evaluators.
pub const EQUALITY_TOL: f64 = 1e-9;

type Profile = dyn Fn(f64) -> f64 + Send + Sync;

/// A positive continuous function on `[1, R_max]`, optionally with an
/// exponent `γ` such that `r^γ p(r)` is non-decreasing.
#[derive(Clone)]
pub struct GrowthFunction {
    label: String,
    p: Arc<Profile>,
    gamma: Option<f64>,
    r_max: f64,
    per_octave: usize,
}

impl fmt::Debug for GrowthFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GrowthFunction")
            .field("label", &self.label)
            .field("gamma", &self.gamma)
            .field("r_max", &self.r_max)
            .finish()
    }
}

impl GrowthFunction {
    /// Validates positivity and, when `gamma` is given, monotonicity of
    /// `r^γ p(r)` on the sample grid.
    pub fn new<F>(label: impl Into<String>, gamma: Option<f64>, r_max: f64, p: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let label = label.into();
        if !(r_max > 2.0) || !r_max.is_finite() {
            return Err(Error::InvalidArgument(format!("R_max must be finite and > 2, got {r_max}")));
        }
        if let Some(g) = gamma {
            if !(g >= 0.0) {
                return Err(Error::InvalidArgument(format!("gamma must be >= 0, got {g}")));
            }
        }
        let f = Self { label, p: Arc::new(p), gamma, r_max, per_octave: DEFAULT_PER_OCTAVE };
        let grid = f.grid();
        let vals = f.sample(&grid);
        if let Some((r, v)) = grid.iter().zip(&vals).find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::Precondition(format!("{}: p({r}) = {v} is not positive", f.label)));
        }
        if let Some(g) = gamma {
            for i in 1..grid.len() {
                let a = grid[i - 1].powf(g) * vals[i - 1];
                let b = grid[i].powf(g) * vals[i];
                if b < a * (1.0 - 1e-12) {
                    return Err(Error::Precondition(format!(
                        "{}: r^{g} p(r) decreases between {} and {}",
                        f.label,
                        grid[i - 1],
                        grid[i]
                    )));
                }
            }
        }
        Ok(f)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn eval(&self, r: f64) -> f64 {
        (self.p)(r)
    }

    /// Same profile with a different horizon.
    pub fn with_r_max(&self, r_max: f64) -> Result<Self> {
        let p = Arc::clone(&self.p);
        Self::new(self.label.clone(), self.gamma, r_max, move |r| p(r))
    }

    /// `p₁(r) = p(r) + λ r`.
    pub fn shifted(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
        }
        let p = Arc::clone(&self.p);
        Self::new(format!("{} + {lambda} r", self.label), self.gamma, self.r_max, move |r| p(r) + lambda * r)
    }

    /// Geometric grid `2^{k + i/M}` over `[1, R_max]`, exact at powers of two.
    pub fn grid(&self) -> Vec<f64> {
        geometric_grid(self.r_max, self.per_octave)
    }

    pub fn sample(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&r| self.eval(r)).collect()
    }

    /// Catalog of closed forms. `ln` is shifted to `ln(e + r)` so every entry
    /// is positive on `[1, ∞)`.
    ///
    /// * `const`, `r`, `r^<a>` (e.g. `r^1.5`), `rlog` (`r ln(e+r)`),
    ///   `rlog^<k>`, `rloglog` (`r ln(e+r) ln(e + ln(e+r))`).
    /// * `osc.bounded`: bounded `lim inf`, equal to 1 at `r = 4^j`, with `r² p`
    ///   non-decreasing.
    /// * `osc.sin`: `r (2 + sin r)`, an oscillating profile with no admissible `γ`.
    pub fn catalog(id: &str, r_max: f64) -> Result<Self> {
        let ln = |r: f64| (std::f64::consts::E + r).ln();
        match id {
            "const" => Self::new(id, Some(0.0), r_max, |_| 1.0),
            "r" => Self::new(id, Some(0.0), r_max, |r| r),
            "rlog" => Self::new(id, Some(0.0), r_max, move |r| r * ln(r)),
            "rloglog" => Self::new(id, Some(0.0), r_max, move |r| r * ln(r) * (std::f64::consts::E + ln(r)).ln()),
            "osc.bounded" => Self::new(id, Some(2.0), r_max, osc_bounded),
            "osc.sin" => Self::new(id, None, r_max, |r| r * (2.0 + r.sin())),
            _ => {
                if let Some(a) = id.strip_prefix("r^") {
                    let a: f64 = a.parse().map_err(|_| Error::UnknownField(id.into()))?;
                    return Self::new(id, Some((-a).max(0.0)), r_max, move |r| r.powf(a));
                }
                if let Some(k) = id.strip_prefix("rlog^") {
                    let k: f64 = k.parse().map_err(|_| Error::UnknownField(id.into()))?;
                    return Self::new(id, Some(0.0), r_max, move |r| r * ln(r).powf(k));
                }
                Err(Error::UnknownField(id.into()))
            }
        }
    }
}

/// Ids shipped by [`GrowthFunction::catalog`] with their analytic class
/// (`true` when `∫ dr/p̄` diverges).
pub fn catalog_classes() -> Vec<(&'static str, bool)> {
    vec![
        ("const", true),
        ("r^0.5", true),
        ("r", true),
        ("rlog", true),
        ("rloglog", true),
        ("osc.bounded", true),
        ("osc.sin", true),
        ("r^1.2", false),
        ("r^1.5", false),
        ("r^2", false),
        ("rlog^2", false),
    ]
}

/// Ramped staircase: rises linearly from 1 at `4^j` to `(4/1.25)²` at
/// `1.25·4^j`, then decays like `(4^{j+1}/r)²` back to 1 at `4^{j+1}`.
fn osc_bounded(r: f64) -> f64 {
    let j = (r.ln() / 4f64.ln()).floor().max(0.0);
    let lo = 4f64.powf(j);
    let (lo, hi) = if r < lo { (lo / 4.0, lo) } else if r >= 4.0 * lo { (4.0 * lo, 16.0 * lo) } else { (lo, 4.0 * lo) };
    let a = 1.25 * lo;
    let peak = (hi / a).powi(2);
    if r <= a {
        1.0 + (peak - 1.0) * (r - lo) / (a - lo)
    } else {
        (hi / r).powi(2)
    }
}

pub fn geometric_grid(r_max: f64, per_octave: usize) -> Vec<f64> {
    let octaves = r_max.log2().ceil() as usize;
    let mut out = Vec::with_capacity(octaves * per_octave + 1);
    for k in 0..octaves {
        let base = 2f64.powi(k as i32);
        for i in 0..per_octave {
            let r = if i == 0 { base } else { base * 2f64.powf(i as f64 / per_octave as f64) };
            if r > r_max {
                break;
            }
            out.push(r);
        }
    }
    if out.last().is_none_or(|&l| l < r_max) {
        out.push(r_max);
    }
    out
}

/// Suffix minimum of sampled values: the largest non-decreasing minorant on the grid.
pub fn minorant_values(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    let mut out = values.to_vec();
    for i in (0..out.len() - 1).rev() {
        out[i] = out[i].min(out[i + 1]);
    }
    Ok(out)
}

/// `p̄` sampled on `grid`.
pub fn minorant(p: &GrowthFunction, grid: &[f64]) -> Result<Vec<f64>> {
    minorant_values(&p.sample(grid))
}

/// `ℓ_0 .. ℓ_count`, with `truncated` set when fewer terms fit below `R_max`.
#[derive(Debug, Clone, Serialize)]
pub struct TacklindSequence {
    pub ell: Vec<f64>,
    pub truncated: bool,
}

pub fn tacklind_sequence(p: &GrowthFunction, count: usize) -> Result<TacklindSequence> {
    let grid = p.grid();
    let vals = p.sample(&grid);
    let bar = minorant_values(&vals)?;
    let mut ell = vec![grid[0]];
    let mut i = 0;
    while ell.len() <= count {
        let target = 2.0 * ell[ell.len() - 1];
        while i < grid.len() && grid[i] < target * (1.0 - 1e-14) {
            i += 1;
        }
        while i < grid.len() && (vals[i] - bar[i]).abs() > EQUALITY_TOL * vals[i] {
            i += 1;
        }
        if i >= grid.len() {
            return Ok(TacklindSequence { ell, truncated: true });
        }
        ell.push(grid[i]);
    }
    Ok(TacklindSequence { ell, truncated: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    DivergingTrend,
    ConvergingTrend,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::DivergingTrend => "diverging-trend",
            Verdict::ConvergingTrend => "converging-trend",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// How the tail of the octave increments was read.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailFit {
    /// Ratio of consecutive increments under a geometric model.
    pub rho: f64,
    /// Decay exponent under a power model `Δ_k ~ k^{−β}`.
    pub beta: f64,
    pub geometric_ssr: f64,
    pub power_ssr: f64,
    /// `Δ_last / mean(Δ)`.
    pub last_to_mean: f64,
}

/// Verdict thresholds: a geometric tail diverges for `ρ ≥ 0.995` and
/// converges for `ρ ≤ 0.98`; a power tail diverges for `β ≤ 1.3` and
/// converges for `β ≥ 1.6`.
pub fn verdict_from_increments(inc: &[f64]) -> (Verdict, TailFit) {
    let k = inc.len();
    let total: f64 = inc.iter().sum();
    let last_to_mean = if total > 0.0 { inc[k - 1] * k as f64 / total } else { 0.0 };
    let start = k / 2;
    let tail: Vec<(f64, f64)> = (start..k).filter(|&i| inc[i] > 0.0).map(|i| ((i + 1) as f64, inc[i].ln())).collect();
    if tail.len() < 4 {
        let fit = TailFit { rho: 0.0, beta: f64::INFINITY, geometric_ssr: 0.0, power_ssr: 0.0, last_to_mean };
        let v = if inc[start..].iter().all(|v| *v <= 0.0) { Verdict::ConvergingTrend } else { Verdict::Inconclusive };
        return (v, fit);
    }
    let kk: Vec<f64> = tail.iter().map(|p| p.0).collect();
    let lk: Vec<f64> = kk.iter().map(|v| v.ln()).collect();
    let ld: Vec<f64> = tail.iter().map(|p| p.1).collect();
    let (gs, _, gssr) = fit_line(&kk, &ld);
    let (ps, _, pssr) = fit_line(&lk, &ld);
    let fit = TailFit { rho: gs.exp(), beta: -ps, geometric_ssr: gssr, power_ssr: pssr, last_to_mean };
    let verdict = if gssr <= pssr {
        if fit.rho >= 0.995 {
            Verdict::DivergingTrend
        } else if fit.rho <= 0.98 {
            Verdict::ConvergingTrend
        } else {
            Verdict::Inconclusive
        }
    } else if fit.beta <= 1.3 {
        Verdict::DivergingTrend
    } else if fit.beta >= 1.6 {
        Verdict::ConvergingTrend
    } else {
        Verdict::Inconclusive
    };
    (verdict, fit)
}

#[derive(Debug, Clone, Serialize)]
pub struct DivergenceReport {
    pub label: String,
    pub r_max: f64,
    /// `∫₁^{R_max} dr/p`.
    pub i_p: f64,
    /// `∫₁^{R_max} dr/p̄`.
    pub i_pbar: f64,
    /// `Σ_{ℓ_j ≤ R_max} ℓ_j/p(ℓ_j)`, `j ≥ 1`.
    pub s: f64,
    pub ell: Vec<f64>,
    /// `∫ dr/p̄` over `[2^k, 2^{k+1}]`.
    pub octave_increments: Vec<f64>,
    /// `∫ dr/p` over `[2^k, 2^{k+1}]`.
    pub octave_increments_p: Vec<f64>,
    /// Verdict for `∫ dr/p̄`, the uniqueness criterion.
    pub verdict: Verdict,
    /// Verdict for `∫ dr/p`.
    pub verdict_p: Verdict,
    pub fit: TailFit,
}

/// Octave increments and total of `∫ dr/f` on the grid, by the trapezoid
/// rule in `ln r` (exact for `f ∝ r`).
fn octave_integrals(grid: &[f64], f: &[f64]) -> (Vec<f64>, f64) {
    let mut inc = Vec::new();
    let mut total = 0.0;
    for i in 1..grid.len() {
        let (a, b) = (grid[i - 1], grid[i]);
        let piece = 0.5 * (a / f[i - 1] + b / f[i]) * (b.ln() - a.ln());
        let k = (a.log2() + 1e-9).floor() as usize;
        if inc.len() <= k {
            inc.resize(k + 1, 0.0);
        }
        inc[k] += piece;
        total += piece;
    }
    (inc, total)
}

/// `∫ dr/f` over `[a, b]` on the grid (`a`, `b` grid points).
fn integral_between(grid: &[f64], f: &[f64], a: f64, b: f64) -> f64 {
    let mut s = 0.0;
    for i in 1..grid.len() {
        if grid[i - 1] >= a * (1.0 - 1e-14) && grid[i] <= b * (1.0 + 1e-14) {
            s += 0.5 * (grid[i - 1] / f[i - 1] + grid[i] / f[i]) * (grid[i].ln() - grid[i - 1].ln());
        }
    }
    s
}

pub fn divergence_diagnostic(p: &GrowthFunction) -> Result<DivergenceReport> {
    let grid = p.grid();
    let vals = p.sample(&grid);
    let bar = minorant_values(&vals)?;
    let (inc_bar, i_pbar) = octave_integrals(&grid, &bar);
    let (inc_p, i_p) = octave_integrals(&grid, &vals);
    let seq = tacklind_sequence(p, usize::MAX >> 1)?;
    let s = seq.ell.iter().skip(1).map(|&l| l / p.eval(l)).sum();
    // drop a trailing partial octave
    let full = |v: Vec<f64>| -> Vec<f64> {
        let whole = p.r_max.log2().floor() as usize;
        v.into_iter().take(whole.max(1)).collect()
    };
    let inc_bar = full(inc_bar);
    let inc_p = full(inc_p);
    let (verdict, fit) = verdict_from_increments(&inc_bar);
    let (verdict_p, _) = verdict_from_increments(&inc_p);
    Ok(DivergenceReport {
        label: p.label.clone(),
        r_max: p.r_max,
        i_p,
        i_pbar,
        s,
        ell: seq.ell,
        octave_increments: inc_bar,
        octave_increments_p: inc_p,
        verdict,
        verdict_p,
        fit,
    })
}

/// Both diagnostics for `p` and `p₁ = p + λr`, with the ratio of their
/// octave increments.
#[derive(Debug, Clone, Serialize)]
pub struct ShiftReport {
    pub lambda: f64,
    pub base: DivergenceReport,
    pub shifted: DivergenceReport,
    /// `Δ_k(p₁)/Δ_k(p)`.
    pub increment_ratio: Vec<f64>,
}

pub fn shift_compare(p: &GrowthFunction, lambda: f64) -> Result<ShiftReport> {
    let p1 = p.shifted(lambda)?;
    let base = divergence_diagnostic(p)?;
    let shifted = divergence_diagnostic(&p1)?;
    let increment_ratio = base
        .octave_increments
        .iter()
        .zip(&shifted.octave_increments)
        .map(|(a, b)| if *a > 0.0 { b / a } else { f64::NAN })
        .collect();
    Ok(ShiftReport { lambda, base, shifted, increment_ratio })
}

/// `∫ dr/p` over consecutive intervals `[r_{j−1}, r_j]` of grid points.
pub fn interval_integrals(p: &GrowthFunction, points: &[f64]) -> Vec<f64> {
    let grid = p.grid();
    let vals = p.sample(&grid);
    points.windows(2).map(|w| integral_between(&grid, &vals, w[0], w[1])).collect()
}

/// Checks the bracket
/// `ℓ_j/(2p(ℓ_j)) ≤ ∫_{ℓ_{j−1}}^{ℓ_j} dr/p̄ ≤ ℓ_{j−1}/p(ℓ_{j−1}) + ℓ_j/p(ℓ_j)`
/// for every consecutive pair; returns `(lower, integral, upper)` per `j`.
pub fn ell_sandwich(p: &GrowthFunction) -> Result<Vec<(f64, f64, f64)>> {
    let grid = p.grid();
    let vals = p.sample(&grid);
    let bar = minorant_values(&vals)?;
    let seq = tacklind_sequence(p, usize::MAX >> 1)?;
    Ok(seq
        .ell
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let mid = integral_between(&grid, &bar, a, b);
            (b / (2.0 * p.eval(b)), mid, a / p.eval(a) + b / p.eval(b))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn grid_is_dyadic() {
        let g = geometric_grid(1024.0, 8);
        assert_eq!(g[0], 1.0);
        assert_eq!(g[8], 2.0);
        assert_eq!(*g.last().unwrap(), 1024.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn minorant_examples() {
        let r = GrowthFunction::catalog("r", 1e6).unwrap();
        let grid = r.grid();
        assert_eq!(minorant(&r, &grid).unwrap(), r.sample(&grid));
        let c = GrowthFunction::catalog("const", 1e6).unwrap();
        assert_eq!(minorant(&c, &grid).unwrap(), c.sample(&grid));
        assert!(minorant_values(&[]).is_err());

        let osc = GrowthFunction::new("r(2+sin r)", None, 1e4, |r| r * (2.0 + r.sin())).unwrap();
        let grid = osc.grid();
        let vals = osc.sample(&grid);
        let bar = minorant(&osc, &grid).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let i = rng.gen_range(0..grid.len());
            let brute = vals[i..].iter().cloned().fold(f64::INFINITY, f64::min);
            assert_eq!(bar[i], brute);
        }
    }

    #[test]
    fn rejects_bad_profiles() {
        assert!(GrowthFunction::new("neg", None, 100.0, |r| 1.0 - r).is_err());
        assert!(GrowthFunction::new("dec", Some(0.0), 100.0, |r| 1.0 / r).is_err());
        assert!(GrowthFunction::new("dec", Some(1.0), 100.0, |r| 1.0 / r).is_ok());
        assert!(GrowthFunction::catalog("r^x", 100.0).is_err());
        assert!(GrowthFunction::catalog("osc.sin", 100.0).unwrap().gamma().is_none());
    }

    #[test]
    fn ell_is_dyadic_for_monotone_p() {
        for id in ["r", "rlog", "r^1.5", "const"] {
            let p = GrowthFunction::catalog(id, 2f64.powi(30)).unwrap();
            let seq = tacklind_sequence(&p, 25).unwrap();
            assert!(!seq.truncated);
            for (j, l) in seq.ell.iter().enumerate() {
                assert_eq!(*l, 2f64.powi(j as i32), "{id}");
            }
        }
        let p = GrowthFunction::catalog("r", 2f64.powi(10)).unwrap();
        let seq = tacklind_sequence(&p, 20).unwrap();
        assert!(seq.truncated);
        assert_eq!(seq.ell.len(), 11);
    }

    #[test]
    fn ell_conditions_hold_for_oscillators() {
        for id in ["osc.bounded", "osc.sin"] {
            let p = GrowthFunction::catalog(id, 2f64.powi(24)).unwrap();
            let grid = p.grid();
            let vals = p.sample(&grid);
            let seq = tacklind_sequence(&p, 10).unwrap();
            for w in seq.ell.windows(2) {
                assert!(w[1] >= 2.0 * w[0] * (1.0 - 1e-14));
                let tail = grid.iter().zip(&vals).filter(|(r, _)| **r >= w[1]).map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
                assert!((p.eval(w[1]) - tail).abs() <= EQUALITY_TOL * p.eval(w[1]), "{id}: {w:?}");
            }
        }
        let p = GrowthFunction::catalog("osc.bounded", 2f64.powi(24)).unwrap();
        let seq = tacklind_sequence(&p, 5).unwrap();
        assert_eq!(seq.ell[..4], [1.0, 4.0, 16.0, 64.0]);
    }

    #[test]
    fn diagnostic_examples() {
        let r = GrowthFunction::catalog("r", 2f64.powi(20)).unwrap();
        let d = divergence_diagnostic(&r).unwrap();
        assert_eq!(d.ell.len(), 21);
        assert!((d.s - 20.0).abs() < 1e-12);
        assert!((d.i_p - 20.0 * 2f64.ln()).abs() < 1e-10);
        assert_eq!(d.verdict, Verdict::DivergingTrend);
        let d = divergence_diagnostic(&GrowthFunction::catalog("r^1.2", 2f64.powi(20)).unwrap()).unwrap();
        assert_eq!(d.verdict, Verdict::ConvergingTrend);
        let d = divergence_diagnostic(&GrowthFunction::catalog("rlog", 2f64.powi(20)).unwrap()).unwrap();
        assert_eq!(d.verdict, Verdict::DivergingTrend);
    }

    #[test]
    fn catalog_verdicts_match_classes() {
        for (id, diverges) in catalog_classes() {
            let p = GrowthFunction::catalog(id, DEFAULT_R_MAX).unwrap();
            let d = divergence_diagnostic(&p).unwrap();
            let want = if diverges { Verdict::DivergingTrend } else { Verdict::ConvergingTrend };
            assert_eq!(d.verdict, want, "{id}: {:?}", d.fit);
        }
    }

    #[test]
    fn monotone_case_integrals_agree() {
        let p = GrowthFunction::catalog("rlog", 1e8).unwrap();
        let d = divergence_diagnostic(&p).unwrap();
        assert_eq!(d.i_p, d.i_pbar);
    }

    #[test]
    fn shift_keeps_class() {
        let r = GrowthFunction::catalog("r", DEFAULT_R_MAX).unwrap();
        let s = shift_compare(&r, 1.0).unwrap();
        assert_eq!(s.base.verdict, Verdict::DivergingTrend);
        assert_eq!(s.shifted.verdict, Verdict::DivergingTrend);
        assert!(s.increment_ratio.iter().all(|v| (v - 0.5).abs() < 1e-12));
        // ∫₁^R dr/(r^{3/2} + r) = 2 ln(2√R/(√R + 1)) → 2 ln 2
        let p = GrowthFunction::catalog("r^1.5", 2f64.powi(40)).unwrap();
        let s = shift_compare(&p, 1.0).unwrap();
        let rt = 2f64.powi(20);
        let exact = 2.0 * (2.0 * rt / (rt + 1.0)).ln();
        assert!((s.shifted.i_p - exact).abs() < 1e-4, "{} vs {exact}", s.shifted.i_p);
        assert_eq!(s.base.verdict, Verdict::ConvergingTrend);
        assert_eq!(s.shifted.verdict, Verdict::ConvergingTrend);
    }

    #[test]
    fn bounded_liminf_partial_sums_grow() {
        let p = GrowthFunction::catalog("osc.bounded", 2f64.powi(40)).unwrap();
        let pts: Vec<f64> = (0..=20).map(|j| 4f64.powi(j)).collect();
        let ints = interval_integrals(&p, &pts);
        for (j, v) in ints.iter().enumerate() {
            let rj = pts[j + 1];
            assert!(*v >= 0.05 * rj, "interval {j}: {v}");
        }
        assert_eq!(divergence_diagnostic(&p).unwrap().verdict_p, Verdict::DivergingTrend);
    }

    #[test]
    fn sandwich_holds() {
        for id in ["r", "rlog", "r^1.5", "osc.bounded", "osc.sin"] {
            let p = GrowthFunction::catalog(id, 2f64.powi(30)).unwrap();
            for (lo, mid, hi) in ell_sandwich(&p).unwrap() {
                assert!(mid >= lo * (1.0 - 1e-3) && mid <= hi * (1.0 + 1e-3), "{id}: {lo} {mid} {hi}");
            }
        }
    }
}
