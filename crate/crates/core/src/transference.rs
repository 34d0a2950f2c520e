//! The transforms linking heat, OU and Hermite temperatures, and the
//! finite-difference operator residuals used to check them.
//!
//! `φ(x,t) = (x e^{−2t}, (1 − e^{−4t})/4)` is a diffeomorphism of `R^{n+1}`
//! onto `Rⁿ × (−∞, 1/4)`; if `u` solves the heat equation then `u ∘ φ`
//! solves the OU equation, and multiplying an OU solution by
//! `e^{−nt − |x|²/2}` gives a Hermite solution.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Equation, ScalarField};
use crate::geometry::DomainBox;
use crate::point::{norm_sq, SpaceTimePoint};

/// Default finite-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-3;

#[inline]
pub fn phi_time(t: f64) -> f64 {
    -0.25 * (-4.0 * t).exp_m1()
}

/// Inverse of [`phi_time`]; NaN or infinite for `s ≥ 1/4`.
#[inline]
pub fn phi_inverse_time(s: f64) -> f64 {
    -0.25 * (-4.0 * s).ln_1p()
}

/// `(x e^{−2t}, φ_t(t))`. The spatial factor is taken as `√(1 − 4s)` of the
/// rounded image time `s`, so that `φ⁻¹` undoes it to a few ulps.
pub fn phi(p: &SpaceTimePoint) -> SpaceTimePoint {
    let s = phi_time(p.t);
    let f = phi_space_factor(p.t, s);
    SpaceTimePoint { x: p.x.iter().map(|v| v * f).collect(), t: s }
}

#[inline]
fn phi_space_factor(t: f64, s: f64) -> f64 {
    let f = (1.0 - 4.0 * s).sqrt();
    if f.is_finite() {
        f
    } else {
        (-2.0 * t).exp()
    }
}

pub fn phi_inverse(q: &SpaceTimePoint) -> Result<SpaceTimePoint> {
    if !(q.t < 0.25) {
        return Err(Error::OutsidePhiImage(q.t));
    }
    let f = 1.0 / (1.0 - 4.0 * q.t).sqrt();
    Ok(SpaceTimePoint { x: q.x.iter().map(|v| v * f).collect(), t: phi_inverse_time(q.t) })
}

/// `U = u ∘ φ` on `domain`. Fails at evaluation time if `φ(x,t)` leaves `u`'s domain.
pub fn heat_to_ou(u: &ScalarField, domain: DomainBox) -> ScalarField {
    let inner = u.clone();
    let eq = if u.equation() == Equation::Heat { Equation::Ou } else { Equation::None };
    ScalarField::from_fallible(format!("T[{}]", u.label()), u.kind(), eq, domain, move |x, t| {
        let s = phi_time(t);
        let f = phi_space_factor(t, s);
        let y: Vec<f64> = x.iter().map(|v| v * f).collect();
        inner.eval_at(&y, s)
    })
}

/// `u = U ∘ φ⁻¹`; evaluation at `s ≥ 1/4` is an error.
pub fn ou_from_heat_inverse(big_u: &ScalarField, domain: DomainBox) -> ScalarField {
    let inner = big_u.clone();
    let eq = if big_u.equation() == Equation::Ou { Equation::Heat } else { Equation::None };
    ScalarField::from_fallible(format!("Tinv[{}]", big_u.label()), big_u.kind(), eq, domain, move |y, s| {
        let p = phi_inverse(&SpaceTimePoint { x: y.to_vec(), t: s })?;
        inner.eval_at(&p.x, p.t)
    })
}

/// The Gaussian weight `e^{−nt − |x|²/2}`.
#[inline]
pub fn hermite_weight(x: &[f64], t: f64) -> f64 {
    (-(x.len() as f64) * t - 0.5 * norm_sq(x)).exp()
}

/// `V = e^{−nt − |x|²/2} U`.
pub fn ou_to_hermite(big_u: &ScalarField) -> ScalarField {
    let eq = if big_u.equation() == Equation::Ou { Equation::Hermite } else { Equation::None };
    big_u.map(format!("W[{}]", big_u.label()), eq, |v, x, t| hermite_weight(x, t) * v)
}

/// `U = e^{nt + |x|²/2} V`.
pub fn hermite_to_ou(v: &ScalarField) -> ScalarField {
    let eq = if v.equation() == Equation::Hermite { Equation::Ou } else { Equation::None };
    v.map(format!("Winv[{}]", v.label()), eq, |val, x, t| val / hermite_weight(x, t))
}

fn check_margin(f: &ScalarField, p: &SpaceTimePoint, h: f64) -> Result<()> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    p.check_dim(f.dim())?;
    let d = f.domain();
    let m = 2.0 * h;
    let ok = p.x.iter().enumerate().all(|(i, v)| v - m >= d.x_lo[i] && v + m <= d.x_hi[i])
        && p.t - m >= d.t_lo
        && p.t + m <= d.t_hi;
    if ok {
        Ok(())
    } else {
        Err(Error::InsufficientMargin(format!("{p} within {m} of the boundary of `{}`", f.label())))
    }
}

/// Centered second-order approximation of `∂t f − L f` at `p`, with
/// `L = Δ`, `Δ − 2x·∇` or `Δ − |x|²`.
pub fn operator_residual(f: &ScalarField, op: Equation, p: &SpaceTimePoint, h: f64) -> Result<f64> {
    check_margin(f, p, h)?;
    let n = p.dim();
    let centre = f.eval(p)?;
    let dt = (f.eval_at(&p.x, p.t + h)? - f.eval_at(&p.x, p.t - h)?) / (2.0 * h);
    let mut lap = 0.0;
    let mut drift = 0.0;
    let mut y = p.x.clone();
    for i in 0..n {
        y[i] = p.x[i] + h;
        let fp = f.eval_at(&y, p.t)?;
        y[i] = p.x[i] - h;
        let fm = f.eval_at(&y, p.t)?;
        y[i] = p.x[i];
        lap += (fp - 2.0 * centre + fm) / (h * h);
        drift += p.x[i] * (fp - fm) / (2.0 * h);
    }
    match op {
        Equation::Heat => Ok(dt - lap),
        Equation::Ou => Ok(dt - lap + 2.0 * drift),
        Equation::Hermite => Ok(dt - lap + norm_sq(&p.x) * centre),
        Equation::None => Err(Error::InvalidArgument("operator must be heat, ou or hermite".into())),
    }
}

/// Both sides of the two transference identities at one point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityCheck {
    /// `(∂t − Δ + |x|²)V` vs `e^{−nt−|x|²/2}(∂t − Δ + 2x·∇)U`, `V` the weighted `U`.
    pub weight_lhs: f64,
    pub weight_rhs: f64,
    /// `(∂t − Δ + 2x·∇)U` vs `e^{−4t}((∂s − Δ)u)∘φ`, `u = U ∘ φ⁻¹`.
    pub phi_lhs: f64,
    pub phi_rhs: f64,
}

impl IdentityCheck {
    pub fn weight_gap(&self) -> f64 {
        (self.weight_lhs - self.weight_rhs).abs()
    }

    pub fn phi_gap(&self) -> f64 {
        (self.phi_lhs - self.phi_rhs).abs()
    }
}

pub fn transference_identity_check(big_u: &ScalarField, p: &SpaceTimePoint, h: f64) -> Result<IdentityCheck> {
    let v = ou_to_hermite(big_u);
    let ou_res = operator_residual(big_u, Equation::Ou, p, h)?;
    let weight_lhs = operator_residual(&v, Equation::Hermite, p, h)?;
    let weight_rhs = hermite_weight(&p.x, p.t) * ou_res;

    let u = ou_from_heat_inverse(big_u, big_u.domain().phi_image());
    let q = phi(p);
    let heat_res = operator_residual(&u, Equation::Heat, &q, h)?;
    Ok(IdentityCheck {
        weight_lhs,
        weight_rhs,
        phi_lhs: ou_res,
        phi_rhs: (-4.0 * p.t).exp() * heat_res,
    })
}

/// Determinant of the finite-difference Jacobian of `φ` at `p`.
pub fn phi_jacobian_det_fd(p: &SpaceTimePoint, h: f64) -> f64 {
    let n = p.dim();
    let mut jac = vec![vec![0.0; n + 1]; n + 1];
    for col in 0..=n {
        let mut plus = p.clone();
        let mut minus = p.clone();
        if col < n {
            plus.x[col] += h;
            minus.x[col] -= h;
        } else {
            plus.t += h;
            minus.t -= h;
        }
        let (fp, fm) = (phi(&plus), phi(&minus));
        for row in 0..=n {
            let (a, b) = if row < n { (fp.x[row], fm.x[row]) } else { (fp.t, fm.t) };
            jac[row][col] = (a - b) / (2.0 * h);
        }
    }
    determinant(jac)
}

/// Exact Jacobian determinant `e^{−2(n+2)t}` of `φ`.
pub fn phi_jacobian_det(p: &SpaceTimePoint) -> f64 {
    (-2.0 * (p.dim() as f64 + 2.0) * p.t).exp()
}

fn determinant(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut det = 1.0;
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        if a[piv][c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            a.swap(piv, c);
            det = -det;
        }
        det *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::observed_order;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn pt(x: f64, t: f64) -> SpaceTimePoint {
        SpaceTimePoint::scalar(x, t)
    }

    fn dom1() -> DomainBox {
        DomainBox::default_for(1)
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi(&pt(0.0, 0.0)), pt(0.0, 0.0));
        assert_eq!(phi(&pt(3.7, 0.0)), pt(3.7, 0.0));
        let q = phi(&pt(2.0, LN_2 / 2.0));
        assert!((q.x[0] - 1.0).abs() < 1e-15 && (q.t - 3.0 / 16.0).abs() < 1e-15);
        let p = phi_inverse(&pt(1.0, 3.0 / 16.0)).unwrap();
        assert!((p.x[0] - 2.0).abs() < 1e-14 && (p.t - LN_2 / 2.0).abs() < 1e-15);
        assert_eq!(phi_inverse(&pt(0.0, 0.0)).unwrap(), pt(0.0, 0.0));
        assert!(matches!(phi_inverse(&pt(0.0, 0.25)), Err(Error::OutsidePhiImage(_))));
        assert!(phi_inverse(&pt(0.0, 1.0)).is_err());
    }

    proptest! {
        #[test]
        fn phi_roundtrip(x in -5.0f64..5.0, y in -5.0f64..5.0, t in -3.0f64..3.0) {
            let p = SpaceTimePoint::new(vec![x, y], t).unwrap();
            let back = phi_inverse(&phi(&p)).unwrap();
            for (a, b) in back.x.iter().zip(&p.x) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
            prop_assert!((back.t - t).abs() <= 1e-12 * t.abs().max(1.0));
        }

        #[test]
        fn phi_image_below_quarter_and_monotone(t1 in -3.0f64..3.0, dt in 1e-6f64..1.0) {
            let a = phi_time(t1);
            let b = phi_time(t1 + dt);
            prop_assert!(a < 0.25 && b < 0.25);
            prop_assert!(b > a);
        }
    }

    #[test]
    fn heat_to_ou_examples() {
        let big = DomainBox::cube(1, 1e4, -1e4, 0.2499);
        let one = ScalarField::constant(1.0, Equation::Heat, big.clone());
        let lin = ScalarField::closed_form("y", Equation::Heat, big.clone(), |y, _| y[0]);
        let poly = ScalarField::closed_form("y^2+2s", Equation::Heat, big, |y, s| y[0] * y[0] + 2.0 * s);
        let dom = DomainBox::cube(1, 4.0, -2.0, 2.0);
        let u1 = heat_to_ou(&one, dom.clone());
        let u2 = heat_to_ou(&lin, dom.clone());
        let u3 = heat_to_ou(&poly, dom.clone());
        assert_eq!(u2.equation(), Equation::Ou);
        for &(x, t) in &[(0.3, 0.1), (-1.2, 1.5), (2.0, -0.7)] {
            assert_eq!(u1.eval_at(&[x], t).unwrap(), 1.0);
            assert!((u2.eval_at(&[x], t).unwrap() - x * (-2.0 * t).exp()).abs() < 1e-13);
            let want = x * x * (-4.0 * t).exp() + (1.0 - (-4.0f64 * t).exp()) / 2.0;
            assert!((u3.eval_at(&[x], t).unwrap() - want).abs() < 1e-12 * want.abs().max(1.0));
            let r = operator_residual(&u3, Equation::Ou, &pt(x, t), 2e-4).unwrap();
            assert!(r.abs() < 1e-5 * want.abs().max(1.0), "residual {r}");
        }
    }

    #[test]
    fn heat_to_ou_domain_mismatch() {
        let small = ScalarField::constant(1.0, Equation::Heat, DomainBox::cube(1, 1.0, -0.1, 0.1));
        let u = heat_to_ou(&small, DomainBox::cube(1, 4.0, -2.0, 2.0));
        assert!(matches!(u.eval_at(&[0.1], 1.0), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn inverse_transform_examples() {
        let dom = DomainBox::cube(1, 6.0, -2.0, 2.0);
        let c = ScalarField::constant(2.5, Equation::Ou, dom.clone());
        let lin = ScalarField::closed_form("x e^{-2t}", Equation::Ou, dom.clone(), |x, t| x[0] * (-2.0 * t).exp());
        let img = dom.phi_image();
        let uc = ou_from_heat_inverse(&c, img.clone());
        let ul = ou_from_heat_inverse(&lin, img.clone());
        for &(y, s) in &[(0.2, 0.1), (-0.5, -0.3), (1.0, 0.2)] {
            assert_eq!(uc.eval_at(&[y], s).unwrap(), 2.5);
            assert!((ul.eval_at(&[y], s).unwrap() - y).abs() < 1e-13);
        }
        let top = DomainBox::cube(1, 1.0, 0.0, 0.5);
        let bad = ou_from_heat_inverse(&c, top);
        assert!(matches!(bad.eval_at(&[0.0], 0.3), Err(Error::OutsidePhiImage(_))));

        let mut rng = rand::thread_rng();
        use rand::Rng;
        let wrapped = ou_from_heat_inverse(&lin, img);
        let back = heat_to_ou(&wrapped, DomainBox::cube(1, 3.0, -1.0, 1.0));
        for _ in 0..100 {
            let (x, t) = (rng.gen_range(-3.0..3.0), rng.gen_range(-1.0..1.0));
            let a = back.eval_at(&[x], t).unwrap();
            let b = lin.eval_at(&[x], t).unwrap();
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn weight_transform_examples() {
        let dom = DomainBox::default_for(1);
        let one = ScalarField::constant(1.0, Equation::Ou, dom.clone());
        let v = ou_to_hermite(&one);
        assert_eq!(v.eval_at(&[0.0], 0.0).unwrap(), 1.0);
        assert!((v.eval_at(&[1.0], 0.5).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        let lin = ScalarField::closed_form("x e^{-2t}", Equation::Ou, dom.clone(), |x, t| x[0] * (-2.0 * t).exp());
        let vl = ou_to_hermite(&lin);
        let (x, t) = (0.7, 0.3);
        assert!((vl.eval_at(&[x], t).unwrap() - x * (-3.0 * t - x * x / 2.0).exp()).abs() < 1e-15);
        let zero = ScalarField::constant(0.0, Equation::Hermite, dom.clone());
        assert_eq!(hermite_to_ou(&zero).eval_at(&[1.0], 1.0).unwrap(), 0.0);
        let ground = ScalarField::closed_form("g", Equation::Hermite, dom, |x, t| (-t - x[0] * x[0] / 2.0).exp());
        let u = hermite_to_ou(&ground);
        assert!((u.eval_at(&[1.3], -0.4).unwrap() - 1.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn weight_roundtrip(x in -6.0f64..6.0, t in -3.0f64..3.0) {
            let dom = DomainBox::default_for(1);
            let f = ScalarField::closed_form("f", Equation::Ou, dom, |x, t| (x[0] - t).sin() + 2.0);
            let back = hermite_to_ou(&ou_to_hermite(&f));
            let a = back.eval_at(&[x], t).unwrap();
            let b = f.eval_at(&[x], t).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * b.abs());
        }
    }

    #[test]
    fn residual_ou_linear_vanishes() {
        let f = ScalarField::closed_form("x e^{-2t}", Equation::Ou, dom1(), |x, t| x[0] * (-2.0 * t).exp());
        // the only truncation error is the (4/3)h² f of the time difference
        for &(x, t) in &[(0.5, 0.0), (-2.0, 1.0), (0.7, 0.1), (3.0, -1.5)] {
            let r = operator_residual(&f, Equation::Ou, &pt(x, t), 1e-3).unwrap();
            let f0 = x * (-2.0 * t).exp();
            assert!((r + 4.0 / 3.0 * 1e-6 * f0).abs() <= 1e-9 * f0.abs().max(1.0), "residual {r}");
            if f0.abs() < 0.75 {
                assert!(r.abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn residual_fundamental_solution_is_second_order() {
        let f = ScalarField::closed_form("Phi", Equation::Heat, DomainBox::cube(1, 8.0, 0.01, 4.0), |x, t| {
            (-x[0] * x[0] / (4.0 * t)).exp() / (4.0 * std::f64::consts::PI * t).sqrt()
        });
        let p = pt(0.4, 0.3);
        let e1 = operator_residual(&f, Equation::Heat, &p, 2e-2).unwrap().abs();
        let e2 = operator_residual(&f, Equation::Heat, &p, 1e-2).unwrap().abs();
        let e3 = operator_residual(&f, Equation::Heat, &p, 5e-3).unwrap().abs();
        assert!(observed_order(e1, e2, 2.0) > 1.9 && observed_order(e2, e3, 2.0) > 1.9);
    }

    #[test]
    fn residual_hermite_eigenfunction() {
        let f = ScalarField::closed_form("H2", Equation::Hermite, dom1(), |x, t| {
            (4.0 * x[0] * x[0] - 2.0) * (-x[0] * x[0] / 2.0 - 5.0 * t).exp()
        });
        for h in [4e-3, 2e-3, 1e-3] {
            let r = operator_residual(&f, Equation::Hermite, &pt(0.6, 0.2), h).unwrap();
            assert!(r.abs() <= 20.0 * h * h, "h = {h}: residual {r}");
        }
    }

    #[test]
    fn residual_needs_margin() {
        let f = ScalarField::constant(1.0, Equation::Heat, DomainBox::cube(1, 1.0, 0.0, 1.0));
        assert!(matches!(
            operator_residual(&f, Equation::Heat, &pt(0.999, 0.5), 1e-3),
            Err(Error::InsufficientMargin(_))
        ));
        assert!(operator_residual(&f, Equation::None, &pt(0.0, 0.5), 1e-3).is_err());
    }

    #[test]
    fn identity_checks() {
        let dom = DomainBox::cube(1, 4.0, -1.0, 2.0);
        let one = ScalarField::constant(1.0, Equation::Ou, dom.clone());
        let c = transference_identity_check(&one, &pt(0.3, 0.4), 1e-3).unwrap();
        assert!(c.phi_lhs.abs() < 1e-9 && c.phi_rhs.abs() < 1e-6);
        assert!(c.weight_lhs.abs() < 1e-6 && c.weight_rhs.abs() < 1e-9);

        // x² is not an OU temperature; both sides agree to O(h²)
        let sq = ScalarField::closed_form("x^2", Equation::None, dom, |x, _| x[0] * x[0]);
        let p = pt(0.8, 0.1);
        let checks: Vec<IdentityCheck> =
            [8e-3, 4e-3, 2e-3].iter().map(|&h| transference_identity_check(&sq, &p, h).unwrap()).collect();
        for c in &checks {
            assert!((c.phi_lhs - (4.0 * 0.64 - 2.0)).abs() < 1e-9);
            assert!(c.weight_lhs.abs() > 0.01);
        }
        for w in checks.windows(2) {
            assert!(observed_order(w[0].phi_gap(), w[1].phi_gap(), 2.0) > 1.9);
            assert!(observed_order(w[0].weight_gap(), w[1].weight_gap(), 2.0) > 1.9);
        }
    }

    #[test]
    fn jacobian_matches_closed_form() {
        for n in [1usize, 2] {
            let p = SpaceTimePoint::new((0..n).map(|i| 0.3 + i as f64).collect(), 0.35).unwrap();
            let exact = phi_jacobian_det(&p);
            let e1 = (phi_jacobian_det_fd(&p, 1e-2) - exact).abs();
            let e2 = (phi_jacobian_det_fd(&p, 5e-3) - exact).abs();
            assert!(e2 < 1e-4 * exact);
            assert!(observed_order(e1, e2, 2.0) > 1.9);
        }
    }
}
