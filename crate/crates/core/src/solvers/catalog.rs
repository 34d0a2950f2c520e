//! Closed-form fields addressable by id.
//!
//! Temperatures:
//!
//! * `heat.const`, `heat.linear` (`x₁`), `heat.linear.<i>` (`x_i`, 1-based),
//!   `heat.poly2` (`|x|² + 2nt`), `heat.fundamental` (`Φ(x, t + 1)`, `t > −1`).
//! * `ou.const`, `ou.linear` (`x₁e^{−2t}`), `ou.quadratic`
//!   (`x₁²e^{−4t} + (1 − e^{−4t})/2`), and `ou.pull.<heat id>` for every heat entry.
//! * `hermite.ground` (`e^{−nt−|x|²/2}`), `hermite.eig.<k>` (`n = 1`, `k ≤ 4`),
//!   `hermite.eig.<a>.<b>` (`n = 2`), and `hermite.w.<ou id>` for every OU entry.
//!
//! Non-solutions used by the classifier suites:
//!
//! * `heat.x2` (`x₁²`, sub), `heat.minus-t` (`−t`, sub), `heat.t` (`t`, super),
//!   `heat.sin` (`sin x₁`), `heat.x2t` (`x₁² t`), `ou.square.<ou id>` (`U²`, sub),
//!   `hermite.square.<ou id>` (weight times `U²`, sub).

use crate::error::{Error, Result};
use crate::field::{Equation, ScalarField};
use crate::geometry::DomainBox;
use crate::kernels::fundamental_solution;
use crate::point::norm_sq;
use crate::transference::{heat_to_ou, ou_to_hermite, phi_inverse_time};

/// Source time of `heat.fundamental`.
pub const FUNDAMENTAL_SOURCE_T: f64 = -1.0;
/// Margin kept between the source and the domain of `heat.fundamental`.
pub const FUNDAMENTAL_MARGIN: f64 = 0.05;

/// Ids of the catalog temperatures in dimension `n`.
pub fn catalog_ids(n: usize) -> Vec<String> {
    let mut heat = vec!["heat.const".to_string(), "heat.linear".into(), "heat.poly2".into(), "heat.fundamental".into()];
    for i in 2..=n {
        heat.push(format!("heat.linear.{i}"));
    }
    let mut ou = vec!["ou.const".to_string(), "ou.linear".into(), "ou.quadratic".into()];
    ou.extend(heat.iter().map(|h| format!("ou.pull.{h}")));
    let mut hermite = vec!["hermite.ground".to_string()];
    match n {
        1 => hermite.extend((0..=4).map(|k| format!("hermite.eig.{k}"))),
        2 => {
            for a in 0..=2 {
                for b in 0..=2 {
                    hermite.push(format!("hermite.eig.{a}.{b}"));
                }
            }
        }
        _ => {}
    }
    hermite.extend(ou.iter().map(|u| format!("hermite.w.{u}")));
    heat.into_iter().chain(ou).chain(hermite).collect()
}

/// Ids of the catalog non-solutions (all valid for any `n`).
pub fn nonsolution_ids() -> Vec<String> {
    ["heat.x2", "heat.minus-t", "heat.t", "heat.sin", "heat.x2t", "ou.square.ou.linear", "ou.square.ou.quadratic", "hermite.square.ou.linear"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

/// Physicists' Hermite polynomial `H_k`.
pub fn hermite_poly(k: usize, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * x);
    if k == 0 {
        return h0;
    }
    for j in 1..k {
        let h2 = 2.0 * x * h1 - 2.0 * j as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

fn heat_entry(id: &str, n: usize, dom: DomainBox) -> Result<ScalarField> {
    let nf = n as f64;
    let f = match id {
        "heat.const" => ScalarField::constant(1.0, Equation::Heat, dom),
        "heat.linear" => ScalarField::closed_form(id, Equation::Heat, dom, |x, _| x[0]),
        "heat.poly2" => ScalarField::closed_form(id, Equation::Heat, dom, move |x, t| norm_sq(x) + 2.0 * nf * t),
        "heat.fundamental" => {
            let d = DomainBox::from_parts(dom.x_lo, dom.x_hi, dom.t_lo.max(FUNDAMENTAL_SOURCE_T + FUNDAMENTAL_MARGIN), dom.t_hi);
            ScalarField::closed_form(id, Equation::Heat, d, |x, t| fundamental_solution(x, t - FUNDAMENTAL_SOURCE_T))
        }
        "heat.x2" => ScalarField::closed_form(id, Equation::None, dom, |x, _| x[0] * x[0]),
        "heat.minus-t" => ScalarField::closed_form(id, Equation::None, dom, |_, t| -t),
        "heat.t" => ScalarField::closed_form(id, Equation::None, dom, |_, t| t),
        "heat.sin" => ScalarField::closed_form(id, Equation::None, dom, |x, _| x[0].sin()),
        "heat.x2t" => ScalarField::closed_form(id, Equation::None, dom, |x, t| x[0] * x[0] * t),
        _ => {
            if let Some(i) = id.strip_prefix("heat.linear.") {
                let i: usize = i.parse().map_err(|_| Error::UnknownField(id.into()))?;
                if i == 0 || i > n {
                    return Err(Error::UnknownField(format!("{id} (n = {n})")));
                }
                return Ok(ScalarField::closed_form(id, Equation::Heat, dom, move |x, _| x[i - 1]));
            }
            return Err(Error::UnknownField(id.into()));
        }
    };
    Ok(f)
}

fn ou_entry(id: &str, n: usize, dom: DomainBox) -> Result<ScalarField> {
    let f = match id {
        "ou.const" => ScalarField::constant(1.0, Equation::Ou, dom),
        "ou.linear" => ScalarField::closed_form(id, Equation::Ou, dom, |x, t| x[0] * (-2.0 * t).exp()),
        "ou.quadratic" => ScalarField::closed_form(id, Equation::Ou, dom, |x, t| {
            let e = (-4.0 * t).exp();
            x[0] * x[0] * e - 0.5 * (-4.0 * t).exp_m1()
        }),
        _ => {
            if let Some(h) = id.strip_prefix("ou.pull.") {
                // the heat closed form is valid on all of φ(dom), so widen its box
                let d = if h == "heat.fundamental" {
                    let t_lo = dom.t_lo.max(phi_inverse_time(FUNDAMENTAL_SOURCE_T + FUNDAMENTAL_MARGIN));
                    DomainBox::from_parts(dom.x_lo.clone(), dom.x_hi.clone(), t_lo, dom.t_hi)
                } else {
                    dom.clone()
                };
                let image = d.phi_image().dilated(1e-9);
                let u = heat_entry(h, n, image)?;
                if u.equation() != Equation::Heat {
                    return Err(Error::UnknownField(id.into()));
                }
                return Ok(heat_to_ou(&u, d).with_label(id));
            }
            if let Some(u) = id.strip_prefix("ou.square.") {
                let u = ou_entry(u, n, dom)?;
                return Ok(u.map(id, Equation::None, |v, _, _| v * v));
            }
            return Err(Error::UnknownField(id.into()));
        }
    };
    Ok(f)
}

fn hermite_entry(id: &str, n: usize, dom: DomainBox) -> Result<ScalarField> {
    let nf = n as f64;
    if id == "hermite.ground" {
        return Ok(ScalarField::closed_form(id, Equation::Hermite, dom, move |x, t| (-nf * t - 0.5 * norm_sq(x)).exp()));
    }
    if let Some(rest) = id.strip_prefix("hermite.eig.") {
        let ks: Vec<usize> = rest
            .split('.')
            .map(|k| k.parse().map_err(|_| Error::UnknownField(id.into())))
            .collect::<Result<_>>()?;
        if ks.len() != n || ks.iter().any(|&k| k > 4) {
            return Err(Error::UnknownField(format!("{id} (n = {n})")));
        }
        let lambda = 2.0 * ks.iter().sum::<usize>() as f64 + nf;
        return Ok(ScalarField::closed_form(id, Equation::Hermite, dom, move |x, t| {
            let poly: f64 = ks.iter().zip(x).map(|(&k, &xi)| hermite_poly(k, xi)).product();
            poly * (-0.5 * norm_sq(x) - lambda * t).exp()
        }));
    }
    if let Some(u) = id.strip_prefix("hermite.w.") {
        let u = ou_entry(u, n, dom)?;
        if u.equation() != Equation::Ou {
            return Err(Error::UnknownField(id.into()));
        }
        return Ok(ou_to_hermite(&u).with_label(id));
    }
    if let Some(u) = id.strip_prefix("hermite.square.") {
        let u = ou_entry(u, n, dom)?;
        let sq = u.map("sq", Equation::None, |v, _, _| v * v);
        return Ok(ou_to_hermite(&sq).with_label(id).with_equation(Equation::None));
    }
    Err(Error::UnknownField(id.into()))
}

/// Looks up a catalog field on the default box `|x_i| ≤ 8`, `|t| ≤ 4`.
pub fn catalog(id: &str, n: usize) -> Result<ScalarField> {
    catalog_on(id, DomainBox::default_for(n))
}

/// Looks up a catalog field restricted to `domain`.
pub fn catalog_on(id: &str, domain: DomainBox) -> Result<ScalarField> {
    let n = domain.dim();
    if n == 0 {
        return Err(Error::UnsupportedDimension(0));
    }
    match id.split('.').next() {
        Some("heat") => heat_entry(id, n, domain),
        Some("ou") => ou_entry(id, n, domain),
        Some("hermite") => hermite_entry(id, n, domain),
        _ => Err(Error::UnknownField(id.into())),
    }
}

/// The equation a catalog id belongs to, from its prefix.
pub fn catalog_equation(id: &str) -> Result<Equation> {
    match id.split('.').next() {
        Some("heat") => Ok(Equation::Heat),
        Some("ou") => Ok(Equation::Ou),
        Some("hermite") => Ok(Equation::Hermite),
        _ => Err(Error::UnknownField(id.into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::SpaceTimePoint;
    use crate::transference::operator_residual;

    #[test]
    fn examples() {
        let c = catalog("ou.const", 1).unwrap();
        assert_eq!(c.eval_at(&[3.0], -2.0).unwrap(), 1.0);
        let g = catalog("hermite.ground", 1).unwrap();
        assert_eq!(g.eval_at(&[0.0], 0.0).unwrap(), 1.0);
        let r = operator_residual(&g, Equation::Hermite, &SpaceTimePoint::scalar(0.4, 0.2), 1e-3).unwrap();
        assert!(r.abs() < 1e-5);
        let f = catalog("heat.fundamental", 2).unwrap();
        let p = [0.3, -0.2];
        assert_eq!(f.eval_at(&p, 0.5).unwrap(), fundamental_solution(&p, 1.5));
        assert!(f.eval_at(&p, -0.99).is_err());
        assert!(matches!(catalog("heat.nope", 1), Err(Error::UnknownField(_))));
        assert!(catalog("hermite.eig.1.2", 1).is_err());
        assert!(catalog("hermite.eig.5", 1).is_err());
        assert!(catalog("ou.pull.heat.x2", 1).is_err());
    }

    #[test]
    fn hermite_polys() {
        for &x in &[-1.3, 0.0, 0.4, 2.0] {
            assert_eq!(hermite_poly(2, x), 4.0 * x * x - 2.0);
            assert!((hermite_poly(3, x) - (8.0 * x.powi(3) - 12.0 * x)).abs() < 1e-12);
            assert!((hermite_poly(4, x) - (16.0 * x.powi(4) - 48.0 * x * x + 12.0)).abs() < 1e-11);
        }
    }

    #[test]
    fn every_temperature_has_small_operator_residual() {
        for n in [1usize, 2] {
            for id in catalog_ids(n) {
                let f = catalog(&id, n).unwrap();
                let eq = catalog_equation(&id).unwrap();
                assert_eq!(f.equation(), eq, "{id}");
                for &(x, t) in &[(0.3, 0.2), (-0.7, 0.9), (1.1, -0.2)] {
                    let p = SpaceTimePoint::new(vec![x; n].iter().enumerate().map(|(i, v)| v - 0.2 * i as f64).collect(), t).unwrap();
                    let r = operator_residual(&f, eq, &p, 1e-3).unwrap();
                    let scale = f.eval(&p).unwrap().abs().max(1.0);
                    assert!(r.abs() < 1e-3 * scale, "{id} at {p}: {r}");
                }
            }
        }
    }

    #[test]
    fn pullbacks_match_closed_forms() {
        let a = catalog("ou.pull.heat.linear", 1).unwrap();
        let b = catalog("ou.linear", 1).unwrap();
        let c = catalog("ou.pull.heat.poly2", 1).unwrap();
        let d = catalog("ou.quadratic", 1).unwrap();
        for &(x, t) in &[(0.5, 0.5), (-3.0, -2.0), (7.0, 3.5)] {
            let (u, v) = (a.eval_at(&[x], t).unwrap(), b.eval_at(&[x], t).unwrap());
            assert!((u - v).abs() <= 1e-12 * v.abs().max(1.0));
            let (u, v) = (c.eval_at(&[x], t).unwrap(), d.eval_at(&[x], t).unwrap());
            assert!((u - v).abs() <= 1e-11 * v.abs().max(1.0));
        }
    }
}
