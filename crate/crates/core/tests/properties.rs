use std::sync::Arc;

use approx::assert_relative_eq;
use proptest::prelude::*;

use heatball_core::geometry::{gamma_contains, lambda_reachable};
use heatball_core::growth::{ell_sandwich, minorant_values, tacklind_sequence};
use heatball_core::kernels::{k_hermite, k_ou};
use heatball_core::quadrature::{classify_residuals, mv_residual};
use heatball_core::solvers::{catalog_on, solve_fd};
use heatball_core::transference::{phi, phi_inverse, phi_time};
use heatball_core::verify::{check_infinite_propagation, check_weak_max, gamma_measure, gincl_check, harnack_mintq, CheckStatus};
use heatball_core::{Classification, DomainBox, Equation, GrowthFunction, HeatBall, MvConfig, ScalarField, Scheme, SpaceTimePoint};

fn pt(x: f64, t: f64) -> SpaceTimePoint {
    SpaceTimePoint::scalar(x, t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phi_inverse_then_phi(y in -50.0f64..50.0, s in -100.0f64..0.2499) {
        let q = pt(y, s);
        let back = phi(&phi_inverse(&q).unwrap());
        prop_assert!((back.t - s).abs() <= 1e-12 * s.abs().max(1e-3));
        prop_assert!((back.x[0] - y).abs() <= 1e-12 * y.abs().max(1e-3));
    }

    #[test]
    fn minorant_invariants(vals in prop::collection::vec(0.01f64..100.0, 1..200)) {
        let bar = minorant_values(&vals).unwrap();
        prop_assert!(bar.iter().zip(&vals).all(|(b, v)| b <= v));
        prop_assert!(bar.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(minorant_values(&bar).unwrap(), bar.clone());
        prop_assert_eq!(bar[vals.len() - 1], vals[vals.len() - 1]);
    }

    #[test]
    fn ell_sequence_conditions(a in 0.0f64..2.0, amp in 0.0f64..0.9, freq in 0.1f64..3.0) {
        let p = GrowthFunction::new("wavy", None, 2f64.powi(24), move |r| r.powf(a) * (1.0 + amp * (freq * r).sin())).unwrap();
        let seq = tacklind_sequence(&p, 30).unwrap();
        prop_assert_eq!(seq.ell[0], 1.0);
        for w in seq.ell.windows(2) {
            prop_assert!(w[1] >= 2.0 * w[0] * (1.0 - 1e-14));
        }
        for (lo, mid, hi) in ell_sandwich(&p).unwrap() {
            prop_assert!(mid >= lo * (1.0 - 1e-3) && mid <= hi * (1.0 + 1e-3), "{} {} {}", lo, mid, hi);
        }
    }

    #[test]
    fn hermite_kernel_ratio(x in -2.0f64..2.0, t in -1.0f64..1.0, r in 0.01f64..3.0, u in 0.05f64..0.95, w in -0.9f64..0.9) {
        let anchor = pt(x, t);
        let ball = HeatBall::xi(anchor.clone(), r).unwrap();
        let (lo, hi) = ball.time_range();
        let s = lo + u * (hi - lo);
        if let Some((c, rad)) = ball.slice(s) {
            let p = pt(c[0] + w * rad, s);
            let ku = k_ou(&anchor, &p).unwrap();
            let kh = k_hermite(&anchor, &p).unwrap();
            prop_assert!(ku >= 0.0);
            let want = ((s - t) + 0.5 * (p.x[0] * p.x[0] - x * x)).exp();
            prop_assert!((kh / ku - want).abs() <= 1e-12 * want);
        }
    }

    #[test]
    fn classifier_rule_is_consistent(res in prop::collection::vec(-1.0f64..1.0, 1..8), tol in 1e-6f64..1e-2) {
        let label = classify_residuals(&res, tol);
        let all_small = res.iter().all(|r| r.abs() <= tol);
        let all_neg = res.iter().all(|&r| r <= tol);
        let all_pos = res.iter().all(|&r| r >= -tol);
        let want = if all_small {
            Classification::Temperature
        } else if all_neg {
            Classification::Sub
        } else if all_pos {
            Classification::Super
        } else {
            Classification::Neither
        };
        prop_assert_eq!(label, want);
    }

    #[test]
    fn gincl_holds(x0 in -3.0f64..3.0, t0 in -1.0f64..1.5, big_r in 0.01f64..1.0) {
        let rep = gincl_check(&[x0], t0, big_r, 4.0, 4096, 5).unwrap();
        prop_assert_eq!(rep.left_violations, 0);
        prop_assert_eq!(rep.right_violations, 0);
    }

    #[test]
    fn gamma_measure_increases(t0 in -1.0f64..1.0, r in 0.01f64..0.9) {
        for n in 1..=3 {
            prop_assert!(gamma_measure(n, t0, r * 1.1) > gamma_measure(n, t0, r));
        }
    }

    #[test]
    fn mintq_constant_is_one(c in 0.1f64..10.0, q in 0.2f64..4.0, big_r in 0.05f64..0.5) {
        let one = ScalarField::constant(c, Equation::Ou, DomainBox::cube(1, 6.0, -4.0, 2.0));
        let rep = harnack_mintq(&one, &[0.2], 1.0, big_r, q, 2048, 9).unwrap();
        assert_relative_eq!(rep.ratio, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn gamma_points_are_reachable_from_above(x in -0.5f64..0.5, t in 0.05f64..0.45) {
        let dom = DomainBox::cube(1, 1.0, 0.0, 1.0);
        let raster = dom.raster(32.0);
        let top = pt(0.0, 0.9);
        let p = pt(x, t);
        prop_assert!(lambda_reachable(&raster, &top, &p).unwrap());
        prop_assert!(!lambda_reachable(&raster, &p, &top).unwrap());
    }

    #[test]
    fn implicit_runs_respect_max_principles(c in -0.8f64..0.8, w in 0.2f64..0.8, amp in 0.1f64..5.0) {
        let dom = DomainBox::cube(1, 2.0, 0.0, 0.3);
        for eq in [Equation::Heat, Equation::Ou, Equation::Hermite] {
            let f = ScalarField::closed_form("bump", eq, dom.clone(), move |x, _| {
                let d = (x[0] - c) / w;
                if d.abs() < 1.0 { amp * (1.0 - d * d).powi(2) } else { 0.0 }
            });
            let g = solve_fd(eq, &dom, &f, &f, Scheme::new(1.0, 0.05, 0.02).unwrap()).unwrap();
            let wm = check_weak_max(&g, g.t_hi()).unwrap();
            prop_assert!(!wm.violation);
            let ip = check_infinite_propagation(&g, None).unwrap();
            prop_assert_eq!(ip.status, CheckStatus::Pass);
        }
    }
}

#[test]
fn gamma_membership_matches_phi_cylinder() {
    // after φ the spatial condition of Γ_R reads |y − y₀| < R e^{−2t₀}
    let (x0, t0, big_r) = (0.7f64, 0.3f64, 0.5f64);
    let r = big_r * (-2.0 * t0).exp();
    let y0 = phi(&pt(x0, t0));
    for i in 0..200 {
        let x = -1.0 + 0.0137 * i as f64;
        let t = t0 - 0.2;
        let y = phi(&pt(x, t));
        assert_eq!(gamma_contains(&[x0], t0, big_r, &pt(x, t)), (y.x[0] - y0.x[0]).abs() < r);
    }
    assert!(phi_time(t0) > phi_time(t0 - 0.2));
}

#[test]
fn grid_solution_satisfies_mean_value_property() {
    let dom = DomainBox::cube(1, 3.0, -0.9, -0.2);
    let f = catalog_on("heat.fundamental", dom.clone()).unwrap();
    let errs: Vec<f64> = [0.05, 0.025]
        .iter()
        .map(|&h| {
            let g = Arc::new(solve_fd(Equation::Heat, &dom, &f, &f, Scheme::crank_nicolson(h, h / 2.0)).unwrap());
            let field = g.to_field("grid");
            let mut cfg = MvConfig::default_for(1);
            cfg.tol = 1e-5;
            mv_residual(&field, &pt(0.2, -0.4), 0.3, Equation::Heat, &cfg).unwrap().abs()
        })
        .collect();
    // interpolation and truncation error both shrink with the mesh
    assert!(errs[1] < errs[0] && errs[1] < 1e-3, "{errs:?}");
}
