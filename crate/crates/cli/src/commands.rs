use anyhow::{anyhow, bail, Context, Result};
use serde_json::json;

use heatball_core::geometry::boundary_samples;
use heatball_core::growth::{self, catalog_classes, divergence_diagnostic, shift_compare, Verdict};
use heatball_core::quadrature::{classify_residuals, matching_ball, operator_sign, residual_with_error};
use heatball_core::solvers::{catalog_equation, catalog_ids, catalog_on, nonsolution_ids, solve_fd, LINEAR_TOL};
use heatball_core::verify::{
    check_infinite_propagation, check_strong_max, check_weak_max, gamma_measure, harnack_mintq, harnack_ratio, ou_source_field,
    CheckStatus, HarnackMeasure,
};
use heatball_core::{
    BallFamily, Classification, DomainBox, Equation, GrowthFunction, HeatBall, MvConfig, MvMethod, ScalarField, Scheme,
    SpaceTimePoint,
};

use crate::report::{sidecar, Csv, Report, Status};
use crate::{
    CatalogArgs, Command, ContainsArgs, FamilyArg, GeometryAction, GeometryArgs, GridArgs, GrowthArgs, HarnackArgs, MaxprinArgs,
    MethodArg, MvArgs, SolveArgs,
};

pub fn run(cmd: Command) -> Result<Status> {
    match cmd {
        Command::Catalog(a) => catalog(a),
        Command::MvCheck(a) => mv_check(a, false),
        Command::Classify(a) => mv_check(a, true),
        Command::Solve(a) => solve(a),
        Command::Geometry { action: GeometryAction::Export(a) } => geometry_export(a),
        Command::Geometry { action: GeometryAction::Contains(a) } => geometry_contains(a),
        Command::Maxprin(a) => maxprin(a),
        Command::Harnack(a) => harnack(a),
        Command::Growth(a) => growth_cmd(a),
    }
}

fn split_point(v: &[f64]) -> Result<SpaceTimePoint> {
    if v.len() < 2 {
        bail!("a space-time point needs at least two coordinates (x1,..,xn,t), got {v:?}");
    }
    Ok(SpaceTimePoint::new(v[..v.len() - 1].to_vec(), v[v.len() - 1])?)
}

fn parse_points(s: &str) -> Result<Vec<SpaceTimePoint>> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let v: Vec<f64> = p.split(',').map(|c| c.trim().parse::<f64>().with_context(|| format!("bad coordinate `{c}`"))).collect::<Result<_>>()?;
            split_point(&v)
        })
        .collect()
}

/// Catalog id, `const:<c>`, `bump`, `source:<xi>:<t>` or an alias.
fn resolve_field(spec: &str, domain: DomainBox, eq: Option<Equation>) -> Result<ScalarField> {
    if let Some(c) = spec.strip_prefix("const:") {
        let c: f64 = c.parse().with_context(|| format!("bad constant in `{spec}`"))?;
        let e = match eq {
            Some(Equation::Hermite) if c != 0.0 => Equation::None,
            Some(e) => e,
            None => Equation::Heat,
        };
        return Ok(ScalarField::constant(c, e, domain));
    }
    if spec == "bump" {
        return Ok(ScalarField::closed_form("bump", Equation::None, domain, |x, _| {
            let r2: f64 = x.iter().map(|v| (v - 0.3) * (v - 0.3)).sum();
            if r2 < 1.0 {
                (1.0 - r2).powi(2)
            } else {
                0.0
            }
        }));
    }
    if let Some(rest) = spec.strip_prefix("source:") {
        let (xi, t) = rest.rsplit_once(':').ok_or_else(|| anyhow!("expected source:<xi1,..>:<t_src>"))?;
        let xi: Vec<f64> = xi.split(',').map(|c| c.trim().parse::<f64>()).collect::<Result<_, _>>().context("bad source point")?;
        let t: f64 = t.parse().context("bad source time")?;
        return Ok(ou_source_field(&xi, t, domain)?);
    }
    let id = match spec {
        "heat.quadratic-bad" => "heat.x2",
        other => other,
    };
    Ok(catalog_on(id, domain)?)
}

fn catalog(a: CatalogArgs) -> Result<Status> {
    let mut rep = Report::new("catalog", &a);
    let mut csv = Csv::new(&["id", "equation", "kind"]);
    let mut entries = Vec::new();
    for id in catalog_ids(a.n) {
        let eq = catalog_equation(&id)?;
        csv.row_str(vec![id.clone(), eq.to_string(), "temperature".into()]);
        entries.push(json!({ "id": id, "equation": eq, "kind": "temperature" }));
    }
    for id in nonsolution_ids() {
        let eq = catalog_equation(&id)?;
        csv.row_str(vec![id.clone(), eq.to_string(), "non-solution".into()]);
        entries.push(json!({ "id": id, "equation": eq, "kind": "non-solution" }));
    }
    let growth: Vec<_> = catalog_classes()
        .into_iter()
        .map(|(id, d)| json!({ "id": id, "integral_of_inverse_minorant": if d { "diverges" } else { "converges" } }))
        .collect();
    rep.result = json!({ "n": a.n, "fields": entries, "growth": growth, "aliases": { "heat.quadratic-bad": "heat.x2" } });
    if let Some(p) = &a.output.csv {
        csv.write(p)?;
    }
    rep.emit(a.output.out.as_deref())?;
    Ok(Status::Pass)
}

fn mv_config(a: &MvArgs, n: usize) -> MvConfig {
    let mut cfg = MvConfig::default_for(n);
    if let Some(m) = a.method {
        cfg.method = match m {
            MethodArg::Tensor => MvMethod::Tensor,
            MethodArg::Mc => MvMethod::MonteCarlo,
        };
    }
    if let Some(t) = a.tol {
        cfg.tol = t;
        cfg.mc_target_se = t;
    }
    cfg.seed = a.seed;
    cfg.descent_m = a.descent_m;
    cfg
}

/// Lattice points inside the ball, for the operator-sign oracle.
fn lattice_in_ball(ball: &HeatBall, per_axis: usize) -> Vec<SpaceTimePoint> {
    let b = ball.bounds();
    let n = ball.dim();
    let total = per_axis.pow(n as u32 + 1);
    let mut out = Vec::new();
    for code in 0..total {
        let mut rem = code;
        let mut x = Vec::with_capacity(n);
        let mut coord = |lo: f64, hi: f64| {
            let i = rem % per_axis;
            rem /= per_axis;
            lo + (hi - lo) * (i as f64 + 0.5) / per_axis as f64
        };
        for a in 0..n {
            x.push(coord(b.x_lo[a], b.x_hi[a]));
        }
        let t = coord(b.t_lo, b.t_hi);
        let p = SpaceTimePoint { x, t };
        if ball.contains(&p) {
            out.push(p);
        }
    }
    out
}

fn mv_check(a: MvArgs, oracle: bool) -> Result<Status> {
    let center = split_point(&a.center)?;
    let n = center.dim();
    if a.r.is_empty() || a.r.iter().any(|r| !(*r > 0.0)) || a.r.windows(2).any(|w| !(w[1] < w[0])) {
        bail!("--r must be positive and strictly decreasing");
    }
    if !(a.classify_tol > 0.0) || a.tol.is_some_and(|t| !(t > 0.0)) {
        bail!("tolerances must be positive");
    }
    let f = resolve_field(&a.field, DomainBox::default_for(n), a.equation.map(Into::into))?;
    let eq: Equation = match a.equation {
        Some(e) => e.into(),
        None if f.equation() != Equation::None => f.equation(),
        None => bail!("`{}` is not a temperature of any equation; pass --equation", a.field),
    };
    let cfg = mv_config(&a, n);
    let mut rows = Vec::new();
    let mut csv = Csv::new(&["r", "residual", "error_estimate"]);
    for &r in &a.r {
        let (res, err) = residual_with_error(&f, &center, r, eq, &cfg)?;
        csv.row([r, res, err]);
        rows.push(json!({ "r": r, "residual": res, "error_estimate": err }));
    }
    let residuals: Vec<f64> = rows.iter().map(|r| r["residual"].as_f64().unwrap_or(f64::NAN)).collect();
    let label = classify_residuals(&residuals, a.classify_tol);
    let declared = f.equation() == eq;
    let name = if oracle { "classify" } else { "mv-check" };
    let mut rep = Report::new(name, &a);
    let mut status = if declared && label != Classification::Temperature { Status::Fail } else { Status::Pass };
    let mut result = json!({
        "field": f.label(),
        "equation": eq,
        "center": center,
        "residuals": rows,
        "classification": label,
        "declared_temperature": declared,
    });
    if oracle {
        let (ball, _) = matching_ball(&center, a.r[0], eq, a.descent_m)?;
        let pts = lattice_in_ball(&ball, 9);
        let sign = operator_sign(&f, &pts, eq, 1e-4, 1e-3)?;
        result["operator_sign"] = json!(sign);
        result["oracle_points"] = json!(pts.len());
        if sign != label {
            status = Status::Fail;
        }
    }
    rep.result = result;
    rep.status = status;
    rep.tolerances = json!({
        "quadrature": if cfg.method == MvMethod::Tensor { cfg.tol } else { cfg.mc_target_se },
        "quadrature_source": if a.tol.is_some() { "flag" } else { "default for dimension" },
        "classify": a.classify_tol,
        "operator_sign": if oracle { json!({ "tol": 1e-4, "step": 1e-3 }) } else { json!(null) },
    });
    if let Some(p) = &a.output.csv {
        csv.write(p)?;
    }
    rep.emit(a.output.out.as_deref())?;
    Ok(status)
}

fn grid_setup(g: &GridArgs) -> Result<(Equation, DomainBox, Scheme)> {
    if !(g.half > 0.0) || !(g.t_hi > g.t_lo) {
        bail!("empty grid box");
    }
    let dom = DomainBox::new(vec![-g.half; g.n], vec![g.half; g.n], g.t_lo, g.t_hi)?;
    Ok((g.equation.into(), dom, Scheme::new(g.theta, g.h, g.dt)?))
}

fn solve(a: SolveArgs) -> Result<Status> {
    let (eq, dom, scheme) = grid_setup(&a.grid)?;
    let init = resolve_field(&a.initial, dom.clone(), Some(eq))?;
    let bnd_id = a.boundary.clone().unwrap_or_else(|| a.initial.clone());
    let bnd = resolve_field(&bnd_id, dom.clone(), Some(eq))?;
    let g = solve_fd(eq, &dom, &init, &bnd, scheme)?;
    let mut max_error = None;
    if bnd_id == a.initial && init.equation() == eq {
        let mut worst = 0.0f64;
        for k in 0..g.layers() {
            for (s, v) in g.layer(k).iter().enumerate() {
                worst = worst.max((v - init.eval_at(&g.node(s), g.time(k))?).abs());
            }
        }
        max_error = Some(worst);
    }
    let header = json!({
        "equation": eq,
        "dims": g.counts,
        "x_lo": g.x_lo,
        "h": g.h,
        "t_lo": g.t_lo,
        "dt": g.dt,
        "steps": g.steps,
        "scheme": g.scheme,
        "initial": g.initial,
        "boundary": g.boundary,
        "columns": "t, x1..xn, u; rows ordered by t, then x1 fastest",
    });
    if let Some(p) = &a.output.csv {
        let mut cols = vec!["t".to_string()];
        cols.extend((1..=g.dim()).map(|i| format!("x{i}")));
        cols.push("u".into());
        let mut csv = Csv::with_header(cols);
        for k in 0..g.layers() {
            for (s, v) in g.layer(k).iter().enumerate() {
                let mut row = vec![g.time(k)];
                row.extend(g.node(s));
                row.push(*v);
                csv.row(row);
            }
        }
        csv.write(p)?;
        std::fs::write(sidecar(p), serde_json::to_string_pretty(&header)? + "\n")?;
    }
    let mut rep = Report::new("solve", &a);
    rep.status = if g.max_linear_residual <= LINEAR_TOL { Status::Pass } else { Status::Fail };
    rep.tolerances = json!({ "linear_solve": LINEAR_TOL });
    rep.result = json!({
        "grid": header,
        "truncation_estimate": g.truncation_estimate,
        "max_linear_residual": g.max_linear_residual,
        "max_error_vs_exact": max_error,
        "final_layer_max": g.layer(g.steps).iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    });
    rep.emit(a.output.out.as_deref())?;
    Ok(rep.status)
}

fn ball_from(b: &crate::BallArgs) -> Result<HeatBall> {
    let c = split_point(&b.center)?;
    let fam = match b.family {
        FamilyArg::Omega => BallFamily::Omega,
        FamilyArg::Xi => BallFamily::Xi,
        FamilyArg::OmegaM => BallFamily::OmegaM,
        FamilyArg::XiM => BallFamily::XiM,
        FamilyArg::Gamma => BallFamily::GammaCyl,
    };
    Ok(HeatBall::new(fam, c, b.r, b.m)?)
}

fn geometry_export(a: GeometryArgs) -> Result<Status> {
    let ball = ball_from(&a.ball)?;
    if matches!(ball.family, BallFamily::GammaCyl) {
        bail!("export supports the heat-ball families; use `contains` for cylinders");
    }
    let samples = boundary_samples(&ball, a.slices, a.angles)?;
    if let Some(p) = &a.output.csv {
        let mut cols = vec!["t".to_string()];
        cols.extend((1..=ball.dim()).map(|i| format!("x{i}")));
        let mut csv = Csv::with_header(cols);
        for s in &samples {
            let mut row = vec![s.t];
            row.extend(s.x.iter().cloned());
            csv.row(row);
        }
        csv.write(p)?;
    }
    let mut rep = Report::new("geometry", &a);
    let (lo, hi) = ball.time_range();
    rep.result = json!({ "ball": ball, "time_range": [lo, hi], "bounds": ball.bounds(), "samples": samples });
    rep.emit(a.output.out.as_deref())?;
    Ok(Status::Pass)
}

fn geometry_contains(a: ContainsArgs) -> Result<Status> {
    let ball = ball_from(&a.ball)?;
    let pts = parse_points(&a.points)?;
    let inside: Vec<bool> = pts.iter().map(|p| ball.contains(p)).collect();
    if let Some(p) = &a.output.csv {
        let mut csv = Csv::new(&["point", "inside"]);
        for (pt, i) in pts.iter().zip(&inside) {
            csv.row_str(vec![format!("\"{pt}\""), i.to_string()]);
        }
        csv.write(p)?;
    }
    let mut rep = Report::new("geometry", &a);
    rep.result = json!({ "ball": ball, "points": pts, "inside": inside });
    rep.emit(a.output.out.as_deref())?;
    Ok(Status::Pass)
}

fn maxprin(a: MaxprinArgs) -> Result<Status> {
    let (eq, dom, scheme) = grid_setup(&a.grid)?;
    let data = resolve_field(&a.field, dom.clone(), Some(eq))?;
    let mut g = solve_fd(eq, &dom, &data, &data, scheme)?;
    let mut bumped = None;
    if a.bump_node {
        let m = g.nodes_per_layer();
        let k = g.steps / 2;
        let s = (0..m).find(|&s| !g.is_boundary_node(s) && s >= m / 2).ok_or_else(|| anyhow!("grid has no interior nodes"))?;
        let top = g.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        g.values[k * m + s] = top + 1.0;
        bumped = Some(json!({ "x": g.node(s), "t": g.time(k), "value": top + 1.0 }));
    }
    let weak = check_weak_max(&g, g.t_hi())?;
    let strong = check_strong_max(&g, a.strong_tol)?;
    let prop = match check_infinite_propagation(&g, None) {
        Ok(r) => json!(r),
        Err(heatball_core::Error::Precondition(msg)) => json!({ "status": "not-applicable", "reason": msg }),
        Err(e) => return Err(e.into()),
    };
    let prop_failed = prop["status"] == json!(CheckStatus::Violation);
    let status = if weak.violation || strong.violation || prop_failed { Status::Fail } else { Status::Pass };
    if let Some(p) = &a.output.csv {
        let mut csv = Csv::new(&["t", "interior_max", "interior_min", "boundary_max"]);
        for k in 0..g.layers() {
            let (mut imax, mut imin, mut bmax) = (f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
            for (s, &v) in g.layer(k).iter().enumerate() {
                if k == 0 || g.is_boundary_node(s) {
                    bmax = bmax.max(v);
                } else {
                    imax = imax.max(v);
                    imin = imin.min(v);
                }
            }
            csv.row([g.time(k), imax, imin, bmax]);
        }
        csv.write(p)?;
    }
    let mut rep = Report::new("maxprin", &a);
    rep.status = status;
    rep.tolerances = json!({
        "weak": weak.tolerance,
        "weak_source": "10 x Richardson truncation estimate",
        "strong": a.strong_tol,
    });
    rep.result = json!({
        "weak": weak,
        "strong": { "attaining": strong.attaining, "violation": strong.violation, "flagged": strong.flagged.iter().take(20).collect::<Vec<_>>(), "flagged_count": strong.flagged.len() },
        "propagation": prop,
        "bumped_node": bumped,
        "truncation_estimate": g.truncation_estimate,
    });
    rep.emit(a.output.out.as_deref())?;
    Ok(status)
}

fn harnack(a: HarnackArgs) -> Result<Status> {
    let center = split_point(&a.center)?;
    let n = center.dim();
    if a.big_r.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
        bail!("--big-r values must lie in (0, 1]");
    }
    let rmax = a.big_r.iter().cloned().fold(0.0, f64::max);
    let half = center.x.iter().fold(0.0f64, |m, v| m.max(v.abs())) + 4.0 * rmax + 1.0;
    let dom = DomainBox::cube(n, half, center.t - 16.0 * rmax * rmax - 0.5, center.t + 1.0);
    let u = resolve_field(&a.field, dom.clone(), Some(Equation::Ou))?;
    let mut rep = Report::new("harnack", &a);
    let constant = a.field.starts_with("const:");
    if let Some(k) = &a.k {
        let pts = parse_points(k)?;
        let r = harnack_ratio(&u, &pts, &HarnackMeasure::PointMass(center), 32.0)?;
        rep.status = if r.ratio.is_finite() { Status::Pass } else { Status::Fail };
        rep.result = json!({ "mode": "point-mass", "report": r });
        rep.emit(a.output.out.as_deref())?;
        return Ok(rep.status);
    }
    let mut csv = Csv::new(&["R", "q", "lhs", "rhs", "ratio", "rhs_std_error", "nu"]);
    let mut rows = Vec::new();
    let mut status = Status::Pass;
    for &big_r in &a.big_r {
        for &q in &a.q {
            let r = harnack_mintq(&u, &center.x, center.t, big_r, q, a.samples, a.seed)?;
            let se = r.rhs_std_error.unwrap_or(0.0);
            let nu = gamma_measure(n, center.t, big_r);
            if !r.ratio.is_finite() || (constant && (r.ratio - 1.0).abs() > 3.0 * se + 1e-12) {
                status = Status::Fail;
            }
            csv.row([big_r, q, r.lhs, r.rhs, r.ratio, se, nu]);
            rows.push(json!({ "nu": nu, "report": r }));
        }
    }
    if let Some(p) = &a.output.csv {
        csv.write(p)?;
    }
    rep.status = status;
    rep.tolerances = json!({ "constant_field_ratio": "1 +- 3 standard errors" });
    rep.result = json!({ "mode": "mintq", "domain": dom, "rows": rows });
    rep.emit(a.output.out.as_deref())?;
    Ok(status)
}

fn growth_id(p: &str) -> String {
    if let Some(a) = p.strip_prefix("pow:") {
        return match a {
            "0" | "0.0" => "const".into(),
            _ => format!("r^{a}"),
        };
    }
    if let Some(k) = p.strip_prefix("rlog:") {
        return format!("rlog^{k}");
    }
    p.to_string()
}

fn parse_verdict(s: &str) -> Result<Verdict> {
    Ok(match s {
        "diverging" | "diverging-trend" => Verdict::DivergingTrend,
        "converging" | "converging-trend" => Verdict::ConvergingTrend,
        "inconclusive" => Verdict::Inconclusive,
        _ => bail!("unknown verdict `{s}`"),
    })
}

fn growth_cmd(a: GrowthArgs) -> Result<Status> {
    let rmax = a.rmax.unwrap_or(growth::DEFAULT_R_MAX);
    let p = GrowthFunction::catalog(&growth_id(&a.p), rmax)?;
    let expect = a.expect.as_deref().map(parse_verdict).transpose()?;
    let mut rep = Report::new("growth", &a);
    let (verdict, result, csv) = match a.lambda {
        None => {
            let d = divergence_diagnostic(&p)?;
            let mut csv = Csv::new(&["k", "increment_pbar", "increment_p"]);
            for (k, (b, q)) in d.octave_increments.iter().zip(&d.octave_increments_p).enumerate() {
                csv.row([k as f64, *b, *q]);
            }
            (d.verdict, json!(d), csv)
        }
        Some(l) => {
            let s = shift_compare(&p, l)?;
            let mut csv = Csv::new(&["k", "increment_pbar", "increment_shifted", "ratio"]);
            for (k, ((b, q), r)) in s.base.octave_increments.iter().zip(&s.shifted.octave_increments).zip(&s.increment_ratio).enumerate() {
                csv.row([k as f64, *b, *q, *r]);
            }
            (s.base.verdict, json!(s), csv)
        }
    };
    rep.status = match expect {
        Some(v) if v != verdict => Status::Fail,
        _ => Status::Pass,
    };
    rep.tolerances = json!({ "equality": growth::EQUALITY_TOL, "grid_per_octave": growth::DEFAULT_PER_OCTAVE, "r_max": rmax });
    rep.result = json!({ "p": p.label(), "verdict": verdict, "diagnostic": result, "note": "finite-horizon trend, not a decision" });
    if let Some(path) = &a.output.csv {
        csv.write(path)?;
    }
    rep.emit(a.output.out.as_deref())?;
    Ok(rep.status)
}
