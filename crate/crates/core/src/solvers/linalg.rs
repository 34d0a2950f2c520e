//! Linear solvers for the implicit steps.

use crate::error::{Error, Result};

/// Solves the tridiagonal system `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`
/// by elimination without pivoting (the matrices here are diagonally dominant).
pub fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if lower.len() != n || upper.len() != n || rhs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: rhs.len() });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 {
        return Err(Error::NoConvergence(0.0));
    }
    c[0] = upper[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - lower[i] * c[i - 1];
        if denom == 0.0 {
            return Err(Error::NoConvergence(i as f64));
        }
        c[i] = upper[i] / denom;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Ok(x)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Jacobi-preconditioned BiCGSTAB for `A x = b` with `A` given as a
/// matrix-free product. Stops when `‖b − A x‖₂ ≤ tol`.
/// Returns the solution and the final residual norm.
pub fn bicgstab<F>(apply: F, diag: &[f64], b: &[f64], x0: Vec<f64>, tol: f64, max_iter: usize) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let target = tol;
    let mut x = x0;
    let mut ax = vec![0.0; n];
    apply(&x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut rnorm = norm(&r);
    if rnorm <= target {
        return Ok((x, rnorm));
    }
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut s = vec![0.0; n];
    for _ in 0..max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            y[i] = p[i] / diag[i];
        }
        apply(&y, &mut v);
        alpha = rho / dot(&r_hat, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) <= target {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            apply(&x, &mut ax);
            rnorm = b.iter().zip(&ax).map(|(b, a)| (b - a).powi(2)).sum::<f64>().sqrt();
            if rnorm <= target {
                return Ok((x, rnorm));
            }
            r = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            continue;
        }
        for i in 0..n {
            z[i] = s[i] / diag[i];
        }
        apply(&z, &mut t);
        omega = dot(&t, &s) / dot(&t, &t);
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        rnorm = norm(&r);
        if rnorm <= target {
            apply(&x, &mut ax);
            rnorm = b.iter().zip(&ax).map(|(b, a)| (b - a).powi(2)).sum::<f64>().sqrt();
            if rnorm <= target {
                return Ok((x, rnorm));
            }
        }
        if omega == 0.0 {
            break;
        }
    }
    Err(Error::NoConvergence(rnorm))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_solves_poisson() {
        // -u'' = 2 on (0,1), u(0) = u(1) = 0: u = x(1-x), exact at nodes
        let n = 49;
        let h = 1.0 / (n + 1) as f64;
        let lower = vec![-1.0; n];
        let upper = vec![-1.0; n];
        let diag = vec![2.0; n];
        let rhs = vec![2.0 * h * h; n];
        let u = thomas(&lower, &diag, &upper, &rhs).unwrap();
        for (i, v) in u.iter().enumerate() {
            let x = (i + 1) as f64 * h;
            assert!((v - x * (1.0 - x)).abs() < 1e-13);
        }
    }

    #[test]
    fn bicgstab_matches_direct() {
        // nonsymmetric tridiagonal system solved both ways
        let n = 60;
        let lower: Vec<f64> = (0..n).map(|i| -1.0 - 0.01 * i as f64).collect();
        let upper: Vec<f64> = (0..n).map(|i| -1.0 + 0.01 * i as f64).collect();
        let diag = vec![4.0; n];
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let direct = thomas(&lower, &diag, &upper, &b).unwrap();
        let apply = |x: &[f64], out: &mut [f64]| {
            for i in 0..n {
                let mut v = diag[i] * x[i];
                if i > 0 {
                    v += lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    v += upper[i] * x[i + 1];
                }
                out[i] = v;
            }
        };
        let (x, res) = bicgstab(apply, &diag, &b, vec![0.0; n], 1e-12, 500).unwrap();
        assert!(res <= 1e-12);
        for (a, b) in x.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
