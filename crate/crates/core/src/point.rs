use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// A space-time point `(x, t)` with `x ∈ Rⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint {
    pub x: Vec<f64>,
    pub t: f64,
}

impl SpaceTimePoint {
    /// Checked constructor: `x` non-empty and every coordinate finite.
    pub fn new(x: Vec<f64>, t: f64) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidArgument("spatial dimension must be >= 1".into()));
        }
        if !t.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coordinate".into()));
        }
        Ok(Self { x, t })
    }

    pub fn scalar(x: f64, t: f64) -> Self {
        Self { x: vec![x], t }
    }

    pub fn origin(n: usize) -> Self {
        Self { x: vec![0.0; n], t: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.x)
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        if self.x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.x.len() });
        }
        Ok(())
    }
}

impl fmt::Display for SpaceTimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.x.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "; t = {})", self.t)
    }
}

#[inline]
pub(crate) fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[inline]
pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// Volume of the unit ball in `Rⁿ`.
pub(crate) fn unit_ball_volume(n: usize) -> f64 {
    // ω_0 = 1, ω_1 = 2, ω_n = ω_{n-2} · 2π/n
    let mut w = if n % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if n % 2 == 0 { 2 } else { 3 };
    while k <= n {
        w *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rejects_bad_points() {
        assert!(SpaceTimePoint::new(vec![], 0.0).is_err());
        assert!(SpaceTimePoint::new(vec![f64::NAN], 0.0).is_err());
        assert!(SpaceTimePoint::new(vec![1.0], f64::INFINITY).is_err());
        assert!(SpaceTimePoint::new(vec![1.0, 2.0], -3.0).is_ok());
    }

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
    }
}
