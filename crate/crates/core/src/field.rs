use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::DomainBox;
use crate::point::SpaceTimePoint;

/// The equation a field is claimed to satisfy. Advisory only: verification
/// code decides for itself via mean-value residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Equation {
    Heat,
    Ou,
    Hermite,
    None,
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Equation::Heat => "heat",
            Equation::Ou => "ou",
            Equation::Hermite => "hermite",
            Equation::None => "none",
        })
    }
}

impl FromStr for Equation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "heat" => Ok(Equation::Heat),
            "ou" => Ok(Equation::Ou),
            "hermite" => Ok(Equation::Hermite),
            "none" => Ok(Equation::None),
            other => Err(Error::InvalidArgument(format!("unknown equation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    ClosedForm,
    Grid,
}

type Evaluator = dyn Fn(&[f64], f64) -> Result<f64> + Send + Sync;

/// An evaluatable space-time function `u(x,t)` on a finite domain box.
///
/// Evaluators are immutable and shareable across threads; cloning a field
/// is cheap.
#[derive(Clone)]
pub struct ScalarField {
    label: String,
    kind: FieldKind,
    equation: Equation,
    domain: DomainBox,
    eval: Arc<Evaluator>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("label", &self.label)
            .field("kind", &self.kind)
            .field("equation", &self.equation)
            .field("domain", &self.domain)
            .finish()
    }
}

impl ScalarField {
    pub fn closed_form<F>(label: impl Into<String>, equation: Equation, domain: DomainBox, f: F) -> Self
    where
        F: Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    {
        Self::from_fallible(label, FieldKind::ClosedForm, equation, domain, move |x, t| Ok(f(x, t)))
    }

    pub fn from_fallible<F>(label: impl Into<String>, kind: FieldKind, equation: Equation, domain: DomainBox, f: F) -> Self
    where
        F: Fn(&[f64], f64) -> Result<f64> + Send + Sync + 'static,
    {
        Self { label: label.into(), kind, equation, domain, eval: Arc::new(f) }
    }

    /// The constant field `c`.
    pub fn constant(c: f64, equation: Equation, domain: DomainBox) -> Self {
        Self::closed_form(format!("const({c})"), equation, domain, move |_, _| c)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn equation(&self) -> Equation {
        self.equation
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn eval(&self, p: &SpaceTimePoint) -> Result<f64> {
        self.eval_at(&p.x, p.t)
    }

    /// Domain-checked evaluation.
    pub fn eval_at(&self, x: &[f64], t: f64) -> Result<f64> {
        if !self.domain.contains_xt(x, t) {
            return Err(Error::OutsideDomain {
                field: self.label.clone(),
                point: format!("{:?}, t = {t}", x),
            });
        }
        (self.eval)(x, t)
    }

    /// Replaces the domain box. Meant for closed forms defined everywhere.
    pub fn with_domain(mut self, domain: DomainBox) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_equation(mut self, equation: Equation) -> Self {
        self.equation = equation;
        self
    }

    /// Pointwise transform `(x, t) ↦ g(u(x,t), x, t)` on the same domain.
    pub fn map<G>(&self, label: impl Into<String>, equation: Equation, g: G) -> ScalarField
    where
        G: Fn(f64, &[f64], f64) -> f64 + Send + Sync + 'static,
    {
        let inner = self.clone();
        ScalarField::from_fallible(label, self.kind, equation, self.domain.clone(), move |x, t| {
            Ok(g(inner.eval_at(x, t)?, x, t))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_is_enforced() {
        let f = ScalarField::closed_form("x", Equation::Heat, DomainBox::cube(1, 1.0, 0.0, 1.0), |x, _| x[0]);
        assert_eq!(f.eval_at(&[0.5], 0.5).unwrap(), 0.5);
        assert!(matches!(f.eval_at(&[1.5], 0.5), Err(Error::OutsideDomain { .. })));
        assert!(f.eval_at(&[0.5, 0.1], 0.5).is_err());
        let sq = f.map("x^2", Equation::None, |v, _, _| v * v);
        assert_eq!(sq.eval_at(&[0.5], 0.2).unwrap(), 0.25);
    }

    #[test]
    fn equation_parse_roundtrip() {
        for e in [Equation::Heat, Equation::Ou, Equation::Hermite, Equation::None] {
            assert_eq!(e.to_string().parse::<Equation>().unwrap(), e);
        }
        assert!("wave".parse::<Equation>().is_err());
    }
}
