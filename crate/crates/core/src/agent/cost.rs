use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type CostFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The agent's cost of precision, `c(lambda)` with `c(0) = 0`.
///
/// Costs may jump at zero (fixed costs) and may be `+inf` outside their
/// tabulated range; they need only be lower semicontinuous.
#[derive(Clone)]
pub enum CostFunction {
    /// `a * lambda^p`
    Power { a: f64, p: f64 },
    /// `c0 * 1{lambda > 0} + a * lambda^p`
    AffinePower { c0: f64, a: f64, p: f64 },
    /// Piecewise linear through `(lambda, cost)` nodes starting at `(0, 0)`; `+inf` past the last node.
    Tabulated { points: Vec<(f64, f64)> },
    /// `factor * base(lambda)`
    Scaled { base: Box<CostFunction>, factor: f64 },
    /// `base(k * lambda)`: the cost of the same signal when noise is scaled by `k`.
    Rescaled { base: Box<CostFunction>, k: f64 },
    /// An arbitrary cost; `zero_limit` is `lim c(lambda)` as `lambda -> 0+`.
    Custom { label: String, f: CostFn, zero_limit: f64 },
}

impl fmt::Debug for CostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostFunction::Power { a, p } => write!(f, "Power({a} * l^{p})"),
            CostFunction::AffinePower { c0, a, p } => write!(f, "AffinePower({c0} + {a} * l^{p})"),
            CostFunction::Tabulated { points } => write!(f, "Tabulated({} nodes)", points.len()),
            CostFunction::Scaled { base, factor } => write!(f, "Scaled({factor} * {base:?})"),
            CostFunction::Rescaled { base, k } => write!(f, "Rescaled({base:?} at {k} * l)"),
            CostFunction::Custom { label, .. } => write!(f, "Custom({label})"),
        }
    }
}

impl CostFunction {
    pub fn power(a: f64, p: f64) -> Result<Self> {
        check_power(a, p)?;
        Ok(CostFunction::Power { a, p })
    }

    /// `lambda^2 / 8`, the running example cost.
    pub fn quadratic_eighth() -> Self {
        CostFunction::Power { a: 0.125, p: 2.0 }
    }

    pub fn affine_power(c0: f64, a: f64, p: f64) -> Result<Self> {
        check_power(a, p)?;
        if !(c0 >= 0.0 && c0.is_finite()) {
            return Err(Error::InvalidCost(format!("fixed cost must be finite and >= 0, got {c0}")));
        }
        Ok(CostFunction::AffinePower { c0, a, p })
    }

    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidCost("tabulated cost needs at least two nodes".into()));
        }
        if points[0] != (0.0, 0.0) {
            return Err(Error::InvalidCost(format!(
                "tabulated cost must start at (0, 0), got ({}, {})",
                points[0].0, points[0].1
            )));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidCost("tabulated precisions must be strictly increasing".into()));
        }
        if points.iter().any(|p| !(p.1 >= 0.0 && p.1.is_finite() && p.0.is_finite())) {
            return Err(Error::InvalidCost("tabulated costs must be finite and nonnegative".into()));
        }
        Ok(CostFunction::Tabulated { points })
    }

    pub fn custom<F>(label: impl Into<String>, zero_limit: f64, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        CostFunction::Custom { label: label.into(), f: Arc::new(f), zero_limit }
    }

    /// `k * c(lambda)`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidCost(format!("scale factor must be positive, got {factor}")));
        }
        Ok(CostFunction::Scaled { base: Box::new(self.clone()), factor })
    }

    /// `c(k * lambda)`.
    pub fn rescaled(&self, k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidCost(format!("rescaling factor must be positive, got {k}")));
        }
        Ok(CostFunction::Rescaled { base: Box::new(self.clone()), k })
    }

    /// `c(lambda)`; `c(0) = 0`, `+inf` for negative precision.
    pub fn value(&self, lambda: f64) -> f64 {
        if lambda < 0.0 || lambda.is_nan() {
            return f64::INFINITY;
        }
        if lambda == 0.0 {
            return 0.0;
        }
        match self {
            CostFunction::Power { a, p } => a * lambda.powf(*p),
            CostFunction::AffinePower { c0, a, p } => c0 + a * lambda.powf(*p),
            CostFunction::Tabulated { points } => interpolate(points, lambda),
            CostFunction::Scaled { base, factor } => factor * base.value(lambda),
            CostFunction::Rescaled { base, k } => base.value(k * lambda),
            CostFunction::Custom { f, .. } => f(lambda),
        }
    }

    /// `lim c(lambda)` as `lambda -> 0+`.
    pub fn zero_limit(&self) -> f64 {
        match self {
            CostFunction::Power { .. } | CostFunction::Tabulated { .. } => 0.0,
            CostFunction::AffinePower { c0, .. } => *c0,
            CostFunction::Scaled { base, factor } => factor * base.zero_limit(),
            CostFunction::Rescaled { base, .. } => base.zero_limit(),
            CostFunction::Custom { zero_limit, .. } => *zero_limit,
        }
    }
}

fn check_power(a: f64, p: f64) -> Result<()> {
    if !(a >= 0.0 && a.is_finite()) {
        return Err(Error::InvalidCost(format!("coefficient must be finite and >= 0, got {a}")));
    }
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidCost(format!("exponent must be positive, got {p}")));
    }
    Ok(())
}

fn interpolate(points: &[(f64, f64)], x: f64) -> f64 {
    let last = points[points.len() - 1];
    if x > last.0 {
        return f64::INFINITY;
    }
    let i = points.partition_point(|p| p.0 <= x).clamp(1, points.len() - 1);
    let (x0, y0) = points[i - 1];
    let (x1, y1) = points[i];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}
