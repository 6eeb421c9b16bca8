//! Standardized symmetric single-peaked signal densities and their scaled family.
//!
//! A [`SignalDensity`] is described by its radial profile `phi(r)`, `r >= 0`.
//! In one dimension the density at `x` is `phi(|x|)`; in `n` dimensions it is
//! `phi(|x|)` with `|x|` the Euclidean norm, normalized so that
//! `int_0^inf phi(r) * n * V_n * r^(n-1) dr = 1`.
//!
//! The scaled density of a signal with location `theta` and precision `lambda`
//! is `lambda^n * phi(lambda * |x - theta|)`.

use libm::{erf, erfc};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_lr};

use crate::error::{Error, Result};
use crate::numeric::{adaptive_simpson, gauss_legendre5};

/// Tail mass below which unbounded supports are truncated for quadrature.
pub const TAIL_MASS: f64 = 1e-12;

const TABLE_NODES: usize = 4096;
const TABLE_TOL: f64 = 1e-15;
const NORMALIZATION_TOL: f64 = 1e-8;

/// The built-in families plus a user-tabulated radial profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Gaussian,
    Laplace,
    Logistic,
    Uniform {
        #[serde(default = "unit")]
        halfwidth: f64,
    },
    Triangular {
        #[serde(default = "unit")]
        halfwidth: f64,
    },
    /// `k * exp(1/eps)` on `[0, eps)`, `k * exp(1/x)` on `[eps, 1]`, zero beyond.
    TruncatedExpInverse {
        truncation: f64,
    },
    /// Radial profile sampled at `0 = x_0 < x_1 < ... < x_m`, interpolated with a
    /// monotone piecewise cubic. Values are rescaled to integrate to one.
    Tabulated {
        points: Vec<(f64, f64)>,
    },
}

fn unit() -> f64 {
    1.0
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Laplace => "laplace",
            Family::Logistic => "logistic",
            Family::Uniform { .. } => "uniform",
            Family::Triangular { .. } => "triangular",
            Family::TruncatedExpInverse { .. } => "truncated_exp_inverse",
            Family::Tabulated { .. } => "tabulated",
        }
    }
}

/// Volume of the unit ball in `n` dimensions, `pi^(n/2) / Gamma(n/2 + 1)`.
pub fn ball_volume(n: usize) -> f64 {
    // V_n = 2 pi / n * V_{n-2}, exact in the low dimensions used most
    let even = n.is_multiple_of(2);
    let mut v = if even { 1.0 } else { 2.0 };
    let mut k = if even { 2 } else { 3 };
    while k <= n {
        v *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    v
}

/// pdf, cdf and derivative of the standardized density at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub pdf: f64,
    pub cdf: f64,
    pub dpdf: f64,
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
#[derive(Debug, Clone)]
struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Pchip {
    fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut m = vec![0.0; n];
        if n == 2 {
            m[0] = delta[0];
            m[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] <= 0.0 {
                    m[i] = 0.0;
                } else {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            m[0] = Self::end_slope(h[0], h[1], delta[0], delta[1]);
            m[n - 1] = Self::end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Pchip { x, y, m }
    }

    fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s.signum() != d0.signum() {
            0.0
        } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    }

    fn segment(&self, r: f64) -> usize {
        let i = self.x.partition_point(|&v| v <= r);
        i.saturating_sub(1).min(self.x.len() - 2)
    }

    fn eval(&self, r: f64) -> (f64, f64) {
        let i = self.segment(r);
        let h = self.x[i + 1] - self.x[i];
        let t = (r - self.x[i]) / h;
        let (y0, y1, m0, m1) = (self.y[i], self.y[i + 1], self.m[i], self.m[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * m1;
        let d = ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * h * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * h * m1)
            / h;
        (v.max(0.0), d)
    }
}

/// Cumulative radial mass cached at nodes; partial panels use Gauss-Legendre.
#[derive(Debug, Clone)]
struct MassTable {
    nodes: Vec<f64>,
    cum: Vec<f64>,
}

/// A standardized, symmetric, single-peaked signal density.
#[derive(Debug, Clone)]
pub struct SignalDensity {
    family: Family,
    dimension: usize,
    volume_coefficient: f64,
    norm: f64,
    support_halfwidth: f64,
    truncation: f64,
    kinks: Vec<f64>,
    pchip: Option<Pchip>,
    table: Option<MassTable>,
}

impl SignalDensity {
    /// Builds and validates a density of the given family in `dimension` dimensions.
    pub fn new(family: Family, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidDensity("dimension must be positive".into()));
        }
        let (support_halfwidth, kinks, pchip) = match &family {
            Family::Gaussian | Family::Logistic => (f64::INFINITY, vec![], None),
            Family::Laplace => (f64::INFINITY, vec![0.0], None),
            Family::Uniform { halfwidth } | Family::Triangular { halfwidth } => {
                if !(halfwidth.is_finite() && *halfwidth > 0.0) {
                    return Err(Error::InvalidDensity(format!("halfwidth must be positive, got {halfwidth}")));
                }
                (*halfwidth, vec![0.0, *halfwidth], None)
            }
            Family::TruncatedExpInverse { truncation } => {
                let eps = *truncation;
                if !(eps > 0.0 && eps < 1.0) {
                    return Err(Error::InvalidDensity(format!("truncation must lie in (0, 1), got {eps}")));
                }
                (1.0, vec![eps, 1.0], None)
            }
            Family::Tabulated { points } => {
                let p = Self::check_table(points)?;
                let hull = *p.x.last().unwrap();
                let kinks = p.x.clone();
                (hull, kinks, Some(p))
            }
        };
        let mut density = SignalDensity {
            family,
            dimension,
            volume_coefficient: ball_volume(dimension),
            norm: 1.0,
            support_halfwidth,
            truncation: support_halfwidth,
            kinks,
            pchip,
            table: None,
        };
        density.norm = density.closed_form_norm().unwrap_or(1.0);
        if density.needs_table() {
            density.truncation = density.table_extent();
            if density.closed_form_norm().is_none() {
                let total = density.integrate_radial(0.0, density.truncation);
                if !(total.is_finite() && total > 0.0) {
                    return Err(Error::InvalidDensity("profile does not integrate to a positive mass".into()));
                }
                density.norm = 1.0 / total;
            }
            density.table = Some(density.build_table());
        } else {
            density.truncation = density.closed_form_truncation();
        }
        density.validate()?;
        Ok(density)
    }

    pub fn gaussian() -> Self {
        Self::new(Family::Gaussian, 1).expect("gaussian is valid")
    }

    pub fn laplace() -> Self {
        Self::new(Family::Laplace, 1).expect("laplace is valid")
    }

    pub fn logistic() -> Self {
        Self::new(Family::Logistic, 1).expect("logistic is valid")
    }

    pub fn uniform(halfwidth: f64) -> Result<Self> {
        Self::new(Family::Uniform { halfwidth }, 1)
    }

    pub fn triangular(halfwidth: f64) -> Result<Self> {
        Self::new(Family::Triangular { halfwidth }, 1)
    }

    pub fn truncated_exp_inverse(truncation: f64) -> Result<Self> {
        Self::new(Family::TruncatedExpInverse { truncation }, 1)
    }

    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(Family::Tabulated { points }, 1)
    }

    /// Same family in another dimension.
    pub fn with_dimension(&self, dimension: usize) -> Result<Self> {
        Self::new(self.family.clone(), dimension)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// `V_n = pi^(n/2) / Gamma(n/2 + 1)`.
    pub fn volume_coefficient(&self) -> f64 {
        self.volume_coefficient
    }

    /// Half-width of the (symmetric) support; `+inf` for unbounded families.
    pub fn support_halfwidth(&self) -> f64 {
        self.support_halfwidth
    }

    pub fn is_compact(&self) -> bool {
        self.support_halfwidth.is_finite()
    }

    /// Radius beyond which the remaining mass is below [`TAIL_MASS`]
    /// (the support half-width for compact families).
    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    /// Characteristic length: the support half-width for compact families, one otherwise.
    pub fn scale(&self) -> f64 {
        if self.is_compact() {
            self.support_halfwidth
        } else {
            1.0
        }
    }

    /// Points `r >= 0` where the radial derivative is discontinuous.
    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    /// False for families whose derivative jumps somewhere (Laplace at the peak,
    /// compact families at their edge, the truncated `exp(1/x)` family at `eps`).
    pub fn is_smooth(&self) -> bool {
        matches!(self.family, Family::Gaussian | Family::Logistic)
    }

    /// The normalizing factor `k` of the truncated `exp(1/x)` family.
    pub fn normalizer(&self) -> Option<f64> {
        match self.family {
            // the profile is stored as exp(1/x - 1/eps)
            Family::TruncatedExpInverse { truncation } => Some(self.norm * (-1.0 / truncation).exp()),
            _ => None,
        }
    }

    fn check_table(points: &[(f64, f64)]) -> Result<Pchip> {
        if points.len() < 3 {
            return Err(Error::InvalidDensity("tabulated density needs at least three points".into()));
        }
        if points[0].0 != 0.0 {
            return Err(Error::InvalidDensity("tabulated grid must start at x = 0".into()));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidDensity("tabulated grid must be strictly increasing".into()));
            }
            if w[1].1 > w[0].1 {
                return Err(Error::InvalidDensity(format!(
                    "tabulated profile increases between x = {} and x = {}; density must be single-peaked",
                    w[0].0, w[1].0
                )));
            }
        }
        if points.iter().any(|p| !(p.1 >= 0.0 && p.1.is_finite() && p.0.is_finite())) {
            return Err(Error::InvalidDensity("tabulated values must be finite and nonnegative".into()));
        }
        let (x, y) = points.iter().copied().unzip();
        Ok(Pchip::new(x, y))
    }

    fn closed_form_norm(&self) -> Option<f64> {
        let n = self.dimension as f64;
        let vn = self.volume_coefficient;
        match &self.family {
            Family::Gaussian => Some((2.0 * std::f64::consts::PI).powf(-n / 2.0)),
            Family::Laplace => Some(1.0 / (n * vn * gamma(n))),
            Family::Logistic if self.dimension == 1 => Some(1.0),
            Family::Uniform { halfwidth } => Some(1.0 / (vn * halfwidth.powf(n))),
            Family::Triangular { halfwidth } => Some((n + 1.0) / (vn * halfwidth.powf(n))),
            _ => None,
        }
    }

    fn needs_table(&self) -> bool {
        matches!(self.family, Family::TruncatedExpInverse { .. } | Family::Tabulated { .. })
            || (matches!(self.family, Family::Logistic) && self.dimension > 1)
    }

    fn table_extent(&self) -> f64 {
        match self.family {
            Family::Logistic => {
                // logistic profile <= exp(-r): bound the tail by the Laplace one
                let c = n_vn(self) * gamma(self.dimension as f64) / 4.0_f64.recip();
                let a = self.dimension as f64;
                bracket_tail(|r| c * (1.0 - gamma_lr(a, r)))
            }
            _ => self.support_halfwidth,
        }
    }

    fn closed_form_truncation(&self) -> f64 {
        let a = self.dimension as f64;
        match self.family {
            Family::Gaussian => bracket_tail(|r| 1.0 - gamma_lr(a / 2.0, r * r / 2.0)),
            Family::Laplace => bracket_tail(|r| 1.0 - gamma_lr(a, r)),
            Family::Logistic => bracket_tail(|r| 1.0 - (r / 2.0).tanh()),
            _ => self.support_halfwidth,
        }
    }

    /// Unnormalized radial profile and its right derivative.
    fn shape(&self, r: f64) -> (f64, f64) {
        match &self.family {
            Family::Gaussian => {
                let v = (-0.5 * r * r).exp();
                (v, -r * v)
            }
            Family::Laplace => {
                let v = (-r).exp();
                (v, -v)
            }
            Family::Logistic => {
                let e = (-r).exp();
                let v = e / ((1.0 + e) * (1.0 + e));
                (v, -v * (0.5 * r).tanh())
            }
            Family::Uniform { halfwidth } => {
                if r <= *halfwidth {
                    (1.0, 0.0)
                } else {
                    (0.0, 0.0)
                }
            }
            Family::Triangular { halfwidth } => {
                if r <= *halfwidth {
                    (1.0 - r / halfwidth, if r < *halfwidth { -1.0 / halfwidth } else { 0.0 })
                } else {
                    (0.0, 0.0)
                }
            }
            Family::TruncatedExpInverse { truncation } => {
                let eps = *truncation;
                if r < eps {
                    (1.0, 0.0)
                } else if r < 1.0 {
                    let v = (1.0 / r - 1.0 / eps).exp();
                    (v, -v / (r * r))
                } else if r == 1.0 {
                    ((1.0 - 1.0 / eps).exp(), 0.0)
                } else {
                    (0.0, 0.0)
                }
            }
            Family::Tabulated { .. } => {
                let p = self.pchip.as_ref().expect("tabulated interpolant");
                if r > self.support_halfwidth {
                    (0.0, 0.0)
                } else {
                    p.eval(r)
                }
            }
        }
    }

    /// Radial profile `phi(r)` for `r >= 0` (zero outside the support).
    pub fn radial_pdf(&self, r: f64) -> f64 {
        self.norm * self.shape(r.abs()).0
    }

    /// Right derivative of the radial profile at `r >= 0`.
    pub fn radial_dpdf(&self, r: f64) -> f64 {
        self.norm * self.shape(r.abs()).1
    }

    /// Density of `|eps|` at radius `r`: `phi(r) * n * V_n * r^(n-1)`.
    fn radial_mass_density(&self, r: f64) -> f64 {
        let w = if self.dimension == 1 { 2.0 } else { n_vn(self) * r.powi(self.dimension as i32 - 1) };
        self.radial_pdf(r) * w
    }

    fn integrate_radial(&self, a: f64, b: f64) -> f64 {
        let f = |r: f64| {
            self.shape(r).0 * if self.dimension == 1 { 2.0 } else { n_vn(self) * r.powi(self.dimension as i32 - 1) }
        };
        let mut pts: Vec<f64> = crate::numeric::lin_space(a, b, 257);
        pts.extend(self.kinks.iter().copied().filter(|&k| k > a && k < b));
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts.windows(2).map(|w| adaptive_simpson(&f, w[0], w[1], TABLE_TOL)).sum()
    }

    fn build_table(&self) -> MassTable {
        let mut nodes = crate::numeric::lin_space(0.0, self.truncation, TABLE_NODES);
        nodes.extend(self.kinks.iter().copied().filter(|&k| k > 0.0 && k < self.truncation));
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        let f = |r: f64| self.radial_mass_density(r);
        let mut cum = Vec::with_capacity(nodes.len());
        let mut acc = 0.0;
        cum.push(0.0);
        for w in nodes.windows(2) {
            acc += adaptive_simpson(&f, w[0], w[1], TABLE_TOL);
            cum.push(acc);
        }
        MassTable { nodes, cum }
    }

    /// `P(|eps| <= r)`: mass of the centered ball of radius `r`.
    /// In one dimension this is `2 Phi(r) - 1`.
    pub fn ball_mass(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let n = self.dimension as f64;
        let v = match &self.family {
            Family::Gaussian => {
                if self.dimension == 1 {
                    erf(r / std::f64::consts::SQRT_2)
                } else {
                    gamma_lr(n / 2.0, r * r / 2.0)
                }
            }
            Family::Laplace => {
                if self.dimension == 1 {
                    -(-r).exp_m1()
                } else {
                    gamma_lr(n, r)
                }
            }
            Family::Logistic if self.dimension == 1 => (0.5 * r).tanh(),
            Family::Uniform { halfwidth } => (r / halfwidth).min(1.0).powf(n),
            Family::Triangular { halfwidth } => {
                let u = (r / halfwidth).min(1.0);
                (n + 1.0) * u.powf(n) - n * u.powf(n + 1.0)
            }
            _ => self.table_mass(r),
        };
        v.clamp(0.0, 1.0)
    }

    fn table_mass(&self, r: f64) -> f64 {
        let t = self.table.as_ref().expect("mass table");
        if r >= self.truncation {
            return 1.0;
        }
        let i = t.nodes.partition_point(|&v| v <= r).saturating_sub(1);
        let base = t.cum[i];
        let a = t.nodes[i];
        if r == a {
            return base;
        }
        base + gauss_legendre5(&|u| self.radial_mass_density(u), a, r)
    }

    /// Standardized cdf. In one dimension this is `Phi(x)`; for `n > 1` it is the
    /// symmetric analogue `(1 + sign(x) P(|eps| <= |x|)) / 2`.
    pub fn cdf(&self, x: f64) -> f64 {
        if self.dimension == 1 {
            match self.family {
                Family::Gaussian => return 0.5 * erfc(-x / std::f64::consts::SQRT_2),
                Family::Logistic => return 1.0 / (1.0 + (-x).exp()),
                Family::Laplace => {
                    return if x < 0.0 { 0.5 * x.exp() } else { 1.0 - 0.5 * (-x).exp() };
                }
                _ => {}
            }
        }
        let m = self.ball_mass(x.abs());
        if x >= 0.0 {
            0.5 + 0.5 * m
        } else {
            0.5 - 0.5 * m
        }
    }

    /// Standardized pdf at `x` (zero outside the support).
    pub fn pdf(&self, x: f64) -> f64 {
        self.radial_pdf(x.abs())
    }

    /// Derivative of the standardized pdf; the right limit at kinks.
    pub fn dpdf(&self, x: f64) -> f64 {
        let d = self.radial_dpdf(x.abs());
        if x < 0.0 {
            -d
        } else {
            d
        }
    }

    /// pdf, cdf and derivative at `x`. Tabulated densities refuse to extrapolate.
    pub fn evaluate(&self, x: f64) -> Result<Evaluation> {
        if matches!(self.family, Family::Tabulated { .. }) && x.abs() > self.support_halfwidth {
            return Err(Error::Extrapolation { x, hull: self.support_halfwidth });
        }
        Ok(Evaluation { pdf: self.pdf(x), cdf: self.cdf(x), dpdf: self.dpdf(x) })
    }

    /// `lambda^n * phi(lambda * |x - theta|)`.
    pub fn scaled_pdf(&self, x: f64, theta: f64, lambda: f64) -> Result<f64> {
        check_precision(lambda)?;
        Ok(lambda.powi(self.dimension as i32) * self.radial_pdf(lambda * (x - theta).abs()))
    }

    /// Point version of [`scaled_pdf`](Self::scaled_pdf) for `n`-vectors.
    pub fn scaled_pdf_nd(&self, x: &[f64], theta: &[f64], lambda: f64) -> Result<f64> {
        check_precision(lambda)?;
        if x.len() != self.dimension || theta.len() != self.dimension {
            return Err(Error::DimensionMismatch { density: self.dimension, requested: x.len().max(theta.len()) });
        }
        let dist = x.iter().zip(theta).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        Ok(lambda.powi(self.dimension as i32) * self.radial_pdf(lambda * dist))
    }

    fn validate(&self) -> Result<()> {
        let top = self.truncation;
        let grid = crate::numeric::lin_space(0.0, top, 513);
        for &x in &grid {
            if (self.pdf(x) - self.pdf(-x)).abs() > 1e-10 {
                return Err(Error::InvalidDensity(format!("asymmetric at x = {x}")));
            }
        }
        for w in grid.windows(2) {
            if self.radial_pdf(w[1]) > self.radial_pdf(w[0]) * (1.0 + 1e-12) + 1e-300 {
                return Err(Error::InvalidDensity(format!("profile increases near r = {}", w[1])));
            }
        }
        let mass = self.ball_mass(top);
        let total = match &self.table {
            Some(t) => t.cum.last().copied().unwrap_or(mass),
            None => mass,
        };
        if (total - 1.0).abs() > NORMALIZATION_TOL && (mass - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDensity(format!("total mass {total} differs from one")));
        }
        Ok(())
    }
}

fn n_vn(d: &SignalDensity) -> f64 {
    d.dimension as f64 * d.volume_coefficient
}

/// Smallest radius (to 1e-9 relative) where `tail(r) < TAIL_MASS`, for decreasing `tail`.
fn bracket_tail<F: Fn(f64) -> f64>(tail: F) -> f64 {
    let mut hi = 1.0;
    while tail(hi) >= TAIL_MASS {
        hi *= 2.0;
    }
    crate::numeric::bisect_predicate(|r| tail(r) < TAIL_MASS, 0.0, hi, 1e-9 * hi)
}

pub(crate) fn check_precision(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("precision must be positive and finite, got {lambda}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_families() -> Vec<SignalDensity> {
        vec![
            SignalDensity::gaussian(),
            SignalDensity::laplace(),
            SignalDensity::logistic(),
            SignalDensity::uniform(1.0).unwrap(),
            SignalDensity::triangular(1.0).unwrap(),
            SignalDensity::truncated_exp_inverse(0.1).unwrap(),
        ]
    }

    #[test]
    fn gaussian_at_peak() {
        let g = SignalDensity::gaussian();
        let e = g.evaluate(0.0).unwrap();
        assert!((e.pdf - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert_eq!(e.cdf, 0.5);
        assert_eq!(e.dpdf, 0.0);
    }

    #[test]
    fn uniform_inside() {
        let u = SignalDensity::uniform(1.0).unwrap();
        let e = u.evaluate(0.5).unwrap();
        assert_eq!(e.pdf, 0.5);
        assert!((e.cdf - 0.75).abs() < 1e-15);
        assert_eq!(e.dpdf, 0.0);
        assert_eq!(u.scaled_pdf(2.0, 0.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn truncated_exp_inverse_at_half() {
        let d = SignalDensity::truncated_exp_inverse(0.1).unwrap();
        let k = d.normalizer().unwrap();
        // oracle: normalize k by direct quadrature of exp(1/x) on [0.1, 1]
        let tail = adaptive_simpson(&|x: f64| (1.0 / x).exp(), 0.1, 1.0, 1e-10);
        let k_oracle = 1.0 / (2.0 * (0.1 * 10f64.exp() + tail));
        assert!((k - k_oracle).abs() / k_oracle < 1e-9);
        let e = d.evaluate(0.5).unwrap();
        assert!((e.pdf - k * 2f64.exp()).abs() / e.pdf < 1e-12);
        assert!((e.dpdf + 4.0 * e.pdf).abs() / e.pdf < 1e-12);
        assert!(!d.is_smooth());
        assert!(d.kinks().contains(&0.1));
    }

    #[test]
    fn scaled_examples() {
        let g = SignalDensity::gaussian();
        for lam in [0.3, 1.0, 4.0] {
            let v = g.scaled_pdf(1.7, 1.7, lam).unwrap();
            assert!((v - lam / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-14);
        }
        let l = SignalDensity::laplace();
        let v = l.scaled_pdf(1.0, 0.0, 2.0).unwrap();
        assert!((v - (-2f64).exp()).abs() < 1e-15);
        assert!(g.scaled_pdf(0.0, 0.0, 0.0).is_err());
        assert!(g.scaled_pdf(0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn laplace_normalization_by_quadrature() {
        let l = SignalDensity::laplace();
        let m = 2.0 * adaptive_simpson(&|x| l.pdf(x), 0.0, 40.0, 1e-13);
        assert!((m - 1.0).abs() < 1e-10);
    }

    #[test]
    fn every_family_integrates_to_one_after_scaling() {
        for d in all_families() {
            for (theta, lam) in [(0.0, 1.0), (1.3, 0.4), (-2.0, 3.5)] {
                let half = d.truncation() / lam;
                let mut breaks: Vec<f64> = d.kinks().iter().flat_map(|k| [theta - k / lam, theta + k / lam]).collect();
                breaks.sort_by(f64::total_cmp);
                let f = |x: f64| d.scaled_pdf(x, theta, lam).unwrap();
                let m = crate::numeric::integrate_panels(&f, theta - half, theta + half, &breaks, 1e-12);
                assert!((m - 1.0).abs() < 1e-8, "{} mass {m}", d.family().name());
            }
        }
    }

    #[test]
    fn cdf_limits_and_monotone() {
        for d in all_families() {
            let t = d.truncation();
            assert!(d.cdf(-t) < 1e-11, "{}", d.family().name());
            assert!(d.cdf(t) > 1.0 - 1e-11);
            let xs = crate::numeric::lin_space(-t, t, 400);
            assert!(xs.windows(2).all(|w| d.cdf(w[1]) >= d.cdf(w[0])));
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for d in all_families() {
            let t = d.truncation().min(6.0);
            for x in crate::numeric::lin_space(0.013, 0.97 * t, 60) {
                if d.kinks().iter().any(|k| (x - k).abs() < 1e-3) {
                    continue;
                }
                // Richardson-extrapolated central difference, O(h^4)
                let cd = |h: f64| (d.pdf(x + h) - d.pdf(x - h)) / (2.0 * h);
                let h = 1e-4 * x.min(1.0);
                let fd = (4.0 * cd(h / 2.0) - cd(h)) / 3.0;
                let scale = d.dpdf(x).abs().max(d.pdf(x)).max(1e-3);
                assert!((fd - d.dpdf(x)).abs() < 1e-6 * scale, "{} at {x}: {fd} vs {}", d.family().name(), d.dpdf(x));
            }
        }
    }

    #[test]
    fn tabulated_gaussian_profile() {
        let pts: Vec<(f64, f64)> =
            crate::numeric::lin_space(0.0, 8.0, 801).into_iter().map(|x| (x, (-0.5 * x * x).exp())).collect();
        let t = SignalDensity::tabulated(pts).unwrap();
        let g = SignalDensity::gaussian();
        for x in [0.0, 0.5, 1.0, 2.5] {
            assert!((t.pdf(x) - g.pdf(x)).abs() < 1e-6);
            assert!((t.cdf(x) - g.cdf(x)).abs() < 1e-7);
        }
        assert!(matches!(t.evaluate(9.0), Err(Error::Extrapolation { .. })));
    }

    #[test]
    fn tabulated_rejects_bad_tables() {
        assert!(SignalDensity::tabulated(vec![(0.0, 1.0), (1.0, 2.0), (2.0, 0.0)]).is_err());
        assert!(SignalDensity::tabulated(vec![(0.5, 1.0), (1.0, 0.5), (2.0, 0.0)]).is_err());
        assert!(SignalDensity::tabulated(vec![(0.0, 1.0), (1.0, 0.5)]).is_err());
    }

    #[test]
    fn bad_parameters() {
        assert!(SignalDensity::uniform(0.0).is_err());
        assert!(SignalDensity::truncated_exp_inverse(1.5).is_err());
        assert!(SignalDensity::new(Family::Gaussian, 0).is_err());
    }

    #[test]
    fn volume_coefficients() {
        assert!((ball_volume(1) - 2.0).abs() < 1e-14);
        assert!((ball_volume(2) - std::f64::consts::PI).abs() < 1e-14);
        assert!((ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-13);
    }

    #[test]
    fn higher_dimensional_mass_matches_radial_quadrature() {
        for fam in [Family::Gaussian, Family::Laplace, Family::Logistic, Family::Triangular { halfwidth: 1.0 }] {
            for n in [2, 3] {
                let d = SignalDensity::new(fam.clone(), n).unwrap();
                let f = |r: f64| d.radial_pdf(r) * n as f64 * d.volume_coefficient() * r.powi(n as i32 - 1);
                for r in [0.3, 1.0, 2.2] {
                    let q = adaptive_simpson(&f, 0.0, r, 1e-13);
                    assert!((q - d.ball_mass(r)).abs() < 1e-9, "{} n={n} r={r}", fam.name());
                }
                assert!((d.ball_mass(d.truncation()) - 1.0).abs() < 1e-9);
            }
        }
    }
}
