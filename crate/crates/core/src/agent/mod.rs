//! The agent's problem: expected transfers under truthful and strategic
//! reporting, and the best-response precision for a given contract and cost.

mod cost;
mod transfer;

pub use cost::CostFunction;
pub use transfer::{Piece, Transfer};

use rand::Rng;
use serde::Serialize;

use crate::densities::{check_precision, SignalDensity};
use crate::error::{Error, Result};
use crate::numeric::{bisect_predicate, golden_max, log_space};

/// Payoffs within this distance of the best are ties, resolved toward the largest precision.
pub const TIE_TOL: f64 = 1e-9;
/// The agent participates when its best payoff is at least `-IR_TOL`.
pub const IR_TOL: f64 = 1e-12;
/// Report offsets closer than this to zero count as truthful.
pub const OFFSET_TOL: f64 = 1e-6;
/// A misreport must gain more than this to count as profitable.
pub const VALUE_GAP_TOL: f64 = 1e-8;

const MAX_OFFSET_POINTS: usize = 4096;
const REFINED_PEAKS: usize = 8;

/// Map from the agent's chosen precision to the precision of the quantity the
/// contract is written on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrecisionMap {
    #[default]
    Identity,
    /// Gaussian prior of precision `lambda0`: `sqrt(lambda0^2 + lambda^2)`.
    GaussianPrior { lambda0: f64 },
    /// Contract on the principal's own signal of precision `lambda_p`:
    /// `(1/lambda_p^2 + 1/(lambda^2 + lambda0^2))^(-1/2)` (`lambda0 = 0` for a flat prior).
    Unobserved { lambda_p: f64, lambda0: f64 },
    /// Noise multiplied by `k`: `lambda / k`.
    NoiseScale { k: f64 },
}

impl PrecisionMap {
    pub fn apply(&self, lambda: f64) -> f64 {
        match *self {
            PrecisionMap::Identity => lambda,
            PrecisionMap::GaussianPrior { lambda0 } => lambda0.hypot(lambda),
            PrecisionMap::Unobserved { lambda_p, lambda0 } => {
                let own = lambda * lambda + lambda0 * lambda0;
                if own == 0.0 {
                    return 0.0;
                }
                (1.0 / (lambda_p * lambda_p) + 1.0 / own).powf(-0.5)
            }
            PrecisionMap::NoiseScale { k } => lambda / k,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, v: f64| Error::Domain(format!("{name} must be positive and finite, got {v}"));
        match *self {
            PrecisionMap::Identity => Ok(()),
            PrecisionMap::GaussianPrior { lambda0 } if !(lambda0 > 0.0 && lambda0.is_finite()) => {
                Err(bad("lambda0", lambda0))
            }
            PrecisionMap::Unobserved { lambda_p, .. } if !(lambda_p > 0.0 && lambda_p.is_finite()) => {
                Err(bad("lambda_p", lambda_p))
            }
            PrecisionMap::Unobserved { lambda0, .. } if !(lambda0 >= 0.0 && lambda0.is_finite()) => {
                Err(Error::Domain(format!("lambda0 must be >= 0, got {lambda0}")))
            }
            PrecisionMap::NoiseScale { k } if !(k > 0.0 && k.is_finite()) => Err(bad("k", k)),
            _ => Ok(()),
        }
    }
}

/// Precision search window and grid for [`best_response`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResponseSettings {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub grid_points: usize,
}

impl Default for ResponseSettings {
    fn default() -> Self {
        ResponseSettings { lambda_min: 1e-3, lambda_max: 1e3, grid_points: 1024 }
    }
}

impl ResponseSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_min > 0.0 && self.lambda_max > self.lambda_min && self.lambda_max.is_finite()) {
            return Err(Error::Domain(format!(
                "precision window must satisfy 0 < min < max, got [{}, {}]",
                self.lambda_min, self.lambda_max
            )));
        }
        if self.grid_points < 8 {
            return Err(Error::Domain("precision grid needs at least 8 points".into()));
        }
        Ok(())
    }
}

/// One draw of the signal model: `s = theta + eps / lambda`, report `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignalModel {
    pub theta: f64,
    pub signal: f64,
    pub report: f64,
    pub noise: f64,
    pub lambda: f64,
}

impl SignalModel {
    /// Draws `eps` from the standardized density by inverse-cdf sampling; reports truthfully.
    pub fn draw<R: Rng + ?Sized>(density: &SignalDensity, theta: f64, lambda: f64, rng: &mut R) -> Result<Self> {
        check_precision(lambda)?;
        if density.dimension() != 1 {
            return Err(Error::DimensionMismatch { density: density.dimension(), requested: 1 });
        }
        let u: f64 = rng.gen_range(1e-15..1.0 - 1e-15);
        let noise = quantile(density, u);
        let signal = theta + noise / lambda;
        Ok(SignalModel { theta, signal, report: signal, noise, lambda })
    }

    /// Report `a = s + b`.
    pub fn with_report_offset(mut self, b: f64) -> Self {
        self.report = self.signal + b;
        self
    }

    /// Realized payment `t(theta - a)`.
    pub fn payment(&self, t: &Transfer) -> f64 {
        t.value(self.theta - self.report)
    }
}

fn quantile(density: &SignalDensity, u: f64) -> f64 {
    let r = density.truncation();
    bisect_predicate(|x| density.cdf(x) >= u, -r, r, 1e-13 * r)
}

fn check_dimension(density: &SignalDensity, dim: usize) -> Result<()> {
    if dim != density.dimension() {
        return Err(Error::DimensionMismatch { density: density.dimension(), requested: dim });
    }
    Ok(())
}

/// `E(lambda; d)`: probability that the estimate lands within `d` of the state.
pub fn expected_transfer_cutoff(density: &SignalDensity, lambda: f64, d: f64, dim: usize) -> Result<f64> {
    check_precision(lambda)?;
    check_dimension(density, dim)?;
    if !(d >= 0.0) {
        return Err(Error::Domain(format!("cutoff must be >= 0, got {d}")));
    }
    Ok(density.ball_mass(lambda * d))
}

/// `E-hat(lambda; t)`: expected transfer when the agent must report its signal.
/// In `n > 1` dimensions the transfer is applied to the distance `|theta - a|`.
pub fn expected_transfer_truthful(density: &SignalDensity, lambda: f64, t: &Transfer) -> Result<f64> {
    check_precision(lambda)?;
    Ok(truthful(density, lambda, t))
}

fn truthful(density: &SignalDensity, lambda: f64, t: &Transfer) -> f64 {
    if density.dimension() == 1 {
        return offset_value(density, lambda, &t.jumps(), 0.0);
    }
    match t.radial_pieces() {
        Ok(pieces) => {
            pieces.iter().map(|p| p.value * (density.ball_mass(lambda * p.hi) - density.ball_mass(lambda * p.lo))).sum()
        }
        Err(_) => f64::NAN,
    }
}

/// Expected transfer when reporting `a = s + b`, from the jump decomposition of `t`.
fn offset_value(density: &SignalDensity, lambda: f64, jumps: &[(f64, f64)], b: f64) -> f64 {
    jumps.iter().map(|&(e, w)| w * density.cdf(lambda * (e + b))).sum::<f64>().clamp(0.0, 1.0)
}

/// Result of the strategic-report maximization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrategicValue {
    /// `E(lambda; t) = max_b` expected transfer.
    pub value: f64,
    /// Maximizing `b = a - s`.
    pub report_offset: f64,
    /// Expected transfer of the truthful report `b = 0`.
    pub truthful: f64,
}

/// `E(lambda; t)`, the expected transfer when the agent also chooses its report.
///
/// Symmetric single-peaked transfers are known to be maximized by the truthful
/// report and skip the search. Elsewhere the offset is searched on a lattice of
/// half the narrowest feature of `t` over `[-2X, 2X]` (`X` the support radius)
/// and refined by golden section.
pub fn expected_transfer_strategic(density: &SignalDensity, lambda: f64, t: &Transfer) -> Result<StrategicValue> {
    check_precision(lambda)?;
    if t.is_symmetric_nonincreasing() {
        let v = truthful(density, lambda, t);
        return Ok(StrategicValue { value: v, report_offset: 0.0, truthful: v });
    }
    search_report(density, lambda, t)
}

/// Full offset search without the single-peaked shortcut (one dimension only).
pub fn search_report(density: &SignalDensity, lambda: f64, t: &Transfer) -> Result<StrategicValue> {
    check_precision(lambda)?;
    if density.dimension() != 1 {
        if t.is_symmetric_nonincreasing() {
            let v = truthful(density, lambda, t);
            return Ok(StrategicValue { value: v, report_offset: 0.0, truthful: v });
        }
        return Err(Error::Precondition(
            "strategic reporting in n > 1 dimensions is supported only for radially nonincreasing transfers".into(),
        ));
    }
    let jumps = t.jumps();
    if jumps.is_empty() {
        return Ok(StrategicValue { value: 0.0, report_offset: 0.0, truthful: 0.0 });
    }
    let x = t.support_radius();
    let width = t.min_width();
    // Half the narrowest feature: every plateau of t holds a lattice point.
    let mut h = 0.5 * width;
    if 4.0 * x / h > MAX_OFFSET_POINTS as f64 {
        h = 4.0 * x / MAX_OFFSET_POINTS as f64;
    }
    let span = (2.0 * x / h).ceil() as i64;
    let on_lattice = jumps.iter().all(|&(e, _)| ((e / h) - (e / h).round()).abs() < 1e-9);
    let values: Vec<(i64, f64)> = if on_lattice {
        let idx: Vec<(i64, f64)> = jumps.iter().map(|&(e, w)| ((e / h).round() as i64, w)).collect();
        let lo = idx.iter().map(|j| j.0).min().unwrap() - span;
        let hi = idx.iter().map(|j| j.0).max().unwrap() + span;
        let cache: Vec<f64> = (lo..=hi).map(|j| density.cdf(lambda * j as f64 * h)).collect();
        (-span..=span)
            .map(|k| {
                let v: f64 = idx.iter().map(|&(j, w)| w * cache[(j + k - lo) as usize]).sum();
                (k, v.clamp(0.0, 1.0))
            })
            .collect()
    } else {
        (-span..=span).map(|k| (k, offset_value(density, lambda, &jumps, k as f64 * h))).collect()
    };
    let truthful_value = values[span as usize].1;
    let mut best = values[span as usize];
    for &(k, v) in &values {
        if v > best.1 + 1e-15 || (v >= best.1 - 1e-15 && v > best.1 && k.abs() < best.0.abs()) {
            best = (k, v);
        }
    }
    let centre = best.0 as f64 * h;
    let (b, v) = golden_max(|b| offset_value(density, lambda, &jumps, b), centre - h, centre + h, 1e-10);
    let (b, v) = if v > best.1 { (b, v) } else { (centre, best.1) };
    if v - truthful_value <= 1e-12 {
        return Ok(StrategicValue { value: truthful_value, report_offset: 0.0, truthful: truthful_value });
    }
    Ok(StrategicValue { value: v, report_offset: b, truthful: truthful_value })
}

/// True iff the truthful report is optimal at `lambda`: the maximizing offset is
/// within [`OFFSET_TOL`] of zero, or no misreport gains more than [`VALUE_GAP_TOL`].
pub fn verify_truthful_report(density: &SignalDensity, t: &Transfer, lambda: f64) -> Result<bool> {
    let s = search_report(density, lambda, t)?;
    Ok(s.report_offset.abs() <= OFFSET_TOL || s.value - s.truthful <= VALUE_GAP_TOL)
}

/// The agent's choice given a contract: `lambda(t)` and `pi(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgentResponse {
    pub lambda_star: f64,
    pub payoff: f64,
    pub expected_transfer: f64,
    pub report_offset: f64,
    pub participated: bool,
    /// Best payoff over strictly positive precisions (including the `lambda -> 0+` limit).
    pub interior_payoff: f64,
    /// The maximizer sits at the top of the precision window; the true response may be larger.
    pub at_upper_bound: bool,
}

/// Best response to a general transfer, with strategic reporting.
pub fn best_response(
    density: &SignalDensity,
    t: &Transfer,
    c: &CostFunction,
    settings: &ResponseSettings,
) -> Result<AgentResponse> {
    settings.validate()?;
    t.validate()?;
    if t.is_zero() {
        return Ok(idle(-c.zero_limit()));
    }
    if density.dimension() > 1 && !t.is_symmetric_nonincreasing() {
        return Err(Error::Precondition(
            "strategic reporting in n > 1 dimensions is supported only for radially nonincreasing transfers".into(),
        ));
    }
    if let Transfer::Cutoff { d } = t {
        return best_response_cutoff(density, *d, c, PrecisionMap::Identity, settings);
    }
    let value = |lambda: f64| {
        expected_transfer_strategic(density, lambda, t).map(|s| (s.value, s.report_offset)).unwrap_or((0.0, 0.0))
    };
    Ok(maximize(value, 0.0, c, settings))
}

/// Best response to the cutoff `d`, with the contract written on the precision `map(lambda)`.
pub fn best_response_cutoff(
    density: &SignalDensity,
    d: f64,
    c: &CostFunction,
    map: PrecisionMap,
    settings: &ResponseSettings,
) -> Result<AgentResponse> {
    settings.validate()?;
    map.validate()?;
    if !(d >= 0.0 && d.is_finite()) {
        return Err(Error::Domain(format!("cutoff must be finite and >= 0, got {d}")));
    }
    let free = density.ball_mass(map.apply(0.0) * d);
    if d == 0.0 {
        return Ok(idle(-c.zero_limit()));
    }
    Ok(maximize(|lambda| (density.ball_mass(map.apply(lambda) * d), 0.0), free, c, settings))
}

fn idle(interior: f64) -> AgentResponse {
    AgentResponse {
        lambda_star: 0.0,
        payoff: 0.0,
        expected_transfer: 0.0,
        report_offset: 0.0,
        participated: false,
        interior_payoff: interior.min(0.0),
        at_upper_bound: false,
    }
}

/// Maximizes `value(lambda) - c(lambda)` over the window, with `free` the value at `lambda = 0`.
fn maximize<V: Fn(f64) -> (f64, f64)>(value: V, free: f64, c: &CostFunction, s: &ResponseSettings) -> AgentResponse {
    let payoff = |l: f64| {
        let cost = c.value(l);
        if cost.is_finite() {
            value(l).0 - cost
        } else {
            f64::NEG_INFINITY
        }
    };
    let grid = log_space(s.lambda_min, s.lambda_max, s.grid_points);
    let p: Vec<f64> = grid.iter().map(|&l| payoff(l)).collect();
    let n = grid.len();

    // Refine the best local maxima of the grid.
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| (i == 0 || p[i] >= p[i - 1]) && (i + 1 == n || p[i] >= p[i + 1]) && p[i].is_finite())
        .collect();
    peaks.sort_by(|&a, &b| p[b].partial_cmp(&p[a]).unwrap().then(b.cmp(&a)));
    peaks.truncate(REFINED_PEAKS);
    // One candidate per peak, so the tie tolerance only separates distinct maxima.
    let candidates: Vec<(f64, f64)> = peaks
        .iter()
        .map(|&i| {
            let lo = grid[i.saturating_sub(1)];
            let hi = grid[(i + 1).min(n - 1)];
            let refined = golden_max(payoff, lo, hi, 1e-10 * grid[i]);
            if refined.1 > p[i] {
                refined
            } else {
                (grid[i], p[i])
            }
        })
        .collect();
    // The lambda -> 0+ limit, relevant when the contract pays without effort.
    let limit = free - c.zero_limit();
    let interior_best = candidates.iter().map(|c| c.1).fold(limit, f64::max);

    // Largest precision among the near-best candidates.
    let (mut lambda, mut best) = candidates
        .iter()
        .copied()
        .filter(|c| c.1 >= interior_best - TIE_TOL)
        .fold((0.0, f64::NEG_INFINITY), |acc, c| if c.0 > acc.0 { c } else { acc });
    if best < interior_best {
        best = best.max(interior_best - TIE_TOL);
    }
    // Walk to the right edge of an exactly flat plateau.
    let flat = |l: f64| payoff(l) >= best - 1e-13;
    let mut i = grid.partition_point(|&g| g <= lambda);
    while i < n && flat(grid[i]) {
        lambda = grid[i];
        i += 1;
    }
    if i < n && lambda > 0.0 {
        let mut lo = lambda;
        let mut hi = grid[i];
        while hi - lo > 1e-12 * hi {
            let mid = 0.5 * (lo + hi);
            if flat(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lambda = lo;
    }
    let at_upper_bound = lambda >= s.lambda_max * (1.0 - 1e-9);

    if free > 0.0 && (lambda == 0.0 || free > payoff(lambda) + TIE_TOL) {
        return AgentResponse {
            lambda_star: 0.0,
            payoff: free,
            expected_transfer: free,
            report_offset: 0.0,
            participated: true,
            interior_payoff: interior_best,
            at_upper_bound: false,
        };
    }
    let final_payoff = payoff(lambda);
    if lambda == 0.0 || final_payoff < -IR_TOL {
        return idle(interior_best);
    }
    let (e, offset) = value(lambda);
    AgentResponse {
        lambda_star: lambda,
        payoff: final_payoff,
        expected_transfer: e,
        report_offset: offset,
        participated: true,
        interior_payoff: interior_best,
        at_upper_bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::bisect_root;
    use rand::SeedableRng;

    fn gauss() -> SignalDensity {
        SignalDensity::gaussian()
    }

    #[test]
    fn cutoff_values() {
        let g = gauss();
        // oracle: Simpson quadrature of the standard normal on [-1, 1]
        let q = crate::numeric::adaptive_simpson(
            &|x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            -1.0,
            1.0,
            1e-14,
        );
        let e = expected_transfer_cutoff(&g, 1.0, 1.0, 1).unwrap();
        assert!((e - q).abs() < 1e-12, "{e} vs {q}");
        assert!((q - 0.682689).abs() < 1e-6);
        assert_eq!(expected_transfer_cutoff(&g, 3.0, 0.0, 1).unwrap(), 0.0);
        let u = SignalDensity::uniform(1.0).unwrap();
        assert!((expected_transfer_cutoff(&u, 2.0, 0.25, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!(expected_transfer_cutoff(&g, 1.0, 1.0, 2).is_err());
        assert!(expected_transfer_cutoff(&g, 0.0, 1.0, 1).is_err());
    }

    #[test]
    fn truthful_values() {
        let g = gauss();
        let t = Transfer::cutoff(0.8).unwrap();
        let a = expected_transfer_truthful(&g, 1.3, &t).unwrap();
        let b = expected_transfer_cutoff(&g, 1.3, 0.8, 1).unwrap();
        assert!((a - b).abs() < 1e-15);
        let half = Transfer::step(vec![-1.0, 1.0], vec![0.5]).unwrap();
        let v = expected_transfer_truthful(&g, 1.0, &half).unwrap();
        assert!((v - 0.5 * b_cut(&g, 1.0)).abs() < 1e-12);
        assert!((v - 0.341345).abs() < 1e-6);
    }

    fn b_cut(g: &SignalDensity, d: f64) -> f64 {
        2.0 * g.cdf(d) - 1.0
    }

    #[test]
    fn strategic_reports() {
        let g = gauss();
        let c = Transfer::cutoff(1.0).unwrap();
        let s = search_report(&g, 2.0, &c).unwrap();
        assert_eq!(s.report_offset, 0.0);
        let shifted = c.shifted(0.3);
        let s = search_report(&g, 2.0, &shifted).unwrap();
        // reporting a = s - 0.3 re-centres the cutoff
        assert!((s.report_offset + 0.3).abs() < 1e-6);
        assert!((s.value - b_cut(&g, 2.0)).abs() < 1e-10);
        assert!(!verify_truthful_report(&g, &shifted, 2.0).unwrap());
        // one-sided contract: value at least the truthful value, offset by a grid oracle
        let one = Transfer::step(vec![0.0, 1.0], vec![1.0]).unwrap();
        let s = search_report(&g, 1.0, &one).unwrap();
        assert!(s.value >= 0.341345 - 1e-9);
        let oracle = (0..=40_000)
            .map(|i| -2.0 + 4.0 * i as f64 / 40_000.0)
            .map(|b| (b, g.cdf(1.0 + b) - g.cdf(b)))
            .fold((0.0, 0.0), |a, x| if x.1 > a.1 { x } else { a });
        assert!((s.value - oracle.1).abs() < 1e-9);
        assert!((s.report_offset - oracle.0).abs() < 1e-3);
        assert!((s.report_offset + 0.5).abs() < 1e-6);
    }

    #[test]
    fn symmetric_hole_invites_misreport() {
        let g = gauss();
        let t = Transfer::symmetric_cells(2.0, &[0.0, 1.0]).unwrap();
        let s = expected_transfer_strategic(&g, 10.0, &t).unwrap();
        assert!(s.value > 0.99);
        assert!((s.report_offset.abs() - 1.5).abs() < 1e-3);
        assert!(s.truthful < 1e-6);
    }

    #[test]
    fn best_response_quadratic_cost() {
        let g = gauss();
        let c = CostFunction::quadratic_eighth();
        let r = best_response(&g, &Transfer::cutoff(1.0).unwrap(), &c, &ResponseSettings::default()).unwrap();
        // oracle: first-order condition 2 d phi(lambda d) = lambda / 4
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let foc = bisect_root(|l| l / 4.0 - 2.0 * phi(l), 0.5, 3.0, 1e-14);
        assert!((r.lambda_star - foc).abs() < 1e-6);
        assert!((r.lambda_star - 1.326).abs() < 1e-3);
        assert!((r.payoff - (b_cut(&g, foc) - foc * foc / 8.0)).abs() < 1e-10);
        assert!((r.payoff - 0.595).abs() < 1e-3);
        assert!(r.participated && !r.at_upper_bound);
    }

    #[test]
    fn individual_rationality() {
        let g = gauss();
        let steep = CostFunction::affine_power(10.0, 0.0, 1.0).unwrap();
        let r = best_response(&g, &Transfer::cutoff(1.0).unwrap(), &steep, &ResponseSettings::default()).unwrap();
        assert!(!r.participated);
        assert_eq!(r.lambda_star, 0.0);
        assert_eq!(r.payoff, 0.0);
        let c = CostFunction::quadratic_eighth();
        let z = best_response(&g, &Transfer::cutoff(0.0).unwrap(), &c, &ResponseSettings::default()).unwrap();
        assert_eq!((z.lambda_star, z.payoff), (0.0, 0.0));
    }

    #[test]
    fn cost_infinite_over_the_window() {
        let g = gauss();
        let c = CostFunction::tabulated(vec![(0.0, 0.0), (1e-4, 1.0)]).unwrap();
        let r = best_response(&g, &Transfer::cutoff(1.0).unwrap(), &c, &ResponseSettings::default()).unwrap();
        assert!(!r.participated);
        assert_eq!(r.lambda_star, 0.0);
    }

    #[test]
    fn free_cost_hits_the_window_edge() {
        let g = gauss();
        let free = CostFunction::power(0.0, 1.0).unwrap();
        let r = best_response(&g, &Transfer::cutoff(1.0).unwrap(), &free, &ResponseSettings::default()).unwrap();
        assert!(r.at_upper_bound);
        assert_eq!(r.lambda_star, 1e3);
    }

    #[test]
    fn plateau_tie_break_picks_largest_precision() {
        // rectangle density: E = min(lambda d, 1); a cost flat on [1, 2] makes every lambda there optimal
        let u = SignalDensity::uniform(1.0).unwrap();
        let c = CostFunction::tabulated(vec![(0.0, 0.0), (1.0, 0.2), (2.0, 0.2), (3.0, 5.0)]).unwrap();
        let r = best_response(&u, &Transfer::cutoff(1.0).unwrap(), &c, &ResponseSettings::default()).unwrap();
        assert!((r.lambda_star - 2.0).abs() < 1e-9, "{}", r.lambda_star);
        assert!((r.payoff - 0.8).abs() < 1e-12);
    }

    #[test]
    fn precision_maps() {
        assert_eq!(PrecisionMap::Identity.apply(2.0), 2.0);
        assert!((PrecisionMap::GaussianPrior { lambda0: 3.0 }.apply(4.0) - 5.0).abs() < 1e-15);
        let u = PrecisionMap::Unobserved { lambda_p: 2.0, lambda0: 0.0 }.apply(2.0);
        assert!((u - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(PrecisionMap::Unobserved { lambda_p: 2.0, lambda0: 0.0 }.apply(0.0), 0.0);
        assert_eq!(PrecisionMap::NoiseScale { k: 2.0 }.apply(3.0), 1.5);
        assert!(PrecisionMap::GaussianPrior { lambda0: 0.0 }.validate().is_err());
    }

    #[test]
    fn prior_information_is_free() {
        let g = gauss();
        let c = CostFunction::power(5.0, 2.0).unwrap();
        let map = PrecisionMap::GaussianPrior { lambda0: 100.0 };
        let r = best_response_cutoff(&g, 0.05, &c, map, &ResponseSettings::default()).unwrap();
        assert!(r.participated);
        assert!(r.payoff >= g.ball_mass(5.0) - 1e-9);
    }

    #[test]
    fn simulated_payments_match_expectation() {
        let g = gauss();
        let t = Transfer::step(vec![-0.5, 0.0, 1.0], vec![0.4, 1.0]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 20_000;
        let mean =
            (0..n).map(|_| SignalModel::draw(&g, 0.3, 1.5, &mut rng).unwrap().payment(&t)).sum::<f64>() / n as f64;
        let exact = expected_transfer_truthful(&g, 1.5, &t).unwrap();
        assert!((mean - exact).abs() < 0.015, "{mean} vs {exact}");
        let m = SignalModel::draw(&g, 0.0, 1.0, &mut rng).unwrap();
        assert!((m.signal - (m.theta + m.noise / m.lambda)).abs() < 1e-15);
        assert!((m.with_report_offset(0.2).report - m.signal - 0.2).abs() < 1e-15);
    }
}
