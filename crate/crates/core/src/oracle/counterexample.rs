use serde::Serialize;

use crate::agent::{best_response, search_report, AgentResponse, CostFunction, ResponseSettings, Transfer};
use crate::densities::{check_precision, SignalDensity};
use crate::elasticity::elasticity;
use crate::error::{Error, Result};
use crate::solver::{CutoffProblem, SolveResult, SolverSettings};

use super::brute::{brute_force_best_transfer, BruteForceResult, BruteForceSettings};

/// Required gap `eta(x1) - eta(x2)`.
pub const ELASTICITY_MARGIN: f64 = 1e-3;
const MAX_RETRIES: usize = 8;

/// `c(lambda) = E(lambda; d_ref) + kappa (lambda - lambda_ref)^2` for `lambda > 0`:
/// tangent to the cutoff value at `lambda_ref` and above it elsewhere, so the
/// cutoff `d_ref` induces exactly `lambda_ref` with zero surplus.
pub fn tangent_cost(density: &SignalDensity, lambda_ref: f64, d_ref: f64, kappa: f64) -> Result<CostFunction> {
    check_precision(lambda_ref)?;
    if !(d_ref > 0.0 && kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidCost(format!(
            "tangent cost needs d > 0 and kappa > 0, got d = {d_ref}, kappa = {kappa}"
        )));
    }
    let d = density.clone();
    Ok(CostFunction::custom(
        format!("tangent at ({lambda_ref}, {d_ref}), kappa {kappa}"),
        kappa * lambda_ref * lambda_ref,
        move |l| d.ball_mass(l * d_ref) + kappa * (l - lambda_ref).powi(2),
    ))
}

/// A cutoff with an inner band removed and an outer band of equal mass added.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub transfer: Transfer,
    pub delta1: f64,
    pub delta2: f64,
    /// One-sided band masses under `phi(.; 0, lambda_ref)`.
    pub mass1: f64,
    pub mass2: f64,
    /// Finite-difference `d/d lambda [E(lambda; t) - E(lambda; d_ref)]` at `lambda_ref`, strategic reporting.
    pub slope_gap: f64,
    /// The same slope gap for truthful reporting.
    pub truthful_slope_gap: f64,
    pub retries: usize,
}

/// Moves mass from `|x| ~ x1 / lambda_ref` (inside the cutoff, higher
/// elasticity) to `|x| ~ x2 / lambda_ref` (outside, lower elasticity), keeping
/// `E(lambda_ref; .)` fixed while raising its slope in `lambda`.
pub fn build_counterexample(
    density: &SignalDensity,
    lambda_ref: f64,
    d_ref: f64,
    x1: f64,
    x2: f64,
    delta1: Option<f64>,
) -> Result<Counterexample> {
    check_precision(lambda_ref)?;
    if density.dimension() != 1 {
        return Err(Error::Precondition("the band perturbation is one-dimensional".into()));
    }
    let (e1, e2) = (elasticity(density, x1)?, elasticity(density, x2)?);
    if !(e1 > e2 + ELASTICITY_MARGIN) {
        return Err(Error::Precondition(format!(
            "need eta(x1) > eta(x2) + {ELASTICITY_MARGIN}; got eta({x1}) = {e1}, eta({x2}) = {e2}"
        )));
    }
    let edge = lambda_ref * d_ref;
    let limit = density.support_halfwidth().min(density.truncation());
    if !(x1 < edge && edge <= x2 && x2 < limit) {
        return Err(Error::Precondition(format!(
            "need x1 < lambda d <= x2 inside the support; got x1 = {x1}, lambda d = {edge}, x2 = {x2}"
        )));
    }
    let (c1, c2) = (x1 / lambda_ref, x2 / lambda_ref);
    let mass = |a: f64, b: f64| density.cdf(lambda_ref * b) - density.cdf(lambda_ref * a);
    let mut delta1 = delta1.unwrap_or(0.01 * x1 / lambda_ref);
    let room2 = (c2 - d_ref).min(limit / lambda_ref - c2);
    for retries in 0..=MAX_RETRIES {
        let fits = delta1 > 0.0 && c1 - delta1 > 0.0 && c1 + delta1 < d_ref;
        let mass1 = if fits { mass(c1 - delta1, c1 + delta1) } else { f64::NAN };
        if !fits || !(room2 > 0.0) || mass(c2 - room2, c2 + room2) < mass1 {
            delta1 *= 0.5;
            continue;
        }
        let (mut lo, mut hi) = (0.0, room2);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mass(c2 - mid, c2 + mid) >= mass1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let delta2 = hi;
        let mass2 = mass(c2 - delta2, c2 + delta2);
        let (b1, b2) = ((c1 - delta1, c1 + delta1), (c2 - delta2, c2 + delta2));
        let raw = move |x: f64| {
            let a = x.abs();
            let base = if a <= d_ref { 1.0 } else { 0.0 };
            let minus = if a >= b1.0 && a < b1.1 { 1.0 } else { 0.0 };
            let plus = if a >= b2.0 && a < b2.1 { 1.0 } else { 0.0 };
            base - minus + plus
        };
        let breaks = vec![-b2.1, -b2.0, -d_ref, -b1.1, -b1.0, b1.0, b1.1, d_ref, b2.0, b2.1];
        // the perturbation only removes where the cutoff pays and adds where it does not
        for w in breaks.windows(2) {
            let v = raw(0.5 * (w[0] + w[1]));
            assert!((0.0..=1.0).contains(&v), "perturbed transfer leaves [0, 1]: {v}");
        }
        let transfer = Transfer::from_breaks(breaks, raw);
        let h = 1e-4 * lambda_ref;
        let cut = |l: f64| density.ball_mass(l * d_ref);
        let strategic = |l: f64| search_report(density, l, &transfer).map(|s| (s.value, s.truthful));
        let (up, down) = (strategic(lambda_ref + h)?, strategic(lambda_ref - h)?);
        let base = (cut(lambda_ref + h) - cut(lambda_ref - h)) / (2.0 * h);
        return Ok(Counterexample {
            slope_gap: (up.0 - down.0) / (2.0 * h) - base,
            truthful_slope_gap: (up.1 - down.1) / (2.0 * h) - base,
            transfer,
            delta1,
            delta2,
            mass1,
            mass2,
            retries,
        });
    }
    Err(Error::Precondition(format!(
        "no outer band of matching mass fits inside the support after {MAX_RETRIES} halvings of delta1"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefuteSettings {
    pub lambda_ref: f64,
    pub d_ref: f64,
    pub kappa: f64,
    pub x1: f64,
    pub x2: f64,
    /// Initial inner half-band; `None` means `0.01 x1 / lambda_ref`.
    pub delta1: Option<f64>,
    /// Halvings of `delta1` allowed while the perturbed contract fails to beat the cutoff.
    pub max_shrinks: usize,
    pub brute: BruteForceSettings,
    pub solver: SolverSettings,
}

impl Default for RefuteSettings {
    fn default() -> Self {
        RefuteSettings {
            lambda_ref: 1.0,
            d_ref: 0.5,
            kappa: 0.5,
            x1: 0.2,
            x2: 0.8,
            delta1: None,
            max_shrinks: 8,
            brute: BruteForceSettings::default(),
            solver: SolverSettings::default(),
        }
    }
}

/// Evidence that no cutoff is optimal under the tangent cost.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Refutation {
    pub settings: RefuteSettings,
    /// Best cutoff under the tangent cost (largest induced precision over the scan).
    pub best_cutoff: SolveResult,
    pub counterexample: Counterexample,
    pub counterexample_response: AgentResponse,
    pub brute_force: BruteForceResult,
    /// Induced precision minus the best cutoff's.
    pub counterexample_margin: f64,
    pub brute_force_margin: f64,
    pub refuted: bool,
}

pub fn refute(density: &SignalDensity, s: &RefuteSettings) -> Result<Refutation> {
    let cost = tangent_cost(density, s.lambda_ref, s.d_ref, s.kappa)?;
    let best_cutoff = CutoffProblem::new(density, &cost).with_settings(s.solver).optimal_cutoff()?;
    let response: &ResponseSettings = &s.solver.response;
    let mut delta1 = s.delta1.unwrap_or(0.01 * s.x1 / s.lambda_ref);
    let mut attempt = None;
    for _ in 0..=s.max_shrinks {
        let cex = build_counterexample(density, s.lambda_ref, s.d_ref, s.x1, s.x2, Some(delta1))?;
        let r = best_response(density, &cex.transfer, &cost, response)?;
        let done = r.lambda_star > best_cutoff.lambda_star;
        attempt = Some((cex, r));
        if done {
            break;
        }
        delta1 *= 0.5;
    }
    let (counterexample, counterexample_response) = attempt.expect("at least one attempt");
    let brute_force =
        brute_force_best_transfer(density, &cost, &BruteForceSettings { response: *response, ..s.brute })?;
    let counterexample_margin = counterexample_response.lambda_star - best_cutoff.lambda_star;
    let brute_force_margin = brute_force.response.lambda_star - best_cutoff.lambda_star;
    Ok(Refutation {
        settings: *s,
        best_cutoff,
        counterexample,
        counterexample_response,
        brute_force,
        counterexample_margin,
        brute_force_margin,
        refuted: counterexample_margin > 0.0 && brute_force_margin > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tangent_cost_touches_the_cutoff_value() {
        let t = SignalDensity::truncated_exp_inverse(0.1).unwrap();
        let c = tangent_cost(&t, 1.0, 0.5, 0.5).unwrap();
        assert!((c.value(1.0) - t.ball_mass(0.5)).abs() < 1e-15);
        assert!(c.value(1.2) > t.ball_mass(0.6));
        assert_eq!(c.value(0.0), 0.0);
        assert!((c.zero_limit() - 0.5).abs() < 1e-15);
        assert!(tangent_cost(&t, 1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn bands_have_matched_mass() {
        let t = SignalDensity::truncated_exp_inverse(0.1).unwrap();
        let c = build_counterexample(&t, 1.0, 0.5, 0.2, 0.8, None).unwrap();
        assert!((c.delta1 - 0.002).abs() < 1e-15);
        assert!((c.mass1 - c.mass2).abs() < 1e-10);
        assert!(c.slope_gap > 0.0);
        assert!(c.truthful_slope_gap > 0.0);
        assert_eq!(c.transfer.value(0.0), 1.0);
        assert_eq!(c.transfer.value(0.2), 0.0);
        assert_eq!(c.transfer.value(0.8), 1.0);
        assert_eq!(c.transfer.value(-0.8), 1.0);
        assert_eq!(c.transfer.value(0.6), 0.0);
        assert!(c.transfer.is_symmetric());
    }

    #[test]
    fn refuses_increasing_elasticity() {
        let g = SignalDensity::gaussian();
        let e = build_counterexample(&g, 1.0, 0.5, 0.2, 0.8, None).unwrap_err();
        assert!(matches!(e, Error::Precondition(_)));
    }

    #[test]
    fn refuses_misplaced_points() {
        let t = SignalDensity::truncated_exp_inverse(0.1).unwrap();
        // both points inside the cutoff
        assert!(build_counterexample(&t, 1.0, 0.9, 0.2, 0.8, None).is_err());
    }
}
