//! Constructive checks of cutoff optimality: the transfer-improvement
//! pipeline, cutoff matching, the cross-derivative sign law, exhaustive search
//! over step transfers, and the perturbation that beats every cutoff when the
//! elasticity condition fails.

mod brute;
mod counterexample;

pub use brute::{brute_force_best_transfer, default_x_max, BruteForceResult, BruteForceSettings};
pub use counterexample::{build_counterexample, refute, tangent_cost, Counterexample, Refutation, RefuteSettings};

use serde::Serialize;

use crate::agent::{
    best_response, expected_transfer_truthful, search_report, AgentResponse, CostFunction, ResponseSettings, Transfer,
};
use crate::densities::SignalDensity;
use crate::elasticity::{check_iea, eta_inverse};
use crate::error::{Error, Result};
use crate::numeric::log_space;

/// `t` raised to 1 on `|x| < eta^{-1}(n) / lambda_ref`.
pub fn augment_transfer(density: &SignalDensity, t: &Transfer, lambda_ref: f64) -> Result<Transfer> {
    crate::densities::check_precision(lambda_ref)?;
    if !t.is_symmetric() {
        return Err(Error::Precondition("augmentation expects a symmetric transfer".into()));
    }
    let r = eta_inverse(density, density.dimension() as f64).value / lambda_ref;
    Ok(t.augmented(r))
}

/// Cutoff `d` with `E(lambda_ref; d) = target`.
pub fn match_cutoff(density: &SignalDensity, lambda_ref: f64, target: f64, d_max: f64) -> Result<f64> {
    crate::densities::check_precision(lambda_ref)?;
    if !(0.0..=1.0).contains(&target) {
        return Err(Error::Domain(format!("target must be a probability, got {target}")));
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    let sup = density.ball_mass(lambda_ref * d_max);
    if target > sup + 1e-12 {
        return Err(Error::Unreachable { target, sup });
    }
    let (mut lo, mut hi) = (0.0, d_max);
    while hi - lo > 1e-13 * (1.0 + hi) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if density.ball_mass(lambda_ref * mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Record of the improvement pipeline `t -> t* -> t~ -> t~' -> cutoff`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImprovementTrace {
    pub original: AgentResponse,
    /// `t*(x) = t(x - b)`: the contract re-centred on the agent's report.
    pub t_star: Transfer,
    /// `(t*(x) + t*(-x)) / 2`.
    pub t_tilde: Transfer,
    /// `t~` raised to 1 on `|x| < eta^{-1}(n) / lambda(t)`.
    pub t_tilde_prime: Transfer,
    pub augment_radius: f64,
    /// `E(lambda(t); t)` with strategic reporting.
    pub strategic_value: f64,
    /// `E-hat(lambda(t); t*)`; equals `strategic_value`.
    pub truthful_t_star: f64,
    /// `E-hat(lambda(t); t~)`; equals `truthful_t_star`.
    pub truthful_t_tilde: f64,
    /// `E-hat(lambda(t); t~')`, the value the cutoff is matched to.
    pub target: f64,
    /// `E-hat(lambda; t*) <= E(lambda; t*)` on a grid around `lambda(t)`, with equality at `lambda(t)`.
    pub inequalities_hold: bool,
    pub d: f64,
    pub improved: AgentResponse,
}

/// Replaces `t` by a cutoff that induces at least the same precision.
pub fn improve_to_cutoff(
    density: &SignalDensity,
    t: &Transfer,
    c: &CostFunction,
    settings: &ResponseSettings,
) -> Result<ImprovementTrace> {
    let n = density.dimension() as f64;
    if !check_iea(density, n).iea_holds {
        return Err(Error::Precondition(format!(
            "density violates increasing elasticity above {n}; a cutoff need not dominate"
        )));
    }
    let original = best_response(density, t, c, settings)?;
    let lambda = original.lambda_star;
    if !original.participated || lambda == 0.0 {
        let zero = Transfer::Cutoff { d: 0.0 };
        let improved = best_response(density, &zero, c, settings)?;
        return Ok(ImprovementTrace {
            original,
            t_star: t.clone(),
            t_tilde: t.symmetrized(),
            t_tilde_prime: t.symmetrized(),
            augment_radius: 0.0,
            strategic_value: 0.0,
            truthful_t_star: 0.0,
            truthful_t_tilde: 0.0,
            target: 0.0,
            inequalities_hold: true,
            d: 0.0,
            improved,
        });
    }
    let t_star = t.shifted(original.report_offset);
    let t_tilde = t_star.symmetrized();
    let augment_radius = eta_inverse(density, n).value / lambda;
    let t_tilde_prime = t_tilde.augmented(augment_radius);
    let strategic_value = original.expected_transfer;
    let truthful_t_star = expected_transfer_truthful(density, lambda, &t_star)?;
    let truthful_t_tilde = expected_transfer_truthful(density, lambda, &t_tilde)?;
    let target = expected_transfer_truthful(density, lambda, &t_tilde_prime)?;

    let mut inequalities_hold = (truthful_t_star - strategic_value).abs() <= 1e-8;
    if density.dimension() == 1 {
        for l in log_space(0.5 * lambda, 2.0 * lambda, 32) {
            let s = search_report(density, l, &t_star)?;
            inequalities_hold &= s.truthful <= s.value + 1e-12;
        }
    }
    let d_max = 50.0 * density.scale() / lambda.min(1.0);
    let d = match_cutoff(density, lambda, target.min(1.0), d_max.max(t.support_radius()))?;
    let improved = best_response(density, &Transfer::Cutoff { d }, c, settings)?;
    Ok(ImprovementTrace {
        original,
        t_star,
        t_tilde,
        t_tilde_prime,
        augment_radius,
        strategic_value,
        truthful_t_star,
        truthful_t_tilde,
        target,
        inequalities_hold,
        d,
        improved,
    })
}

/// Finite-difference and closed-form values of `d^2 E(lambda; d) / d lambda d d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossDerivative {
    pub fd: f64,
    pub closed_form: f64,
    /// `lambda d` lies within a step of a kink of the density; one-sided differences were used.
    pub near_kink: bool,
}

pub const CROSS_STEP: f64 = 1e-4;

/// Cross derivative of `E(lambda; d)` in dimension `dim`: the closed form is
/// `n V_n phi(r) r^(n-1) [n - eta(r)]` at `r = lambda d`.
pub fn cross_derivative_check(density: &SignalDensity, lambda: f64, d: f64, dim: usize) -> Result<CrossDerivative> {
    crate::densities::check_precision(lambda)?;
    if dim != density.dimension() {
        return Err(Error::DimensionMismatch { density: density.dimension(), requested: dim });
    }
    if !(d > 0.0) {
        return Err(Error::Domain(format!("cutoff must be positive, got {d}")));
    }
    let r = lambda * d;
    if r >= density.support_halfwidth() {
        return Err(Error::Domain(format!("lambda d = {r} is outside the interior of the support")));
    }
    let h = CROSS_STEP;
    let e = |l: f64, x: f64| density.ball_mass(l * x);
    // the product moves by about h (lambda + d) per step
    let reach = 2.0 * h * (lambda + d + h);
    let near_kink = density.kinks().iter().any(|&k| (r - k).abs() <= reach);
    let fd = if near_kink {
        (e(lambda + h, d + h) - e(lambda + h, d) - e(lambda, d + h) + e(lambda, d)) / (h * h)
    } else {
        (e(lambda + h, d + h) - e(lambda + h, d - h) - e(lambda - h, d + h) + e(lambda - h, d - h)) / (4.0 * h * h)
    };
    let n = dim as f64;
    let shell = n * density.volume_coefficient() * r.powi(dim as i32 - 1);
    let closed_form = shell * (n * density.radial_pdf(r) + r * density.radial_dpdf(r));
    Ok(CrossDerivative { fd, closed_form, near_kink })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matching_inverts_the_cutoff_value() {
        let g = SignalDensity::gaussian();
        assert_eq!(match_cutoff(&g, 1.0, 0.0, 50.0).unwrap(), 0.0);
        let d = match_cutoff(&g, 1.0, 0.682689492137086, 50.0).unwrap();
        assert!((d - 1.0).abs() < 1e-9);
        let u = SignalDensity::uniform(1.0).unwrap();
        assert!((match_cutoff(&u, 2.0, 0.5, 50.0).unwrap() - 0.25).abs() < 1e-12);
        assert!(matches!(match_cutoff(&g, 1.0, 1.0 - 1e-20, 1.0), Err(Error::Unreachable { .. })));
    }

    #[test]
    fn augmentation_examples() {
        let g = SignalDensity::gaussian();
        let a = augment_transfer(&g, &Transfer::Cutoff { d: 0.0 }, 1.0).unwrap();
        match a {
            Transfer::Cutoff { d } => assert!((d - 1.0).abs() < 1e-8),
            _ => panic!("expected a cutoff"),
        }
        let wide = Transfer::Cutoff { d: 2.0 };
        assert_eq!(augment_transfer(&g, &wide, 1.0).unwrap(), wide);
        let half = Transfer::step(vec![-2.0, 2.0], vec![0.5]).unwrap();
        let a = augment_transfer(&g, &half, 1.0).unwrap();
        assert_eq!(a.value(0.5), 1.0);
        assert_eq!(a.value(1.5), 0.5);
        assert!(augment_transfer(&g, &Transfer::step(vec![0.0, 1.0], vec![1.0]).unwrap(), 1.0).is_err());
    }

    #[test]
    fn cross_derivative_examples() {
        let g = SignalDensity::gaussian();
        let at = |r: f64| cross_derivative_check(&g, 1.0, r, 1).unwrap();
        let b = at(1.0);
        assert!(b.fd.abs() < 1e-6 && b.closed_form.abs() < 1e-12);
        let c = at(0.5);
        assert!(c.fd > 0.0 && c.closed_form > 0.0 && (c.fd - c.closed_form).abs() < 1e-4);
        let s = at(2.0);
        assert!(s.fd < 0.0 && s.closed_form < 0.0 && (s.fd - s.closed_form).abs() < 1e-4);
    }

    #[test]
    fn cross_derivative_near_a_kink_is_flagged() {
        let t = SignalDensity::truncated_exp_inverse(0.1).unwrap();
        let k = cross_derivative_check(&t, 1.0, 0.1, 1).unwrap();
        assert!(k.near_kink);
        let u = SignalDensity::uniform(1.0).unwrap();
        assert!(cross_derivative_check(&u, 1.0, 1.5, 1).is_err());
    }

    #[test]
    fn pipeline_fixed_point_on_cutoffs() {
        let g = SignalDensity::gaussian();
        let c = CostFunction::quadratic_eighth();
        let s = ResponseSettings::default();
        let tr = improve_to_cutoff(&g, &Transfer::Cutoff { d: 1.2 }, &c, &s).unwrap();
        assert!((tr.d - 1.2).abs() < 1e-9);
        assert!((tr.improved.lambda_star - tr.original.lambda_star).abs() < 1e-9);
        let shifted = Transfer::Cutoff { d: 1.2 }.shifted(0.3);
        let tr = improve_to_cutoff(&g, &shifted, &c, &s).unwrap();
        assert!((tr.d - 1.2).abs() < 1e-6, "{}", tr.d);
        assert!(tr.inequalities_hold);
    }

    #[test]
    fn pipeline_refuses_without_the_elasticity_condition() {
        let t = SignalDensity::truncated_exp_inverse(0.1).unwrap();
        let c = CostFunction::quadratic_eighth();
        let r = improve_to_cutoff(&t, &Transfer::Cutoff { d: 0.5 }, &c, &ResponseSettings::default());
        assert!(matches!(r, Err(Error::Precondition(_))));
    }
}
