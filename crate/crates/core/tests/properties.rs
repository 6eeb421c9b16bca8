use cutoff_core::agent::{
    best_response, best_response_cutoff, expected_transfer_cutoff, expected_transfer_truthful, search_report, Transfer,
};
use cutoff_core::elasticity::{check_iea, elasticity, eta_inverse};
use cutoff_core::numeric::{integrate_panels, lin_space, log_space};
use cutoff_core::oracle::improve_to_cutoff;
use cutoff_core::solver::{CutoffProblem, Region};
use cutoff_core::{CostFunction, Family, PrecisionMap, ResponseSettings, SignalDensity};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = SignalDensity> {
    prop_oneof![
        Just(SignalDensity::gaussian()),
        Just(SignalDensity::laplace()),
        Just(SignalDensity::logistic()),
        (0.5..3.0f64).prop_map(|h| SignalDensity::uniform(h).unwrap()),
        (0.5..3.0f64).prop_map(|h| SignalDensity::triangular(h).unwrap()),
        (0.05..0.3f64).prop_map(|e| SignalDensity::truncated_exp_inverse(e).unwrap()),
    ]
}

/// Families whose elasticity increases everywhere.
fn iea_family() -> impl Strategy<Value = SignalDensity> {
    prop_oneof![Just(SignalDensity::gaussian()), Just(SignalDensity::laplace()), Just(SignalDensity::logistic()),]
}

fn step_transfer(cells: usize) -> impl Strategy<Value = Transfer> {
    (prop::collection::vec(0.0..1.0f64, cells), 0.5..3.0f64, -0.5..0.5f64).prop_map(move |(values, x, shift)| {
        let edges = lin_space(-x + shift, x + shift, cells + 1);
        Transfer::step(edges, values).unwrap()
    })
}

fn gaussian_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scaled_density_integrates_to_one(d in family(), theta in -2.0..2.0f64, lambda in 0.3..3.0f64) {
        let w = d.support_halfwidth().min(d.truncation()) / lambda;
        let mut breaks: Vec<f64> = d.kinks().iter().flat_map(|&k| [theta - k / lambda, theta + k / lambda]).collect();
        breaks.push(theta);
        let mass = integrate_panels(&|x| d.scaled_pdf(x, theta, lambda).unwrap(), theta - w, theta + w, &breaks, 1e-11);
        prop_assert!((mass - 1.0).abs() < 1e-8, "mass {mass}");
    }

    #[test]
    fn scaled_density_is_translation_invariant(d in family(), theta in -2.0..2.0f64, lambda in 0.3..3.0f64, x in -3.0..3.0f64) {
        prop_assert_eq!(d.scaled_pdf(x, theta, lambda).unwrap(), d.scaled_pdf(x - theta, 0.0, lambda).unwrap());
    }

    #[test]
    fn cdf_is_monotone_with_unit_range(d in family(), a in -4.0..4.0f64, b in -4.0..4.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(d.cdf(lo) <= d.cdf(hi));
        if d.is_compact() {
            prop_assert_eq!(d.cdf(-d.support_halfwidth()), 0.0);
            prop_assert_eq!(d.cdf(d.support_halfwidth()), 1.0);
        }
    }

    #[test]
    fn derivative_matches_finite_difference(d in family(), u in 0.02..0.98f64) {
        let x = u * d.support_halfwidth().min(d.truncation());
        let h = 1e-5;
        prop_assume!(d.kinks().iter().all(|&k| (x - k).abs() > 1e-3));
        let fd = (d.pdf(x + h) - d.pdf(x - h)) / (2.0 * h);
        let tol = 1e-5 * d.dpdf(x).abs().max(d.pdf(x)).max(1.0);
        prop_assert!((fd - d.dpdf(x)).abs() < tol, "x {x}: fd {fd} vs {}", d.dpdf(x));
    }

    #[test]
    fn likelihood_ratio_slope_is_elasticity_gap(d in iea_family(), lambda in 0.5..2.0f64, a in 0.05..3.0f64, b in 0.05..3.0f64) {
        prop_assume!((a - b).abs() > 1e-2);
        let (x1, x2) = if a < b { (a, b) } else { (b, a) };
        let log_ratio = |l: f64| (d.scaled_pdf(x1, 0.0, l).unwrap() / d.scaled_pdf(x2, 0.0, l).unwrap()).ln();
        let h: f64 = 1e-4;
        let slope = (log_ratio(lambda * h.exp()) - log_ratio(lambda * (-h).exp())) / (2.0 * h);
        let gap = elasticity(&d, lambda * x2).unwrap() - elasticity(&d, lambda * x1).unwrap();
        prop_assert!((slope - gap).abs() < 1e-3, "slope {slope} vs gap {gap}");
    }

    #[test]
    fn ratios_beyond_the_threshold_rise_under_contraction(d in iea_family(), a in 0.0..1.0f64, b in 0.0..1.0f64, shrink in 0.1..1.0f64) {
        prop_assume!(check_iea(&d, 1.0).iea_holds);
        let t = eta_inverse(&d, 1.0).value;
        let (x1, x2) = (t + 0.01 + 3.0 * a.min(b), t + 0.02 + 3.0 * a.max(b));
        let ratio = |k: f64| d.pdf(k * x2) / d.pdf(k * x1);
        prop_assert!(ratio(shrink) >= ratio(1.0) - 1e-9);
    }

    #[test]
    fn elasticity_stays_above_n_past_the_threshold(d in iea_family(), n in 1usize..4, delta in 1e-6..1.0f64) {
        let d = d.with_dimension(n).unwrap();
        prop_assume!(check_iea(&d, n as f64).iea_holds);
        let t = eta_inverse(&d, n as f64);
        prop_assume!(!t.overflow);
        prop_assert!(elasticity(&d, t.value + delta).unwrap() > n as f64 - 1e-6);
    }

    #[test]
    fn cutoff_value_is_monotone(d in family(), l in 0.1..5.0f64, dl in 0.0..1.0f64, c in 0.01..3.0f64, dc in 0.0..1.0f64) {
        let e = |l: f64, c: f64| expected_transfer_cutoff(&d, l, c, 1).unwrap();
        prop_assert!(e(l + dl, c) >= e(l, c) - 1e-15);
        prop_assert!(e(l, c + dc) >= e(l, c) - 1e-15);
    }

    #[test]
    fn gaussian_cutoff_value_closed_form(l in 0.05..5.0f64, c in 0.01..3.0f64) {
        let e = expected_transfer_cutoff(&SignalDensity::gaussian(), l, c, 1).unwrap();
        prop_assert!((e - (2.0 * gaussian_cdf(l * c) - 1.0)).abs() < 1e-8);
    }

    #[test]
    fn strategic_value_dominates_truthful(d in family(), t in step_transfer(12), l in 0.2..5.0f64) {
        let s = search_report(&d, l, &t).unwrap();
        prop_assert!(s.value >= s.truthful - 1e-15);
        prop_assert!((s.truthful - expected_transfer_truthful(&d, l, &t).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn single_peaked_transfers_are_reported_truthfully(d in family(), steps in prop::collection::vec(0.0..1.0f64, 1..6), l in 0.2..5.0f64) {
        // symmetric nonincreasing: nested bands with decreasing values
        let mut levels = steps.clone();
        levels.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let t = Transfer::symmetric_cells(2.0, &levels).unwrap();
        let s = search_report(&d, l, &t).unwrap();
        prop_assert!((s.value - s.truthful).abs() < 1e-10, "gain {}", s.value - s.truthful);
    }

    #[test]
    fn best_response_is_a_grid_maximum(d in iea_family(), cut in 0.1..3.0f64, a in 0.02..1.0f64, p in 1.2..3.0f64) {
        let c = CostFunction::power(a, p).unwrap();
        let s = ResponseSettings::default();
        let r = best_response_cutoff(&d, cut, &c, PrecisionMap::Identity, &s).unwrap();
        if r.participated {
            prop_assert!(r.payoff >= 0.0);
        }
        for l in log_space(s.lambda_min, s.lambda_max, s.grid_points) {
            let v = expected_transfer_cutoff(&d, l, cut, 1).unwrap() - c.value(l);
            prop_assert!(r.payoff >= v - 1e-9, "grid lambda {l} pays {v} > {}", r.payoff);
        }
    }

    #[test]
    fn response_falls_in_the_cutoff_above_the_threshold(d1 in 0.8..3.0f64, gap in 0.01..1.0f64, a in 0.05..0.5f64) {
        let g = SignalDensity::gaussian();
        let c = CostFunction::power(a, 2.0).unwrap();
        let s = ResponseSettings::default();
        let l = |d: f64| best_response_cutoff(&g, d, &c, PrecisionMap::Identity, &s).unwrap().lambda_star;
        let d2 = d1 + gap;
        let (l1, l2) = (l(d1), l(d2));
        prop_assume!(l1 * d1 >= 1.0 + 1e-6 && l2 * d2 >= 1.0 + 1e-6);
        prop_assert!(l2 <= l1 + 1e-6, "lambda({d1}) = {l1}, lambda({d2}) = {l2}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn cross_derivative_sign_law(n in 1usize..4, l in 0.25..2.0f64, c in 0.25..2.0f64) {
        let g = SignalDensity::new(Family::Gaussian, n).unwrap();
        let gap = n as f64 - elasticity(&g, l * c).unwrap();
        prop_assume!(gap.abs() > 1e-2);
        let x = cutoff_core::oracle::cross_derivative_check(&g, l, c, n).unwrap();
        prop_assert_eq!(x.fd.signum(), gap.signum());
        prop_assert!((x.fd - x.closed_form).abs() < 1e-4);
    }

    #[test]
    fn optimal_cutoff_is_the_first_to_reach_the_threshold(d in iea_family(), a in 0.05..1.0f64, p in 1.5..3.0f64) {
        let c = CostFunction::power(a, p).unwrap();
        let problem = CutoffProblem::new(&d, &c);
        let r = problem.optimal_cutoff().unwrap();
        prop_assume!(r.region != Region::BestCutoffOnly);
        for x in lin_space(r.d_bar, r.d_star, 40) {
            if x < r.d_star - 1e-6 {
                let l = problem.response(x).unwrap().lambda_star;
                prop_assert!(l * x < r.threshold + 1e-6, "d = {x}: product {}", l * x);
            }
        }
        if r.region == Region::SubstituteAtDbar {
            prop_assert!(r.ir_binding);
            prop_assert!(r.payoff.abs() < 1e-6, "payoff {}", r.payoff);
        }
    }

    #[test]
    fn shifted_cutoffs_still_induce_the_same_precision(shift in -1.0..1.0f64, cut in 0.3..2.0f64) {
        let g = SignalDensity::gaussian();
        let c = CostFunction::quadratic_eighth();
        let s = ResponseSettings::default();
        let base = best_response(&g, &Transfer::cutoff(cut).unwrap(), &c, &s).unwrap();
        let moved = best_response(&g, &Transfer::cutoff(cut).unwrap().shifted(shift), &c, &s).unwrap();
        prop_assert!((base.lambda_star - moved.lambda_star).abs() < 1e-6);
        // payment is t(theta - a), so the agent reports against the shift
        prop_assert!((moved.report_offset + shift).abs() < 1e-6, "offset {}", moved.report_offset);
    }

    #[test]
    fn improvement_never_lowers_precision(d in iea_family(), t in step_transfer(16)) {
        let c = CostFunction::quadratic_eighth();
        let trace = improve_to_cutoff(&d, &t, &c, &ResponseSettings::default()).unwrap();
        prop_assert!(trace.improved.lambda_star >= trace.original.lambda_star - 1e-6);
        for l in log_space(0.1, 10.0, 32) {
            let a = expected_transfer_truthful(&d, l, &trace.t_star).unwrap();
            let b = expected_transfer_truthful(&d, l, &trace.t_tilde).unwrap();
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }
}
