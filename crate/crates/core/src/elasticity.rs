//! Elasticity of a signal density, `eta(x) = -x phi'(x) / phi(x)`, and the
//! shape conditions built on it: increasing elasticity above `n`, global
//! monotone likelihood ratio, and strong unimodality.

use serde::Serialize;

use crate::densities::SignalDensity;
use crate::error::{Error, Result};
use crate::numeric::{bisect_predicate, log_space};

/// Number of log-spaced points in the elasticity scan.
pub const SCAN_POINTS: usize = 4096;
/// Absolute tolerance on `eta` when testing monotonicity.
pub const MONOTONE_TOL: f64 = 1e-7;
/// Absolute tolerance of the threshold `eta^{-1}(n)`.
pub const THRESHOLD_TOL: f64 = 1e-9;

/// `eta(x)` for `x > 0`; `+inf` where the density vanishes or at the support edge.
pub fn elasticity(density: &SignalDensity, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("elasticity is defined for x > 0, got {x}")));
    }
    Ok(eta(density, x))
}

pub(crate) fn eta(density: &SignalDensity, x: f64) -> f64 {
    if x >= density.support_halfwidth() {
        return f64::INFINITY;
    }
    let p = density.radial_pdf(x);
    if p <= 0.0 {
        return f64::INFINITY;
    }
    -x * density.radial_dpdf(x) / p
}

/// The scan grid `(x_min, x_max)`: `x_min = 1e-6 * scale`, `x_max` the quadrature truncation.
pub fn scan_grid(density: &SignalDensity) -> Vec<f64> {
    log_space(1e-6 * density.scale(), density.truncation(), SCAN_POINTS)
}

/// Result of [`eta_inverse`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Threshold {
    pub value: f64,
    /// True when `eta` never exceeded `n` inside the scanned domain; `value` is then the scan bound.
    pub overflow: bool,
}

/// `eta^{-1}(n) = inf { x > 0 : eta(x) > n }`, by a log-spaced scan refined with bisection.
pub fn eta_inverse(density: &SignalDensity, n: f64) -> Threshold {
    let grid = scan_grid(density);
    match grid.iter().position(|&x| eta(density, x) > n) {
        None => Threshold { value: *grid.last().unwrap(), overflow: true },
        Some(0) => Threshold { value: 0.0, overflow: false },
        Some(i) => {
            let v = bisect_predicate(|x| eta(density, x) > n, grid[i - 1], grid[i], THRESHOLD_TOL);
            Threshold { value: v, overflow: false }
        }
    }
}

/// A pair `x_low < x_high` with `eta(x_low) > n` and `eta(x_high) < eta(x_low) - tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub x_low: f64,
    pub x_high: f64,
    pub eta_low: f64,
    pub eta_high: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IeaCheck {
    pub iea_holds: bool,
    pub witness: Option<Witness>,
}

/// Increasing elasticity above `n`: whenever `eta(x) > n`, `eta(y) >= eta(x)` for all `y > x`.
///
/// The reported witness is the violation with the largest drop in `eta`.
pub fn check_iea(density: &SignalDensity, n: f64) -> IeaCheck {
    let grid = scan_grid(density);
    let etas: Vec<f64> = grid.iter().map(|&x| eta(density, x)).collect();
    let suffix = suffix_min(&etas);
    let mut worst: Option<(f64, usize, usize)> = None;
    for i in 0..etas.len() - 1 {
        if etas[i] > n {
            let (m, j) = suffix[i + 1];
            let drop = etas[i] - m;
            if drop > MONOTONE_TOL && worst.is_none_or(|w| drop > w.0) {
                worst = Some((drop, i, j));
            }
        }
    }
    match worst {
        None => IeaCheck { iea_holds: true, witness: None },
        Some((_, i, j)) => IeaCheck {
            iea_holds: false,
            witness: Some(Witness { x_low: grid[i], x_high: grid[j], eta_low: etas[i], eta_high: etas[j] }),
        },
    }
}

fn suffix_min(v: &[f64]) -> Vec<(f64, usize)> {
    let mut out = vec![(f64::INFINITY, v.len()); v.len()];
    let mut cur = (f64::INFINITY, v.len());
    for i in (0..v.len()).rev() {
        if v[i] <= cur.0 {
            cur = (v[i], i);
        }
        out[i] = cur;
    }
    out
}

fn nondecreasing(values: &[f64]) -> bool {
    let mut running = f64::NEG_INFINITY;
    for &v in values {
        if v < running - MONOTONE_TOL {
            return false;
        }
        running = running.max(v);
    }
    true
}

/// `eta` nondecreasing on the whole scanned domain; equivalent to the ratio
/// `phi(x1; 0, lambda) / phi(x2; 0, lambda)` increasing in `lambda` for all `0 <= x1 <= x2`.
pub fn check_global_mlrp(density: &SignalDensity) -> bool {
    let etas: Vec<f64> = scan_grid(density).iter().map(|&x| eta(density, x)).collect();
    nondecreasing(&etas)
}

/// `-ln phi` convex, i.e. `-phi'/phi = eta(x)/x` nondecreasing on `x > 0`.
pub fn check_strongly_unimodal(density: &SignalDensity) -> bool {
    let slopes: Vec<f64> = scan_grid(density).iter().map(|&x| eta(density, x) / x).collect();
    nondecreasing(&slopes)
}

/// The largest point where `eta` crosses `n` from below:
/// `inf { x : eta(y) >= n for every scanned y >= x }`.
pub fn crossing_point(density: &SignalDensity, n: f64) -> f64 {
    let grid = scan_grid(density);
    let last_below = grid.iter().rposition(|&x| eta(density, x) < n);
    match last_below {
        None => 0.0,
        Some(i) if i + 1 == grid.len() => grid[i],
        Some(i) => bisect_predicate(|x| eta(density, x) >= n, grid[i], grid[i + 1], THRESHOLD_TOL),
    }
}

/// Summary of the elasticity conditions of a density in dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ElasticityProfile {
    pub dimension: usize,
    pub eta_inverse_n: f64,
    pub eta_inverse_overflow: bool,
    pub crossing_point: f64,
    pub iea_holds: bool,
    pub global_mlrp: bool,
    pub strongly_unimodal: bool,
    pub witness: Option<Witness>,
}

impl ElasticityProfile {
    pub fn of(density: &SignalDensity) -> Self {
        let n = density.dimension() as f64;
        let t = eta_inverse(density, n);
        let iea = check_iea(density, n);
        ElasticityProfile {
            dimension: density.dimension(),
            eta_inverse_n: t.value,
            eta_inverse_overflow: t.overflow,
            crossing_point: crossing_point(density, n),
            iea_holds: iea.iea_holds,
            global_mlrp: check_global_mlrp(density),
            strongly_unimodal: check_strongly_unimodal(density),
            witness: iea.witness,
        }
    }
}
