//! The principal's problem: the participation cutoff, the optimal cutoff and
//! its variants, comparative statics, and the output-based (classic) analogue.

mod classic;

pub use classic::{
    brute_force_output_transfer, check_output_mlrp, effort_response, solve_classic_pa, ClassicResult, ClassicSettings,
    EffortResponse, MlrpCheck, OutputBruteForce, OutputModel,
};

use serde::Serialize;

use crate::agent::{best_response_cutoff, AgentResponse, CostFunction, PrecisionMap, ResponseSettings, IR_TOL};
use crate::densities::{Family, SignalDensity};
use crate::elasticity::{check_iea, eta_inverse};
use crate::error::{Error, Result};

/// Tolerance on `lambda(d) d` against the threshold `eta^{-1}(n)`.
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverSettings {
    pub response: ResponseSettings,
    /// Largest cutoff considered; `None` means `50 * density.scale()`.
    pub d_max: Option<f64>,
    pub scan_points: usize,
    pub refinements: usize,
    /// Bisection tolerance on cutoffs.
    pub tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            response: ResponseSettings::default(),
            d_max: None,
            scan_points: 512,
            refinements: 2,
            tol: 1e-8,
        }
    }
}

impl SolverSettings {
    fn d_max(&self, density: &SignalDensity) -> f64 {
        self.d_max.unwrap_or(50.0 * density.scale())
    }

    pub fn validate(&self) -> Result<()> {
        self.response.validate()?;
        if let Some(d) = self.d_max {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Domain(format!("d_max must be positive, got {d}")));
            }
        }
        if self.scan_points < 8 || !(self.tol > 0.0) {
            return Err(Error::Domain("scan needs at least 8 points and a positive tolerance".into()));
        }
        Ok(())
    }
}

/// Which case of the optimal-cutoff characterization produced the answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// `lambda(d_bar) d_bar >= eta^{-1}(n)`: the participation constraint binds.
    SubstituteAtDbar,
    /// The cutoff is raised from `d_bar` until `lambda(d) d` reaches the threshold.
    ComplementToBoundary,
    /// Elasticity condition fails or the boundary is out of reach: best scanned cutoff.
    BestCutoffOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub d_bar: f64,
    pub d_star: f64,
    pub lambda_star: f64,
    pub region: Region,
    pub ir_binding: bool,
    /// Precision of the contracted quantity at the optimum, for the prior and unobserved-state variants.
    pub posterior_precision: Option<f64>,
    /// `Lambda(lambda(d*)) d*`, compared against `threshold`.
    pub boundary_product: f64,
    /// `eta^{-1}(n)`.
    pub threshold: f64,
    /// Agent payoff at the optimum.
    pub payoff: f64,
    pub iea_holds: bool,
    pub boundary_reached: bool,
    pub at_upper_bound: bool,
    pub warnings: Vec<String>,
}

/// A cutoff problem: density, cost, and the map from chosen to contracted precision.
#[derive(Debug, Clone)]
pub struct CutoffProblem<'a> {
    pub density: &'a SignalDensity,
    pub cost: &'a CostFunction,
    pub map: PrecisionMap,
    pub settings: SolverSettings,
}

impl<'a> CutoffProblem<'a> {
    pub fn new(density: &'a SignalDensity, cost: &'a CostFunction) -> Self {
        CutoffProblem { density, cost, map: PrecisionMap::Identity, settings: SolverSettings::default() }
    }

    pub fn with_map(mut self, map: PrecisionMap) -> Self {
        self.map = map;
        self
    }

    pub fn with_settings(mut self, settings: SolverSettings) -> Self {
        self.settings = settings;
        self
    }

    /// `lambda(d)` with the largest-argmax tie-break.
    pub fn response(&self, d: f64) -> Result<AgentResponse> {
        best_response_cutoff(self.density, d, self.cost, self.map, &self.settings.response)
    }

    /// `pi(d)`: best payoff over strictly positive precision.
    pub fn participation_payoff(&self, d: f64) -> Result<f64> {
        Ok(self.response(d)?.interior_payoff)
    }

    /// `Lambda(lambda(d)) d`.
    pub fn product(&self, d: f64) -> Result<f64> {
        Ok(self.map.apply(self.response(d)?.lambda_star) * d)
    }

    /// `d_bar = min { d >= 0 : pi(d) >= 0 }`.
    pub fn min_participation_cutoff(&self) -> Result<f64> {
        self.settings.validate()?;
        let participates = |d: f64| self.participation_payoff(d).map(|p| p >= -IR_TOL);
        if participates(0.0)? {
            return Ok(0.0);
        }
        let d_max = self.settings.d_max(self.density);
        if !participates(d_max)? {
            return Err(Error::NoFeasibleContract(format!(
                "the agent's best payoff is negative for every cutoff up to {d_max}"
            )));
        }
        let (mut lo, mut hi) = (0.0, d_max);
        while hi - lo > self.settings.tol {
            let mid = 0.5 * (lo + hi);
            if participates(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// The optimal cutoff: `d* = min { d >= d_bar : Lambda(lambda(d)) d >= eta^{-1}(n) }`.
    pub fn optimal_cutoff(&self) -> Result<SolveResult> {
        self.map.validate()?;
        let n = self.density.dimension() as f64;
        let threshold = eta_inverse(self.density, n);
        let iea = check_iea(self.density, n).iea_holds;
        let d_bar = self.min_participation_cutoff()?;
        let mut warnings = Vec::new();
        if threshold.overflow {
            warnings.push(format!("elasticity never exceeds {n} on the scanned domain"));
        }
        if !iea {
            warnings.push(format!("density violates increasing elasticity above {n}; returning the best cutoff only"));
            return self.best_cutoff(d_bar, threshold.value, false, warnings);
        }
        let at_bar = self.response(d_bar)?;
        let p_bar = self.map.apply(at_bar.lambda_star) * d_bar;
        if at_bar.participated && p_bar >= threshold.value - BOUNDARY_TOL {
            return Ok(self.result(
                d_bar,
                d_bar,
                at_bar,
                Region::SubstituteAtDbar,
                true,
                threshold.value,
                true,
                warnings,
            ));
        }
        let d_max = self.settings.d_max(self.density);
        let reached = |d: f64| -> Result<bool> { Ok(self.product(d)? >= threshold.value - BOUNDARY_TOL) };
        let grid = quadratic_grid(d_bar, d_max, self.settings.scan_points);
        let mut bracket = None;
        for w in grid.windows(2) {
            if reached(w[1])? {
                bracket = Some((w[0], w[1]));
                break;
            }
        }
        let Some((mut lo, mut hi)) = bracket else {
            warnings.push(format!(
                "lambda(d) d stays below {} for all d <= {d_max}; cost too steep for the boundary",
                threshold.value
            ));
            return self.best_cutoff(d_bar, threshold.value, true, warnings);
        };
        for _ in 0..self.settings.refinements {
            let sub = crate::numeric::lin_space(lo, hi, self.settings.scan_points);
            for w in sub.windows(2) {
                if reached(w[1])? {
                    lo = w[0];
                    hi = w[1];
                    break;
                }
            }
        }
        while hi - lo > 1e-3 * self.settings.tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if reached(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let r = self.response(hi)?;
        Ok(self.result(d_bar, hi, r, Region::ComplementToBoundary, false, threshold.value, true, warnings))
    }

    /// Cutoff maximizing `lambda(d)` over `[d_bar, d_max]`, smallest on ties.
    fn best_cutoff(&self, d_bar: f64, threshold: f64, iea: bool, warnings: Vec<String>) -> Result<SolveResult> {
        let d_max = self.settings.d_max(self.density);
        let mut grid = quadratic_grid(d_bar, d_max, self.settings.scan_points);
        let mut best = (d_bar, self.response(d_bar)?);
        for _ in 0..=self.settings.refinements {
            for &d in &grid {
                let r = self.response(d)?;
                let gain = r.lambda_star - best.1.lambda_star;
                if gain > 1e-12 || (gain.abs() <= 1e-12 && d < best.0) {
                    best = (d, r);
                }
            }
            // refine around the incumbent, which may come from an earlier pass
            let idx = (0..grid.len())
                .min_by(|&i, &j| (grid[i] - best.0).abs().total_cmp(&(grid[j] - best.0).abs()))
                .unwrap_or(0);
            let lo = grid[idx.saturating_sub(1)].max(d_bar);
            let hi = grid[(idx + 1).min(grid.len() - 1)];
            if hi <= lo {
                break;
            }
            grid = crate::numeric::lin_space(lo, hi, self.settings.scan_points / 4);
        }
        let mut out = self.result(d_bar, best.0, best.1, Region::BestCutoffOnly, false, threshold, false, warnings);
        out.iea_holds = iea;
        out.ir_binding = best.1.participated && best.1.payoff.abs() <= 1e-6;
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn result(
        &self,
        d_bar: f64,
        d_star: f64,
        r: AgentResponse,
        region: Region,
        ir_binding: bool,
        threshold: f64,
        reached: bool,
        mut warnings: Vec<String>,
    ) -> SolveResult {
        let lambda_eff = self.map.apply(r.lambda_star);
        if r.at_upper_bound {
            warnings.push("agent's precision sits at the top of the search window".into());
        }
        SolveResult {
            d_bar,
            d_star,
            lambda_star: r.lambda_star,
            region,
            ir_binding,
            posterior_precision: match self.map {
                PrecisionMap::Identity | PrecisionMap::NoiseScale { .. } => None,
                _ => Some(lambda_eff),
            },
            boundary_product: lambda_eff * d_star,
            threshold,
            payoff: r.payoff,
            iea_holds: true,
            boundary_reached: reached,
            at_upper_bound: r.at_upper_bound,
            warnings,
        }
    }
}

/// Points on `[lo, hi]` denser near `lo`.
fn quadratic_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let u = i as f64 / (n - 1) as f64;
            if i == n - 1 {
                hi
            } else {
                lo + (hi - lo) * u * u
            }
        })
        .collect()
}

pub fn min_participation_cutoff(density: &SignalDensity, c: &CostFunction, settings: &SolverSettings) -> Result<f64> {
    CutoffProblem::new(density, c).with_settings(*settings).min_participation_cutoff()
}

/// Optimal cutoff in dimension `dim` (which must match the density).
pub fn optimal_cutoff(
    density: &SignalDensity,
    c: &CostFunction,
    dim: usize,
    settings: &SolverSettings,
) -> Result<SolveResult> {
    if dim != density.dimension() {
        return Err(Error::DimensionMismatch { density: density.dimension(), requested: dim });
    }
    CutoffProblem::new(density, c).with_settings(*settings).optimal_cutoff()
}

fn require_gaussian(density: &SignalDensity) -> Result<()> {
    if !matches!(density.family(), Family::Gaussian) || density.dimension() != 1 {
        return Err(Error::Precondition("this variant is defined for a one-dimensional Gaussian signal".into()));
    }
    Ok(())
}

/// Optimal cutoff when the state has a Gaussian prior of precision `lambda0`.
pub fn solve_gaussian_prior(
    density: &SignalDensity,
    lambda0: f64,
    c: &CostFunction,
    settings: &SolverSettings,
) -> Result<SolveResult> {
    require_gaussian(density)?;
    CutoffProblem::new(density, c)
        .with_map(PrecisionMap::GaussianPrior { lambda0 })
        .with_settings(*settings)
        .optimal_cutoff()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prior {
    Uniform,
    Gaussian,
}

/// Optimal cutoff on `|s_p - a|` when the principal sees only its own signal `s_p` of precision `lambda_p`.
pub fn solve_unobserved_state(
    density: &SignalDensity,
    prior: Prior,
    lambda0: Option<f64>,
    lambda_p: f64,
    c: &CostFunction,
    settings: &SolverSettings,
) -> Result<SolveResult> {
    require_gaussian(density)?;
    let lambda0 = match (prior, lambda0) {
        (Prior::Uniform, None) => 0.0,
        (Prior::Gaussian, Some(l)) if l > 0.0 => l,
        (Prior::Uniform, Some(_)) => {
            return Err(Error::Domain("lambda0 is only meaningful with a Gaussian prior".into()))
        }
        (Prior::Gaussian, _) => return Err(Error::Domain("a Gaussian prior needs lambda0 > 0".into())),
    };
    CutoffProblem::new(density, c)
        .with_map(PrecisionMap::Unobserved { lambda_p, lambda0 })
        .with_settings(*settings)
        .optimal_cutoff()
}

/// Result of comparing two costs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparativeStatics {
    /// `c1 <= c2` and `c2 - c1` nondecreasing on the precision grid.
    pub hypothesis_holds: bool,
    pub first: SolveResult,
    pub second: SolveResult,
    /// `d*(c1) <= d*(c2)`; `None` when the hypothesis fails (no prediction).
    pub d_star_ordered: Option<bool>,
    /// `lambda*(c2) <= lambda*(c1)`; `None` when the hypothesis fails.
    pub lambda_ordered: Option<bool>,
}

/// Tolerance for the orderings predicted by comparative statics.
pub const ORDER_TOL: f64 = 1e-6;

pub fn comparative_statics(
    density: &SignalDensity,
    c1: &CostFunction,
    c2: &CostFunction,
    settings: &SolverSettings,
) -> Result<ComparativeStatics> {
    let grid = crate::numeric::log_space(
        settings.response.lambda_min,
        settings.response.lambda_max,
        settings.response.grid_points,
    );
    let diffs: Vec<f64> = grid.iter().map(|&l| c2.value(l) - c1.value(l)).collect();
    let hypothesis_holds = grid.iter().zip(&diffs).all(|(&l, &d)| {
        let scale = 1.0 + c1.value(l).abs();
        d >= -1e-12 * scale || !d.is_finite()
    }) && diffs.windows(2).all(|w| !(w[1] < w[0] - 1e-12 * (1.0 + w[0].abs())));
    let first = optimal_cutoff(density, c1, density.dimension(), settings)?;
    let second = optimal_cutoff(density, c2, density.dimension(), settings)?;
    let (d_ord, l_ord) = if hypothesis_holds {
        (Some(first.d_star <= second.d_star + ORDER_TOL), Some(second.lambda_star <= first.lambda_star + ORDER_TOL))
    } else {
        (None, None)
    };
    Ok(ComparativeStatics { hypothesis_holds, first, second, d_star_ordered: d_ord, lambda_ordered: l_ord })
}

/// Scaling the noise by `k` three ways: the base problem, the contracted
/// precision `lambda / k`, and the equivalent cost `c(k lambda)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseScaling {
    pub k: f64,
    pub base: SolveResult,
    pub scaled_noise: SolveResult,
    pub rescaled_cost: SolveResult,
    /// The two formulations give the same `d*` and `lambda` up to the factor `k`.
    pub equivalent: bool,
    pub d_star_increases: bool,
}

pub fn noise_scaling(
    density: &SignalDensity,
    c: &CostFunction,
    k: f64,
    settings: &SolverSettings,
) -> Result<NoiseScaling> {
    let base = CutoffProblem::new(density, c).with_settings(*settings).optimal_cutoff()?;
    let scaled_noise = CutoffProblem::new(density, c)
        .with_map(PrecisionMap::NoiseScale { k })
        .with_settings(*settings)
        .optimal_cutoff()?;
    let rescaled = c.rescaled(k)?;
    let rescaled_cost = CutoffProblem::new(density, &rescaled).with_settings(*settings).optimal_cutoff()?;
    let equivalent = (scaled_noise.d_star - rescaled_cost.d_star).abs() <= 1e-6 * (1.0 + base.d_star)
        && (scaled_noise.lambda_star - k * rescaled_cost.lambda_star).abs() <= 1e-5 * (1.0 + scaled_noise.lambda_star);
    let d_star_increases = k < 1.0 || scaled_noise.d_star >= base.d_star - ORDER_TOL;
    Ok(NoiseScaling { k, base, scaled_noise, rescaled_cost, equivalent, d_star_increases })
}
