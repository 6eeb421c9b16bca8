//! Output-based contracting: effort `e` shifts the distribution of output `y`,
//! and a quota contract pays the whole budget when `y >= d`.

use serde::{Deserialize, Serialize};

use crate::agent::{CostFunction, IR_TOL, TIE_TOL};
use crate::error::{Error, Result};
use crate::numeric::{golden_max, lin_space};

/// Distribution of output given effort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum OutputModel {
    /// Exponential output with mean `e`; `e = 0` produces zero output.
    ExponentialMeanE,
    /// `y = e * exp(sigma Z)` with standard normal `Z`.
    LognormalScaleE { sigma: f64 },
    /// Finitely many efforts, each with a piecewise-linear density on the common grid `ys`.
    Tabulated { efforts: Vec<f64>, ys: Vec<f64>, pdfs: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassicSettings {
    /// Upper end of the effort domain for continuous families.
    pub e_max: f64,
    pub effort_points: usize,
    /// Quotas are scanned over `[0, y_max]`.
    pub y_max: f64,
    pub scan_points: usize,
    pub refinements: usize,
}

impl Default for ClassicSettings {
    fn default() -> Self {
        ClassicSettings { e_max: 5.0, effort_points: 2048, y_max: 10.0, scan_points: 512, refinements: 2 }
    }
}

impl OutputModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            OutputModel::ExponentialMeanE => Ok(()),
            OutputModel::LognormalScaleE { sigma } if *sigma > 0.0 && sigma.is_finite() => Ok(()),
            OutputModel::LognormalScaleE { sigma } => {
                Err(Error::Domain(format!("lognormal sigma must be positive, got {sigma}")))
            }
            OutputModel::Tabulated { efforts, ys, pdfs } => {
                if efforts.is_empty() || pdfs.len() != efforts.len() {
                    return Err(Error::Domain("tabulated output model needs one density per effort".into()));
                }
                if ys.len() < 2 || ys[0] < 0.0 || ys.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::Domain("output grid must be nonnegative and strictly increasing".into()));
                }
                if efforts.windows(2).any(|w| !(w[1] > w[0])) || efforts[0] < 0.0 {
                    return Err(Error::Domain("efforts must be nonnegative and strictly increasing".into()));
                }
                for p in pdfs {
                    if p.len() != ys.len() || p.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                        return Err(Error::Domain("each density must give a finite value >= 0 per grid point".into()));
                    }
                    if trapezoid_total(ys, p) <= 0.0 {
                        return Err(Error::Domain("a tabulated output density has zero mass".into()));
                    }
                }
                Ok(())
            }
        }
    }

    fn is_discrete(&self) -> bool {
        matches!(self, OutputModel::Tabulated { .. })
    }

    /// Effort candidates: a uniform grid on `[0, e_max]`, or the tabulated efforts.
    fn efforts(&self, s: &ClassicSettings) -> Vec<f64> {
        match self {
            OutputModel::Tabulated { efforts, .. } => efforts.clone(),
            _ => lin_space(0.0, s.e_max, s.effort_points),
        }
    }

    /// `P(Y >= d | e)`.
    pub fn survival(&self, d: f64, e: f64) -> f64 {
        if d <= 0.0 {
            return 1.0;
        }
        match self {
            OutputModel::ExponentialMeanE => {
                if e <= 0.0 {
                    0.0
                } else {
                    (-d / e).exp()
                }
            }
            OutputModel::LognormalScaleE { sigma } => {
                if e <= 0.0 {
                    0.0
                } else {
                    0.5 * libm::erfc((d.ln() - e.ln()) / (sigma * std::f64::consts::SQRT_2))
                }
            }
            OutputModel::Tabulated { efforts, ys, pdfs } => {
                let j = efforts.iter().position(|&x| x == e).unwrap_or_else(|| nearest(efforts, e));
                let p = &pdfs[j];
                let total = trapezoid_total(ys, p);
                1.0 - mass_below(ys, p, d) / total
            }
        }
    }

    /// `ln g(y; e)`; `-inf` where the density vanishes.
    pub fn log_pdf(&self, y: f64, e: f64) -> f64 {
        if y < 0.0 || e <= 0.0 && !self.is_discrete() {
            return f64::NEG_INFINITY;
        }
        match self {
            OutputModel::ExponentialMeanE => -e.ln() - y / e,
            OutputModel::LognormalScaleE { sigma } => {
                if y <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let z = (y.ln() - e.ln()) / sigma;
                -0.5 * z * z - (y * sigma * (2.0 * std::f64::consts::PI).sqrt()).ln()
            }
            OutputModel::Tabulated { efforts, ys, pdfs } => {
                let j = efforts.iter().position(|&x| x == e).unwrap_or_else(|| nearest(efforts, e));
                let total = trapezoid_total(ys, &pdfs[j]);
                (linear(ys, &pdfs[j], y) / total).ln()
            }
        }
    }
}

fn nearest(v: &[f64], x: f64) -> usize {
    (0..v.len()).min_by(|&a, &b| (v[a] - x).abs().partial_cmp(&(v[b] - x).abs()).unwrap()).unwrap()
}

fn trapezoid_total(ys: &[f64], p: &[f64]) -> f64 {
    ys.windows(2).zip(p.windows(2)).map(|(y, v)| 0.5 * (y[1] - y[0]) * (v[0] + v[1])).sum()
}

fn linear(ys: &[f64], p: &[f64], y: f64) -> f64 {
    if y < ys[0] || y > ys[ys.len() - 1] {
        return 0.0;
    }
    let i = ys.partition_point(|&v| v <= y).clamp(1, ys.len() - 1);
    let t = (y - ys[i - 1]) / (ys[i] - ys[i - 1]);
    p[i - 1] + t * (p[i] - p[i - 1])
}

/// Exact integral of the piecewise-linear density up to `d`.
fn mass_below(ys: &[f64], p: &[f64], d: f64) -> f64 {
    let mut acc = 0.0;
    for i in 1..ys.len() {
        if d <= ys[i - 1] {
            break;
        }
        let hi = d.min(ys[i]);
        let v_hi = linear(ys, p, hi);
        acc += 0.5 * (hi - ys[i - 1]) * (p[i - 1] + v_hi);
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffortResponse {
    pub effort: f64,
    pub payoff: f64,
    pub expected_transfer: f64,
    pub participated: bool,
}

/// Effort maximizing `value(e) - c(e)`, largest effort on ties.
pub fn effort_response<V: Fn(f64) -> f64>(
    m: &OutputModel,
    c: &CostFunction,
    value: V,
    s: &ClassicSettings,
) -> EffortResponse {
    let payoff = |e: f64| {
        let k = c.value(e);
        if k.is_finite() {
            value(e) - k
        } else {
            f64::NEG_INFINITY
        }
    };
    let grid = m.efforts(s);
    let p: Vec<f64> = grid.iter().map(|&e| payoff(e)).collect();
    let n = grid.len();
    let mut candidates: Vec<(f64, f64)> =
        if m.is_discrete() { grid.iter().copied().zip(p.iter().copied()).collect() } else { Vec::new() };
    if !m.is_discrete() {
        let mut peaks: Vec<usize> =
            (0..n).filter(|&i| (i == 0 || p[i] >= p[i - 1]) && (i + 1 == n || p[i] >= p[i + 1])).collect();
        peaks.sort_by(|&a, &b| p[b].partial_cmp(&p[a]).unwrap().then(b.cmp(&a)));
        peaks.truncate(8);
        for i in peaks {
            let lo = grid[i.saturating_sub(1)];
            let hi = grid[(i + 1).min(n - 1)];
            // e = 0 is a separate option (zero output); refine on positive efforts only
            let lo = if lo == 0.0 { 1e-12 * hi } else { lo };
            let refined = golden_max(payoff, lo, hi, 1e-11 * hi.max(1.0));
            candidates.push(if refined.1 > p[i] { refined } else { (grid[i], p[i]) });
        }
    }
    let best = candidates.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let (e, v) = candidates
        .iter()
        .copied()
        .filter(|c| c.1 >= best - TIE_TOL)
        .fold((f64::NEG_INFINITY, 0.0), |acc, c| if c.0 > acc.0 { c } else { acc });
    if v < -IR_TOL {
        return EffortResponse { effort: 0.0, payoff: 0.0, expected_transfer: 0.0, participated: false };
    }
    EffortResponse { effort: e, payoff: v, expected_transfer: value(e), participated: true }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicResult {
    pub d_star: f64,
    pub e_star: f64,
    pub payoff: f64,
    pub mlrp_holds: bool,
    pub warnings: Vec<String>,
}

/// Quota maximizing the induced effort; smallest quota on ties.
pub fn solve_classic_pa(m: &OutputModel, c: &CostFunction, s: &ClassicSettings) -> Result<ClassicResult> {
    m.validate()?;
    let mlrp = check_output_mlrp(m, s);
    let mut warnings = Vec::new();
    if !mlrp.holds {
        warnings.push("output model violates the monotone likelihood ratio property".into());
    }
    let respond = |d: f64| effort_response(m, c, |e| m.survival(d, e), s);
    let mut grid = lin_space(0.0, s.y_max, s.scan_points);
    let mut best = (0.0, respond(0.0));
    for _ in 0..=s.refinements {
        let mut idx = 0;
        for (i, &d) in grid.iter().enumerate() {
            let r = respond(d);
            let better = r.effort > best.1.effort + 1e-12 || ((r.effort - best.1.effort).abs() <= 1e-12 && d < best.0);
            if r.participated && better {
                best = (d, r);
                idx = i;
            }
        }
        let lo = grid[idx.saturating_sub(1)];
        let hi = grid[(idx + 1).min(grid.len() - 1)];
        if hi <= lo {
            break;
        }
        grid = lin_space(lo, hi, s.scan_points / 4);
    }
    if !(best.1.effort > 0.0) {
        return Err(Error::NoFeasibleContract("no quota induces positive effort".into()));
    }
    Ok(ClassicResult { d_star: best.0, e_star: best.1.effort, payoff: best.1.payoff, mlrp_holds: mlrp.holds, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MlrpCheck {
    pub holds: bool,
    /// `(y1, y2, e1, e2)` with `y1 < y2`, `e1 < e2` and `g(y2;e)/g(y1;e)` falling from `e1` to `e2`.
    pub witness: Option<[f64; 4]>,
}

/// Grid check that `g(y2; e) / g(y1; e)` is nondecreasing in `e` for `y1 <= y2`.
pub fn check_output_mlrp(m: &OutputModel, s: &ClassicSettings) -> MlrpCheck {
    const TOL: f64 = 1e-7;
    let (ys, es): (Vec<f64>, Vec<f64>) = match m {
        OutputModel::Tabulated { efforts, ys, .. } => (ys.clone(), efforts.clone()),
        _ => (
            (1..=32).map(|i| s.y_max * i as f64 / 32.0).collect(),
            (1..=32).map(|i| s.e_max * i as f64 / 32.0).collect(),
        ),
    };
    for (a, &y1) in ys.iter().enumerate() {
        for &y2 in &ys[a + 1..] {
            let ratio: Vec<f64> = es.iter().map(|&e| m.log_pdf(y2, e) - m.log_pdf(y1, e)).collect();
            for k in 1..es.len() {
                let (r0, r1) = (ratio[k - 1], ratio[k]);
                if !r0.is_finite() || !r1.is_finite() {
                    // zero density at y1: the ratio is infinite or undefined there
                    if m.log_pdf(y1, es[k - 1]).is_finite() && m.log_pdf(y1, es[k]).is_finite() && r1 < r0 {
                        return MlrpCheck { holds: false, witness: Some([y1, y2, es[k - 1], es[k]]) };
                    }
                    continue;
                }
                if r1 < r0 - TOL {
                    return MlrpCheck { holds: false, witness: Some([y1, y2, es[k - 1], es[k]]) };
                }
            }
        }
    }
    MlrpCheck { holds: true, witness: None }
}

/// Best transfer over step functions of output with `cells` equal cells on
/// `[0, y_max]` (the last cell open-ended) and values in `{0, 1/(L-1), ..., 1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputBruteForce {
    pub values: Vec<f64>,
    pub effort: f64,
    pub payoff: f64,
    pub evaluated: usize,
}

pub fn brute_force_output_transfer(
    m: &OutputModel,
    c: &CostFunction,
    cells: usize,
    levels: usize,
    s: &ClassicSettings,
) -> Result<OutputBruteForce> {
    m.validate()?;
    if cells == 0 || levels < 2 {
        return Err(Error::Domain("need at least one cell and two value levels".into()));
    }
    let count = (levels as u64)
        .checked_pow(cells as u32)
        .filter(|&n| n <= 1 << 20)
        .ok_or_else(|| Error::Domain(format!("{levels}^{cells} candidates is too many for exhaustive search")))?;
    let h = s.y_max / cells as f64;
    let mut best: Option<OutputBruteForce> = None;
    for code in 0..count {
        let mut rest = code;
        let values: Vec<f64> = (0..cells)
            .map(|_| {
                let v = (rest % levels as u64) as f64 / (levels - 1) as f64;
                rest /= levels as u64;
                v
            })
            .collect();
        let value = |e: f64| {
            (0..cells)
                .map(|i| {
                    let lo = m.survival(i as f64 * h, e);
                    let hi = if i + 1 == cells { 0.0 } else { m.survival((i + 1) as f64 * h, e) };
                    values[i] * (lo - hi)
                })
                .sum::<f64>()
        };
        let r = effort_response(m, c, value, s);
        let better = match &best {
            None => true,
            Some(b) => {
                r.effort > b.effort + 1e-12
                    || ((r.effort - b.effort).abs() <= 1e-12
                        && (r.payoff > b.payoff + 1e-12 || ((r.payoff - b.payoff).abs() <= 1e-12 && values < b.values)))
            }
        };
        if better {
            best = Some(OutputBruteForce { values, effort: r.effort, payoff: r.payoff, evaluated: 0 });
        }
    }
    let mut out = best.expect("at least one candidate");
    out.evaluated = count as usize;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> CostFunction {
        CostFunction::power(0.5, 2.0).unwrap()
    }

    #[test]
    fn exponential_survival_and_mlrp() {
        let m = OutputModel::ExponentialMeanE;
        assert!((m.survival(1.0, 2.0) - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(m.survival(1.0, 0.0), 0.0);
        assert_eq!(m.survival(0.0, 0.0), 1.0);
        assert!(check_output_mlrp(&m, &ClassicSettings::default()).holds);
        let l = OutputModel::LognormalScaleE { sigma: 0.5 };
        assert!(check_output_mlrp(&l, &ClassicSettings::default()).holds);
        assert!((l.survival(1.0, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_quota_gives_no_incentive() {
        let m = OutputModel::ExponentialMeanE;
        let r = effort_response(&m, &quad(), |e| m.survival(0.0, e), &ClassicSettings::default());
        assert_eq!(r.effort, 0.0);
        assert_eq!(r.payoff, 1.0);
    }

    #[test]
    fn quota_matches_a_grid_oracle() {
        let m = OutputModel::ExponentialMeanE;
        let s = ClassicSettings::default();
        let r = solve_classic_pa(&m, &quad(), &s).unwrap();
        // oracle: 2-D grid over (d, e) of e^{-d/e} - e^2/2 with the largest-argmax rule
        let mut best = (0.0, 0.0);
        for i in 0..=400 {
            let d = 3.0 * i as f64 / 400.0;
            let mut eb = (0.0, if d > 0.0 { 0.0 } else { 1.0 });
            for j in 1..=4000 {
                let e = 3.0 * j as f64 / 4000.0;
                let u = (-d / e).exp() - 0.5 * e * e;
                if u >= eb.1 {
                    eb = (e, u);
                }
            }
            if eb.0 > best.1 {
                best = (d, eb.0);
            }
        }
        assert!((r.e_star - best.1).abs() < 2e-3, "{} vs {}", r.e_star, best.1);
        // e(d) is flat at its peak, so the grid pins d only loosely; the exact peak
        // solves e^3 = d e^{-d/e} with d = e, i.e. d* = e* = e^{-1/2}
        assert!((r.d_star - best.0).abs() < 5e-2);
        assert!((r.d_star - (-0.5f64).exp()).abs() < 1e-4, "{}", r.d_star);
        assert!((r.e_star - (-0.5f64).exp()).abs() < 1e-6, "{}", r.e_star);
        assert!(r.mlrp_holds);
    }

    #[test]
    fn steep_cost_is_infeasible() {
        let m = OutputModel::ExponentialMeanE;
        let c = CostFunction::affine_power(10.0, 0.0, 1.0).unwrap();
        assert!(matches!(solve_classic_pa(&m, &c, &ClassicSettings::default()), Err(Error::NoFeasibleContract(_))));
    }

    #[test]
    fn tabulated_models() {
        let ys = vec![0.0, 1.0, 2.0];
        // low effort piles mass on high output: a likelihood-ratio crossing
        let crossing = OutputModel::Tabulated {
            efforts: vec![1.0, 2.0],
            ys: ys.clone(),
            pdfs: vec![vec![0.1, 0.5, 1.0], vec![1.0, 0.5, 0.1]],
        };
        let c = check_output_mlrp(&crossing, &ClassicSettings::default());
        assert!(!c.holds);
        let w = c.witness.unwrap();
        assert!(w[0] < w[1] && w[2] < w[3]);
        let flat = OutputModel::Tabulated {
            efforts: vec![1.0, 2.0],
            ys: ys.clone(),
            pdfs: vec![vec![1.0, 0.5, 0.1], vec![1.0, 0.5, 0.1]],
        };
        assert!(check_output_mlrp(&flat, &ClassicSettings::default()).holds);
        assert!((flat.survival(2.0, 1.0)).abs() < 1e-15);
        assert!((flat.survival(0.0, 1.0) - 1.0).abs() < 1e-15);
        let bad = OutputModel::Tabulated { efforts: vec![1.0], ys, pdfs: vec![] };
        assert!(bad.validate().is_err());
    }
}
