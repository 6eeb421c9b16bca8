use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::agent::{best_response, AgentResponse, CostFunction, ResponseSettings, Transfer};
use crate::densities::SignalDensity;
use crate::error::{Error, Result};

/// Candidate counts up to this are enumerated; larger spaces use coordinate ascent.
pub const EXHAUSTIVE_LIMIT: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BruteForceSettings {
    pub cells: usize,
    pub levels: usize,
    /// Half-width of the transfer grid; `None` uses [`default_x_max`].
    pub x_max: Option<f64>,
    pub response: ResponseSettings,
    pub seed: u64,
    pub restarts: usize,
    pub threads: usize,
}

impl Default for BruteForceSettings {
    fn default() -> Self {
        BruteForceSettings {
            cells: 8,
            levels: 2,
            x_max: None,
            response: ResponseSettings::default(),
            seed: 0,
            restarts: 8,
            threads: 1,
        }
    }
}

/// `3` standard units for unbounded families; the support half-width for compact ones.
pub fn default_x_max(density: &SignalDensity) -> f64 {
    if density.is_compact() {
        density.support_halfwidth()
    } else {
        3.0 * density.scale()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForceResult {
    pub transfer: Transfer,
    /// Cell values from the centre outward.
    pub values: Vec<f64>,
    pub response: AgentResponse,
    pub x_max: f64,
    pub evaluated: usize,
    pub exhaustive: bool,
}

#[derive(Clone)]
struct Scored {
    values: Vec<f64>,
    response: AgentResponse,
}

/// Higher precision, then higher agent payoff, then lexicographically smaller values.
fn better(a: &Scored, b: &Scored) -> bool {
    let (x, y) = (&a.response, &b.response);
    if x.lambda_star != y.lambda_star {
        return x.lambda_star > y.lambda_star;
    }
    if x.payoff != y.payoff {
        return x.payoff > y.payoff;
    }
    a.values < b.values
}

/// Searches symmetric step transfers with `cells` cells on `[0, x_max]` and
/// values in `{0, 1/(L-1), ..., 1}` for the one inducing the highest precision.
pub fn brute_force_best_transfer(
    density: &SignalDensity,
    c: &CostFunction,
    s: &BruteForceSettings,
) -> Result<BruteForceResult> {
    if s.cells == 0 || s.levels < 2 {
        return Err(Error::Domain("need at least one cell and two value levels".into()));
    }
    let x_max = s.x_max.unwrap_or_else(|| default_x_max(density));
    let score = |values: &[f64]| -> Result<Scored> {
        let t = Transfer::symmetric_cells(x_max, values)?;
        Ok(Scored { values: values.to_vec(), response: best_response(density, &t, c, &s.response)? })
    };
    let levels = s.levels as u64;
    let count = levels.checked_pow(s.cells as u32);
    let (best, evaluated, exhaustive) = match count {
        Some(n) if n <= EXHAUSTIVE_LIMIT => {
            let decode = |code: u64| -> Vec<f64> {
                let mut rest = code;
                (0..s.cells)
                    .map(|_| {
                        let v = (rest % levels) as f64 / (levels - 1) as f64;
                        rest /= levels;
                        v
                    })
                    .collect()
            };
            let threads = s.threads.max(1).min(n as usize);
            let chunk = n.div_ceil(threads as u64);
            let partial: Vec<Result<Option<Scored>>> = std::thread::scope(|scope| {
                let handles: Vec<_> = (0..threads as u64)
                    .map(|k| {
                        let score = &score;
                        let decode = &decode;
                        scope.spawn(move || -> Result<Option<Scored>> {
                            let mut best: Option<Scored> = None;
                            for code in k * chunk..((k + 1) * chunk).min(n) {
                                let cand = score(&decode(code))?;
                                if best.as_ref().is_none_or(|b| better(&cand, b)) {
                                    best = Some(cand);
                                }
                            }
                            Ok(best)
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("search thread panicked")).collect()
            });
            let mut best: Option<Scored> = None;
            for p in partial {
                if let Some(cand) = p? {
                    if best.as_ref().is_none_or(|b| better(&cand, b)) {
                        best = Some(cand);
                    }
                }
            }
            (best.expect("nonempty search space"), n as usize, true)
        }
        _ => {
            let (b, e) = coordinate_ascent(s, &score)?;
            (b, e, false)
        }
    };
    Ok(BruteForceResult {
        transfer: Transfer::symmetric_cells(x_max, &best.values)?,
        values: best.values,
        response: best.response,
        x_max,
        evaluated,
        exhaustive,
    })
}

fn coordinate_ascent<F>(s: &BruteForceSettings, score: &F) -> Result<(Scored, usize)>
where
    F: Fn(&[f64]) -> Result<Scored>,
{
    let mut rng = ChaCha20Rng::seed_from_u64(s.seed);
    let level = |k: usize| k as f64 / (s.levels - 1) as f64;
    let mut evaluated = 0;
    let mut best: Option<Scored> = None;
    for _ in 0..s.restarts.max(1) {
        let start: Vec<f64> = (0..s.cells).map(|_| level(rng.gen_range(0..s.levels))).collect();
        let mut cur = score(&start)?;
        evaluated += 1;
        loop {
            let mut moved = false;
            for i in 0..s.cells {
                for k in 0..s.levels {
                    let mut v = cur.values.clone();
                    if v[i] == level(k) {
                        continue;
                    }
                    v[i] = level(k);
                    let cand = score(&v)?;
                    evaluated += 1;
                    if better(&cand, &cur) {
                        cur = cand;
                        moved = true;
                    }
                }
            }
            if !moved {
                break;
            }
        }
        if best.as_ref().is_none_or(|b| better(&cur, b)) {
            best = Some(cur);
        }
    }
    Ok((best.expect("at least one restart"), evaluated))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_exhaustive_search_finds_a_cutoff_shape() {
        let g = SignalDensity::gaussian();
        let c = CostFunction::quadratic_eighth();
        let s = BruteForceSettings { cells: 4, ..Default::default() };
        let r = brute_force_best_transfer(&g, &c, &s).unwrap();
        assert!(r.exhaustive);
        assert_eq!(r.evaluated, 16);
        // nonincreasing from the centre
        assert!(r.values.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.transfer.is_symmetric_nonincreasing());
    }

    #[test]
    fn large_spaces_use_seeded_ascent() {
        let g = SignalDensity::gaussian();
        let c = CostFunction::quadratic_eighth();
        let s = BruteForceSettings {
            cells: 6,
            levels: 8,
            restarts: 1,
            response: ResponseSettings { grid_points: 128, ..Default::default() },
            ..Default::default()
        };
        // 8^6 > 2^16, so this takes the ascent path
        let a = brute_force_best_transfer(&g, &c, &s).unwrap();
        let b = brute_force_best_transfer(&g, &c, &s).unwrap();
        assert!(!a.exhaustive);
        assert_eq!(a.values, b.values);
        assert!(a.response.lambda_star > 0.0);
    }

    #[test]
    fn threads_do_not_change_the_answer() {
        let g = SignalDensity::gaussian();
        let c = CostFunction::quadratic_eighth();
        let s = BruteForceSettings { cells: 4, ..Default::default() };
        let a = brute_force_best_transfer(&g, &c, &s).unwrap();
        let b = brute_force_best_transfer(&g, &c, &BruteForceSettings { threads: 3, ..s }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn window_defaults() {
        assert_eq!(default_x_max(&SignalDensity::gaussian()), 3.0);
        assert_eq!(default_x_max(&SignalDensity::uniform(2.0).unwrap()), 2.0);
    }
}
