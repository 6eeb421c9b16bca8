//! Scalar numerical routines shared by the density, agent and solver modules:
//! adaptive Simpson quadrature, fixed Gauss-Legendre panels, bisection and
//! golden-section search, and grid builders.

const MAX_SIMPSON_DEPTH: u32 = 48;

/// Integrates `f` over `[a, b]` with recursive adaptive Simpson.
///
/// `tol` is an absolute tolerance on the whole interval; it is halved at each
/// split so the panel errors sum to at most `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if a > b {
        return -adaptive_simpson(f, b, a, tol);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, MAX_SIMPSON_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || (b - a) < 1e-15 * (1.0 + a.abs()) {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson over consecutive panels split at `breaks` (sorted, inside `[a, b]`).
pub fn integrate_panels<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    let mut pts = Vec::with_capacity(breaks.len() + 2);
    pts.push(a);
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    let per = tol / (pts.len() - 1) as f64;
    pts.windows(2).map(|w| adaptive_simpson(f, w[0], w[1], per)).sum()
}

const GL5_NODES: [f64; 5] =
    [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
const GL5_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

/// Five-point Gauss-Legendre rule on `[a, b]`. Exact for degree-9 polynomials;
/// used for short sub-panels where the integrand is smooth.
pub fn gauss_legendre5<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL5_NODES.iter().zip(GL5_WEIGHTS.iter()).map(|(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// Finds the boundary of a predicate that is false at `lo` and true at `hi`.
/// Returns the smallest point (to `tol`) where the predicate holds.
pub fn bisect_predicate<P: FnMut(f64) -> bool>(mut pred: P, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Root of a function with `f(lo) < 0 <= f(hi)`, by bisection.
pub fn bisect_root<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    bisect_predicate(|x| f(x) >= 0.0, lo, hi, tol)
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a maximum of `f` on `[a, b]`.
/// Returns `(argmax, max)`; the endpoints are included among the candidates.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    for x in [a, b] {
        let fx = f(x);
        if fx > best.1 || (fx == best.1 && x > best.0) {
            best = (x, fx);
        }
    }
    best
}

/// `n` points spaced evenly in `ln x` from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn lin_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n).map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_smooth_functions() {
        let v = adaptive_simpson(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert!((v - 2.0).abs() < 1e-11);
        let v = adaptive_simpson(&|x: f64| (-x * x).exp(), -8.0, 8.0, 1e-13);
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn simpson_reversed_bounds_flip_sign() {
        let f = |x: f64| x * x;
        let a = adaptive_simpson(&f, 0.0, 2.0, 1e-12);
        let b = adaptive_simpson(&f, 2.0, 0.0, 1e-12);
        assert!((a + b).abs() < 1e-12);
    }

    #[test]
    fn panels_handle_a_jump() {
        let f = |x: f64| if x < 0.3 { 1.0 } else { 0.0 };
        let v = integrate_panels(&f, 0.0, 1.0, &[0.3], 1e-12);
        assert!((v - 0.3).abs() < 1e-12);
    }

    #[test]
    fn gauss_legendre_is_exact_on_degree_nine() {
        let f = |x: f64| x.powi(9) - 3.0 * x.powi(4) + 1.0;
        let exact = |x: f64| x.powi(10) / 10.0 - 3.0 * x.powi(5) / 5.0 + x;
        let v = gauss_legendre5(&f, -0.5, 1.5);
        assert!((v - (exact(1.5) - exact(-0.5))).abs() < 1e-12);
    }

    #[test]
    fn bisection_and_golden() {
        let r = bisect_root(|x| x * x - 2.0, 0.0, 2.0, 1e-12);
        assert!((r - 2f64.sqrt()).abs() < 1e-11);
        let (x, v) = golden_max(|x| -(x - 0.7).powi(2) + 1.0, 0.0, 2.0, 1e-10);
        assert!((x - 0.7).abs() < 1e-6);
        assert!((v - 1.0).abs() < 1e-12);
        // monotone: endpoint wins
        let (x, _) = golden_max(|x| x, 0.0, 1.0, 1e-10);
        assert_eq!(x, 1.0);
    }

    #[test]
    fn grids_hit_endpoints() {
        let g = log_space(1e-3, 1e3, 1024);
        assert_eq!(g.len(), 1024);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[1023], 1e3);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        let l = lin_space(-1.0, 1.0, 5);
        assert_eq!(l, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }
}
