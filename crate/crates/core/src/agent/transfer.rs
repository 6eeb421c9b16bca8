use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A contract `t(theta - a)` with values in `[0, 1]` that vanishes far from zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transfer {
    /// Pays 1 when `|theta - a| <= d`.
    Cutoff { d: f64 },
    /// Pays `values[i]` on `[edges[i], edges[i + 1])` and 0 outside `[edges[0], edges[last]]`.
    Step { edges: Vec<f64>, values: Vec<f64> },
}

/// A maximal interval on which the transfer is a nonzero constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
}

const SYMMETRY_TOL: f64 = 1e-12;

impl Transfer {
    pub fn cutoff(d: f64) -> Result<Self> {
        if !(d >= 0.0 && d.is_finite()) {
            return Err(Error::InvalidTransfer(format!("cutoff must be finite and >= 0, got {d}")));
        }
        Ok(Transfer::Cutoff { d })
    }

    pub fn step(edges: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let t = Transfer::Step { edges, values };
        t.validate()?;
        Ok(t)
    }

    /// Symmetric step function on `[-x_max, x_max]`; `cells[i]` is paid on
    /// `i h <= |x| < (i + 1) h` with `h = x_max / cells.len()`.
    pub fn symmetric_cells(x_max: f64, cells: &[f64]) -> Result<Self> {
        if !(x_max > 0.0 && x_max.is_finite()) || cells.is_empty() {
            return Err(Error::InvalidTransfer("symmetric step needs x_max > 0 and at least one cell".into()));
        }
        let m = cells.len();
        let h = x_max / m as f64;
        let edges = (0..=2 * m).map(|i| (i as f64 - m as f64) * h).collect();
        let values = cells.iter().rev().chain(cells.iter()).copied().collect();
        Transfer::step(edges, values)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Transfer::Cutoff { d } => {
                if !(*d >= 0.0 && d.is_finite()) {
                    return Err(Error::InvalidTransfer(format!("cutoff must be finite and >= 0, got {d}")));
                }
            }
            Transfer::Step { edges, values } => {
                if edges.len() != values.len() + 1 || values.is_empty() {
                    return Err(Error::InvalidTransfer(format!(
                        "step transfer needs one more edge than values (got {} edges, {} values)",
                        edges.len(),
                        values.len()
                    )));
                }
                if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidTransfer("edges must be finite and strictly increasing".into()));
                }
                if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && **v <= 1.0)) {
                    return Err(Error::InvalidTransfer(format!(
                        "transfer values must lie in [0, 1] (limited liability and budget), got {v}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Nonzero constant pieces, left to right, with equal neighbours merged.
    pub fn pieces(&self) -> Vec<Piece> {
        match self {
            Transfer::Cutoff { d } if *d > 0.0 => vec![Piece { lo: -d, hi: *d, value: 1.0 }],
            Transfer::Cutoff { .. } => Vec::new(),
            Transfer::Step { edges, values } => {
                let mut out: Vec<Piece> = Vec::new();
                for (i, &v) in values.iter().enumerate() {
                    if v == 0.0 {
                        continue;
                    }
                    match out.last_mut() {
                        Some(p) if p.value == v && p.hi == edges[i] => p.hi = edges[i + 1],
                        _ => out.push(Piece { lo: edges[i], hi: edges[i + 1], value: v }),
                    }
                }
                out
            }
        }
    }

    /// Jump decomposition: `int t f = sum_k w_k F(e_k)` for any antiderivative `F` of `f`.
    pub fn jumps(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for p in self.pieces() {
            match out.last_mut() {
                Some(last) if last.0 == p.lo => last.1 -= p.value,
                _ => out.push((p.lo, -p.value)),
            }
            out.push((p.hi, p.value));
        }
        out.retain(|j| j.1 != 0.0);
        out
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Transfer::Cutoff { d } => {
                if x.abs() <= *d && *d > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Transfer::Step { edges, values } => {
                if x < edges[0] || x >= edges[edges.len() - 1] {
                    return 0.0;
                }
                let i = edges.partition_point(|&e| e <= x) - 1;
                values[i]
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.pieces().is_empty()
    }

    /// Largest `|x|` with `t(x) != 0`.
    pub fn support_radius(&self) -> f64 {
        self.pieces().iter().map(|p| p.lo.abs().max(p.hi.abs())).fold(0.0, f64::max)
    }

    /// Width of the narrowest nonzero piece or gap between pieces.
    pub fn min_width(&self) -> f64 {
        let pieces = self.pieces();
        let mut w = f64::INFINITY;
        for (i, p) in pieces.iter().enumerate() {
            w = w.min(p.hi - p.lo);
            if i > 0 && p.lo > pieces[i - 1].hi {
                w = w.min(p.lo - pieces[i - 1].hi);
            }
        }
        w
    }

    /// Step function with the given breakpoints, valued by `f` at each cell midpoint.
    pub fn from_breaks<F: Fn(f64) -> f64>(mut breaks: Vec<f64>, f: F) -> Transfer {
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup_by(|a, b| (*a - *b).abs() <= SYMMETRY_TOL * (1.0 + a.abs()));
        if breaks.len() < 2 {
            return Transfer::Cutoff { d: 0.0 };
        }
        let values = breaks.windows(2).map(|w| f(0.5 * (w[0] + w[1])).clamp(0.0, 1.0)).collect();
        Transfer::Step { edges: breaks, values }
    }

    fn breaks(&self) -> Vec<f64> {
        self.pieces().iter().flat_map(|p| [p.lo, p.hi]).collect()
    }

    /// `x -> t(x - b)`: the transfer moved right by `b`.
    pub fn shifted(&self, b: f64) -> Transfer {
        if b == 0.0 {
            return self.clone();
        }
        let breaks = self.breaks().into_iter().map(|e| e + b).collect();
        Transfer::from_breaks(breaks, |x| self.value(x - b))
    }

    /// `x -> t(-x)`.
    pub fn reflected(&self) -> Transfer {
        let breaks = self.breaks().into_iter().map(|e| -e).collect();
        Transfer::from_breaks(breaks, |x| self.value(-x))
    }

    /// `x -> (t(x) + t(-x)) / 2`.
    pub fn symmetrized(&self) -> Transfer {
        if let Transfer::Cutoff { .. } = self {
            return self.clone();
        }
        let mut breaks = self.breaks();
        breaks.extend(self.breaks().into_iter().map(|e| -e));
        Transfer::from_breaks(breaks, |x| 0.5 * (self.value(x) + self.value(-x)))
    }

    /// Pays 1 on `|x| < r`, `t(x)` elsewhere.
    pub fn augmented(&self, r: f64) -> Transfer {
        if r <= 0.0 {
            return self.clone();
        }
        if let Transfer::Cutoff { d } = self {
            return Transfer::Cutoff { d: d.max(r) };
        }
        let mut breaks = self.breaks();
        breaks.extend([-r, r]);
        Transfer::from_breaks(breaks, |x| if x.abs() < r { 1.0 } else { self.value(x) })
    }

    pub fn is_symmetric(&self) -> bool {
        let pieces = self.pieces();
        let n = pieces.len();
        (0..n).all(|i| {
            let (p, q) = (pieces[i], pieces[n - 1 - i]);
            (p.lo + q.hi).abs() <= SYMMETRY_TOL * (1.0 + p.lo.abs())
                && (p.hi + q.lo).abs() <= SYMMETRY_TOL * (1.0 + p.hi.abs())
                && p.value == q.value
        })
    }

    /// Symmetric and nonincreasing in `|x|` (a single-peaked contract).
    pub fn is_symmetric_nonincreasing(&self) -> bool {
        if !self.is_symmetric() {
            return false;
        }
        let pieces = self.pieces();
        if pieces.is_empty() {
            return true;
        }
        let mid = pieces.len() / 2;
        let centre = if pieces.len() % 2 == 1 { pieces[mid] } else { return false };
        if !(centre.lo < 0.0 && centre.hi > 0.0) {
            return false;
        }
        let right = &pieces[mid..];
        right.windows(2).all(|w| w[1].lo == w[0].hi && w[1].value <= w[0].value)
    }

    /// The pieces on `[0, inf)` as `(r_lo, r_hi, value)`, for radial use in `n > 1` dimensions.
    pub fn radial_pieces(&self) -> Result<Vec<Piece>> {
        if !self.is_symmetric() {
            return Err(Error::InvalidTransfer("radial use requires a symmetric transfer".into()));
        }
        Ok(self
            .pieces()
            .into_iter()
            .filter(|p| p.hi > 0.0)
            .map(|p| Piece { lo: p.lo.max(0.0), hi: p.hi, value: p.value })
            .collect())
    }
}
