//! The sampling matrix: initialization, elite-based empirical weights, the
//! smoothed update and max-min calibration.
//!
//! Rows sum to one only at initialization. After reinforcement they sum to
//! roughly two; both samplers normalise at selection time, so nothing
//! downstream relies on the row sums.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::tour::{Edge, Tour};

/// Lower and upper calibration bounds on every off-diagonal entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub pi_min: f64,
    pub pi_max: f64,
}

impl Bounds {
    pub fn new(pi_min: f64, pi_max: f64) -> Result<Self> {
        if !(pi_min > 0.0 && pi_min < pi_max && pi_max < 1.0) {
            return Err(invalid(format!("need 0 < pi_min < pi_max < 1, got [{pi_min}, {pi_max}]")));
        }
        Ok(Bounds { pi_min, pi_max })
    }

    /// `pi_min = 1/(n(n-2))`, `pi_max = 1 - 1/n`.
    pub fn for_n(n: usize) -> Self {
        let nf = n as f64;
        Bounds { pi_min: 1.0 / (nf * (nf - 2.0)), pi_max: 1.0 - 1.0 / nf }
    }

    #[inline]
    pub fn clamp(&self, x: f64) -> f64 {
        if x < self.pi_min {
            self.pi_min
        } else if x > self.pi_max {
            self.pi_max
        } else {
            x
        }
    }
}

/// Value structure of the off-diagonal entries, used by the samplers to pick
/// a fast path.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Levels {
    /// All off-diagonal entries equal.
    Uniform(f64),
    /// Exactly two values; `high` lists the edges carrying the larger one.
    TwoLevel {
        lo: f64,
        hi: f64,
        high: Vec<Edge>,
    },
    General,
}

/// Symmetric `n x n` matrix with zero diagonal.
#[derive(Debug, Clone)]
pub struct PheromoneMatrix {
    n: usize,
    entries: Vec<f64>,
    levels: Levels,
}

impl PartialEq for PheromoneMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.entries == other.entries
    }
}

impl PheromoneMatrix {
    /// Every off-diagonal entry `1/(n-1)`; each row sums to one.
    pub fn uniform(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(invalid(format!("matrix needs n >= 4, got {n}")));
        }
        let v = 1.0 / (n as f64 - 1.0);
        let mut entries = vec![v; n * n];
        for i in 0..n {
            entries[i * n + i] = 0.0;
        }
        Ok(PheromoneMatrix { n, entries, levels: Levels::Uniform(v) })
    }

    /// Matrix from full row-major entries. Must be symmetric with a zero
    /// diagonal and finite positive off-diagonal values.
    pub fn from_entries(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n < 4 || entries.len() != n * n {
            return Err(invalid("matrix must be n x n with n >= 4"));
        }
        for i in 0..n {
            if entries[i * n + i] != 0.0 {
                return Err(invalid("matrix diagonal must be zero"));
            }
            for j in i + 1..n {
                let v = entries[i * n + j];
                if !v.is_finite() || v <= 0.0 || v != entries[j * n + i] {
                    return Err(invalid(format!("bad or asymmetric entry at ({}, {})", i + 1, j + 1)));
                }
            }
        }
        Ok(Self::with_levels(n, entries))
    }

    fn with_levels(n: usize, entries: Vec<f64>) -> Self {
        let levels = detect_levels(n, &entries);
        PheromoneMatrix { n, entries, levels }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    #[inline]
    pub(crate) fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub(crate) fn levels(&self) -> &Levels {
        &self.levels
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }

    /// Row-major CSV with six significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if j > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", format_sig6(self.get(i, j)));
            }
            out.push('\n');
        }
        out
    }
}

fn detect_levels(n: usize, entries: &[f64]) -> Levels {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            let v = entries[i * n + j];
            if v != lo && v != hi {
                if lo == f64::INFINITY {
                    lo = v;
                    hi = v;
                } else if lo == hi {
                    if v < lo {
                        lo = v;
                    } else {
                        hi = v;
                    }
                } else {
                    return Levels::General;
                }
            }
        }
    }
    if lo == hi {
        return Levels::Uniform(lo);
    }
    let high = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| entries[i * n + j] == hi)
        .map(|(i, j)| Edge::new(i, j))
        .collect();
    Levels::TwoLevel { lo, hi, high }
}

/// `%.6g`-style formatting.
fn format_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{v:.5e}")
    }
}

/// Per-edge fraction of elite tours containing the edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EliteWeights {
    n: usize,
    w: Vec<f64>,
    /// Edges with positive weight, sorted.
    support: Vec<Edge>,
}

impl EliteWeights {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n + j]
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.w[i * self.n..(i + 1) * self.n].iter().sum()
    }
}

pub fn elite_weights(elites: &[&Tour]) -> Result<EliteWeights> {
    let first = elites.first().ok_or_else(|| invalid("elite set is empty"))?;
    let n = first.n();
    if elites.iter().any(|t| t.n() != n) {
        return Err(invalid("elite tours have different sizes"));
    }
    let mut w = vec![0.0; n * n];
    for t in elites {
        for e in t.edges() {
            let (a, b) = e.endpoints();
            w[a * n + b] += 1.0;
            w[b * n + a] += 1.0;
        }
    }
    let m = elites.len() as f64;
    let mut support: Vec<Edge> = elites.iter().flat_map(|t| t.edges()).collect();
    support.sort_unstable();
    support.dedup();
    for e in &support {
        let (a, b) = e.endpoints();
        w[a * n + b] /= m;
        w[b * n + a] /= m;
    }
    Ok(EliteWeights { n, w, support })
}

/// `(1 - rho) * pi + rho * w`, then every off-diagonal entry clamped into
/// `[pi_min, pi_max]`.
pub fn update(pi: &PheromoneMatrix, w: &EliteWeights, rho: f64, bounds: Bounds) -> Result<PheromoneMatrix> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(invalid(format!("rho must lie in (0, 1], got {rho}")));
    }
    if pi.n != w.n {
        return Err(invalid(format!("matrix is {0}x{0}, weights are {1}x{1}", pi.n, w.n)));
    }
    let n = pi.n;
    if rho == 1.0 {
        return Ok(replace_with(w, bounds));
    }
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let k = i * n + j;
                entries[k] = bounds.clamp((1.0 - rho) * pi.entries[k] + rho * w.w[k]);
            }
        }
    }
    Ok(PheromoneMatrix::with_levels(n, entries))
}

/// The `rho = 1` update: every entry outside the elite support is
/// `clamp(0) = pi_min`, so the value structure follows from the support
/// alone.
fn replace_with(w: &EliteWeights, bounds: Bounds) -> PheromoneMatrix {
    let n = w.n;
    let mut entries = vec![bounds.pi_min; n * n];
    for i in 0..n {
        entries[i * n + i] = 0.0;
    }
    let mut values = Vec::with_capacity(2);
    for e in &w.support {
        let (a, b) = e.endpoints();
        let v = bounds.clamp(w.w[a * n + b]);
        entries[a * n + b] = v;
        entries[b * n + a] = v;
        if !values.contains(&v) {
            values.push(v);
        }
    }
    let pairs = n * (n - 1) / 2;
    if w.support.len() < pairs && !values.contains(&bounds.pi_min) {
        values.push(bounds.pi_min);
    }
    let levels = match values.as_slice() {
        [v] => Levels::Uniform(*v),
        [a, b] => {
            let (lo, hi) = if a < b { (*a, *b) } else { (*b, *a) };
            // Entries off the support are pi_min, which is never above hi.
            let high = w
                .support
                .iter()
                .copied()
                .filter(|e| {
                    let (a, b) = e.endpoints();
                    entries[a * n + b] == hi
                })
                .collect();
            Levels::TwoLevel { lo, hi, high }
        }
        _ => Levels::General,
    };
    PheromoneMatrix { n, entries, levels }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeClasses {
    pub high: Vec<Edge>,
    pub low: Vec<Edge>,
}

/// Splits edges into those at `pi_max` ("high") and those at `pi_min`
/// ("low"). Fails unless every off-diagonal entry sits exactly on a bound.
pub fn classify_edges(pi: &PheromoneMatrix, bounds: Bounds) -> Result<EdgeClasses> {
    let n = pi.n;
    let mut high = Vec::new();
    let mut low = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let v = pi.get(i, j);
            if v == bounds.pi_max {
                high.push(Edge::new(i, j));
            } else if v == bounds.pi_min {
                low.push(Edge::new(i, j));
            } else {
                return Err(Error::NotApplicable(format!(
                    "entry ({}, {}) = {v} is neither pi_min nor pi_max",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    Ok(EdgeClasses { high, low })
}

/// Matrix after one `rho = 1` update reinforcing `elite`.
pub fn reinforced(elite: &Tour, bounds: Bounds) -> Result<PheromoneMatrix> {
    let pi = PheromoneMatrix::uniform(elite.n())?;
    update(&pi, &elite_weights(&[elite])?, 1.0, bounds)
}
