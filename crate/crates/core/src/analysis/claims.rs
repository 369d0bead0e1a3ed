//! Monte Carlo estimators for the sampling-probability bounds.
//!
//! Every estimator fixes the elite `(1, 2, ..., n)`, reinforces it with one
//! `rho = 1` update under the default bounds, and counts an event over
//! independent draws from the resulting matrix. Draws are grouped in chunks
//! of [`CHUNK`] with one derived stream per chunk, so a longer run extends a
//! shorter one with the same seed instead of replacing it.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::stats::wilson;
use crate::analysis::thresholds;
use crate::error::{invalid, Error, Result};
use crate::generation::{draw, draw_edge_based_observed, EdgeStep, Scheme};
use crate::pheromone::{reinforced, Bounds, PheromoneMatrix};
use crate::rng::{derived_rng, StreamRng};
use crate::tour::Tour;

pub const CHUNK: u64 = 10_000;
pub const CONFIDENCE: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClaimId {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
}

impl ClaimId {
    pub const ALL: [ClaimId; 6] = [ClaimId::C1, ClaimId::C2, ClaimId::C3, ClaimId::C4, ClaimId::C5, ClaimId::C6];

    fn index(self) -> u64 {
        self as u64 + 1
    }

    pub fn default_scheme(self) -> Scheme {
        match self {
            ClaimId::C1 | ClaimId::C2 => Scheme::VertexBased,
            _ => Scheme::EdgeBased,
        }
    }
}

impl fmt::Display for ClaimId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}", self.index())
    }
}

impl FromStr for ClaimId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClaimId::ALL
            .into_iter()
            .find(|c| c.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown claim {s:?} (expected C1..C6)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    AtLeast,
    AtMost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The confidence interval straddles the threshold.
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClaimParams {
    pub claim: ClaimId,
    pub n: usize,
    pub scheme: Scheme,
    /// Number of draws (constructions for C3).
    pub trials: u64,
    pub seed: u64,
    /// Exchange order for C1 (2 or 3) and C4.
    pub k: usize,
    /// Exponent for the C6 order cut-off `n^delta`.
    pub delta: f64,
}

impl ClaimParams {
    pub fn new(claim: ClaimId, n: usize, trials: u64, seed: u64) -> Self {
        ClaimParams { claim, n, scheme: claim.default_scheme(), trials, seed, k: 2, delta: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundCheck {
    pub claim: ClaimId,
    pub n: usize,
    pub scheme: Scheme,
    pub trials: u64,
    /// Denominator of the frequency: draws, or qualifying steps for C3.
    pub events: u64,
    pub successes: u64,
    pub empirical: f64,
    pub threshold: f64,
    pub direction: Direction,
    pub ci_low: f64,
    pub ci_high: f64,
    pub verdict: Verdict,
    pub threshold_source: String,
    /// Draw counts by exchange order `n - shared edges` (C4 to C6).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order_histogram: Option<Vec<u64>>,
}

impl BoundCheck {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

fn verdict(direction: Direction, lo: f64, hi: f64, threshold: f64) -> Verdict {
    match direction {
        Direction::AtLeast if lo >= threshold => Verdict::Pass,
        Direction::AtLeast if hi < threshold => Verdict::Fail,
        Direction::AtMost if hi <= threshold => Verdict::Pass,
        Direction::AtMost if lo > threshold => Verdict::Fail,
        _ => Verdict::Indeterminate,
    }
}

/// Elite-adjacency lookup for fast per-draw comparisons.
pub struct EliteIndex {
    nb: Vec<[usize; 2]>,
}

impl EliteIndex {
    pub fn new(elite: &Tour) -> Self {
        EliteIndex { nb: elite.neighbors() }
    }

    #[inline]
    fn has(&self, u: usize, v: usize) -> bool {
        self.nb[u][0] == v || self.nb[u][1] == v
    }

    /// Edges of `perm` (as a cycle) that belong to the elite.
    pub fn shared(&self, perm: &[usize]) -> usize {
        let n = perm.len();
        (0..n).filter(|&i| self.has(perm[i], perm[(i + 1) % n])).count()
    }
}

/// The 2-exchange of the identity that reverses positions `1..=n/2`, and
/// the 3-exchange `(1, 4, 5, 2, 3, 6, ..., n)` that swaps two segments.
pub fn c1_target(n: usize, k: usize) -> Result<Tour> {
    match k {
        2 if n >= 5 => {
            let h = n / 2;
            let mut perm = vec![0];
            perm.extend((1..=h).rev());
            perm.extend(h + 1..n);
            Tour::new(perm)
        }
        3 if n >= 6 => {
            let mut perm = vec![0, 3, 4, 1, 2];
            perm.extend(5..n);
            Tour::new(perm)
        }
        _ => Err(invalid(format!("no fixed {k}-exchange target for n={n}"))),
    }
}

#[derive(Debug, Clone, Default)]
struct Tally {
    hits: u64,
    events: u64,
    hist: Vec<u64>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.hits += other.hits;
        self.events += other.events;
        if self.hist.len() < other.hist.len() {
            self.hist.resize(other.hist.len(), 0);
        }
        for (a, b) in self.hist.iter_mut().zip(other.hist) {
            *a += b;
        }
        self
    }
}

/// Runs `per_chunk(rng, draws)` over all chunks in parallel and sums the
/// tallies, which keeps the result independent of scheduling.
fn chunked<F>(seed: u64, claim: ClaimId, trials: u64, per_chunk: F) -> Tally
where
    F: Fn(&mut StreamRng, u64) -> Tally + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(trials - c * CHUNK);
            per_chunk(&mut derived_rng(seed, &[claim.index(), c]), count)
        })
        .reduce(Tally::default, Tally::merge)
}

fn count_draws<R: Rng + ?Sized>(
    scheme: Scheme,
    pi: &PheromoneMatrix,
    rng: &mut R,
    draws: u64,
    mut event: impl FnMut(&Tour) -> bool,
) -> Tally {
    let mut hits = 0;
    for _ in 0..draws {
        if event(&draw(scheme, pi, rng)) {
            hits += 1;
        }
    }
    Tally { hits, events: draws, hist: Vec::new() }
}

/// Histogram of exchange orders plus hits of `event(order)`.
fn order_tally<R: Rng + ?Sized>(
    scheme: Scheme,
    pi: &PheromoneMatrix,
    elite: &EliteIndex,
    rng: &mut R,
    draws: u64,
    event: impl Fn(usize) -> bool,
) -> Tally {
    let n = pi.n();
    let mut hist = vec![0; n + 1];
    let mut hits = 0;
    for _ in 0..draws {
        let t = draw(scheme, pi, rng);
        let order = n - elite.shared(t.perm());
        hist[order] += 1;
        if event(order) {
            hits += 1;
        }
    }
    Tally { hits, events: draws, hist }
}

/// Estimates the claim's event frequency and compares it with its bound.
pub fn estimate_claim(p: &ClaimParams) -> Result<BoundCheck> {
    let n = p.n;
    if n < 5 {
        return Err(invalid(format!("claim checks need n >= 5, got {n}")));
    }
    if p.trials == 0 {
        return Err(invalid("trials must be positive"));
    }
    if p.claim != ClaimId::C1 && p.claim != ClaimId::C2 && p.scheme != Scheme::EdgeBased {
        return Err(invalid(format!("{} concerns the edge-based scheme", p.claim)));
    }
    let bounds = Bounds::for_n(n);
    let elite = Tour::identity(n);
    let pi = reinforced(&elite, bounds)?;
    let index = EliteIndex::new(&elite);
    let nf = n as f64;
    let scheme = p.scheme;

    let (tally, threshold, direction, source) = match p.claim {
        ClaimId::C1 => {
            let target = c1_target(n, p.k)?;
            let t_index = EliteIndex::new(&target);
            let tally = chunked(p.seed, p.claim, p.trials, |rng, draws| {
                count_draws(scheme, &pi, rng, draws, |t| t_index.shared(t.perm()) == n)
            });
            let bound = 1.0 / (std::f64::consts::E * nf.powi(2 * p.k as i32 - 1));
            (tally, bound, Direction::AtLeast, format!("analytic 1/(e n^{})", 2 * p.k - 1))
        }
        ClaimId::C2 => {
            let tally = chunked(p.seed, p.claim, p.trials, |rng, draws| {
                count_draws(scheme, &pi, rng, draws, |t| index.shared(t.perm()) == n)
            });
            let bound = (1.0 - 1.0 / nf).powi(n as i32 - 1);
            (tally, bound, Direction::AtLeast, "analytic (1-1/n)^(n-1)".to_string())
        }
        ClaimId::C3 => {
            let max_low = nf.sqrt();
            let tally = chunked(p.seed, p.claim, p.trials, |rng, draws| {
                let mut t = Tally::default();
                for _ in 0..draws {
                    let mut low = 0usize;
                    let mut obs = |s: &EdgeStep| {
                        let high_avail = s.admissible_high.expect("two-level matrix");
                        let picked_high = s.picked_high.expect("two-level matrix");
                        if low as f64 <= max_low && high_avail >= 1 {
                            t.events += 1;
                            t.hits += picked_high as u64;
                        }
                        if !picked_high {
                            low += 1;
                        }
                    };
                    draw_edge_based_observed(&pi, rng, &mut obs);
                }
                t
            });
            (tally, 1.0 - 12.0 / nf, Direction::AtLeast, "analytic 1-12/n".to_string())
        }
        ClaimId::C4 => {
            thresholds::check_calibrated(n)?;
            let k = p.k;
            let tally = chunked(p.seed, p.claim, p.trials, |rng, draws| {
                order_tally(scheme, &pi, &index, rng, draws, |o| o == k)
            });
            let bound = thresholds::c4_min(k)?;
            (tally, bound, Direction::AtLeast, thresholds::PILOT_NOTE.to_string())
        }
        ClaimId::C5 => {
            thresholds::check_calibrated(n)?;
            // On G1 with the optimum as elite, "cost not larger" is reproduction.
            let tally = chunked(p.seed, p.claim, p.trials, |rng, draws| {
                order_tally(scheme, &pi, &index, rng, draws, |o| o == 0)
            });
            (tally, thresholds::C5_MIN, Direction::AtLeast, thresholds::PILOT_NOTE.to_string())
        }
        ClaimId::C6 => {
            thresholds::check_calibrated(n)?;
            if p.delta != thresholds::C6_DELTA {
                return Err(Error::NotApplicable(format!(
                    "C6 threshold is frozen for delta = {}",
                    thresholds::C6_DELTA
                )));
            }
            let cutoff = nf.powf(p.delta);
            let tally = chunked(p.seed, p.claim, p.trials, |rng, draws| {
                order_tally(scheme, &pi, &index, rng, draws, |o| o as f64 >= cutoff)
            });
            (tally, thresholds::C6_MAX, Direction::AtMost, thresholds::PILOT_NOTE.to_string())
        }
    };

    let (ci_low, ci_high) = wilson(tally.hits, tally.events, CONFIDENCE);
    let empirical = if tally.events == 0 { 0.0 } else { tally.hits as f64 / tally.events as f64 };
    Ok(BoundCheck {
        claim: p.claim,
        n,
        scheme,
        trials: p.trials,
        events: tally.events,
        successes: tally.hits,
        empirical,
        threshold,
        direction,
        ci_low,
        ci_high,
        verdict: verdict(direction, ci_low, ci_high, threshold),
        threshold_source: source,
        order_histogram: (!tally.hist.is_empty()).then_some(tally.hist),
    })
}
