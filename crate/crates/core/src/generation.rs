//! Random tour construction from a sampling matrix.
//!
//! Two schemes are provided. The vertex-based scheme walks from a uniformly
//! random start vertex, choosing each continuation among the unvisited
//! vertices proportionally to the current row. The edge-based scheme grows a
//! set of vertex-disjoint paths by repeatedly picking an admissible edge with
//! probability proportional to `pi[i][j] + pi[j][i]`; after `n - 1` edges the
//! Hamiltonian path is closed by its forced last edge.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::pheromone::{Levels, PheromoneMatrix};
use crate::tour::{Edge, Tour};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "vertex")]
    VertexBased,
    #[serde(rename = "edge")]
    EdgeBased,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::VertexBased => "vertex",
            Scheme::EdgeBased => "edge",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vertex" => Ok(Scheme::VertexBased),
            "edge" => Ok(Scheme::EdgeBased),
            other => Err(format!("unknown scheme {other:?} (expected vertex or edge)")),
        }
    }
}

pub fn draw<R: Rng + ?Sized>(scheme: Scheme, pi: &PheromoneMatrix, rng: &mut R) -> Tour {
    match scheme {
        Scheme::VertexBased => draw_vertex_based(pi, rng),
        Scheme::EdgeBased => draw_edge_based(pi, rng),
    }
}

/// Roulette-wheel pick over unnormalised weights with a single uniform
/// variate. Boundary ties go to the lower index.
fn roulette<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    assert!(total > 0.0, "roulette over zero total weight");
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    // Rounding left `target` past the last boundary.
    weights.iter().rposition(|&w| w > 0.0).expect("positive weight exists")
}

/// Continuation probabilities from `current` over `unvisited`, in the order
/// given.
pub fn vertex_step_distribution(pi: &PheromoneMatrix, current: usize, unvisited: &[usize]) -> Vec<f64> {
    let row = pi.row(current);
    let total: f64 = unvisited.iter().map(|&k| row[k]).sum();
    unvisited.iter().map(|&k| row[k] / total).collect()
}

pub fn draw_vertex_based<R: Rng + ?Sized>(pi: &PheromoneMatrix, rng: &mut R) -> Tour {
    let n = pi.n();
    let start = rng.random_range(0..n);
    let mut unvisited: Vec<usize> = (0..n).filter(|&v| v != start).collect();
    let mut perm = Vec::with_capacity(n);
    perm.push(start);
    let mut cur = start;
    let mut weights: Vec<f64> = Vec::with_capacity(n);
    while !unvisited.is_empty() {
        let idx = if unvisited.len() == 1 {
            0
        } else {
            let row = pi.row(cur);
            weights.clear();
            weights.extend(unvisited.iter().map(|&k| row[k]));
            roulette(&weights, rng)
        };
        cur = unvisited.remove(idx);
        perm.push(cur);
    }
    Tour::from_perm_unchecked(perm)
}

/// A forest of vertex-disjoint paths under construction.
///
/// Each path endpoint records the opposite endpoint of its path (an isolated
/// vertex is its own opposite end), which makes the cycle test O(1).
#[derive(Debug, Clone)]
pub struct PartialEdgeSet {
    degree: Vec<u8>,
    other_end: Vec<usize>,
    adj: Vec<[usize; 2]>,
    chosen: Vec<Edge>,
    /// Components with at least one edge.
    paths: usize,
}

impl PartialEdgeSet {
    pub fn new(n: usize) -> Self {
        PartialEdgeSet {
            degree: vec![0; n],
            other_end: (0..n).collect(),
            adj: vec![[usize::MAX; 2]; n],
            chosen: Vec::with_capacity(n),
            paths: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.degree.len()
    }

    pub fn len(&self) -> usize {
        self.chosen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chosen.is_empty()
    }

    pub fn chosen(&self) -> &[Edge] {
        &self.chosen
    }

    pub fn degree(&self, v: usize) -> u8 {
        self.degree[v]
    }

    /// Whether adding `e` keeps every degree at most 2 without closing a
    /// cycle. Once `n - 1` edges form a Hamiltonian path, the edge joining
    /// its two ends is the one admissible closing edge.
    pub fn admissible_after(&self, e: Edge) -> bool {
        let (u, v) = e.endpoints();
        let n = self.n();
        if self.chosen.len() >= n || self.degree[u] >= 2 || self.degree[v] >= 2 {
            return false;
        }
        if self.other_end[u] == v {
            return self.chosen.len() == n - 1;
        }
        true
    }

    /// Adds an edge previously checked with [`admissible_after`].
    ///
    /// [`admissible_after`]: PartialEdgeSet::admissible_after
    pub fn add(&mut self, e: Edge) {
        debug_assert!(self.admissible_after(e), "adding inadmissible edge {e}");
        let (u, v) = e.endpoints();
        let closing = self.other_end[u] == v;
        let (eu, ev) = (self.other_end[u], self.other_end[v]);
        match (self.degree[u], self.degree[v]) {
            (0, 0) => self.paths += 1,
            (1, 1) if !closing => self.paths -= 1,
            _ => {}
        }
        if !closing {
            self.other_end[eu] = ev;
            self.other_end[ev] = eu;
        }
        self.adj[u][self.degree[u] as usize] = v;
        self.adj[v][self.degree[v] as usize] = u;
        self.degree[u] += 1;
        self.degree[v] += 1;
        self.chosen.push(e);
    }

    /// Number of admissible edges when the set is not yet a Hamiltonian path:
    /// all pairs of free vertices minus the two ends of each path.
    fn admissible_count(&self, free: usize) -> usize {
        free * (free - 1) / 2 - self.paths
    }

    /// The closed cycle as a canonical tour. Requires `n` chosen edges.
    fn into_tour(self) -> Tour {
        let n = self.n();
        debug_assert_eq!(self.chosen.len(), n);
        let mut perm = Vec::with_capacity(n);
        perm.push(0);
        let mut prev = 0;
        let mut cur = self.adj[0][0].min(self.adj[0][1]);
        while cur != 0 {
            perm.push(cur);
            let [a, b] = self.adj[cur];
            let next = if a != prev { a } else { b };
            prev = cur;
            cur = next;
        }
        Tour::from_perm_unchecked(perm)
    }
}

/// One sampling step of the edge-based scheme.
#[derive(Debug, Clone, Copy)]
pub struct EdgeStep {
    /// Edges chosen before this step.
    pub chosen_before: usize,
    /// Admissible edges at the matrix's upper level, when the matrix has
    /// exactly two levels and the observer asks for counts.
    pub admissible_high: Option<usize>,
    pub picked: Edge,
    pub picked_high: Option<bool>,
}

pub trait StepObserver {
    fn on_step(&mut self, step: &EdgeStep);

    /// Whether steps must report exact admissible high-edge counts, which
    /// costs an O(n) scan per step.
    fn needs_counts(&self) -> bool {
        true
    }
}

impl StepObserver for () {
    fn on_step(&mut self, _: &EdgeStep) {}

    fn needs_counts(&self) -> bool {
        false
    }
}

impl<F: FnMut(&EdgeStep)> StepObserver for F {
    fn on_step(&mut self, step: &EdgeStep) {
        self(step)
    }
}

/// Probability of every admissible edge at the current step, by exact
/// enumeration.
pub fn edge_step_distribution(pi: &PheromoneMatrix, pe: &PartialEdgeSet) -> Vec<(Edge, f64)> {
    let n = pi.n();
    let mut out = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let e = Edge::new(u, v);
            if pe.admissible_after(e) {
                out.push((e, pi.get(u, v) + pi.get(v, u)));
            }
        }
    }
    let total: f64 = out.iter().map(|(_, w)| w).sum();
    for (_, w) in &mut out {
        *w /= total;
    }
    out
}

pub fn draw_edge_based<R: Rng + ?Sized>(pi: &PheromoneMatrix, rng: &mut R) -> Tour {
    draw_edge_based_observed(pi, rng, &mut ())
}

pub fn draw_edge_based_observed<R: Rng + ?Sized, O: StepObserver + ?Sized>(
    pi: &PheromoneMatrix,
    rng: &mut R,
    observer: &mut O,
) -> Tour {
    match pi.levels() {
        Levels::Uniform(v) => draw_edge_leveled(pi.n(), *v, *v, &[], rng, observer),
        Levels::TwoLevel { lo, hi, high } => draw_edge_leveled(pi.n(), *lo, *hi, high, rng, observer),
        Levels::General => draw_edge_general(pi, rng, observer),
    }
}

/// Exact scan over all admissible pairs; O(n^3) per tour.
pub(crate) fn draw_edge_general<R: Rng + ?Sized, O: StepObserver + ?Sized>(
    pi: &PheromoneMatrix,
    rng: &mut R,
    observer: &mut O,
) -> Tour {
    let n = pi.n();
    let mut pe = PartialEdgeSet::new(n);
    let mut free: Vec<usize> = Vec::with_capacity(n);
    let mut pairs: Vec<Edge> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    while pe.len() < n - 1 {
        free.clear();
        free.extend((0..n).filter(|&v| pe.degree[v] < 2));
        pairs.clear();
        weights.clear();
        for (a, &u) in free.iter().enumerate() {
            for &v in &free[a + 1..] {
                if pe.other_end[u] != v {
                    pairs.push(Edge::new(u, v));
                    weights.push(pi.get(u, v) + pi.get(v, u));
                }
            }
        }
        assert!(!pairs.is_empty(), "no admissible edge before completion");
        let e = pairs[roulette(&weights, rng)];
        observer.on_step(&EdgeStep { chosen_before: pe.len(), admissible_high: None, picked: e, picked_high: None });
        pe.add(e);
    }
    close_path(&mut pe);
    pe.into_tour()
}

/// Sampler for matrices whose off-diagonal entries take at most two values.
///
/// Every admissible edge carries base weight `lo`, and admissible high
/// edges an extra `hi - lo`. A step proposes from `lo * A + (hi - lo) * |C|`,
/// where `A` is the number of admissible pairs and `C` a superset of the
/// admissible high edges: the base part is a uniform admissible pair drawn
/// by rejection, the extra part a uniform member of `C`, accepted only if
/// admissible. Accepted edges follow exactly the target distribution. An
/// edge never regains admissibility, so rejected candidates leave `C` for
/// good, and a draw costs O(n + |high|) expected work overall.
fn draw_edge_leveled<R: Rng + ?Sized, O: StepObserver + ?Sized>(
    n: usize,
    lo: f64,
    hi: f64,
    high: &[Edge],
    rng: &mut R,
    observer: &mut O,
) -> Tour {
    let mut pe = PartialEdgeSet::new(n);
    let mut free: Vec<usize> = (0..n).collect();
    let mut slot: Vec<usize> = (0..n).collect();
    let mut candidates: Vec<Edge> = high.to_vec();
    let leveled = hi > lo;
    let counts = leveled && observer.needs_counts();
    let extra = hi - lo;
    while pe.len() < n - 1 {
        let admissible_high = counts.then(|| {
            candidates.retain(|&e| pe.admissible_after(e));
            candidates.len()
        });
        let base = lo * pe.admissible_count(free.len()) as f64;
        let e = loop {
            let excess = extra * candidates.len() as f64;
            let total = base + excess;
            assert!(total > 0.0, "no admissible edge before completion");
            let target = rng.random::<f64>() * total;
            if target < excess {
                let i = ((target / extra) as usize).min(candidates.len() - 1);
                let e = candidates[i];
                if pe.admissible_after(e) {
                    break e;
                }
                candidates.swap_remove(i);
            } else {
                break loop {
                    let u = free[rng.random_range(0..free.len())];
                    let v = free[rng.random_range(0..free.len())];
                    if u != v && pe.other_end[u] != v {
                        break Edge::new(u, v);
                    }
                };
            }
        };
        observer.on_step(&EdgeStep {
            chosen_before: pe.len(),
            admissible_high,
            picked: e,
            picked_high: leveled.then(|| high.binary_search(&e).is_ok()),
        });
        pe.add(e);
        let (u, v) = e.endpoints();
        for w in [u, v] {
            if pe.degree[w] == 2 {
                let s = slot[w];
                let last = *free.last().expect("free vertex list non-empty");
                free.swap_remove(s);
                if last != w {
                    slot[last] = s;
                }
            }
        }
    }
    close_path(&mut pe);
    pe.into_tour()
}

fn close_path(pe: &mut PartialEdgeSet) {
    let n = pe.n();
    let u = (0..n).find(|&v| pe.degree[v] < 2).expect("path has free ends");
    let v = pe.other_end[u];
    pe.add(Edge::new(u, v));
}
