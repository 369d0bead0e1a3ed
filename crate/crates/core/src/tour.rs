//! Hamiltonian cycles and the exchange-move algebra on them.

use std::collections::HashSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::geometry::{segments_intersect, Point};
use crate::instance::{GridMeta, Instance};

/// Undirected edge between two 0-based vertices, stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    a: usize,
    b: usize,
}

impl Edge {
    pub fn new(u: usize, v: usize) -> Self {
        debug_assert_ne!(u, v, "self-loop edge");
        if u < v {
            Edge { a: u, b: v }
        } else {
            Edge { a: v, b: u }
        }
    }

    /// Builds an edge from 1-based labels.
    pub fn from_labels(u: usize, v: usize) -> Self {
        Edge::new(u - 1, v - 1)
    }

    pub fn endpoints(self) -> (usize, usize) {
        (self.a, self.b)
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{}}}", self.a + 1, self.b + 1)
    }
}

/// A Hamiltonian cycle stored as one of its permutations.
///
/// Equality and hashing are by underlying cycle: rotations and reversals of
/// the same permutation compare equal.
#[derive(Debug, Clone)]
pub struct Tour {
    perm: Vec<usize>,
}

impl Tour {
    /// Tour from a 0-based permutation.
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        if n < 3 {
            return Err(invalid(format!("a tour needs at least 3 vertices, got {n}")));
        }
        let mut seen = vec![false; n];
        for &v in &perm {
            if v >= n || seen[v] {
                return Err(invalid(format!("not a permutation of 0..{n}: {perm:?}")));
            }
            seen[v] = true;
        }
        Ok(Tour { perm })
    }

    /// Tour from 1-based vertex labels.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        if labels.contains(&0) {
            return Err(invalid("vertex labels are 1-based"));
        }
        Tour::new(labels.iter().map(|&l| l - 1).collect())
    }

    pub(crate) fn from_perm_unchecked(perm: Vec<usize>) -> Self {
        debug_assert!(Tour::new(perm.clone()).is_ok());
        Tour { perm }
    }

    /// `(1, 2, ..., n)`.
    pub fn identity(n: usize) -> Self {
        Tour { perm: (0..n).collect() }
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn labels(&self) -> Vec<usize> {
        self.perm.iter().map(|&v| v + 1).collect()
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        let n = self.n();
        (0..n).map(move |i| Edge::new(self.perm[i], self.perm[(i + 1) % n]))
    }

    pub fn edge_set(&self) -> HashSet<Edge> {
        self.edges().collect()
    }

    /// The two cycle neighbours of every vertex.
    pub fn neighbors(&self) -> Vec<[usize; 2]> {
        let n = self.n();
        let mut nb = vec![[0; 2]; n];
        for i in 0..n {
            nb[self.perm[i]] = [self.perm[(i + n - 1) % n], self.perm[(i + 1) % n]];
        }
        nb
    }

    pub fn contains_edge(&self, e: Edge) -> bool {
        let (u, v) = e.endpoints();
        let n = self.n();
        let Some(i) = self.perm.iter().position(|&x| x == u) else {
            return false;
        };
        self.perm[(i + 1) % n] == v || self.perm[(i + n - 1) % n] == v
    }

    /// Rotation starting at vertex 1, in whichever direction is
    /// lexicographically smaller.
    pub fn canonical(&self) -> Tour {
        let n = self.n();
        let start = self.perm.iter().position(|&v| v == 0).expect("vertex 0 present");
        let fwd = self.perm[(start + 1) % n];
        let bwd = self.perm[(start + n - 1) % n];
        let perm = if fwd <= bwd {
            (0..n).map(|k| self.perm[(start + k) % n]).collect()
        } else {
            (0..n).map(|k| self.perm[(start + n - k) % n]).collect()
        };
        Tour { perm }
    }

    pub fn is_canonical(&self) -> bool {
        let n = self.n();
        self.perm[0] == 0 && self.perm[1] < self.perm[n - 1]
    }

    pub fn same_cycle(&self, other: &Tour) -> bool {
        self.n() == other.n() && shared_edges_unchecked(self, other) == self.n()
    }
}

impl PartialEq for Tour {
    fn eq(&self, other: &Self) -> bool {
        self.same_cycle(other)
    }
}

impl Eq for Tour {}

impl Hash for Tour {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.canonical().perm.hash(state);
    }
}

impl fmt::Display for Tour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.perm.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", v + 1)?;
        }
        write!(f, ")")
    }
}

/// Tours serialize as their canonical 1-based permutation.
impl Serialize for Tour {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.canonical().labels().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Tour {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let labels = Vec::<usize>::deserialize(d)?;
        Tour::from_labels(&labels).map_err(serde::de::Error::custom)
    }
}

fn shared_edges_unchecked(a: &Tour, b: &Tour) -> usize {
    let nb = b.neighbors();
    a.edges()
        .filter(|e| {
            let (u, v) = e.endpoints();
            nb[u][0] == v || nb[u][1] == v
        })
        .count()
}

/// Number of edges two tours have in common.
pub fn shared_edges(a: &Tour, b: &Tour) -> Result<usize> {
    if a.n() != b.n() {
        return Err(invalid(format!("tour sizes differ: {} vs {}", a.n(), b.n())));
    }
    Ok(shared_edges_unchecked(a, b))
}

/// Removes `removed.len()` edges from a cycle and adds as many new ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExchangeMove {
    pub removed: Vec<Edge>,
    pub added: Vec<Edge>,
}

impl ExchangeMove {
    pub fn new(removed: Vec<Edge>, added: Vec<Edge>) -> Self {
        ExchangeMove { removed, added }
    }

    /// The exchange turning `from` into `to`.
    pub fn between(from: &Tour, to: &Tour) -> Result<Self> {
        if from.n() != to.n() {
            return Err(invalid("tour sizes differ"));
        }
        let a = from.edge_set();
        let b = to.edge_set();
        let mut removed: Vec<Edge> = a.difference(&b).copied().collect();
        let mut added: Vec<Edge> = b.difference(&a).copied().collect();
        removed.sort();
        added.sort();
        Ok(ExchangeMove { removed, added })
    }

    pub fn order(&self) -> usize {
        self.removed.len()
    }
}

/// Applies an exchange move. The result keeps the original start vertex and,
/// where possible, its original direction of travel.
pub fn apply_exchange(tour: &Tour, mv: &ExchangeMove) -> Result<Tour> {
    let k = mv.removed.len();
    if k < 2 {
        return Err(invalid(format!("exchange order must be >= 2, got {k}")));
    }
    if mv.added.len() != k {
        return Err(invalid(format!("exchange removes {k} edges but adds {}", mv.added.len())));
    }
    let n = tour.n();
    let edges = tour.edge_set();
    let removed: HashSet<Edge> = mv.removed.iter().copied().collect();
    if removed.len() != k {
        return Err(Error::InvalidMove("duplicate removed edge".into()));
    }
    if let Some(e) = mv.removed.iter().find(|e| !edges.contains(e)) {
        return Err(Error::InvalidMove(format!("edge {e} is not in the tour")));
    }
    let added: HashSet<Edge> = mv.added.iter().copied().collect();
    if added.len() != k {
        return Err(Error::InvalidMove("duplicate added edge".into()));
    }
    for e in &mv.added {
        let (u, v) = e.endpoints();
        if u >= n || v >= n {
            return Err(Error::InvalidMove(format!("edge {e} out of range")));
        }
        if edges.contains(e) {
            return Err(Error::InvalidMove(format!("edge {e} is already in the tour")));
        }
    }

    let mut adj: Vec<Vec<usize>> = vec![Vec::with_capacity(2); n];
    for e in edges.difference(&removed).chain(added.iter()) {
        let (u, v) = e.endpoints();
        adj[u].push(v);
        adj[v].push(u);
    }
    if let Some(v) = adj.iter().position(|a| a.len() != 2) {
        return Err(Error::InvalidMove(format!("vertex {} would have degree {}", v + 1, adj[v].len())));
    }

    let start = tour.perm[0];
    let orig_next = tour.perm[1 % n];
    let mut prev = start;
    let mut cur = if adj[start].contains(&orig_next) { orig_next } else { adj[start][0] };
    let mut perm = Vec::with_capacity(n);
    perm.push(start);
    while cur != start {
        if perm.len() == n {
            return Err(Error::InvalidMove("walk does not close".into()));
        }
        perm.push(cur);
        let next = if adj[cur][0] != prev { adj[cur][0] } else { adj[cur][1] };
        prev = cur;
        cur = next;
    }
    if perm.len() != n {
        return Err(Error::InvalidMove(format!(
            "result splits into several cycles (first has {} of {n} vertices)",
            perm.len()
        )));
    }
    Ok(Tour { perm })
}

/// All tours that differ from `tour` in exactly `k` edges, in canonical
/// form, without duplicates.
pub fn enumerate_exchanges(tour: &Tour, k: usize) -> Result<Vec<Tour>> {
    let n = tour.n();
    if k < 2 || k > n {
        return Err(invalid(format!("exchange order {k} outside [2, {n}]")));
    }
    let mut out: Vec<Tour> = Vec::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut cuts = Vec::with_capacity(k);
    enumerate_cut_sets(n, k, 0, &mut cuts, &mut |cuts| {
        // Segment i runs from just after cut i to cut i+1 (cyclically).
        let segments: Vec<Vec<usize>> = (0..k)
            .map(|i| {
                let from = cuts[i] + 1;
                let to = if i + 1 < k { cuts[i + 1] } else { cuts[0] + n };
                (from..=to).map(|p| tour.perm[p % n]).collect()
            })
            .collect();
        let mut order: Vec<usize> = (1..k).collect();
        for_each_permutation(&mut order, 0, &mut |order| {
            for flips in 0..(1u32 << (k - 1)) {
                let mut perm = segments[0].clone();
                for (slot, &s) in order.iter().enumerate() {
                    if flips & (1 << slot) != 0 {
                        perm.extend(segments[s].iter().rev());
                    } else {
                        perm.extend(segments[s].iter());
                    }
                }
                let candidate = Tour { perm };
                if shared_edges_unchecked(tour, &candidate) == n - k {
                    let canon = candidate.canonical();
                    if seen.insert(canon.perm.clone()) {
                        out.push(canon);
                    }
                }
            }
        });
    });
    Ok(out)
}

fn enumerate_cut_sets(n: usize, k: usize, from: usize, cuts: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if cuts.len() == k {
        f(cuts);
        return;
    }
    for p in from..n {
        if n - p < k - cuts.len() {
            break;
        }
        cuts.push(p);
        enumerate_cut_sets(n, k, p + 1, cuts, f);
        cuts.pop();
    }
}

fn for_each_permutation(items: &mut Vec<usize>, i: usize, f: &mut dyn FnMut(&[usize])) {
    if i == items.len() {
        f(items);
        return;
    }
    for j in i..items.len() {
        items.swap(i, j);
        for_each_permutation(items, i + 1, f);
        items.swap(i, j);
    }
}

/// Jump move: the vertex at position `from` is moved to position `to`
/// (0-based), shifting everything in between by one.
pub fn jump(tour: &Tour, from: usize, to: usize) -> Result<Tour> {
    let n = tour.n();
    if from >= n || to >= n {
        return Err(invalid(format!("jump positions ({from}, {to}) outside 0..{n}")));
    }
    if from == to {
        return Err(invalid("jump needs two distinct positions"));
    }
    let mut perm = tour.perm.clone();
    let v = perm.remove(from);
    perm.insert(to, v);
    Ok(Tour { perm })
}

/// Position pairs `(i, j)`, `i < j`, of tour edges that properly cross.
/// Edge `i` joins positions `i` and `i + 1` (cyclically). Pairs are produced
/// in lexicographic order.
pub fn crossing_edge_pairs<'a>(positions: &'a [Point], tour: &'a Tour) -> impl Iterator<Item = (usize, usize)> + 'a {
    let n = tour.n();
    let p = &tour.perm;
    (0..n).flat_map(move |i| {
        (i + 2..n).filter_map(move |j| {
            if i == 0 && j == n - 1 {
                return None;
            }
            let crosses =
                segments_intersect(positions[p[i]], positions[p[i + 1]], positions[p[j]], positions[p[(j + 1) % n]]);
            crosses.then_some((i, j))
        })
    })
}

/// The 2-exchange removing the first crossing found (scanning edge pairs in
/// position order), or `None` if the tour is intersection-free.
pub fn find_intersection_removal(instance: &Instance, tour: &Tour) -> Result<Option<ExchangeMove>> {
    let positions = instance
        .positions()
        .ok_or_else(|| Error::NotApplicable("intersection removal needs a grid instance".into()))?;
    if tour.n() != instance.n() {
        return Err(invalid("tour size does not match instance"));
    }
    let n = tour.n();
    let p = &tour.perm;
    Ok(crossing_edge_pairs(positions, tour).next().map(|(i, j)| {
        let (a, b, c, d) = (p[i], p[i + 1], p[j], p[(j + 1) % n]);
        ExchangeMove::new(vec![Edge::new(a, b), Edge::new(c, d)], vec![Edge::new(a, c), Edge::new(b, d)])
    }))
}

/// True iff the hull vertices appear along the tour in hull order, up to
/// rotation and reflection.
pub fn hull_order_respected(tour: &Tour, meta: &GridMeta) -> bool {
    let h = meta.hull.len();
    let mut on_hull = vec![false; tour.n()];
    for &v in &meta.hull {
        if v >= tour.n() {
            return false;
        }
        on_hull[v] = true;
    }
    let seq: Vec<usize> = tour.perm.iter().copied().filter(|&v| on_hull[v]).collect();
    if seq.len() != h {
        return false;
    }
    let Some(offset) = meta.hull.iter().position(|&v| v == seq[0]) else {
        return false;
    };
    let forward = (0..h).all(|k| seq[k] == meta.hull[(offset + k) % h]);
    let backward = (0..h).all(|k| seq[k] == meta.hull[(offset + h - k) % h]);
    forward || backward
}
