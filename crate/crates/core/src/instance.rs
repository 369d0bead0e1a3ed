//! TSP instances: the `G1` family, no-three-collinear grid instances and
//! explicit distance matrices.
//!
//! Vertices are stored 0-based. Everything that leaves the library (JSON
//! files, CLI output, tour arrays) uses 1-based labels.

use std::collections::HashSet;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::geometry::{collinear, convex_hull, strictly_inside, Point};
use crate::rng::rng_from_seed;
use crate::tour::Tour;

/// Maximum number of lattice points drawn while building one grid instance.
pub const GRID_ATTEMPT_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceKind {
    G1,
    Grid { m: i64, positions: Vec<Point>, seed: Option<u64> },
    Explicit,
}

/// An immutable symmetric TSP instance with a dense distance table.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    n: usize,
    kind: InstanceKind,
    dist: Vec<f64>,
}

/// Convex-hull structure of a grid instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridMeta {
    pub m: i64,
    /// Hull corners in counterclockwise order (0-based vertices).
    pub hull: Vec<usize>,
    pub interior_count: usize,
}

impl Instance {
    /// The `G1` instance: distance 1 between cyclically consecutive labels,
    /// `n` otherwise. Its unique optimum is `(1, 2, ..., n)` with cost `n`.
    pub fn g1(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(invalid(format!("G1 needs n >= 4, got {n}")));
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let consecutive = (i + 1) % n == j || (j + 1) % n == i;
                    dist[i * n + j] = if consecutive { 1.0 } else { n as f64 };
                }
            }
        }
        Ok(Instance { n, kind: InstanceKind::G1, dist })
    }

    /// Grid instance from explicit lattice positions. Positions must be
    /// distinct, inside `[0, m]^2`, with no three collinear.
    pub fn grid(m: i64, positions: Vec<Point>, seed: Option<u64>) -> Result<Self> {
        let n = positions.len();
        if n < 3 {
            return Err(invalid(format!("grid instance needs n >= 3, got {n}")));
        }
        if m < 1 || 2 * m < n as i64 {
            return Err(invalid(format!("grid side m={m} too small for n={n} (need m >= n/2)")));
        }
        if let Some(p) = positions.iter().find(|p| p.x < 0 || p.y < 0 || p.x > m || p.y > m) {
            return Err(invalid(format!("position ({}, {}) outside [0, {m}]^2", p.x, p.y)));
        }
        let distinct: HashSet<Point> = positions.iter().copied().collect();
        if distinct.len() != n {
            return Err(invalid("grid positions must be distinct"));
        }
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    if collinear(positions[a], positions[b], positions[c]) {
                        return Err(invalid(format!("vertices {}, {}, {} are collinear", a + 1, b + 1, c + 1)));
                    }
                }
            }
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    dist[i * n + j] = positions[i].distance(positions[j]);
                }
            }
        }
        Ok(Instance { n, kind: InstanceKind::Grid { m, positions, seed }, dist })
    }

    /// Instance from a full symmetric matrix. The diagonal is ignored.
    pub fn explicit(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let n = matrix.len();
        if n < 3 {
            return Err(invalid(format!("explicit instance needs n >= 3, got {n}")));
        }
        if matrix.iter().any(|row| row.len() != n) {
            return Err(invalid("distance matrix must be square"));
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let d = matrix[i][j];
                if !d.is_finite() || d < 0.0 {
                    return Err(invalid(format!("bad distance d({},{}) = {d}", i + 1, j + 1)));
                }
                if d != matrix[j][i] {
                    return Err(invalid(format!("matrix not symmetric at ({}, {})", i + 1, j + 1)));
                }
                dist[i * n + j] = d;
            }
        }
        Ok(Instance { n, kind: InstanceKind::Explicit, dist })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &InstanceKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            InstanceKind::G1 => "g1",
            InstanceKind::Grid { .. } => "grid",
            InstanceKind::Explicit => "explicit",
        }
    }

    /// Distance between 0-based vertices.
    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn positions(&self) -> Option<&[Point]> {
        match &self.kind {
            InstanceKind::Grid { positions, .. } => Some(positions),
            _ => None,
        }
    }

    pub fn grid_side(&self) -> Option<i64> {
        match &self.kind {
            InstanceKind::Grid { m, .. } => Some(*m),
            _ => None,
        }
    }

    /// Total traveling cost of a tour.
    pub fn cost(&self, tour: &Tour) -> Result<f64> {
        if tour.n() != self.n {
            return Err(invalid(format!("tour has {} vertices, instance has {}", tour.n(), self.n)));
        }
        Ok(self.cost_unchecked(tour.perm()))
    }

    #[inline]
    pub(crate) fn cost_unchecked(&self, perm: &[usize]) -> f64 {
        let n = perm.len();
        let mut total = 0.0;
        for i in 0..n {
            total += self.d(perm[i], perm[(i + 1) % n]);
        }
        total
    }

    /// Hull structure, for grid instances only.
    pub fn grid_meta(&self) -> Option<GridMeta> {
        let InstanceKind::Grid { m, positions, .. } = &self.kind else {
            return None;
        };
        let hull = convex_hull(positions).expect("grid instances have >= 3 non-collinear points");
        Some(GridMeta { m: *m, interior_count: self.n - hull.len(), hull })
    }

    /// The known optimum for analytic families (`G1`).
    pub fn known_optimum(&self) -> Option<Tour> {
        match self.kind {
            InstanceKind::G1 => Some(Tour::identity(self.n)),
            _ => None,
        }
    }

    pub fn to_file(&self) -> InstanceFile {
        match &self.kind {
            InstanceKind::G1 => {
                InstanceFile { kind: "g1".into(), n: self.n, m: None, positions: None, matrix: None, seed: None }
            }
            InstanceKind::Grid { m, positions, seed } => InstanceFile {
                kind: "grid".into(),
                n: self.n,
                m: Some(*m),
                positions: Some(positions.clone()),
                matrix: None,
                seed: *seed,
            },
            InstanceKind::Explicit => InstanceFile {
                kind: "explicit".into(),
                n: self.n,
                m: None,
                positions: None,
                matrix: Some((0..self.n).map(|i| (0..self.n).map(|j| self.d(i, j)).collect()).collect()),
                seed: None,
            },
        }
    }

    pub fn from_file(file: InstanceFile) -> Result<Self> {
        let inst = match file.kind.as_str() {
            "g1" => Instance::g1(file.n)?,
            "grid" => {
                let m = file.m.ok_or_else(|| invalid("grid instance requires \"m\""))?;
                let positions = file.positions.ok_or_else(|| invalid("grid instance requires \"positions\""))?;
                Instance::grid(m, positions, file.seed)?
            }
            "explicit" => {
                let matrix = file.matrix.ok_or_else(|| invalid("explicit instance requires \"matrix\""))?;
                Instance::explicit(matrix)?
            }
            other => return Err(invalid(format!("unknown instance kind {other:?}"))),
        };
        if inst.n != file.n {
            return Err(invalid(format!("declared n={} but data describes n={}", file.n, inst.n)));
        }
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("instance serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Instance::from_file(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Instance::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// SHA-256 of the compact JSON encoding, hex encoded.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

/// On-disk JSON schema for instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub kind: String,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<Point>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

pub fn make_g1(n: usize) -> Result<Instance> {
    Instance::g1(n)
}

fn check_grid_args(n: usize, m: i64) -> Result<()> {
    if n < 3 {
        return Err(invalid(format!("grid instance needs n >= 3, got {n}")));
    }
    if m < 1 || 2 * m < n as i64 {
        return Err(invalid(format!("grid side m={m} too small for n={n} (need m >= n/2)")));
    }
    Ok(())
}

fn collinear_with_any(points: &[Point], p: Point) -> bool {
    for a in 0..points.len() {
        for b in a + 1..points.len() {
            if collinear(points[a], points[b], p) {
                return true;
            }
        }
    }
    false
}

/// Uniform rejection sampling of `n` distinct lattice points in `[0, m]^2`
/// with no three collinear. Deterministic in `(n, m, seed)`.
pub fn make_grid(n: usize, m: i64, seed: u64) -> Result<(Instance, GridMeta)> {
    make_grid_capped(n, m, seed, GRID_ATTEMPT_CAP)
}

fn make_grid_capped(n: usize, m: i64, seed: u64, cap: u64) -> Result<(Instance, GridMeta)> {
    check_grid_args(n, m)?;
    let mut rng = rng_from_seed(seed);
    let mut points: Vec<Point> = Vec::with_capacity(n);
    let mut attempts = 0u64;
    while points.len() < n {
        if attempts >= cap {
            return Err(Error::GenerationFailed {
                attempts,
                reason: format!("placed only {} of {n} points on the {m}x{m} grid", points.len()),
            });
        }
        attempts += 1;
        let p = Point::new(rng.random_range(0..=m), rng.random_range(0..=m));
        if points.contains(&p) || collinear_with_any(&points, p) {
            continue;
        }
        points.push(p);
    }
    let inst = Instance::grid(m, points, Some(seed))?;
    let meta = inst.grid_meta().expect("grid instance");
    Ok((inst, meta))
}

/// Grid instance with exactly `interior` vertices strictly inside the convex
/// hull of the others.
///
/// Hull vertices are a random subset of the strict corners of the lattice
/// points inside the disc inscribed in `[0, m]^2`; interior vertices are then
/// rejection-sampled inside that polygon, keeping no three collinear.
pub fn make_grid_with_interior(n: usize, m: i64, interior: usize, seed: u64) -> Result<(Instance, GridMeta)> {
    check_grid_args(n, m)?;
    if interior + 3 > n {
        return Err(invalid(format!("need at least 3 hull vertices, got n={n} with {interior} interior")));
    }
    let mut rng = rng_from_seed(seed);
    let boundary = n - interior;

    // Lattice points in the disc of diameter m centred in the square.
    let disc: Vec<Point> = (0..=m)
        .flat_map(|x| (0..=m).map(move |y| Point::new(x, y)))
        .filter(|p| {
            let dx = 2 * p.x - m;
            let dy = 2 * p.y - m;
            dx * dx + dy * dy <= m * m
        })
        .collect();
    let corners: Vec<Point> = convex_hull(&disc)?.into_iter().map(|i| disc[i]).collect();
    if corners.len() < boundary {
        return Err(Error::GenerationFailed {
            attempts: 0,
            reason: format!("a {m}x{m} grid offers only {} convex-position points, need {boundary}", corners.len()),
        });
    }

    // Partial Fisher-Yates: a uniform subset of corners, kept in hull order.
    let mut idx: Vec<usize> = (0..corners.len()).collect();
    for i in 0..boundary {
        let j = rng.random_range(i..idx.len());
        idx.swap(i, j);
    }
    let mut chosen: Vec<usize> = idx[..boundary].to_vec();
    chosen.sort_unstable();
    let polygon: Vec<Point> = chosen.iter().map(|&i| corners[i]).collect();

    let mut points = polygon.clone();
    let mut attempts = 0u64;
    while points.len() < n {
        if attempts >= GRID_ATTEMPT_CAP {
            return Err(Error::GenerationFailed {
                attempts,
                reason: format!("placed only {} of {interior} interior points", points.len() - boundary),
            });
        }
        attempts += 1;
        let p = Point::new(rng.random_range(0..=m), rng.random_range(0..=m));
        if !strictly_inside(&polygon, p) || points.contains(&p) || collinear_with_any(&points, p) {
            continue;
        }
        points.push(p);
    }

    // Shuffle labels so hull order does not coincide with label order.
    for i in (1..points.len()).rev() {
        let j = rng.random_range(0..=i);
        points.swap(i, j);
    }

    let inst = Instance::grid(m, points, Some(seed))?;
    let meta = inst.grid_meta().expect("grid instance");
    debug_assert_eq!(meta.interior_count, interior);
    Ok((inst, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g1_optimum_cost() {
        let inst = make_g1(5).unwrap();
        let t = Tour::from_labels(&[1, 2, 3, 4, 5]).unwrap();
        assert_eq!(inst.cost(&t).unwrap(), 5.0);
    }

    #[test]
    fn g1_three_shared_edges() {
        let inst = make_g1(5).unwrap();
        let t = Tour::from_labels(&[1, 2, 3, 5, 4]).unwrap();
        assert_eq!(inst.cost(&t).unwrap(), 13.0);
    }

    #[test]
    fn g1_n4_direct_sum() {
        // (1,3,2,4): edges 1-3 (4), 3-2 (1), 2-4 (4), 4-1 (1).
        let inst = make_g1(4).unwrap();
        let t = Tour::from_labels(&[1, 3, 2, 4]).unwrap();
        let direct = inst.d(0, 2) + inst.d(2, 1) + inst.d(1, 3) + inst.d(3, 0);
        assert_eq!(direct, 10.0);
        assert_eq!(inst.cost(&t).unwrap(), 2.0 + 2.0 * 4.0);
    }

    #[test]
    fn g1_rejects_small_n() {
        assert!(matches!(make_g1(3), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn triangle_grid_has_no_interior() {
        for seed in 0..20 {
            let (_, meta) = make_grid(3, 2, seed).unwrap();
            assert_eq!(meta.interior_count, 0);
            assert_eq!(meta.hull.len(), 3);
        }
    }

    #[test]
    fn four_points_in_convex_position() {
        let pos = vec![Point::new(0, 0), Point::new(3, 1), Point::new(1, 3), Point::new(4, 4)];
        let inst = Instance::grid(4, pos, None).unwrap();
        let meta = inst.grid_meta().unwrap();
        assert_eq!(meta.interior_count, 0);
        assert_eq!(meta.hull.len(), 4);
    }

    #[test]
    fn grid_is_deterministic() {
        let (a, _) = make_grid(9, 10, 42).unwrap();
        let (b, _) = make_grid(9, 10, 42).unwrap();
        assert_eq!(a, b);
        let (c, _) = make_grid(9, 10, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn grid_rejects_small_side() {
        assert!(make_grid(10, 4, 1).is_err());
    }

    #[test]
    fn grid_generation_failure_is_reported() {
        let err = make_grid_capped(8, 4, 5, 6).unwrap_err();
        match err {
            Error::GenerationFailed { attempts, .. } => assert_eq!(attempts, 6),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn interior_counts_are_exact() {
        for (n, m, k) in [(6, 12, 0), (8, 16, 0), (10, 20, 0), (8, 16, 1), (9, 18, 2)] {
            for seed in 0..5 {
                let (inst, meta) = make_grid_with_interior(n, m, k, seed).unwrap();
                assert_eq!(inst.n(), n);
                assert_eq!(meta.interior_count, k, "n={n} m={m} seed={seed}");
            }
        }
    }

    #[test]
    fn collinear_positions_rejected() {
        let pos = vec![Point::new(0, 0), Point::new(1, 1), Point::new(2, 2), Point::new(0, 2)];
        assert!(Instance::grid(4, pos, None).is_err());
    }

    #[test]
    fn json_round_trip() {
        let (grid, _) = make_grid(7, 8, 3).unwrap();
        let g1 = make_g1(6).unwrap();
        let explicit =
            Instance::explicit(vec![vec![0.0, 0.1, 2.5], vec![0.1, 0.0, 1.0 / 3.0], vec![2.5, 1.0 / 3.0, 0.0]])
                .unwrap();
        for inst in [grid, g1, explicit] {
            let back = Instance::from_json(&inst.to_json()).unwrap();
            assert_eq!(back, inst);
            assert_eq!(back.to_json(), inst.to_json());
        }
    }

    #[test]
    fn json_schema_fields() {
        let v: serde_json::Value = serde_json::from_str(&make_g1(10).unwrap().to_json()).unwrap();
        assert_eq!(v["kind"], "g1");
        assert_eq!(v["n"], 10);
        assert!(Instance::from_json(r#"{"kind":"g1","n":10,"bogus":1}"#).is_err());
        assert!(Instance::from_json(r#"{"kind":"grid","n":3}"#).is_err());
    }
}
