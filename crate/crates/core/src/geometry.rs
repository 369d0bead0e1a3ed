//! Exact integer predicates on lattice points.
//!
//! All orientation tests use `i64` cross products, so they are exact for any
//! grid that fits comfortably in 32-bit coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i64; 2]", into = "[i64; 2]")]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub const fn new(x: i64, y: i64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        let dx = (self.x - other.x) as f64;
        let dy = (self.y - other.y) as f64;
        dx.hypot(dy)
    }
}

impl From<[i64; 2]> for Point {
    fn from(p: [i64; 2]) -> Self {
        Point::new(p[0], p[1])
    }
}

impl From<Point> for [i64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Twice the signed area of triangle `(o, a, b)`; positive for a
/// counterclockwise turn.
pub fn cross(o: Point, a: Point, b: Point) -> i64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

pub fn collinear(a: Point, b: Point, c: Point) -> bool {
    cross(a, b, c) == 0
}

/// True iff the open segments `a1-a2` and `b1-b2` cross at a point that is
/// not an endpoint of either. Segments sharing an endpoint never count.
pub fn segments_intersect(a1: Point, a2: Point, b1: Point, b2: Point) -> bool {
    let d1 = cross(a1, a2, b1).signum();
    let d2 = cross(a1, a2, b2).signum();
    let d3 = cross(b1, b2, a1).signum();
    let d4 = cross(b1, b2, a2).signum();
    d1 * d2 < 0 && d3 * d4 < 0
}

/// Counterclockwise convex hull (Andrew's monotone chain) returned as indices
/// into `points`. Collinear boundary points are dropped, so only strict
/// corners are reported.
pub fn convex_hull(points: &[Point]) -> Result<Vec<usize>> {
    if points.len() < 3 {
        return Err(invalid(format!("convex hull needs at least 3 points, got {}", points.len())));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by_key(|&i| (points[i].x, points[i].y));
    order.dedup_by_key(|i| points[*i]);
    if order.len() < 3 {
        return Err(invalid("convex hull needs at least 3 distinct points"));
    }

    let mut hull: Vec<usize> = Vec::with_capacity(2 * order.len());
    for &i in &order {
        while hull.len() >= 2 && cross(points[hull[hull.len() - 2]], points[hull[hull.len() - 1]], points[i]) <= 0 {
            hull.pop();
        }
        hull.push(i);
    }
    let lower_len = hull.len() + 1;
    for &i in order.iter().rev().skip(1) {
        while hull.len() >= lower_len
            && cross(points[hull[hull.len() - 2]], points[hull[hull.len() - 1]], points[i]) <= 0
        {
            hull.pop();
        }
        hull.push(i);
    }
    hull.pop();
    if hull.len() < 3 {
        return Err(invalid("all points are collinear"));
    }
    Ok(hull)
}

/// True iff `p` lies strictly inside the convex polygon given in
/// counterclockwise order.
pub fn strictly_inside(polygon: &[Point], p: Point) -> bool {
    let k = polygon.len();
    k >= 3 && (0..k).all(|i| cross(polygon[i], polygon[(i + 1) % k], p) > 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(raw: &[(i64, i64)]) -> Vec<Point> {
        raw.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    #[test]
    fn crossing_diagonals() {
        let p = pts(&[(0, 0), (2, 2), (0, 2), (2, 0)]);
        assert!(segments_intersect(p[0], p[1], p[2], p[3]));
    }

    #[test]
    fn disjoint_segments() {
        let p = pts(&[(0, 0), (1, 2), (3, 0), (4, 2)]);
        assert!(!segments_intersect(p[0], p[1], p[2], p[3]));
    }

    #[test]
    fn shared_endpoint_is_not_a_crossing() {
        let p = pts(&[(0, 0), (3, 1), (1, 3)]);
        assert!(!segments_intersect(p[0], p[1], p[1], p[2]));
        assert!(!segments_intersect(p[0], p[1], p[0], p[2]));
    }

    #[test]
    fn square_hull() {
        let p = pts(&[(0, 0), (2, 0), (2, 2), (0, 2)]);
        let mut hull = convex_hull(&p).unwrap();
        assert_eq!(hull.len(), 4);
        hull.sort();
        assert_eq!(hull, vec![0, 1, 2, 3]);
    }

    #[test]
    fn square_with_center() {
        let p = pts(&[(0, 0), (2, 0), (2, 2), (0, 2), (1, 1)]);
        let hull = convex_hull(&p).unwrap();
        assert_eq!(hull.len(), 4);
        assert!(!hull.contains(&4));
        let poly: Vec<Point> = hull.iter().map(|&i| p[i]).collect();
        assert!(strictly_inside(&poly, p[4]));
    }

    #[test]
    fn hull_is_counterclockwise() {
        let p = pts(&[(0, 0), (3, 1), (1, 3), (4, 4)]);
        let hull = convex_hull(&p).unwrap();
        assert_eq!(hull.len(), 4);
        let k = hull.len();
        for i in 0..k {
            assert!(cross(p[hull[i]], p[hull[(i + 1) % k]], p[hull[(i + 2) % k]]) > 0);
        }
    }

    #[test]
    fn too_few_points() {
        assert!(convex_hull(&pts(&[(0, 0), (1, 1)])).is_err());
    }
}
