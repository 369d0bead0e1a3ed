//! Plane-geometry checks on grid instances: crossing counts, repeated
//! uncrossing and bounded jump-move search.

use std::collections::{HashSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::tour::{apply_exchange, crossing_edge_pairs, find_intersection_removal, jump, Tour};

fn positions(instance: &Instance) -> Result<&[crate::geometry::Point]> {
    instance.positions().ok_or_else(|| Error::NotApplicable("geometry checks need a grid instance".into()))
}

/// Number of properly crossing pairs of tour edges.
pub fn count_intersections(instance: &Instance, tour: &Tour) -> Result<usize> {
    let pos = positions(instance)?;
    Ok(crossing_edge_pairs(pos, tour).count())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Uncrossing {
    pub tour: Tour,
    /// Cost decrease of every removal, in order.
    pub drops: Vec<f64>,
}

/// Removes crossings one at a time until the tour is intersection-free.
///
/// Fails with `InvalidMove` if a removal does not lower the cost, which
/// would also break termination.
pub fn uncross(instance: &Instance, tour: &Tour) -> Result<Uncrossing> {
    let mut cur = tour.clone();
    let mut cost = instance.cost(&cur)?;
    let mut drops = Vec::new();
    while let Some(mv) = find_intersection_removal(instance, &cur)? {
        let next = apply_exchange(&cur, &mv)?;
        let next_cost = instance.cost(&next)?;
        if next_cost >= cost {
            return Err(Error::InvalidMove(format!("removing a crossing changed cost {cost} -> {next_cost}")));
        }
        drops.push(cost - next_cost);
        cur = next;
        cost = next_cost;
    }
    Ok(Uncrossing { tour: cur, drops })
}

/// Fewest jump moves turning `from` into `to` (as cycles), searching up to
/// `max_moves` moves; `None` if more are needed.
pub fn jump_distance(from: &Tour, to: &Tour, max_moves: usize) -> Option<usize> {
    if from == to {
        return Some(0);
    }
    let n = from.n();
    let mut seen: HashSet<Tour> = HashSet::from([from.clone()]);
    let mut frontier: VecDeque<(Tour, usize)> = VecDeque::from([(from.clone(), 0)]);
    while let Some((t, d)) = frontier.pop_front() {
        if d == max_moves {
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let next = jump(&t, i, j).expect("positions in range");
                if next == *to {
                    return Some(d + 1);
                }
                if seen.insert(next.clone()) {
                    frontier.push_back((next, d + 1));
                }
            }
        }
    }
    None
}
