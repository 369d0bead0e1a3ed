//! Exact solvers for small instances.
//!
//! Both solvers return the lexicographically smallest canonical tour among
//! those whose cost is within [`TIE_RTOL`] of the optimum, so they agree on
//! the tour and not only on the cost.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::tour::Tour;

pub const HELD_KARP_MAX_N: usize = 22;
pub const BRUTE_FORCE_MAX_N: usize = 10;

/// Relative tolerance under which two tour costs count as tied.
pub const TIE_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMethod {
    HeldKarp,
    BruteForce,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OracleResult {
    pub optimal_cost: f64,
    pub optimal_tour: Tour,
    pub method: OracleMethod,
}

fn tol(opt: f64) -> f64 {
    TIE_RTOL * opt.abs().max(1.0)
}

/// `O(n^2 2^n)` dynamic program over subsets of `{2, ..., n}`.
pub fn held_karp(instance: &Instance) -> Result<OracleResult> {
    let n = instance.n();
    if n > HELD_KARP_MAX_N {
        return Err(Error::Capacity(format!("Held-Karp is limited to n <= {HELD_KARP_MAX_N}, got {n}")));
    }
    // Vertex v >= 1 is bit v - 1; dp[S * k + (v - 1)] is the cheapest path
    // from vertex 0 through exactly S ending at v.
    let k = n - 1;
    let full = (1usize << k) - 1;
    let mut dp = vec![f64::INFINITY; (full + 1) * k];
    for v in 0..k {
        dp[(1 << v) * k + v] = instance.d(0, v + 1);
    }
    for s in 1..=full {
        for v in 0..k {
            if s & (1 << v) == 0 {
                continue;
            }
            let cur = dp[s * k + v];
            if !cur.is_finite() {
                continue;
            }
            let mut rest = full & !s;
            while rest != 0 {
                let w = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let t = s | (1 << w);
                let cand = cur + instance.d(v + 1, w + 1);
                if cand < dp[t * k + w] {
                    dp[t * k + w] = cand;
                }
            }
        }
    }
    let opt = (0..k).map(|v| dp[full * k + v] + instance.d(v + 1, 0)).fold(f64::INFINITY, f64::min);

    // dp[S][v] also prices the reversed path v -> ... -> 0, i.e. the
    // cheapest completion from v through S \ {v}. Greedily take the smallest
    // next vertex that still admits an optimal completion.
    let eps = tol(opt);
    let mut perm = vec![0];
    let mut prefix = 0.0;
    let mut cur = 0;
    let mut remaining = full;
    while remaining != 0 {
        let mut bits = remaining;
        let next = loop {
            let w = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let step = prefix + instance.d(cur, w + 1);
            if step + dp[remaining * k + w] <= opt + eps || bits == 0 {
                break w;
            }
        };
        prefix += instance.d(cur, next + 1);
        cur = next + 1;
        remaining &= !(1 << next);
        perm.push(cur);
    }
    let tour = Tour::new(perm).expect("reconstruction yields a permutation");
    debug_assert!(tour.is_canonical());
    Ok(OracleResult {
        optimal_cost: instance.cost_unchecked(tour.perm()),
        optimal_tour: tour,
        method: OracleMethod::HeldKarp,
    })
}

/// Calls `f` on every Hamiltonian cycle of `K_n` exactly once, as canonical
/// 0-based permutations in lexicographic order.
pub fn for_each_cycle<F: FnMut(&[usize])>(n: usize, mut f: F) {
    if n < 3 {
        return;
    }
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        if perm[1] < perm[n - 1] {
            f(&perm);
        }
        if !next_permutation(&mut perm[1..]) {
            break;
        }
    }
}

fn next_permutation(a: &mut [usize]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let Some(i) = (0..a.len() - 1).rev().find(|&i| a[i] < a[i + 1]) else {
        return false;
    };
    let j = (i + 1..a.len()).rev().find(|&j| a[j] > a[i]).expect("successor exists");
    a.swap(i, j);
    a[i + 1..].reverse();
    true
}

/// Exhaustive search over all `(n-1)!/2` cycles.
pub fn brute_force_optimum(instance: &Instance) -> Result<OracleResult> {
    let n = instance.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::Capacity(format!("brute force is limited to n <= {BRUTE_FORCE_MAX_N}, got {n}")));
    }
    let mut opt = f64::INFINITY;
    for_each_cycle(n, |p| opt = opt.min(instance.cost_unchecked(p)));
    let eps = tol(opt);
    let mut best: Option<Vec<usize>> = None;
    for_each_cycle(n, |p| {
        if best.is_none() && instance.cost_unchecked(p) <= opt + eps {
            best = Some(p.to_vec());
        }
    });
    let tour = Tour::new(best.expect("at least one cycle")).expect("enumerated permutation");
    Ok(OracleResult {
        optimal_cost: instance.cost_unchecked(tour.perm()),
        optimal_tour: tour,
        method: OracleMethod::BruteForce,
    })
}

/// Whether two oracle results agree on cost (within the tie tolerance) and
/// on the tour.
pub fn agree(a: &OracleResult, b: &OracleResult) -> bool {
    (a.optimal_cost - b.optimal_cost).abs() <= tol(a.optimal_cost) && a.optimal_tour == b.optimal_tour
}
