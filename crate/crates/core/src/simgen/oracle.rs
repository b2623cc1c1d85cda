//! Exhaustive reference solvers used to check the fast algorithms.

use crate::error::{Result, TllError};
use crate::mrf::MrfEdge;

/// Largest smaller-side dimension accepted by [`brute_force_assign`].
pub const MAX_BRUTE_FORCE_DIM: usize = 8;
/// Largest joint state space accepted by [`brute_force_mrf_map`].
pub const MAX_MRF_STATES: u128 = 100_000;

/// Enumerates every partial one-to-one matching using only entries that are
/// finite and `>= min_link_score`, returning one with maximum total score.
pub fn brute_force_assign(scores: &[Vec<f64>], min_link_score: f64) -> Result<Vec<(usize, usize)>> {
    let rows = scores.len();
    let cols = scores.iter().map(Vec::len).max().unwrap_or(0);
    if rows.min(cols) > MAX_BRUTE_FORCE_DIM {
        return Err(TllError::MatrixTooLarge { rows, cols });
    }
    let at = |i: usize, j: usize| scores[i].get(j).copied().unwrap_or(f64::NEG_INFINITY);
    // Recurse over the smaller side.
    let transpose = rows > cols;
    let (n_outer, n_inner) = if transpose { (cols, rows) } else { (rows, cols) };
    let score = |o: usize, i: usize| if transpose { at(i, o) } else { at(o, i) };

    struct Search<'a> {
        n_outer: usize,
        n_inner: usize,
        score: &'a dyn Fn(usize, usize) -> f64,
        min: f64,
        used: Vec<bool>,
        current: Vec<(usize, usize)>,
        best: Vec<(usize, usize)>,
        best_total: f64,
    }

    fn go(s: &mut Search, outer: usize, total: f64) {
        if outer == s.n_outer {
            if total > s.best_total {
                s.best_total = total;
                s.best = s.current.clone();
            }
            return;
        }
        go(s, outer + 1, total);
        for inner in 0..s.n_inner {
            let e = (s.score)(outer, inner);
            if s.used[inner] || !e.is_finite() || e < s.min {
                continue;
            }
            s.used[inner] = true;
            s.current.push((outer, inner));
            go(s, outer + 1, total + e);
            s.current.pop();
            s.used[inner] = false;
        }
    }

    let mut s = Search {
        n_outer,
        n_inner,
        score: &score,
        min: min_link_score,
        used: vec![false; n_inner],
        current: Vec::new(),
        best: Vec::new(),
        best_total: f64::NEG_INFINITY,
    };
    go(&mut s, 0, 0.0);
    let mut pairs: Vec<(usize, usize)> = s
        .best
        .into_iter()
        .map(|(o, i)| if transpose { (i, o) } else { (o, i) })
        .collect();
    pairs.sort_unstable();
    Ok(pairs)
}

/// Product of every unary and pairwise factor for a joint assignment.
pub fn joint_score(unaries: &[Vec<f64>], edges: &[MrfEdge], states: &[usize]) -> f64 {
    let unary: f64 = unaries.iter().zip(states).map(|(u, &s)| u[s]).product();
    let pair: f64 = edges.iter().map(|e| e.psi[states[e.a]][states[e.b]]).product();
    unary * pair
}

/// Enumerates all joint states and returns one maximising [`joint_score`].
pub fn brute_force_mrf_map(unaries: &[Vec<f64>], edges: &[MrfEdge]) -> Result<Vec<usize>> {
    let space: u128 = unaries.iter().map(|u| u.len() as u128).product();
    if space > MAX_MRF_STATES {
        return Err(TllError::StateSpaceTooLarge(space));
    }
    if unaries.iter().any(Vec::is_empty) {
        return Err(TllError::InvalidConfig("every subset needs at least one state".into()));
    }
    let mut states = vec![0usize; unaries.len()];
    let mut best = states.clone();
    let mut best_score = f64::NEG_INFINITY;
    loop {
        let s = joint_score(unaries, edges, &states);
        if s > best_score {
            best_score = s;
            best = states.clone();
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == states.len() {
                return Ok(best);
            }
            states[k] += 1;
            if states[k] < unaries[k].len() {
                break;
            }
            states[k] = 0;
            k += 1;
        }
    }
}
