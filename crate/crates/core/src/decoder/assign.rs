//! Maximum-score one-to-one assignment of top vertices to bottom vertices.
//!
//! Each connected component of admissible pairs is turned into a square
//! cost matrix (`max - score`, padded with zero-score dummies) and solved with the O(n^3) shortest
//! augmenting path form of the Hungarian algorithm with row/column
//! potentials.

/// Pairs `(row, col)` of a maximum-total-score matching that only uses
/// entries with `score >= min_link_score`. Non-finite entries are never
/// matched. Output is sorted by row.
pub fn hungarian_assign(scores: &[Vec<f64>], min_link_score: f64) -> Vec<(usize, usize)> {
    let n_rows = scores.len();
    let n_cols = scores.iter().map(Vec::len).max().unwrap_or(0);
    let valid =
        |i: usize, j: usize| -> bool { scores[i].get(j).is_some_and(|&e| e.is_finite() && e >= min_link_score) };

    // The matching decomposes over connected components of the admissible
    // entries; rows and columns with no admissible entry are never matched.
    // Nodes 0..n_rows are rows, the rest columns.
    let mut parent: Vec<usize> = (0..n_rows + n_cols).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut touched = vec![false; n_rows + n_cols];
    for i in 0..n_rows {
        for j in 0..n_cols {
            if valid(i, j) {
                touched[i] = true;
                touched[n_rows + j] = true;
                let (a, b) = (find(&mut parent, i), find(&mut parent, n_rows + j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut components: std::collections::BTreeMap<usize, (Vec<usize>, Vec<usize>)> = Default::default();
    for node in (0..n_rows + n_cols).filter(|&n| touched[n]) {
        let root = find(&mut parent, node);
        let entry = components.entry(root).or_default();
        if node < n_rows {
            entry.0.push(node);
        } else {
            entry.1.push(node - n_rows);
        }
    }

    let mut out: Vec<(usize, usize)> = components
        .values()
        .flat_map(|(rows, cols)| solve_component(scores, rows, cols, &valid))
        .collect();
    out.sort_unstable();
    out
}

fn solve_component(
    scores: &[Vec<f64>],
    rows: &[usize],
    cols: &[usize],
    valid: &dyn Fn(usize, usize) -> bool,
) -> Vec<(usize, usize)> {
    let k = rows.len().max(cols.len());
    // A negative admissible score never improves the total, so it is
    // equivalent to leaving the pair unmatched.
    let weight = |r: usize, c: usize| -> f64 {
        match (rows.get(r), cols.get(c)) {
            (Some(&i), Some(&j)) if valid(i, j) => scores[i][j].max(0.0),
            _ => 0.0,
        }
    };
    let w_max = (0..k)
        .flat_map(|r| (0..k).map(move |c| (r, c)))
        .map(|(r, c)| weight(r, c))
        .fold(0.0, f64::max);
    let cost: Vec<Vec<f64>> = (0..k).map(|r| (0..k).map(|c| w_max - weight(r, c)).collect()).collect();

    solve_min_cost(&cost)
        .into_iter()
        .enumerate()
        .filter_map(|(r, c)| {
            let (&i, &j) = (rows.get(r)?, cols.get(c)?);
            (valid(i, j) && scores[i][j] >= 0.0).then_some((i, j))
        })
        .collect()
}

/// Minimum-cost perfect assignment on a square matrix; returns the column
/// assigned to each row.
fn solve_min_cost(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    // 1-based indices with slot 0 as the virtual source column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0usize;
        let mut min_v = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < min_v[j] {
                    min_v[j] = cur;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut col_of_row = vec![0usize; n];
    for j in 1..=n {
        if row_of_col[j] > 0 {
            col_of_row[row_of_col[j] - 1] = j - 1;
        }
    }
    col_of_row
}

/// Sum of the scores of the given pairs.
pub fn assignment_score(scores: &[Vec<f64>], pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(i, j)| scores[i][j]).sum()
}
