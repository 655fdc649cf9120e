//! Minimum-cost rectangular assignment.
//!
//! Rectangular matrices are padded to square with zero-cost dummy entries and
//! solved with the O(k³) shortest-augmenting-path form of the Hungarian
//! method. Among all optimal pairings the one whose sorted pair list is
//! lexicographically smallest is returned.

use crate::error::{Error, Result};

/// Relative slack used when deciding whether a candidate pairing is optimal.
const REL_TOLERANCE: f64 = 1e-9;

/// Solves the assignment problem on `costs` (`n` rows × `m` columns).
///
/// Returns `min(n, m)` `(row, col)` pairs sorted by row.
pub fn solve_assignment(costs: &[Vec<f64>]) -> Result<Vec<(usize, usize)>> {
    let n = costs.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let m = costs[0].len();
    for (i, row) in costs.iter().enumerate() {
        if row.len() != m {
            return Err(Error::Validation(format!(
                "cost matrix row {i} has {} columns, expected {m}",
                row.len()
            )));
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Validation(format!(
                "cost matrix row {i} holds {v}; costs must be finite and non-negative"
            )));
        }
    }
    if m == 0 {
        return Ok(Vec::new());
    }

    let all_rows: Vec<usize> = (0..n).collect();
    let all_cols: Vec<usize> = (0..m).collect();
    let optimum = min_cost(costs, &all_rows, &all_cols);
    let slack = REL_TOLERANCE * optimum.abs().max(1.0);

    let need = n.min(m);
    let mut chosen: Vec<(usize, usize)> = Vec::with_capacity(need);
    let mut fixed_cost = 0.0;
    let mut col_free = vec![true; m];
    let mut next_row = 0;

    while chosen.len() < need {
        let mut picked = None;
        'rows: for i in next_row..n {
            let rest_rows: Vec<usize> = (i + 1..n).collect();
            for j in (0..m).filter(|&j| col_free[j]) {
                let rest_cols: Vec<usize> = (0..m).filter(|&c| col_free[c] && c != j).collect();
                let rest_need = need - chosen.len() - 1;
                if rest_rows.len().min(rest_cols.len()) < rest_need {
                    continue;
                }
                let total = fixed_cost + costs[i][j] + min_cost(costs, &rest_rows, &rest_cols);
                if total <= optimum + slack {
                    picked = Some((i, j));
                    break 'rows;
                }
            }
        }
        let (i, j) = picked.expect("an optimal completion always exists");
        fixed_cost += costs[i][j];
        col_free[j] = false;
        next_row = i + 1;
        chosen.push((i, j));
    }
    Ok(chosen)
}

/// Total cost of a pairing, summed in row order.
pub fn assignment_cost(costs: &[Vec<f64>], pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(i, j)| costs[i][j]).sum()
}

/// Minimum total cost of pairing `min(|rows|, |cols|)` of the given rows and
/// columns injectively.
fn min_cost(costs: &[Vec<f64>], rows: &[usize], cols: &[usize]) -> f64 {
    if rows.is_empty() || cols.is_empty() {
        return 0.0;
    }
    let k = rows.len().max(cols.len());
    let mut square = vec![vec![0.0; k]; k];
    for (a, &r) in rows.iter().enumerate() {
        for (b, &c) in cols.iter().enumerate() {
            square[a][b] = costs[r][c];
        }
    }
    let row_of_col = hungarian_square(&square);
    row_of_col
        .iter()
        .enumerate()
        .filter(|&(b, &a)| a < rows.len() && b < cols.len())
        .map(|(b, &a)| square[a][b])
        .sum()
}

/// Square Hungarian method. Returns, for each column, its assigned row.
fn hungarian_square(a: &[Vec<f64>]) -> Vec<usize> {
    let n = a.len();
    // 1-based potentials; index 0 is the virtual start column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = a[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=n).map(|j| p[j] - 1).collect()
}
