//! Reference implementations used to check the library.

use catalog_core::evaluation::Verdict;

/// Minimum total cost over every injective mapping of the smaller side into
/// the larger, by exhaustive enumeration. Each candidate is summed in row
/// order, the same order `assignment_cost` uses.
pub fn brute_force_min_cost(costs: &[Vec<f64>]) -> f64 {
    let n = costs.len();
    let m = costs.first().map_or(0, |r| r.len());
    if n == 0 || m == 0 {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    let mut col_of_row: Vec<Option<usize>> = vec![None; n];
    let mut used = vec![false; m];
    enumerate(costs, 0, n.min(m), &mut col_of_row, &mut used, &mut best);
    best
}

fn enumerate(
    costs: &[Vec<f64>],
    row: usize,
    need: usize,
    col_of_row: &mut [Option<usize>],
    used: &mut [bool],
    best: &mut f64,
) {
    let assigned = col_of_row.iter().filter(|c| c.is_some()).count();
    if assigned == need {
        let total: f64 = col_of_row
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.map(|j| costs[i][j]))
            .sum();
        *best = best.min(total);
        return;
    }
    if costs.len() - row < need - assigned {
        return;
    }
    // leave this row unassigned
    enumerate(costs, row + 1, need, col_of_row, used, best);
    for j in 0..used.len() {
        if !used[j] {
            used[j] = true;
            col_of_row[row] = Some(j);
            enumerate(costs, row + 1, need, col_of_row, used, best);
            col_of_row[row] = None;
            used[j] = false;
        }
    }
}

/// Sum of the interpolated precision at each recall step, where the
/// interpolated precision at step `k` is the best precision among all ranks
/// whose recall reaches `k / n_gt`.
pub fn envelope_ap(verdicts: &[Verdict], n_gt: usize) -> f64 {
    if n_gt == 0 {
        return if verdicts.is_empty() { 1.0 } else { 0.0 };
    }
    let mut tp_at = Vec::with_capacity(verdicts.len());
    let mut precision_at = Vec::with_capacity(verdicts.len());
    let mut tp = 0usize;
    for (rank, v) in verdicts.iter().enumerate() {
        if *v == Verdict::Tp {
            tp += 1;
        }
        tp_at.push(tp);
        precision_at.push(tp as f64 / (rank + 1) as f64);
    }
    let mut ap = 0.0;
    for k in 1..=tp {
        let best = (0..verdicts.len())
            .filter(|&r| tp_at[r] >= k)
            .map(|r| precision_at[r])
            .fold(0.0f64, f64::max);
        let step = k as f64 / n_gt as f64 - (k - 1) as f64 / n_gt as f64;
        ap += step * best;
    }
    ap
}
