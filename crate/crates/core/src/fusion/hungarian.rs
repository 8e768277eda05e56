//! Kuhn-Munkres with potentials (O(n^3)) on a square cost matrix.

/// Minimum-cost perfect assignment of an `n x n` matrix given row-major.
/// Returns `assign[row] = col`.
pub fn min_cost_assignment(n: usize, cost: &[f64]) -> Vec<usize> {
    assert_eq!(cost.len(), n * n, "cost matrix must be square");
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays; column 0 is the virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
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
    let mut assign = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

/// Maximum total utility of a partial matching between `rows` and `cols`
/// where `util[r * cols + c]` is `None` for forbidden pairs. Returns the
/// matched pairs (only pairs with positive utility).
pub fn max_weight_matching(rows: usize, cols: usize, util: &[Option<f64>]) -> Vec<(usize, usize)> {
    let n = rows.max(cols);
    let mut cost = vec![0.0; n * n];
    for r in 0..rows {
        for c in 0..cols {
            if let Some(w) = util[r * cols + c] {
                if w > 0.0 {
                    cost[r * n + c] = -w;
                }
            }
        }
    }
    let assign = min_cost_assignment(n, &cost);
    assign
        .into_iter()
        .enumerate()
        .filter(|&(r, c)| r < rows && c < cols && util[r * cols + c].is_some_and(|w| w > 0.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_the_anti_diagonal_when_it_is_cheaper() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let a = min_cost_assignment(3, &cost);
        let total: f64 = a.iter().enumerate().map(|(r, &c)| cost[r * 3 + c]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn rectangular_utilities_leave_rows_unmatched() {
        let util = [Some(0.9), Some(0.8), None, Some(0.85)];
        let mut m = max_weight_matching(2, 2, &util);
        m.sort();
        assert_eq!(m, vec![(0, 0), (1, 1)]);
        let util = [Some(0.9), Some(0.2), Some(0.1)];
        assert_eq!(max_weight_matching(3, 1, &util), vec![(0, 0)]);
    }

    #[test]
    fn empty_matrix() {
        assert!(min_cost_assignment(0, &[]).is_empty());
        assert!(max_weight_matching(0, 3, &[]).is_empty());
    }
}
