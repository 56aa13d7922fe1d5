//! Minimum-cost bipartite assignment (Hungarian method with potentials).

/// Assigns each row to a distinct column minimizing the total cost. Works for
/// rectangular inputs; the smaller side is fully matched. Returns, per row,
/// the assigned column (or `None` if there are more rows than columns).
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = cost.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = cost[0].len();
    if rows <= cols {
        hungarian(rows, cols, |i, j| cost[i][j])
    } else {
        let by_col = hungarian(cols, rows, |i, j| cost[j][i]);
        let mut out = vec![None; rows];
        for (c, r) in by_col.into_iter().enumerate() {
            if let Some(r) = r {
                out[r] = Some(c);
            }
        }
        out
    }
}

/// `n ≤ m`; returns the column of each row.
fn hungarian(n: usize, m: usize, a: impl Fn(usize, usize) -> f64) -> Vec<Option<usize>> {
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=m {
                if !used[j] {
                    let cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
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
    let mut out = vec![None; n];
    for j in 1..=m {
        if p[j] != 0 {
            out[p[j] - 1] = Some(j - 1);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn total(cost: &[Vec<f64>], asg: &[Option<usize>]) -> f64 {
        asg.iter().enumerate().filter_map(|(i, j)| j.map(|j| cost[i][j])).sum()
    }

    fn brute(cost: &[Vec<f64>]) -> f64 {
        fn rec(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
            if row == cost.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..used.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[row][j] + rec(cost, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        rec(cost, 0, &mut vec![false; cost[0].len()])
    }

    #[test]
    fn greedy_trap() {
        let cost = vec![vec![1.0, 2.0], vec![1.1, 100.0]];
        let asg = min_cost_assignment(&cost);
        assert_eq!(asg, vec![Some(1), Some(0)]);
    }

    #[test]
    fn more_rows_than_columns() {
        let cost = vec![vec![5.0], vec![1.0], vec![3.0]];
        assert_eq!(min_cost_assignment(&cost), vec![None, Some(0), None]);
    }

    proptest! {
        #[test]
        fn optimal_against_brute_force(flat in proptest::collection::vec(0.0f64..10.0, 12)) {
            let cost: Vec<Vec<f64>> = flat.chunks(4).map(|c| c.to_vec()).collect();
            let asg = min_cost_assignment(&cost);
            prop_assert!((total(&cost, &asg) - brute(&cost)).abs() < 1e-9);
        }
    }
}
