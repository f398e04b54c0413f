//! Minimum-cost assignment on a dense matrix (Hungarian method with row and
//! column potentials, shortest augmenting path per row, O(n^3)).
//!
//! Rectangular inputs are padded to square, and infinite entries are
//! replaced, with a finite sentinel larger than any achievable sum of
//! finite costs. The solver therefore maximizes the number of finite
//! pairs first and minimizes their total second. Pairs landing on a
//! sentinel are dropped from the result.

/// Solves a square problem given row-major `cost` of side `n`.
/// Returns `row -> col`.
pub(crate) fn solve_square(cost: &[f64], n: usize) -> Vec<usize> {
    debug_assert_eq!(cost.len(), n * n);
    if n == 0 {
        return Vec::new();
    }
    let at = |i: usize, j: usize| cost[(i - 1) * n + (j - 1)];

    // 1-indexed; column 0 is a virtual start node
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
                let cur = at(i0, j) - u[i0] - v[j];
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

    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Solves a `rows x cols` problem where `+inf` marks forbidden pairs.
/// Returns matched `(row, col)` pairs sorted by row.
pub(crate) fn solve_rectangular(cost: &[f64], rows: usize, cols: usize) -> Vec<(usize, usize)> {
    debug_assert_eq!(cost.len(), rows * cols);
    let n = rows.max(cols);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let (lo, hi) = cost
        .iter()
        .filter(|c| c.is_finite())
        .fold((0.0f64, 0.0f64), |(lo, hi), &c| (lo.min(c), hi.max(c)));
    let sentinel = (n as f64 + 1.0) * (hi.abs() + lo.abs()) + 1.0;

    let mut square = vec![sentinel; n * n];
    for i in 0..rows {
        for j in 0..cols {
            let c = cost[i * cols + j];
            if c.is_finite() {
                square[i * n + j] = c;
            }
        }
    }
    solve_square(&square, n)
        .into_iter()
        .enumerate()
        .filter(|&(i, j)| i < rows && j < cols && cost[i * cols + j].is_finite())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_identity_optimum() {
        assert_eq!(solve_square(&[0.0, 1.0, 1.0, 0.0], 2), vec![0, 1]);
        assert_eq!(solve_square(&[1.0, 2.0, 2.0, 4.0], 2), vec![1, 0]);
    }

    #[test]
    fn rectangular_and_forbidden() {
        let inf = f64::INFINITY;
        // row 1 has no finite entry
        let m = [0.1, 0.5, 0.2, inf, inf, inf];
        assert_eq!(solve_rectangular(&m, 2, 3), vec![(0, 0)]);
        let m = [0.1, 0.5, 0.2, inf];
        assert_eq!(solve_rectangular(&m, 2, 2), vec![(0, 1), (1, 0)]);
        let all_inf = [inf; 4];
        assert!(solve_rectangular(&all_inf, 2, 2).is_empty());
        assert!(solve_rectangular(&[], 0, 5).is_empty());
    }

    #[test]
    fn negative_costs() {
        let m = [-3.0, -1.0, -2.0, -5.0];
        assert_eq!(solve_rectangular(&m, 2, 2), vec![(0, 0), (1, 1)]);
    }
}
