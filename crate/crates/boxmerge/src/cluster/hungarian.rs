//! Minimum-cost assignment on rectangular matrices with `+inf` forbidden
//! pairs.

/// Solve the min-cost assignment problem for an `m x n` cost matrix.
///
/// Entries must be finite or `+inf`; `+inf` marks a forbidden pairing.
/// Rectangular inputs are padded to a square with a constant exceeding every
/// finite entry, so padding never distorts which real pairs are chosen.
/// Forbidden pairs are mapped to a sentinel larger than the sum of all
/// finite entries, which makes the solver first minimize the number of
/// forbidden pairs used and then the finite cost; any forbidden pair that
/// still ends up matched is dropped from the result.
///
/// Returns the matched `(row, col)` pairs sorted by row. The matching has at
/// most `min(m, n)` pairs; fewer when forbidden pairs were unavoidable.
///
/// Panics if the matrix is empty, ragged, or contains NaN or `-inf`.
pub fn hungarian_solve(cost: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let rows = cost.len();
    assert!(rows > 0, "cost matrix must have at least one row");
    let cols = cost[0].len();
    assert!(cols > 0, "cost matrix must have at least one column");

    let mut min_finite = f64::INFINITY;
    let mut max_finite = f64::NEG_INFINITY;
    let mut finite_span_sum = 0.0;
    for row in cost {
        assert_eq!(row.len(), cols, "cost matrix must be rectangular");
        for &c in row {
            assert!(!c.is_nan(), "cost entries must not be NaN");
            assert!(c != f64::NEG_INFINITY, "cost entries must not be -inf");
            if c.is_finite() {
                min_finite = min_finite.min(c);
                max_finite = max_finite.max(c);
            }
        }
    }
    // All-infinite matrices have nothing assignable.
    if !min_finite.is_finite() {
        return Vec::new();
    }
    for row in cost {
        for &c in row {
            if c.is_finite() {
                finite_span_sum += c - min_finite;
            }
        }
    }

    let dim = rows.max(cols);
    // Shift finite entries to be non-negative. One forbidden pair then costs
    // more than every finite entry combined, so the optimum uses as few
    // forbidden pairs as possible before minimizing finite cost.
    let forbidden = finite_span_sum + 1.0;
    let pad = (max_finite - min_finite) + 1.0;
    let mut a = vec![vec![pad; dim]; dim];
    for (i, row) in cost.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            a[i][j] = if c.is_finite() { c - min_finite } else { forbidden };
        }
    }

    let row_of_col = solve_square(&a, dim);

    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (j, &i) in row_of_col.iter().enumerate() {
        if i < rows && j < cols && cost[i][j].is_finite() {
            pairs.push((i, j));
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Total cost of an assignment under the given matrix.
pub fn assignment_cost(cost: &[Vec<f64>], pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(i, j)| cost[i][j]).sum()
}

/// Shortest augmenting path assignment (Jonker-Volgenant style potentials)
/// on a square matrix. Returns, for each column, the matched row.
fn solve_square(a: &[Vec<f64>], dim: usize) -> Vec<usize> {
    // 1-indexed arrays with a virtual column 0, the classic formulation.
    let mut u = vec![0.0f64; dim + 1];
    let mut v = vec![0.0f64; dim + 1];
    let mut p = vec![0usize; dim + 1]; // p[j] = row matched to column j
    let mut way = vec![0usize; dim + 1];

    for i in 1..=dim {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; dim + 1];
        let mut used = vec![false; dim + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=dim {
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
            for j in 0..=dim {
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
        // Augment along the stored path.
        while j0 != 0 {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        }
    }

    let mut row_of_col = vec![usize::MAX; dim];
    for j in 1..=dim {
        if p[j] != 0 {
            row_of_col[j - 1] = p[j] - 1;
        }
    }
    row_of_col
}

#[cfg(test)]
pub(crate) mod oracle {
    /// Exhaustive assignment oracle: enumerates every injective mapping of
    /// the smaller side into the larger, minimizing first the number of
    /// forbidden (`+inf`) pairs and then the finite cost. Returns
    /// `(forbidden_pairs_used, finite_cost)` of the optimum.
    pub fn brute_force_min(cost: &[Vec<f64>]) -> (usize, f64) {
        let rows = cost.len();
        let cols = cost[0].len();
        let transposed: Vec<Vec<f64>>;
        let c = if rows <= cols {
            cost
        } else {
            transposed = (0..cols)
                .map(|j| (0..rows).map(|i| cost[i][j]).collect())
                .collect();
            &transposed
        };
        let m = c.len();
        let n = c[0].len();
        let mut used = vec![false; n];
        let mut best = (usize::MAX, f64::INFINITY);
        fn rec(
            c: &[Vec<f64>],
            row: usize,
            used: &mut [bool],
            inf_count: usize,
            finite: f64,
            best: &mut (usize, f64),
        ) {
            if row == c.len() {
                if (inf_count, finite) < *best {
                    *best = (inf_count, finite);
                }
                return;
            }
            for j in 0..used.len() {
                if used[j] {
                    continue;
                }
                used[j] = true;
                let v = c[row][j];
                if v.is_finite() {
                    rec(c, row + 1, used, inf_count, finite + v, best);
                } else {
                    rec(c, row + 1, used, inf_count + 1, finite, best);
                }
                used[j] = false;
            }
        }
        rec(c, 0, &mut used, 0, 0.0, &mut best);
        let _ = (m, n);
        best
    }
}

#[cfg(test)]
mod tests {
    use super::oracle::brute_force_min;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_by_two_diagonal() {
        let cost = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        let pairs = hungarian_solve(&cost);
        assert_eq!(pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(assignment_cost(&cost, &pairs), 2.0);
    }

    #[test]
    fn one_by_one() {
        let pairs = hungarian_solve(&[vec![42.0]]);
        assert_eq!(pairs, vec![(0, 0)]);
    }

    #[test]
    fn forbidden_row_is_unassigned() {
        // Row 2 can only take column 2, but rows 0 and 1 force it out: the
        // only completion for row 2 is forbidden.
        let inf = f64::INFINITY;
        let cost = vec![
            vec![1.0, 5.0, inf],
            vec![5.0, 1.0, inf],
            vec![inf, inf, inf],
        ];
        let pairs = hungarian_solve(&cost);
        assert_eq!(pairs, vec![(0, 0), (1, 1)]);
        let (oracle_inf, oracle_cost) = brute_force_min(&cost);
        assert_eq!(oracle_inf, 1);
        assert_eq!(assignment_cost(&cost, &pairs), oracle_cost);
    }

    #[test]
    fn rectangular_wide_and_tall() {
        let cost = vec![vec![1.0, 2.0, 3.0], vec![6.0, 5.0, 4.0]];
        let pairs = hungarian_solve(&cost);
        assert_eq!(pairs.len(), 2);
        assert_eq!(assignment_cost(&cost, &pairs), 5.0);

        let tall = vec![vec![1.0], vec![0.5], vec![2.0]];
        let pairs = hungarian_solve(&tall);
        assert_eq!(pairs, vec![(1, 0)]);
    }

    #[test]
    fn all_infinite_matrix_matches_nothing() {
        let inf = f64::INFINITY;
        assert!(hungarian_solve(&[vec![inf, inf], vec![inf, inf]]).is_empty());
    }

    /// Dyadic-rational costs keep every partial sum exact in f64, so solver
    /// and oracle totals can be compared with `==`.
    fn random_matrix(rng: &mut ChaCha8Rng, with_inf: bool) -> Vec<Vec<f64>> {
        let rows = rng.gen_range(1..=7);
        let cols = rng.gen_range(1..=7);
        (0..rows)
            .map(|_| {
                (0..cols)
                    .map(|_| {
                        if with_inf && rng.gen_bool(0.2) {
                            f64::INFINITY
                        } else {
                            rng.gen_range(-1024i32..=1024) as f64 / 16.0
                        }
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn matches_brute_force_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for case in 0..300 {
            let cost = random_matrix(&mut rng, case % 2 == 0);
            let pairs = hungarian_solve(&cost);
            let (oracle_inf, oracle_cost) = brute_force_min(&cost);
            let expected_pairs = cost.len().min(cost[0].len()) - oracle_inf;
            assert_eq!(pairs.len(), expected_pairs, "matrix {cost:?}");
            assert_eq!(assignment_cost(&cost, &pairs), oracle_cost, "matrix {cost:?}");
        }
    }
}
