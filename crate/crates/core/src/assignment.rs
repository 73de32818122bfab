//! Minimum-cost bipartite assignment (Hungarian method with potentials).

use nalgebra::DMatrix;

/// Optimal assignment for a `rows × cols` cost matrix with `rows <= cols`.
///
/// Returns, for each row, the column it is matched to. Costs must be
/// finite; use a large finite value to forbid a pair.
pub fn min_cost_assignment(cost: &DMatrix<f64>) -> Vec<usize> {
    let (n, m) = cost.shape();
    assert!(n <= m, "assignment needs rows <= cols, got {n} x {m}");
    if n == 0 {
        return vec![];
    }
    // 1-based arrays; column 0 is the virtual root of each augmenting search
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=m {
        if owner[j] != 0 {
            out[owner[j] - 1] = j - 1;
        }
    }
    out
}

/// Total cost of an assignment returned by [`min_cost_assignment`].
pub fn assignment_cost(cost: &DMatrix<f64>, assign: &[usize]) -> f64 {
    assign.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(cost: &DMatrix<f64>) -> f64 {
        fn rec(cost: &DMatrix<f64>, row: usize, used: &mut Vec<bool>) -> f64 {
            if row == cost.nrows() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..cost.ncols() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[(row, j)] + rec(cost, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        rec(cost, 0, &mut vec![false; cost.ncols()])
    }

    #[test]
    fn textbook_case() {
        let c = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0]);
        let a = min_cost_assignment(&c);
        assert_eq!(assignment_cost(&c, &a), 5.0);
    }

    #[test]
    fn empty_and_rectangular() {
        assert!(min_cost_assignment(&DMatrix::zeros(0, 3)).is_empty());
        let c = DMatrix::from_row_slice(2, 3, &[5.0, 1.0, 9.0, 1.0, 8.0, 2.0]);
        assert_eq!(min_cost_assignment(&c), vec![1, 0]);
    }

    proptest! {
        #[test]
        fn matches_brute_force(n in 1usize..6, extra in 0usize..2, vals in proptest::collection::vec(-10.0f64..10.0, 49)) {
            let m = n + extra;
            let c = DMatrix::from_fn(n, m, |i, j| vals[i * 7 + j]);
            let a = min_cost_assignment(&c);
            let mut seen = a.clone();
            seen.sort_unstable();
            seen.dedup();
            prop_assert_eq!(seen.len(), n);
            prop_assert!((assignment_cost(&c, &a) - brute_force(&c)).abs() < 1e-9);
        }
    }
}
