//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use adwords_core::gen::Stream;
use adwords_core::model::AdwordsInstance;

/// Solves the square system `m·x = rhs` by Gaussian elimination with partial
/// pivoting; `None` when (numerically) singular.
pub fn solve_square(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() < 1e-11 {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in 0..n {
            if row != col {
                let f = m[row][col] / m[col][col];
                if f != 0.0 {
                    let pivot_row = m[col].clone();
                    for (x, p) in m[row][col..].iter_mut().zip(&pivot_row[col..]) {
                        *x -= f * p;
                    }
                    rhs[row] -= f * rhs[col];
                }
            }
        }
    }
    Some((0..n).map(|i| rhs[i] / m[i][i]).collect())
}

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    go(0, n, k, &mut Vec::with_capacity(k), f);
}

/// Maximum of `cᵀx` over `Ax ≤ b, x ≥ 0` by enumerating every vertex: each
/// choice of `n` tight constraints among the `m` rows and `n` bounds.
/// Assumes the feasible region is bounded. `None` when no vertex is feasible.
pub fn vertex_enumeration(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Option<f64> {
    let n = c.len();
    let m = b.len();
    if n == 0 {
        return b.iter().all(|&x| x >= -1e-9).then_some(0.0);
    }
    let constraint = |k: usize| -> (Vec<f64>, f64) {
        if k < m {
            (a[k].clone(), b[k])
        } else {
            let mut e = vec![0.0; n];
            e[k - m] = -1.0;
            (e, 0.0)
        }
    };
    let mut best: Option<f64> = None;
    combinations(m + n, n, &mut |tight| {
        let (rows, rhs): (Vec<_>, Vec<_>) = tight.iter().map(|&k| constraint(k)).unzip();
        let Some(x) = solve_square(rows, rhs) else { return };
        let feasible = x.iter().all(|&v| v >= -1e-9)
            && (0..m).all(|i| {
                let lhs: f64 = a[i].iter().zip(&x).map(|(p, q)| p * q).sum();
                lhs <= b[i] + 1e-9 * (1.0 + b[i].abs())
            });
        if feasible {
            let z: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
            best = Some(best.map_or(z, |b: f64| b.max(z)));
        }
    });
    best
}

/// A random LP `max cᵀx, Ax ≤ b, x ≥ 0` with entries in `[0, 1]`.
pub fn random_lp(rng: &mut Stream, vars: usize, rows: usize) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
    let c = (0..vars).map(|_| rng.unit()).collect();
    let a = (0..rows).map(|_| (0..vars).map(|_| rng.unit()).collect()).collect();
    let b = (0..rows).map(|_| rng.unit()).collect();
    (c, a, b)
}

/// Best integral assignment of queries to bidders (each query to at most one
/// bidder with a positive bid, budgets respected). Exponential; tiny inputs only.
pub fn best_integral_assignment(instance: &AdwordsInstance) -> f64 {
    fn go(inst: &AdwordsInstance, v: usize, spent: &mut [f64]) -> f64 {
        if v == inst.num_queries() {
            return 0.0;
        }
        let mut best = go(inst, v + 1, spent);
        for bid in inst.queries()[v].positive_bids() {
            let u = bid.bidder;
            if spent[u] + bid.amount <= inst.budget(u) + 1e-12 {
                spent[u] += bid.amount;
                best = best.max(bid.amount + go(inst, v + 1, spent));
                spent[u] -= bid.amount;
            }
        }
        best
    }
    go(instance, 0, &mut vec![0.0; instance.num_bidders()])
}
