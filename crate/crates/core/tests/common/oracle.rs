//! Independent oracles for the transport distance and the LP solver.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use robustmd_core::measures::{DiscretePrior, Grid};
use robustmd_core::optim::{solve_lp, LinearProgram, LpStatus, Relation};

pub fn random_prior(rng: &mut ChaCha8Rng, grid: &Grid) -> DiscretePrior {
    let mut w: Vec<f64> = (0..grid.len())
        .map(|_| {
            if rng.gen_bool(0.4) {
                0.0
            } else {
                rng.gen::<f64>()
            }
        })
        .collect();
    if w.iter().all(|x| *x == 0.0) {
        w[0] = 1.0;
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    DiscretePrior::new(grid, w).unwrap()
}

pub fn random_grid(rng: &mut ChaCha8Rng, n: usize) -> Grid {
    let mut pts = Vec::with_capacity(n);
    let mut t = rng.gen::<f64>();
    for _ in 0..n {
        pts.push(t);
        t += 0.05 + rng.gen::<f64>();
    }
    Grid::new(pts).unwrap()
}

/// Optimal transport cost between two priors as an explicit coupling LP.
pub fn transport_lp(a: &DiscretePrior, b: &DiscretePrior) -> f64 {
    let pts = a.grid().points();
    let n = pts.len();
    let cost = (0..n)
        .flat_map(|i| (0..n).map(move |j| (pts[i] - pts[j]).abs()))
        .collect();
    let mut lp = LinearProgram::new(cost);
    for i in 0..n {
        let mut row = vec![0.0; n * n];
        row[i * n..(i + 1) * n].iter_mut().for_each(|c| *c = 1.0);
        lp.add(row, Relation::Eq, a.weight(i));
    }
    for j in 0..n {
        let mut row = vec![0.0; n * n];
        (0..n).for_each(|i| row[i * n + j] = 1.0);
        lp.add(row, Relation::Eq, b.weight(j));
    }
    let sol = solve_lp(&lp).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    sol.value
}

/// Solves a square system by Gaussian elimination with partial pivoting.
pub fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..n {
                        a[r][c] -= f * a[col][c];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Minimum over all basic feasible points of `{x ≥ 0}` intersected with the
/// program's rows; `None` when no vertex is feasible.
pub fn vertex_enumeration(lp: &LinearProgram) -> Option<f64> {
    let n = lp.n_vars();
    // Every row as `a·x ≤ b` (equalities kept separately, always tight).
    let mut eqs = Vec::new();
    let mut ineqs = Vec::new();
    for row in &lp.constraints {
        match row.relation {
            Relation::Eq => eqs.push((row.coeffs.clone(), row.rhs)),
            Relation::Le => ineqs.push((row.coeffs.clone(), row.rhs)),
            Relation::Ge => ineqs.push((row.coeffs.iter().map(|c| -c).collect(), -row.rhs)),
        }
    }
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = -1.0;
        ineqs.push((e, 0.0));
    }
    if eqs.len() > n {
        return None;
    }
    let need = n - eqs.len();
    let mut best: Option<f64> = None;
    let mut pick: Vec<usize> = (0..need).collect();
    loop {
        let (mut a, mut b): (Vec<Vec<f64>>, Vec<f64>) = eqs.iter().cloned().unzip();
        for &p in &pick {
            a.push(ineqs[p].0.clone());
            b.push(ineqs[p].1);
        }
        if let Some(x) = solve_square(a, b) {
            let feasible = eqs.iter().all(|(c, r)| {
                (c.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() - r).abs() <= 1e-7
            }) && ineqs
                .iter()
                .all(|(c, r)| c.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= r + 1e-7);
            if feasible {
                let val: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                best = Some(best.map_or(val, |b: f64| b.min(val)));
            }
        }
        // Next combination in lexicographic order.
        let m = ineqs.len();
        let mut i = need;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] < m - need + i {
                pick[i] += 1;
                for j in i + 1..need {
                    pick[j] = pick[j - 1] + 1;
                }
                break;
            }
        }
        if need == 0 {
            return best;
        }
    }
}

pub fn random_lp(rng: &mut ChaCha8Rng) -> LinearProgram {
    let n = rng.gen_range(1..=10);
    let m = rng.gen_range(1..=5);
    let mut lp = LinearProgram::new((0..n).map(|_| rng.gen_range(-5.0..5.0)).collect());
    for _ in 0..m {
        let coeffs = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let rel = match rng.gen_range(0..5) {
            0 => Relation::Eq,
            1 | 2 => Relation::Ge,
            _ => Relation::Le,
        };
        lp.add(coeffs, rel, rng.gen_range(-2.0..4.0));
    }
    // Keeps the feasible region bounded.
    lp.add(vec![1.0; n], Relation::Le, rng.gen_range(1.0..10.0));
    lp
}
