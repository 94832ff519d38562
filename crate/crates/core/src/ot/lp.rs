//! Small dense linear programs, used as an independent transport oracle.
//!
//! Two-phase tableau simplex with Bland's rule. Only meant for a few dozen
//! variables: the transportation polytope of two measures with at most six
//! atoms each.

/// Minimises `c·x` subject to `A x = b`, `x ≥ 0`; returns the optimum and a minimiser.
/// `None` when infeasible.
pub fn minimize(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<(f64, Vec<f64>)> {
    let rows = a.len();
    let n = c.len();
    let eps = 1e-12;
    // Tableau columns: n originals, `rows` artificials, then the right-hand side.
    let width = n + rows + 1;
    let mut t = vec![vec![0.0; width]; rows];
    for i in 0..rows {
        let sgn = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = sgn * a[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][width - 1] = sgn * b[i];
    }
    let mut basis: Vec<usize> = (n..n + rows).collect();

    let phase1: Vec<f64> = (0..n + rows).map(|j| if j >= n { 1.0 } else { 0.0 }).collect();
    run(&mut t, &mut basis, &phase1, n + rows, eps);
    let infeas: f64 = (0..rows)
        .filter(|&i| basis[i] >= n)
        .map(|i| t[i][width - 1])
        .sum();
    if infeas > 1e-9 {
        return None;
    }
    // Drive remaining artificials out of the basis, dropping redundant rows.
    let mut i = 0;
    while i < t.len() {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| t[i][j].abs() > 1e-9) {
                pivot(&mut t, &mut basis, i, j);
                i += 1;
            } else {
                t.remove(i);
                basis.remove(i);
            }
        } else {
            i += 1;
        }
    }
    for row in t.iter_mut() {
        row[n..n + rows].fill(0.0);
    }
    run(&mut t, &mut basis, c, n, eps);
    let mut x = vec![0.0; n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = t[i][width - 1];
        }
    }
    let val = x.iter().zip(c).map(|(a, b)| a * b).sum();
    Some((val, x))
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, col: usize) {
    let p = t[r][col];
    for v in t[r].iter_mut() {
        *v /= p;
    }
    let prow = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i != r {
            let f = row[col];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
            }
        }
    }
    basis[r] = col;
}

fn run(t: &mut [Vec<f64>], basis: &mut [usize], c: &[f64], ncols: usize, eps: f64) {
    let width = t.first().map_or(0, |r| r.len());
    loop {
        // Reduced costs c_j − c_B B⁻¹ A_j, Bland: smallest improving index.
        let entering = (0..ncols).find(|&j| {
            if basis.contains(&j) {
                return false;
            }
            let z: f64 = basis.iter().enumerate().map(|(i, &bv)| c[bv] * t[i][j]).sum();
            c[j] - z < -eps
        });
        let Some(col) = entering else { return };
        let mut best: Option<(usize, f64)> = None;
        for i in 0..t.len() {
            if t[i][col] > eps {
                let ratio = t[i][width - 1] / t[i][col];
                match best {
                    None => best = Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - 1e-15 || (ratio <= br + 1e-15 && basis[i] < basis[bi]) {
                            best = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((r, _)) = best else { return };
        pivot(t, basis, r, col);
    }
}

/// Exact transport cost by the dense LP over the full coupling polytope.
pub fn transport_cost(supply: &[f64], demand: &[f64], cost: &[f64]) -> Option<f64> {
    let (m, k) = (supply.len(), demand.len());
    let mut a = Vec::with_capacity(m + k);
    let mut b = Vec::with_capacity(m + k);
    for i in 0..m {
        let mut row = vec![0.0; m * k];
        for j in 0..k {
            row[i * k + j] = 1.0;
        }
        a.push(row);
        b.push(supply[i]);
    }
    for j in 0..k {
        let mut row = vec![0.0; m * k];
        for i in 0..m {
            row[i * k + j] = 1.0;
        }
        a.push(row);
        b.push(demand[j]);
    }
    // Tiny total-mass mismatches would make the LP infeasible; absorb them.
    let ts: f64 = supply.iter().sum();
    let td: f64 = demand.iter().sum();
    for bj in b.iter_mut().skip(m) {
        *bj *= ts / td;
    }
    minimize(&a, &b, cost).map(|r| r.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_lp() {
        // min −x − y  s.t. x + y + s = 4, x + 3y + t = 6.
        let a = vec![vec![1.0, 1.0, 1.0, 0.0], vec![1.0, 3.0, 0.0, 1.0]];
        let (v, x) = minimize(&a, &[4.0, 6.0], &[-1.0, -1.0, 0.0, 0.0]).unwrap();
        assert!((v + 4.0).abs() < 1e-12);
        assert!((x[0] + x[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible() {
        let a = vec![vec![1.0, 1.0]];
        assert!(minimize(&a, &[-1.0], &[1.0, 1.0]).is_none());
    }

    #[test]
    fn transport() {
        let v = transport_cost(&[0.5, 0.5], &[1.0], &[0.0, 2.0]).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }
}
