//! Kantorovich (Wasserstein-1) distances between discrete measures.

pub mod metric_laws;
pub mod dual;
pub mod entropic;
pub mod hull;
pub mod lp;
pub mod network_simplex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surface::{Coords, DiscreteMeasure};

pub use dual::dual_certificate_check;
pub use entropic::{wasserstein1_entropic, EntropicOptions};
pub use hull::{dist_to_hull, HullCoordinates, HullReference, HullResult};

/// Default bound on `|source atoms| × |target atoms|` for the exact solver.
pub const DEFAULT_CAP: usize = 4_000_000;

/// A coupling between two discrete measures, by atom index.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransportPlan {
    pub pairs: Vec<(usize, usize, f64)>,
    pub cost: f64,
}

/// Full output of the exact solver.
#[derive(Clone, Debug)]
pub struct ExactResult {
    pub distance: f64,
    pub plan: TransportPlan,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub pivots: usize,
}

pub fn check_cap(m: usize, k: usize, cap: usize) -> Result<()> {
    let entries = m.saturating_mul(k);
    if entries > cap {
        Err(Error::SizeCap { entries, cap })
    } else {
        Ok(())
    }
}

/// Row-major ground-cost matrix between two coordinate lists.
pub fn cost_matrix_coords(a: &[Coords], b: &[Coords]) -> Vec<f64> {
    let mut c = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for z in b {
            c.push(x.dist(z));
        }
    }
    c
}

pub fn cost_matrix(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Vec<f64>> {
    if mu.tag() != nu.tag() {
        return Err(Error::TagMismatch(mu.tag(), nu.tag()));
    }
    Ok(cost_matrix_coords(&mu.coords(), &nu.coords()))
}

/// Solves the transportation problem after discarding zero-weight atoms.
///
/// Potentials of discarded atoms are filled in by c-transforms, and every
/// sink potential is replaced by the c-transform of the source potentials, so
/// the returned pair is exactly feasible: `φᵢ + ψⱼ ≤ cᵢⱼ` for all `i, j`.
pub fn solve_dense(supply: &[f64], demand: &[f64], cost: &[f64]) -> ExactResult {
    let (m, k) = (supply.len(), demand.len());
    let rows: Vec<usize> = (0..m).filter(|&i| supply[i] > 0.0).collect();
    let cols: Vec<usize> = (0..k).filter(|&j| demand[j] > 0.0).collect();
    let sub_s: Vec<f64> = rows.iter().map(|&i| supply[i]).collect();
    let sub_d: Vec<f64> = cols.iter().map(|&j| demand[j]).collect();
    let full = rows.len() == m && cols.len() == k;
    let owned;
    let sub_c: &[f64] = if full {
        cost
    } else {
        let mut c = Vec::with_capacity(rows.len() * cols.len());
        for &i in &rows {
            let r = &cost[i * k..(i + 1) * k];
            c.extend(cols.iter().map(|&j| r[j]));
        }
        owned = c;
        &owned
    };
    let sol = network_simplex::solve(&sub_s, &sub_d, sub_c);

    let mut phi = vec![f64::NAN; m];
    for (a, &i) in rows.iter().enumerate() {
        phi[i] = sol.phi[a];
    }
    let mut psi_sub = vec![f64::NAN; k];
    for (b, &j) in cols.iter().enumerate() {
        psi_sub[j] = sol.psi[b];
    }
    for i in 0..m {
        if phi[i].is_nan() {
            phi[i] = (0..k)
                .filter(|&j| !psi_sub[j].is_nan())
                .map(|j| cost[i * k + j] - psi_sub[j])
                .fold(f64::INFINITY, f64::min);
        }
    }
    let psi = c_transform(&phi, cost, k);

    let pairs: Vec<(usize, usize, f64)> =
        sol.flow.iter().map(|&(a, b, f)| (rows[a], cols[b], f)).collect();
    ExactResult {
        distance: sol.cost,
        plan: TransportPlan {
            pairs,
            cost: sol.cost,
        },
        phi,
        psi,
        pivots: sol.pivots,
    }
}

/// `ψⱼ = minᵢ (cᵢⱼ − φᵢ)`.
pub fn c_transform(phi: &[f64], cost: &[f64], k: usize) -> Vec<f64> {
    let mut psi = vec![f64::INFINITY; k];
    for (i, &p) in phi.iter().enumerate() {
        let row = &cost[i * k..(i + 1) * k];
        for (s, &c) in psi.iter_mut().zip(row) {
            let v = c - p;
            if v < *s {
                *s = v;
            }
        }
    }
    psi
}

pub fn wasserstein1_exact_capped(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cap: usize,
) -> Result<ExactResult> {
    if mu.tag() != nu.tag() {
        return Err(Error::TagMismatch(mu.tag(), nu.tag()));
    }
    check_cap(mu.len(), nu.len(), cap)?;
    let c = cost_matrix(mu, nu)?;
    Ok(solve_dense(mu.weights(), nu.weights(), &c))
}

/// Exact Kantorovich distance and an optimal plan, under the default size cap.
pub fn wasserstein1_exact(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> Result<(f64, TransportPlan)> {
    let r = wasserstein1_exact_capped(mu, nu, DEFAULT_CAP)?;
    Ok((r.distance, r.plan))
}

/// Exact distance only.
pub fn w1(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    Ok(wasserstein1_exact(mu, nu)?.0)
}
