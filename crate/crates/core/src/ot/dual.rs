//! Kantorovich–Rubinstein certificates for transport plans.
//!
//! A plan is optimal iff there is a 1-Lipschitz `f` on the union of atoms with
//! `f(xᵢ) − f(zⱼ) = d(xᵢ, zⱼ)` on its support. These are difference
//! constraints, so `f` is obtained as shortest-path distances in a graph whose
//! edges are the metric (both directions) plus a negative edge per plan pair.
//! A negative cycle means no such `f` exists.

use crate::error::{Error, Result};
use crate::ot::TransportPlan;
use crate::surface::DiscreteMeasure;

/// Builds the potential and compares its dual value with the plan's cost.
///
/// Returns `Ok(false)` when no compatible potential exists or the dual value
/// differs from the primal cost by more than `1e−6`. Structurally invalid
/// plans (indices out of range, negative or non-finite masses) are errors.
pub fn dual_certificate_check(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    plan: &TransportPlan,
) -> Result<bool> {
    Ok(certificate_potential(mu, nu, plan)?.is_some_and(|(_, gap)| gap <= 1e-6))
}

/// Potential on `mu`'s atoms followed by `nu`'s atoms, and `|dual − primal|`.
pub fn certificate_potential(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    plan: &TransportPlan,
) -> Result<Option<(Vec<f64>, f64)>> {
    if mu.tag() != nu.tag() {
        return Err(Error::TagMismatch(mu.tag(), nu.tag()));
    }
    let (m, k) = (mu.len(), nu.len());
    for &(i, j, f) in &plan.pairs {
        if i >= m || j >= k {
            return Err(Error::InfeasiblePlan(format!("pair ({i}, {j}) out of range")));
        }
        if !(f.is_finite() && f >= 0.0) {
            return Err(Error::InfeasiblePlan(format!("mass {f} on pair ({i}, {j})")));
        }
    }
    let coords: Vec<_> = mu.coords().into_iter().chain(nu.coords()).collect();
    let n = m + k;
    let mut d = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            d[a * n + b] = coords[a].dist(&coords[b]);
        }
    }
    let support: Vec<(usize, usize)> = plan
        .pairs
        .iter()
        .filter(|p| p.2 > 0.0)
        .map(|&(i, j, _)| (i, m + j))
        .collect();

    // Bellman–Ford from a virtual source joined to every node at weight 0.
    let mut f = vec![0.0f64; n];
    let tol = 1e-12;
    let mut converged = false;
    for _ in 0..=n {
        let mut changed = false;
        for a in 0..n {
            let fa = f[a];
            let row = &d[a * n..(a + 1) * n];
            for (b, &w) in row.iter().enumerate() {
                if fa + w < f[b] - tol {
                    f[b] = fa + w;
                    changed = true;
                }
            }
        }
        for &(i, z) in &support {
            let w = -d[i * n + z];
            if f[i] + w < f[z] - tol {
                f[z] = f[i] + w;
                changed = true;
            }
        }
        if !changed {
            converged = true;
            break;
        }
    }
    if !converged {
        return Ok(None);
    }
    let dual: f64 = mu.weights().iter().zip(&f[..m]).map(|(w, v)| w * v).sum::<f64>()
        - nu.weights().iter().zip(&f[m..]).map(|(w, v)| w * v).sum::<f64>();
    let primal: f64 = plan.pairs.iter().map(|&(i, j, x)| x * d[i * n + m + j]).sum();
    Ok(Some((f, (dual - primal).abs())))
}
