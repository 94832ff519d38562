//! Log-domain Sinkhorn with regularisation scaling.
//!
//! The returned value is the cost of the entropic plan after rounding it onto
//! the exact marginals, so it is always the cost of a genuine coupling and
//! therefore an upper approximation of the exact distance.

use crate::error::{Error, Result};
use crate::ot::cost_matrix;
use crate::surface::DiscreteMeasure;

#[derive(Clone, Copy, Debug)]
pub struct EntropicOptions {
    /// Final regularisation, in units of the ground cost.
    pub reg: f64,
    /// Iteration budget summed over all scaling levels.
    pub iters: usize,
    /// Target ℓ¹ marginal violation before rounding.
    pub tol: f64,
    /// Largest violation still accepted once the budget is spent. Rounding
    /// repairs the marginals, at a cost of at most this times the diameter.
    pub accept: f64,
}

impl EntropicOptions {
    /// Default schedule for a surface of diameter `diam`.
    pub fn for_diameter(diam: f64) -> EntropicOptions {
        EntropicOptions {
            reg: 2e-3 * diam,
            iters: 20_000,
            tol: 1e-9,
            accept: 1e-4,
        }
    }
}

fn lse(vals: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = vals.collect();
    let mx = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !mx.is_finite() {
        return mx;
    }
    mx + v.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
}

/// Entropic transport value between two measures.
pub fn wasserstein1_entropic(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    reg: f64,
    iters: usize,
) -> Result<f64> {
    let opts = EntropicOptions {
        reg,
        iters,
        tol: 1e-9,
        accept: 1e-4,
    };
    entropic_with(mu, nu, &opts)
}

pub fn entropic_with(mu: &DiscreteMeasure, nu: &DiscreteMeasure, opts: &EntropicOptions) -> Result<f64> {
    if opts.reg.is_nan() || opts.reg <= 0.0 {
        return Err(Error::InvalidArgument("regularisation must be positive".into()));
    }
    let c = cost_matrix(mu, nu)?;
    let (m, k) = (mu.len(), nu.len());
    let a = mu.weights();
    let b = nu.weights();
    if m == 1 || k == 1 {
        return Ok((0..m)
            .flat_map(|i| (0..k).map(move |j| (i, j)))
            .map(|(i, j)| a[i] * b[j] * c[i * k + j])
            .sum());
    }
    let la: Vec<f64> = a.iter().map(|x| x.ln()).collect();
    let lb: Vec<f64> = b.iter().map(|x| x.ln()).collect();
    let cmax = c.iter().copied().fold(0.0, f64::max).max(opts.reg);

    let mut f = vec![0.0; m];
    let mut g = vec![0.0; k];
    let mut eps = cmax;
    let mut used = 0usize;
    let mut violation;
    loop {
        eps = (eps * 0.5).max(opts.reg);
        let last = eps == opts.reg;
        loop {
            for i in 0..m {
                let row = &c[i * k..(i + 1) * k];
                f[i] = -eps * lse((0..k).map(|j| (g[j] - row[j]) / eps + lb[j])) ;
            }
            for j in 0..k {
                g[j] = -eps * lse((0..m).map(|i| (f[i] - c[i * k + j]) / eps + la[i]));
            }
            used += 1;
            // Columns are exact after the g-update; measure the row violation.
            violation = (0..m)
                .map(|i| {
                    let row = &c[i * k..(i + 1) * k];
                    let s: f64 = (0..k)
                        .map(|j| ((f[i] + g[j] - row[j]) / eps + la[i] + lb[j]).exp())
                        .sum();
                    (s - a[i]).abs()
                })
                .sum();
            let level_tol = if last { opts.tol } else { 1e-4 };
            if violation <= level_tol || used >= opts.iters {
                break;
            }
        }
        if last || used >= opts.iters {
            break;
        }
    }
    if violation > opts.tol.max(opts.accept) {
        return Err(Error::NonConvergence { violation });
    }

    let mut p = vec![0.0; m * k];
    for i in 0..m {
        for j in 0..k {
            p[i * k + j] = ((f[i] + g[j] - c[i * k + j]) / eps + la[i] + lb[j]).exp();
        }
    }
    Ok(round_to_marginals(&mut p, a, b, m, k)
        .iter()
        .zip(&c)
        .map(|(x, y)| x * y)
        .sum())
}

/// Projects a nearly-feasible plan onto the transport polytope.
fn round_to_marginals<'p>(p: &'p mut [f64], a: &[f64], b: &[f64], m: usize, k: usize) -> &'p [f64] {
    for i in 0..m {
        let s: f64 = p[i * k..(i + 1) * k].iter().sum();
        if s > a[i] {
            let r = a[i] / s;
            p[i * k..(i + 1) * k].iter_mut().for_each(|x| *x *= r);
        }
    }
    for j in 0..k {
        let s: f64 = (0..m).map(|i| p[i * k + j]).sum();
        if s > b[j] {
            let r = b[j] / s;
            (0..m).for_each(|i| p[i * k + j] *= r);
        }
    }
    let ea: Vec<f64> = (0..m)
        .map(|i| a[i] - p[i * k..(i + 1) * k].iter().sum::<f64>())
        .collect();
    let eb: Vec<f64> = (0..k).map(|j| b[j] - (0..m).map(|i| p[i * k + j]).sum::<f64>()).collect();
    let tot: f64 = ea.iter().sum();
    if tot > 0.0 {
        for i in 0..m {
            for j in 0..k {
                p[i * k + j] += ea[i].max(0.0) * eb[j].max(0.0) / tot;
            }
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{SurfacePoint, SurfaceTag};

    #[test]
    fn single_atoms_are_exact() {
        let x = SurfacePoint::new(0.1, 0.3, SurfaceTag::Cylinder).unwrap();
        let z = SurfacePoint::new(0.4, -0.1, SurfaceTag::Cylinder).unwrap();
        let a = DiscreteMeasure::new(SurfaceTag::Cylinder, vec![(x, 1.0)], "").unwrap();
        let b = DiscreteMeasure::new(SurfaceTag::Cylinder, vec![(z, 1.0)], "").unwrap();
        let v = wasserstein1_entropic(&a, &b, 0.01, 100).unwrap();
        assert_eq!(v, crate::surface::dist(&x, &z).unwrap());
    }

    #[test]
    fn zero_reg_rejected() {
        let x = SurfacePoint::new(0.1, 0.3, SurfaceTag::Cylinder).unwrap();
        let a = DiscreteMeasure::new(SurfaceTag::Cylinder, vec![(x, 1.0)], "").unwrap();
        assert!(wasserstein1_entropic(&a, &a, 0.0, 10).is_err());
    }
}
