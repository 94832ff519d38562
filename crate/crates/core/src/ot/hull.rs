//! Distance from a measure to `Conv(Leb, μ₊₁, μ₋₁)`.
//!
//! `F(w) = d_K(μ, w₀·Leb + w₁·μ₊ + w₂·μ₋)` is convex and piecewise linear on
//! the 2-simplex. We minimise it exactly over the lattice of resolution `r`
//! (points with coordinates in `ℤ/r`). Each exact solve at `w` yields dual
//! potentials that are feasible for every target, hence an affine minorant of
//! `F` on the whole simplex; lattice points whose minorant already reaches
//! the incumbent are never solved. The continuum minimum lies within
//! `L/r` of the lattice minimum, where `L` bounds the pairwise distances of
//! the three reference measures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ot::{check_cap, cost_matrix_coords, solve_dense, w1, DEFAULT_CAP};
use crate::surface::{sample_leb, sample_mu_y, Coords, DiscreteMeasure, SurfaceTag};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HullCoordinates {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HullResult {
    pub distance: f64,
    pub coords: HullCoordinates,
    /// Certified bound on `distance − (continuum minimum)`.
    pub gap_bound: f64,
    pub resolution: usize,
    pub evaluations: usize,
    pub pivots: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct HullOptions {
    pub resolution: usize,
    pub cap: usize,
    pub max_evaluations: usize,
}

impl Default for HullOptions {
    fn default() -> Self {
        HullOptions {
            resolution: 64,
            cap: DEFAULT_CAP,
            max_evaluations: 400,
        }
    }
}

/// The three reference measures, prepared for repeated hull queries.
#[derive(Clone, Debug)]
pub struct HullReference {
    tag: SurfaceTag,
    parts: [DiscreteMeasure; 3],
    coords: Vec<Coords>,
    offsets: [usize; 4],
    lipschitz: f64,
}

impl HullReference {
    pub fn new(
        leb: &DiscreteMeasure,
        plus: &DiscreteMeasure,
        minus: &DiscreteMeasure,
        cap: usize,
    ) -> Result<HullReference> {
        let tag = leb.tag();
        for m in [plus, minus] {
            if m.tag() != tag {
                return Err(Error::TagMismatch(tag, m.tag()));
            }
        }
        let parts = [leb.merged(), plus.merged(), minus.merged()];
        let mut offsets = [0usize; 4];
        let mut coords = Vec::new();
        for (i, p) in parts.iter().enumerate() {
            coords.extend(p.coords());
            offsets[i + 1] = coords.len();
        }
        let mut lipschitz = 0.0f64;
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let d = if parts[i].len() * parts[j].len() <= cap {
                w1(&parts[i], &parts[j])?
            } else {
                tag.diameter()
            };
            lipschitz = lipschitz.max(d);
        }
        Ok(HullReference {
            tag,
            parts,
            coords,
            offsets,
            lipschitz,
        })
    }

    /// Midpoint Leb grid and `m_ref`-atom boundary longitudes.
    pub fn standard(tag: SurfaceTag, leb_theta: usize, leb_y: usize, m_ref: usize, cap: usize) -> Result<HullReference> {
        HullReference::new(
            &sample_leb(leb_theta, leb_y, tag)?,
            &sample_mu_y(1.0, m_ref, tag)?,
            &sample_mu_y(-1.0, m_ref, tag)?,
            cap,
        )
    }

    pub fn tag(&self) -> SurfaceTag {
        self.tag
    }

    pub fn parts(&self) -> &[DiscreteMeasure; 3] {
        &self.parts
    }

    pub fn total_atoms(&self) -> usize {
        self.coords.len()
    }

    /// Upper bound for how fast `F` can change along the simplex (per unit of total variation).
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

/// Distance to the hull with default options.
pub fn dist_to_hull(
    mu: &DiscreteMeasure,
    leb: &DiscreteMeasure,
    mu_plus: &DiscreteMeasure,
    mu_minus: &DiscreteMeasure,
) -> Result<(f64, HullCoordinates)> {
    let opts = HullOptions::default();
    let reference = HullReference::new(leb, mu_plus, mu_minus, opts.cap)?;
    let r = dist_to_hull_with(mu, &reference, &opts)?;
    Ok((r.distance, r.coords))
}

pub fn dist_to_hull_with(mu: &DiscreteMeasure, reference: &HullReference, opts: &HullOptions) -> Result<HullResult> {
    if mu.tag() != reference.tag {
        return Err(Error::TagMismatch(mu.tag(), reference.tag));
    }
    if opts.resolution == 0 {
        return Err(Error::InvalidArgument("hull resolution must be positive".into()));
    }
    let mu = mu.merged();
    let k = reference.total_atoms();
    check_cap(mu.len(), k, opts.cap)?;
    let cost = cost_matrix_coords(&mu.coords(), &reference.coords);
    let ref_w: Vec<&[f64]> = reference.parts.iter().map(|p| p.weights()).collect();

    let r = opts.resolution;
    let lattice: Vec<(usize, usize)> = (0..=r).flat_map(|i| (0..=r - i).map(move |j| (i, j))).collect();
    let weights = |&(i, j): &(usize, usize)| -> [f64; 3] {
        let a = i as f64 / r as f64;
        let b = j as f64 / r as f64;
        let c = (r - i - j) as f64 / r as f64;
        [a, b, c]
    };
    let mut lb = vec![0.0f64; lattice.len()];
    let mut done = vec![false; lattice.len()];
    let mut best = f64::INFINITY;
    let mut best_at = 0usize;
    let mut evaluations = 0usize;
    let mut pivots = 0usize;

    let evaluate = |idx: usize,
                        lb: &mut [f64],
                        done: &mut [bool],
                        best: &mut f64,
                        best_at: &mut usize|
     -> usize {
        let w = weights(&lattice[idx]);
        let mut demand = Vec::with_capacity(k);
        for (p, ws) in ref_w.iter().enumerate() {
            demand.extend(ws.iter().map(|x| x * w[p]));
        }
        let sol = solve_dense(mu.weights(), &demand, &cost);
        done[idx] = true;
        if sol.distance < *best {
            *best = sol.distance;
            *best_at = idx;
        }
        let base: f64 = sol.phi.iter().zip(mu.weights()).map(|(a, b)| a * b).sum();
        let mut slope = [0.0; 3];
        for (p, s) in slope.iter_mut().enumerate() {
            let seg = &sol.psi[reference.offsets[p]..reference.offsets[p + 1]];
            *s = seg.iter().zip(ref_w[p]).map(|(a, b)| a * b).sum();
        }
        for (q, v) in lb.iter_mut().enumerate() {
            let wq = weights(&lattice[q]);
            let cut = base + slope[0] * wq[0] + slope[1] * wq[1] + slope[2] * wq[2];
            if cut > *v {
                *v = cut;
            }
        }
        sol.pivots
    };

    let vertices = [
        lattice.iter().position(|&p| p == (r, 0)).unwrap(),
        lattice.iter().position(|&p| p == (0, r)).unwrap(),
        lattice.iter().position(|&p| p == (0, 0)).unwrap(),
    ];
    for &v in &vertices {
        pivots += evaluate(v, &mut lb, &mut done, &mut best, &mut best_at);
        evaluations += 1;
    }
    let tol = 1e-11;
    loop {
        let next = (0..lattice.len())
            .filter(|&q| !done[q])
            .min_by(|&x, &y| lb[x].total_cmp(&lb[y]).then(x.cmp(&y)));
        match next {
            Some(q) if lb[q] < best - tol && evaluations < opts.max_evaluations => {
                pivots += evaluate(q, &mut lb, &mut done, &mut best, &mut best_at);
                evaluations += 1;
            }
            _ => break,
        }
    }
    let w = weights(&lattice[best_at]);
    Ok(HullResult {
        distance: best,
        coords: HullCoordinates {
            a: w[0],
            b: w[1],
            c: w[2],
        },
        gap_bound: reference.lipschitz / r as f64,
        resolution: r,
        evaluations,
        pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn members_of_the_hull() {
        let tag = SurfaceTag::Cylinder;
        let leb = sample_leb(6, 6, tag).unwrap();
        let p = sample_mu_y(1.0, 8, tag).unwrap();
        let m = sample_mu_y(-1.0, 8, tag).unwrap();
        let (d, c) = dist_to_hull(&leb, &leb, &p, &m).unwrap();
        assert!(d.abs() < 1e-12);
        assert_eq!(c, HullCoordinates { a: 1.0, b: 0.0, c: 0.0 });
        let mix = DiscreteMeasure::mixture(&[(0.5, &p), (0.5, &m)], "mix").unwrap();
        let (d, c) = dist_to_hull(&mix, &leb, &p, &m).unwrap();
        assert!(d.abs() < 1e-12);
        assert_eq!(c, HullCoordinates { a: 0.0, b: 0.5, c: 0.5 });
    }
}
