//! Grid estimators for `ε(h)` and `Δ_merg`, with their quantisation slacks.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{pushforward_logged, AreaMap, Rational};
use crate::error::{Error, Result};
use crate::ot::entropic::{entropic_with, EntropicOptions};
use crate::ot::hull::{dist_to_hull_with, HullOptions, HullReference};
use crate::ot::{check_cap, wasserstein1_exact_capped};
use crate::surface::{dist, sample_mu_y, DiscreteMeasure, SurfacePoint, SurfaceTag, Turn};

/// Children of a stratified atom one refinement level down.
pub trait Refinement: Sync {
    fn children(&self, index: usize, p: &SurfacePoint) -> Vec<SurfacePoint>;
}

/// Longitude atoms with spacing `1/m` split into two at `θ ± 1/(4m)`.
pub struct LongitudeSplit(pub usize);

impl Refinement for LongitudeSplit {
    fn children(&self, _index: usize, p: &SurfacePoint) -> Vec<SurfacePoint> {
        let d = Turn::from_f64(0.25 / self.0 as f64);
        vec![
            SurfacePoint::from_turn(p.theta.wrapping_sub(d), p.y, p.tag),
            SurfacePoint::from_turn(p.theta.wrapping_add(d), p.y, p.tag),
        ]
    }
}

/// Grid cells of size `1/m_θ × 2/m_y` split into four.
pub struct CellSplit(pub usize, pub usize);

impl Refinement for CellSplit {
    fn children(&self, _index: usize, p: &SurfacePoint) -> Vec<SurfacePoint> {
        let dt = Turn::from_f64(0.25 / self.0 as f64);
        let dy = 0.5 / self.1 as f64;
        let mut out = Vec::with_capacity(4);
        for t in [p.theta.wrapping_sub(dt), p.theta.wrapping_add(dt)] {
            for y in [p.y - dy, p.y + dy] {
                out.push(SurfacePoint::from_turn(t, y.clamp(-1.0, 1.0), p.tag));
            }
        }
        out
    }
}

/// Cost of the coupling sending each atom of `map_*μ` to the images of its
/// children, each child taking an equal share. It bounds
/// `d_K(map_*μ, map_*μ_fine)` from above.
pub fn split_refinement_cost(map: &AreaMap, mu: &DiscreteMeasure, split: &dyn Refinement) -> Result<f64> {
    let parts: Vec<Result<f64>> = mu
        .points()
        .par_iter()
        .zip(mu.weights().par_iter())
        .enumerate()
        .map(|(i, (p, &w))| {
            let img = map.eval(p)?;
            let kids = split.children(i, p);
            let mut s = 0.0;
            for c in &kids {
                s += dist(&img, &map.eval(c)?)?;
            }
            Ok(w * s / kids.len() as f64)
        })
        .collect();
    parts.into_iter().sum()
}

/// `d_K` between two pushforwards: exact within the cap, else the split bound.
pub fn refinement_slack(
    map: &AreaMap,
    coarse: &DiscreteMeasure,
    fine: &DiscreteMeasure,
    split: &dyn Refinement,
    cap: usize,
) -> Result<f64> {
    if coarse.len().saturating_mul(fine.len()) <= cap {
        let a = pushforward_logged(map, coarse)?.0;
        let b = pushforward_logged(map, fine)?.0;
        Ok(wasserstein1_exact_capped(&a, &b, cap)?.distance)
    } else {
        split_refinement_cost(map, coarse, split)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightValue {
    pub y: f64,
    pub distance: f64,
    pub coords: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsEstimate {
    pub eps: f64,
    pub argmax_y: f64,
    pub per_y: Vec<HeightValue>,
    pub atoms: usize,
    /// `d_K(h_*μ_y^m, h_*μ_y^{2m})` at the maximising height.
    pub proxy_slack: f64,
    pub reference_slack: f64,
    pub hull_gap_bound: f64,
    pub nudged_atoms: usize,
}

impl EpsEstimate {
    pub fn slack(&self) -> f64 {
        self.proxy_slack + self.reference_slack
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitValue {
    pub theta0: f64,
    pub y: f64,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaMergEstimate {
    pub value: f64,
    pub argmax: (f64, f64),
    pub per_point: Vec<OrbitValue>,
    pub orbit_length: String,
    pub atoms_per_orbit: usize,
    pub subsampled: bool,
    pub proxy_slack: f64,
    pub reference_slack: f64,
}

impl DeltaMergEstimate {
    pub fn slack(&self) -> f64 {
        self.proxy_slack + self.reference_slack
    }
}

/// Hull reference plus the options every estimate shares.
pub struct Estimator {
    tag: SurfaceTag,
    reference: HullReference,
    opts: HullOptions,
    reference_slack: f64,
    entropic_fallback: bool,
}

impl Estimator {
    pub fn new(
        tag: SurfaceTag,
        leb_grid: [usize; 2],
        ref_atoms: usize,
        resolution: usize,
        cap: usize,
        entropic_fallback: bool,
    ) -> Result<Estimator> {
        let reference = HullReference::standard(tag, leb_grid[0], leb_grid[1], ref_atoms, cap)?;
        let id = AreaMap::identity();
        let [leb, plus, minus] = reference.parts();
        let reference_slack = split_refinement_cost(&id, leb, &CellSplit(leb_grid[0], leb_grid[1]))?
            .max(split_refinement_cost(&id, plus, &LongitudeSplit(ref_atoms))?)
            .max(split_refinement_cost(&id, minus, &LongitudeSplit(ref_atoms))?);
        Ok(Estimator {
            tag,
            reference,
            opts: HullOptions {
                resolution,
                cap,
                ..HullOptions::default()
            },
            reference_slack,
            entropic_fallback,
        })
    }

    pub fn from_config(cfg: &super::RunConfig) -> Result<Estimator> {
        Estimator::new(
            cfg.surface,
            cfg.leb_grid,
            cfg.ref_atoms,
            cfg.hull_resolution,
            cfg.ot_cap,
            cfg.entropic_fallback,
        )
    }

    pub fn tag(&self) -> SurfaceTag {
        self.tag
    }

    pub fn cap(&self) -> usize {
        self.opts.cap
    }

    pub fn reference(&self) -> &HullReference {
        &self.reference
    }

    /// `d_K(Leb_ref, Leb_2ref)` and the same for the boundary references, maximised.
    pub fn reference_slack(&self) -> f64 {
        self.reference_slack
    }

    /// Distance to the hull and barycentric coordinates; an upper estimate.
    pub fn hull(&self, mu: &DiscreteMeasure) -> Result<(f64, [f64; 3], f64)> {
        let merged = mu.merged();
        match check_cap(merged.len(), self.reference.total_atoms(), self.opts.cap) {
            Ok(()) => {
                let r = dist_to_hull_with(&merged, &self.reference, &self.opts)?;
                Ok((r.distance, [r.coords.a, r.coords.b, r.coords.c], r.gap_bound))
            }
            Err(e) if !self.entropic_fallback => Err(e),
            Err(_) => self.hull_entropic(&merged),
        }
    }

    fn hull_entropic(&self, mu: &DiscreteMeasure) -> Result<(f64, [f64; 3], f64)> {
        let r = 4usize;
        let opts = EntropicOptions::for_diameter(self.tag.diameter());
        let [leb, plus, minus] = self.reference.parts();
        let mut best = (f64::INFINITY, [1.0, 0.0, 0.0]);
        for i in 0..=r {
            for j in 0..=r - i {
                let w = [i as f64 / r as f64, j as f64 / r as f64, (r - i - j) as f64 / r as f64];
                let target = DiscreteMeasure::mixture(&[(w[0], leb), (w[1], plus), (w[2], minus)], "mix")?;
                let d = entropic_with(mu, &target, &opts)?;
                if d < best.0 {
                    best = (d, w);
                }
            }
        }
        Ok((best.0, best.1, self.reference.lipschitz() / r as f64))
    }

    /// `sup_y d_K(h_*μ_y, C)` over `heights` with `atoms` atoms per longitude.
    pub fn epsilon(&self, h: &AreaMap, heights: &[f64], atoms: usize) -> Result<EpsEstimate> {
        if heights.is_empty() || atoms == 0 {
            return Err(Error::InvalidArgument("empty ε grid".into()));
        }
        let rows: Vec<Result<(HeightValue, f64, usize)>> = heights
            .par_iter()
            .map(|&y| {
                let mu = sample_mu_y(y, atoms, self.tag)?;
                let (pushed, log) = pushforward_logged(h, &mu)?;
                let (d, c, gap) = self.hull(&pushed)?;
                Ok((HeightValue { y, distance: d, coords: c }, gap, log.nudged.len()))
            })
            .collect();
        let mut per_y = Vec::with_capacity(heights.len());
        let mut gap = 0.0f64;
        let mut nudged = 0;
        for r in rows {
            let (v, g, n) = r?;
            gap = gap.max(g);
            nudged += n;
            per_y.push(v);
        }
        let best = per_y
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.distance.total_cmp(&b.1.distance).then(b.0.cmp(&a.0)))
            .map(|(_, v)| v.clone())
            .expect("non-empty");
        let coarse = sample_mu_y(best.y, atoms, self.tag)?;
        let fine = sample_mu_y(best.y, 2 * atoms, self.tag)?;
        let proxy_slack = refinement_slack(h, &coarse, &fine, &LongitudeSplit(atoms), self.opts.cap)?;
        Ok(EpsEstimate {
            eps: best.distance,
            argmax_y: best.y,
            per_y,
            atoms,
            proxy_slack,
            reference_slack: self.reference_slack,
            hull_gap_bound: gap,
            nudged_atoms: nudged,
        })
    }

    /// `Δ_merg(h ∘ R_α ∘ h⁻¹)` over orbit base points `θ₀ ∈ [0, 1/q)` and `heights`.
    pub fn delta_merg(
        &self,
        h: &AreaMap,
        alpha: &Rational,
        theta_count: usize,
        heights: &[f64],
        orbit_cap: usize,
        subsample: bool,
    ) -> Result<DeltaMergEstimate> {
        if theta_count == 0 || heights.is_empty() || orbit_cap == 0 {
            return Err(Error::InvalidArgument("empty Δ_merg grid".into()));
        }
        let q = alpha.denom().clone();
        let full = q.to_usize().filter(|&n| n <= orbit_cap);
        if full.is_none() && !subsample {
            return Err(Error::OrbitCap { q: q.to_string() });
        }
        let count = full.unwrap_or(orbit_cap);
        let bases: Vec<(Turn, f64)> = heights
            .iter()
            .flat_map(|&y| {
                let q = q.clone();
                (0..theta_count).map(move |i| {
                    let t = Turn::from_ratio(&BigInt::from(2 * i + 1), &(BigInt::from(2 * theta_count) * &q));
                    (t, y)
                })
            })
            .collect();
        let rows: Vec<Result<OrbitValue>> = bases
            .par_iter()
            .map(|&(t0, y)| {
                let mu = orbit_measure(self.tag, t0, y, &q, count)?;
                let pushed = pushforward_logged(h, &mu)?.0;
                let (d, _, _) = self.hull(&pushed)?;
                Ok(OrbitValue {
                    theta0: t0.to_f64(),
                    y,
                    distance: d,
                })
            })
            .collect();
        let per_point = rows.into_iter().collect::<Result<Vec<_>>>()?;
        let (bi, best) = per_point
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.distance.total_cmp(&b.1.distance).then(b.0.cmp(&a.0)))
            .expect("non-empty");
        let proxy_slack = if full.is_some() {
            0.0
        } else {
            let (t0, y) = bases[bi];
            let coarse = orbit_measure(self.tag, t0, y, &q, count)?;
            let fine = orbit_measure(self.tag, t0, y, &q, 2 * count)?;
            refinement_slack(h, &coarse, &fine, &OrbitSplit { q: q.clone(), count }, self.opts.cap)?
        };
        Ok(DeltaMergEstimate {
            value: best.distance,
            argmax: (best.theta0, best.y),
            per_point: per_point.clone(),
            orbit_length: q.to_string(),
            atoms_per_orbit: count,
            subsampled: full.is_none(),
            proxy_slack,
            reference_slack: self.reference_slack,
        })
    }
}

/// Uniform measure on `count` points `θ₀ + ⌊i·q/count⌋/q` of the orbit through `θ₀`.
pub fn orbit_measure(tag: SurfaceTag, t0: Turn, y: f64, q: &BigInt, count: usize) -> Result<DiscreteMeasure> {
    let w = 1.0 / count as f64;
    let atoms = (0..count)
        .map(|i| {
            let j: BigInt = BigInt::from(i) * q / BigInt::from(count);
            (SurfacePoint::from_turn(t0.wrapping_add(Turn::from_ratio(&j, q)), y, tag), w)
        })
        .collect();
    DiscreteMeasure::new(tag, atoms, format!("orbit({count})"))
}

/// Sub-orbit atom `i` of size `count` has children `2i, 2i + 1` of size `2·count`.
struct OrbitSplit {
    q: BigInt,
    count: usize,
}

impl Refinement for OrbitSplit {
    fn children(&self, index: usize, p: &SurfacePoint) -> Vec<SurfacePoint> {
        // The parent coincides with child 2i; child 2i + 1 is the next fine atom.
        let j: BigInt = BigInt::from(index) * &self.q / BigInt::from(self.count);
        let j2: BigInt = BigInt::from(2 * index + 1) * &self.q / BigInt::from(2 * self.count);
        let step = Turn::from_ratio(&(j2 - j), &self.q);
        vec![*p, SurfacePoint::from_turn(p.theta.wrapping_add(step), p.y, p.tag)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_slack_on_cylinder_is_the_cell_split() {
        let e = Estimator::new(SurfaceTag::Cylinder, [8, 8], 16, 16, 1_000_000, false).unwrap();
        let cell = ((1.0f64 / 32.0).powi(2) + (1.0f64 / 16.0).powi(2)).sqrt();
        assert!((e.reference_slack() - cell).abs() < 1e-12);
    }

    #[test]
    fn boundary_heights_are_in_the_hull() {
        for tag in [SurfaceTag::Cylinder, SurfaceTag::Sphere, SurfaceTag::Disk] {
            let e = Estimator::new(tag, [8, 8], 16, 16, 1_000_000, false).unwrap();
            let r = e.epsilon(&AreaMap::identity(), &[-1.0, 1.0], 16).unwrap();
            assert!(r.eps < 1e-12, "{tag:?} {}", r.eps);
        }
    }

    #[test]
    fn orbit_of_one_half_is_off_the_hull() {
        let e = Estimator::new(SurfaceTag::Cylinder, [8, 8], 16, 16, 1_000_000, false).unwrap();
        let half = Rational::from_ints(1, 2).unwrap();
        let d = e.delta_merg(&AreaMap::identity(), &half, 2, &[0.0, 0.5], 64, false).unwrap();
        assert!(d.value > 0.1);
        assert_eq!(d.atoms_per_orbit, 2);
        let big = Rational::from_ints(1, 1000).unwrap();
        assert!(matches!(
            e.delta_merg(&AreaMap::identity(), &big, 1, &[0.0], 64, false),
            Err(Error::OrbitCap { .. })
        ));
    }
}
