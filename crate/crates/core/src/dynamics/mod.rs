//! Area-preserving maps: rotations, box shuffles, their compositions and
//! inverses, together with pushforwards and empirical measures.

pub mod map;
pub mod rational;
pub mod shuffle;

use rayon::prelude::*;
use serde::Serialize;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bicurve::{Bicurve, Sign};
use crate::error::{Error, Result};
use crate::surface::{DiscreteMeasure, SurfacePoint, SurfaceTag, Turn};

pub use map::AreaMap;
pub use rational::Rational;
pub use shuffle::{BoxShuffle, Piece, Schedule, ShuffleParams};

/// Displacement applied to an atom that hits a seam, in turns.
pub const SEAM_NUDGE: f64 = 1e-9;
const NUDGE_ATTEMPTS: u32 = 8;
const PAR_THRESHOLD: usize = 256;

/// Builds the shuffle for rotation denominator `q` and target `eps` with the default schedule.
pub fn build_box_shuffle(q: u64, eps: f64) -> Result<(AreaMap, Bicurve)> {
    build_box_shuffle_with(q, eps, &Schedule::default())
}

pub fn build_box_shuffle_with(q: u64, eps: f64, schedule: &Schedule) -> Result<(AreaMap, Bicurve)> {
    let params = schedule.params(q, eps)?;
    let bicurve = params.bicurve.clone();
    Ok((AreaMap::box_shuffle(params)?, bicurve))
}

/// Number of `count` seeded points of the outer region `O(γ)` that `map` moves.
///
/// Points are drawn at least one band height away from the bicurve, half above
/// `γ₊` and half below `γ₋`; "fixed" means bit-identical coordinates.
pub fn outer_region_moved(map: &AreaMap, bicurve: &Bicurve, kappa: f64, tag: SurfaceTag, count: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0de7);
    let w = bicurve.band_height(kappa);
    let mut moved = 0;
    for i in 0..count {
        let th = Turn::from_f64(rng.gen());
        let u: f64 = rng.gen();
        let y = if i % 2 == 0 {
            let edge = bicurve.curve_height(Sign::Plus, th) + w;
            edge + u * (1.0 - edge)
        } else {
            let edge = bicurve.curve_height(Sign::Minus, th) - w;
            edge - u * (edge + 1.0)
        };
        let p = SurfacePoint::from_turn(th, y.clamp(-1.0, 1.0), tag);
        match map.eval(&p) {
            Ok(x) if x.theta == p.theta && x.y.to_bits() == p.y.to_bits() => {}
            _ => moved += 1,
        }
    }
    moved
}

/// Atoms that were displaced off a seam during a pushforward.
#[derive(Clone, Debug, Default, Serialize)]
pub struct PushforwardLog {
    /// `(atom index, weight, displacement in turns)`.
    pub nudged: Vec<(usize, f64, f64)>,
}

impl PushforwardLog {
    pub fn nudged_mass(&self) -> f64 {
        self.nudged.iter().map(|n| n.1).sum()
    }
}

fn eval_nudged(map: &AreaMap, p: &SurfacePoint) -> Result<(SurfacePoint, f64)> {
    match map.eval(p) {
        Ok(x) => Ok((x, 0.0)),
        Err(Error::SeamHit { .. }) => {
            for t in 1..=NUDGE_ATTEMPTS {
                let shift = SEAM_NUDGE * t as f64;
                let moved = SurfacePoint::from_turn(p.theta.wrapping_add(Turn::from_f64(shift)), p.y, p.tag);
                if let Ok(x) = map.eval(&moved) {
                    return Ok((x, shift));
                }
            }
            map.eval(p).map(|x| (x, 0.0))
        }
        Err(e) => Err(e),
    }
}

/// Atomwise image of `mu`; atoms on seams are nudged and logged.
pub fn pushforward_logged(map: &AreaMap, mu: &DiscreteMeasure) -> Result<(DiscreteMeasure, PushforwardLog)> {
    let pts = mu.points();
    let images: Vec<Result<(SurfacePoint, f64)>> = if pts.len() >= PAR_THRESHOLD {
        pts.par_iter().map(|p| eval_nudged(map, p)).collect()
    } else {
        pts.iter().map(|p| eval_nudged(map, p)).collect()
    };
    let mut out = Vec::with_capacity(pts.len());
    let mut log = PushforwardLog::default();
    for (i, r) in images.into_iter().enumerate() {
        let (x, shift) = r?;
        if shift != 0.0 {
            log.nudged.push((i, mu.weights()[i], shift));
        }
        out.push(x);
    }
    Ok((mu.with_points(out, format!("push({})", mu.label)), log))
}

pub fn pushforward(map: &AreaMap, mu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    Ok(pushforward_logged(map, mu)?.0)
}

/// Orbit `h(R_α^j(h⁻¹x))` for `j = 1..=k`.
pub fn conjugate_orbit(h: &AreaMap, alpha: &Rational, x: &SurfacePoint, k: usize) -> Result<Vec<SurfacePoint>> {
    let z = h.eval_inv(x)?;
    (1..=k as u64)
        .map(|j| h.eval(&SurfacePoint::from_turn(z.theta.wrapping_add(alpha.multiple_turn(j)), z.y, z.tag)))
        .collect()
}

/// `e^f_k(x) = (1/k) Σ_{j=1}^{k} δ_{f^j x}` for `f = h ∘ R_α ∘ h⁻¹`.
pub fn empirical_measure(h: &AreaMap, alpha: &Rational, x: &SurfacePoint, k: usize) -> Result<DiscreteMeasure> {
    if k == 0 {
        return Err(Error::InvalidArgument("orbit length must be positive".into()));
    }
    let pts = conjugate_orbit(h, alpha, x, k)?;
    let w = 1.0 / k as f64;
    DiscreteMeasure::normalized(x.tag, pts.into_iter().map(|p| (p, w)).collect(), format!("e_{k}"))
}

/// Empirical measure from a sub-orbit: `count` base points `j = offset + i·stride`.
pub fn strided_orbit_measure(
    h: &AreaMap,
    alpha: &Rational,
    x: &SurfacePoint,
    offset: u64,
    stride: u64,
    count: usize,
) -> Result<DiscreteMeasure> {
    if count == 0 {
        return Err(Error::InvalidArgument("orbit length must be positive".into()));
    }
    let z = h.eval_inv(x)?;
    let w = 1.0 / count as f64;
    let pts = (0..count as u64)
        .map(|i| {
            let j = offset + i * stride;
            h.eval(&SurfacePoint::from_turn(z.theta.wrapping_add(alpha.multiple_turn(j)), z.y, z.tag))
                .map(|p| (p, w))
        })
        .collect::<Result<Vec<_>>>()?;
    DiscreteMeasure::normalized(x.tag, pts, "orbit sample")
}

/// Central-difference Jacobian determinant of `map` at `p` in `(θ, y)`.
///
/// Rotation-only trees return exactly 1. Otherwise every stencil point out to
/// `2h` must follow the same pieces through every shuffle layer as `p`; if
/// not, `p` is too close to a seam and a [`Error::SeamHit`] is returned.
pub fn jacobian_check(map: &AreaMap, p: &SurfacePoint, h: f64) -> Result<f64> {
    if map.is_rigid() {
        return Ok(1.0);
    }
    if h.is_nan() || h <= 0.0 || p.y - 2.0 * h < -1.0 || p.y + 2.0 * h > 1.0 {
        return Err(Error::InvalidArgument(format!("stencil of width {h} does not fit at y = {}", p.y)));
    }
    let at = |dt: f64, dy: f64| SurfacePoint::from_turn(p.theta.wrapping_add(Turn::from_f64(dt)), p.y + dy, p.tag);
    let mut base = Vec::new();
    map.eval_traced(p, &mut base)?;
    let mut images = Vec::with_capacity(4);
    for (dt, dy) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h), (2.0 * h, 0.0), (-2.0 * h, 0.0), (0.0, 2.0 * h), (0.0, -2.0 * h)] {
        let mut tr = Vec::with_capacity(base.len());
        let img = map.eval_traced(&at(dt, dy), &mut tr)?;
        if tr != base {
            return Err(Error::SeamHit { theta: p.theta(), y: p.y });
        }
        images.push(img);
    }
    let d = 2.0 * h;
    let j11 = images[0].theta.signed_diff(images[1].theta) / d;
    let j21 = (images[0].y - images[1].y) / d;
    let j12 = images[2].theta.signed_diff(images[3].theta) / d;
    let j22 = (images[2].y - images[3].y) / d;
    Ok(j11 * j22 - j12 * j21)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ot::w1;
    use crate::surface::sample_mu_y;

    #[test]
    fn empirical_measure_of_rotation() {
        let alpha = Rational::from_ints(1, 3).unwrap();
        let x = SurfacePoint::new(0.1, 0.2, SurfaceTag::Cylinder).unwrap();
        let e = empirical_measure(&AreaMap::identity(), &alpha, &x, 3).unwrap();
        let mut th: Vec<f64> = e.points().iter().map(|p| p.theta()).collect();
        th.sort_by(f64::total_cmp);
        for (a, b) in th.iter().zip([0.1, 0.1 + 1.0 / 3.0, 0.1 + 2.0 / 3.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        let one = empirical_measure(&AreaMap::rotation(alpha.clone()), &alpha, &x, 1).unwrap();
        assert!((one.points()[0].theta() - (0.1 + 1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn rotation_pushforward_keeps_longitude() {
        let mu = sample_mu_y(0.3, 12, SurfaceTag::Sphere).unwrap();
        let r = AreaMap::rotation(Rational::from_ints(1, 4).unwrap());
        assert!(w1(&pushforward(&r, &mu).unwrap(), &mu).unwrap() < 1e-12);
    }

    #[test]
    fn shuffle_fixes_the_outer_region() {
        let (g, b) = build_box_shuffle(3, 0.4).unwrap();
        let AreaMap::Shuffle(s) = &g else { unreachable!() };
        assert_eq!(outer_region_moved(&g, &b, s.kappa(), SurfaceTag::Cylinder, 500, 4), 0);
    }

    #[test]
    fn jacobian_in_box_is_one() {
        let (g, _) = build_box_shuffle(2, 0.3).unwrap();
        let AreaMap::Shuffle(s) = &g else { unreachable!() };
        let (th, y) = s.source_corner(1, 5);
        let p = SurfacePoint::from_turn(th.wrapping_add(Turn::from_f64(0.004)), y + 0.3, SurfaceTag::Cylinder);
        let d = jacobian_check(&g, &p, 1e-5).unwrap();
        assert!((d - 1.0).abs() < 1e-6, "{d}");
        let rigid = AreaMap::rotation(Rational::from_ints(1, 5).unwrap());
        assert_eq!(jacobian_check(&rigid, &p, 1e-5).unwrap(), 1.0);
    }
}
