//! Cosine bicurves `γ_± : θ ↦ δ′cos(2πNθ) ± (1 − δ)` and their bands.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surface::{SurfacePoint, Turn};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionLabel {
    InnerA,
    OuterPlus,
    OuterMinus,
    Band,
}

/// A cosine bicurve. `N = q·n²` oscillations per turn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BicurveRepr", into = "BicurveRepr")]
pub struct Bicurve {
    q: u64,
    n: u64,
    big_n: u64,
    delta: f64,
    delta_prime: f64,
}

#[derive(Serialize, Deserialize)]
struct BicurveRepr {
    q: u64,
    n: u64,
    #[serde(rename = "N")]
    big_n: u64,
    delta: f64,
    delta_prime: f64,
}

impl TryFrom<BicurveRepr> for Bicurve {
    type Error = Error;
    fn try_from(r: BicurveRepr) -> Result<Bicurve> {
        let b = Bicurve::new(r.q, r.n, r.delta, r.delta_prime)?;
        if b.big_n != r.big_n {
            return Err(Error::InvalidArgument(format!(
                "N = {} is not q·n² = {}",
                r.big_n, b.big_n
            )));
        }
        Ok(b)
    }
}

impl From<Bicurve> for BicurveRepr {
    fn from(b: Bicurve) -> BicurveRepr {
        BicurveRepr {
            q: b.q,
            n: b.n,
            big_n: b.big_n,
            delta: b.delta,
            delta_prime: b.delta_prime,
        }
    }
}

impl Bicurve {
    pub fn new(q: u64, n: u64, delta: f64, delta_prime: f64) -> Result<Bicurve> {
        if q == 0 || n == 0 {
            return Err(Error::InvalidArgument("q and n must be positive".into()));
        }
        let big_n = (n as u128 * n as u128 * q as u128)
            .try_into()
            .map_err(|_| Error::InvalidArgument("q·n² overflows 64 bits".into()))?;
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidArgument(format!("δ = {delta} outside (0, 1)")));
        }
        if !(delta_prime > 0.0 && delta_prime < delta && delta_prime < 1.0 - delta) {
            return Err(Error::InvalidArgument(format!(
                "δ′ = {delta_prime} must lie in (0, min(δ, 1 − δ))"
            )));
        }
        Ok(Bicurve {
            q,
            n,
            big_n,
            delta,
            delta_prime,
        })
    }

    pub fn q(&self) -> u64 {
        self.q
    }
    pub fn n(&self) -> u64 {
        self.n
    }
    pub fn big_n(&self) -> u64 {
        self.big_n
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn delta_prime(&self) -> f64 {
        self.delta_prime
    }

    /// Half the vertical distance between the two curves, `1 − δ`.
    pub fn half_gap(&self) -> f64 {
        1.0 - self.delta
    }

    /// Phase `Nθ mod 1`, computed exactly.
    pub fn phase(&self, theta: Turn) -> Turn {
        theta.scale_split(self.big_n).1
    }

    /// `v(θ) = δ′cos(2πNθ)`.
    pub fn v(&self, theta: Turn) -> f64 {
        self.v_at_phase(self.phase(theta))
    }

    pub(crate) fn v_at_phase(&self, phase: Turn) -> f64 {
        self.delta_prime * (TAU * phase.to_f64()).cos()
    }

    pub fn curve_height(&self, sign: Sign, theta: Turn) -> f64 {
        let v = self.v(theta);
        match sign {
            Sign::Plus => v + self.half_gap(),
            Sign::Minus => v - self.half_gap(),
        }
    }

    /// Slope bound `c(b) = √(1 + (2πNδ′)²)` of the curves.
    pub fn slope_factor(&self) -> f64 {
        let s = TAU * self.big_n as f64 * self.delta_prime;
        (1.0 + s * s).sqrt()
    }

    /// Vertical half-width of the band of metric half-width `kappa`.
    pub fn band_height(&self, kappa: f64) -> f64 {
        kappa * self.slope_factor()
    }

    pub fn classify(&self, p: &SurfacePoint, kappa: f64) -> RegionLabel {
        let w = self.band_height(kappa);
        let up = self.curve_height(Sign::Plus, p.theta);
        let lo = self.curve_height(Sign::Minus, p.theta);
        if (p.y - up).abs() < w || (p.y - lo).abs() < w {
            RegionLabel::Band
        } else if p.y > up {
            RegionLabel::OuterPlus
        } else if p.y < lo {
            RegionLabel::OuterMinus
        } else {
            RegionLabel::InnerA
        }
    }

    /// Fraction of the longitude at height `y` that lies in the band.
    ///
    /// Along a longitude the phase `φ = 2πNθ` is uniform, so the band is the
    /// set of `φ` with `cos φ` in a union of at most two intervals.
    pub fn longitude_band_fraction(&self, y: f64, kappa: f64) -> f64 {
        let w = self.band_height(kappa);
        let dp = self.delta_prime;
        let l = self.half_gap();
        let mut ivs = [
            ((y - l - w) / dp, (y - l + w) / dp),
            ((y + l - w) / dp, (y + l + w) / dp),
        ];
        for iv in ivs.iter_mut() {
            iv.0 = iv.0.clamp(-1.0, 1.0);
            iv.1 = iv.1.clamp(-1.0, 1.0);
        }
        ivs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let below = |t: f64| 1.0 - t.clamp(-1.0, 1.0).acos() / PI;
        let mut total = 0.0;
        let mut covered_to = -1.0f64;
        for (a, b) in ivs {
            let a = a.max(covered_to);
            if b > a {
                total += below(b) - below(a);
                covered_to = b;
            }
        }
        total.clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::SurfaceTag;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn b() -> Bicurve {
        Bicurve::new(1, 2, 0.1, 0.01).unwrap()
    }

    fn at(t: f64, y: f64) -> SurfacePoint {
        SurfacePoint::new(t, y, SurfaceTag::Cylinder).unwrap()
    }

    #[test]
    fn heights() {
        let b = b();
        assert_eq!(b.big_n(), 4);
        assert!((b.curve_height(Sign::Plus, Turn::ZERO) - 0.91).abs() < 1e-15);
        let t = Turn::from_f64(0.377);
        let d = b.curve_height(Sign::Plus, t) - b.curve_height(Sign::Minus, t);
        assert!((d - 1.8).abs() < 1e-15);
        let t2 = t.wrapping_add(Turn::from_f64(0.25));
        assert!((b.curve_height(Sign::Plus, t) - b.curve_height(Sign::Plus, t2)).abs() < 1e-15);
    }

    #[test]
    fn classify_examples() {
        let b = b();
        assert_eq!(b.classify(&at(0.3, 0.0), 0.01), RegionLabel::InnerA);
        assert_eq!(b.classify(&at(0.3, 1.0), 0.01), RegionLabel::OuterPlus);
        assert_eq!(b.classify(&at(0.3, -1.0), 0.01), RegionLabel::OuterMinus);
        let th = Turn::from_f64(0.3);
        let y = b.curve_height(Sign::Plus, th);
        assert_eq!(
            b.classify(&SurfacePoint::from_turn(th, y, SurfaceTag::Cylinder), 1e-9),
            RegionLabel::Band
        );
    }

    #[test]
    fn band_fraction_examples() {
        let b = b();
        assert_eq!(b.longitude_band_fraction(0.0, 0.01), 0.0);
        assert_eq!(b.longitude_band_fraction(0.9, 0.011), 1.0);
    }

    #[test]
    fn invariance_under_one_over_q() {
        let b = Bicurve::new(3, 4, 0.2, 0.05).unwrap();
        let shift = Turn::from_ratio(&1.into(), &3.into());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let p = at(rng.gen(), rng.gen_range(-1.0..1.0));
            let p2 = SurfacePoint::from_turn(p.theta.wrapping_add(shift), p.y, p.tag);
            let k = rng.gen_range(0.0..0.01);
            assert_eq!(b.classify(&p, k), b.classify(&p2, k));
        }
    }

    #[test]
    fn json_shape() {
        let s = serde_json::to_string(&b()).unwrap();
        assert_eq!(s, r#"{"q":1,"n":2,"N":4,"delta":0.1,"delta_prime":0.01}"#);
        let back: Bicurve = serde_json::from_str(&s).unwrap();
        assert_eq!(back, b());
        assert!(serde_json::from_str::<Bicurve>(r#"{"q":1,"n":2,"N":5,"delta":0.1,"delta_prime":0.01}"#).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Bicurve::new(1, 2, 0.1, 0.2).is_err());
        assert!(Bicurve::new(0, 2, 0.1, 0.01).is_err());
        assert!(Bicurve::new(1, 2, 0.9, 0.5).is_err());
    }
}
