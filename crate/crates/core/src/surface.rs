//! Surfaces, points, the chart π and the stratified reference measures.
//!
//! Every computation happens in cylinder coordinates `(θ, y)` with
//! `θ ∈ ℝ/ℤ` and `y ∈ [−1, 1]`. The surface tag only decides the metric and
//! which longitudes collapse to a point.
//!
//! Angles are stored as [`Turn`], a 128-bit fixed-point fraction of a full
//! turn. Rotations by rationals, fundamental domains of `R_{1/q}` and the
//! phase of `cos(2πNθ)` are then computed with integer arithmetic, which keeps
//! them exact even when `q` and `N` are far beyond `f64` resolution.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::io::{BufRead, Write};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TWO_128: f64 = 340_282_366_920_938_463_463_374_607_431_768_211_456.0;

/// The surface a computation lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceTag {
    Cylinder,
    Sphere,
    Disk,
}

impl SurfaceTag {
    /// Largest distance between two points of the surface.
    pub fn diameter(self) -> f64 {
        match self {
            SurfaceTag::Cylinder => (0.25f64 + 4.0).sqrt(),
            SurfaceTag::Sphere | SurfaceTag::Disk => 2.0,
        }
    }

    /// Whether the longitude at height `y` is collapsed to a single point by π.
    pub fn collapses(self, y: f64) -> bool {
        match self {
            SurfaceTag::Cylinder => false,
            SurfaceTag::Sphere => y == 1.0 || y == -1.0,
            SurfaceTag::Disk => y == -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SurfaceTag::Cylinder => "cylinder",
            SurfaceTag::Sphere => "sphere",
            SurfaceTag::Disk => "disk",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cylinder" => Ok(SurfaceTag::Cylinder),
            "sphere" => Ok(SurfaceTag::Sphere),
            "disk" => Ok(SurfaceTag::Disk),
            other => Err(Error::InvalidArgument(format!("unknown surface `{other}`"))),
        }
    }
}

/// An angle in `ℝ/ℤ`, stored as `raw / 2¹²⁸` turns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Turn(pub u128);

/// Floor of `(hi·2¹²⁸ + lo) / k` for `hi < k`, with the remainder.
pub(crate) fn div_wide(hi: u64, lo: u128, k: u64) -> (u128, u64) {
    debug_assert!(hi < k);
    let k = k as u128;
    let a = ((hi as u128) << 64) | (lo >> 64);
    let (q1, r1) = (a / k, a % k);
    let b = (r1 << 64) | (lo & u64::MAX as u128);
    let (q0, r0) = (b / k, b % k);
    ((q1 << 64) | q0, r0 as u64)
}

impl Turn {
    pub const ZERO: Turn = Turn(0);

    /// Nearest representable angle to `x mod 1`.
    pub fn from_f64(x: f64) -> Turn {
        let f = x - x.floor();
        let scaled = f * TWO_128;
        if scaled >= TWO_128 {
            Turn(0)
        } else {
            Turn(scaled as u128)
        }
    }

    /// Angle as a float in `[0, 1)`.
    pub fn to_f64(self) -> f64 {
        let v = self.0 as f64 / TWO_128;
        if v >= 1.0 {
            0.0
        } else {
            v
        }
    }

    /// Exact midpoint angle `(2j + 1) / (2m)`, rounded down.
    pub fn midpoint(j: u64, m: u64) -> Turn {
        Turn(div_wide(2 * j + 1, 0, 2 * m).0)
    }

    /// Angle `(p mod q) / q` rounded to the nearest representable value.
    pub fn from_ratio(p: &BigInt, q: &BigInt) -> Turn {
        let r = p.mod_floor(q);
        let num: BigInt = (r << 129u32) + q;
        let den: BigInt = q << 1u32;
        let v: BigInt = num.div_floor(&den);
        let modulus = BigInt::from(1u8) << 128u32;
        let v = v.mod_floor(&modulus);
        Turn(v.to_u128().expect("reduced below 2^128"))
    }

    /// `r / q` rounded to nearest, for `r < q < 2⁶⁴`; agrees with [`Turn::from_ratio`].
    pub fn from_small_ratio(r: u64, q: u64) -> Turn {
        let (v, rem) = div_wide(r, 0, q);
        let up = 2 * rem as u128 >= q as u128;
        Turn(v.wrapping_add(up as u128))
    }

    pub fn wrapping_add(self, other: Turn) -> Turn {
        Turn(self.0.wrapping_add(other.0))
    }

    pub fn wrapping_sub(self, other: Turn) -> Turn {
        Turn(self.0.wrapping_sub(other.0))
    }

    /// Signed difference `self − other` in `[−½, ½)` turns.
    pub fn signed_diff(self, other: Turn) -> f64 {
        (self.0.wrapping_sub(other.0) as i128) as f64 / TWO_128
    }

    /// Arc distance on `ℝ/ℤ`.
    pub fn arc(self, other: Turn) -> f64 {
        let d = self.0.wrapping_sub(other.0);
        d.min(d.wrapping_neg()) as f64 / TWO_128
    }

    /// Split `k·θ` into its integer part (in `[0, k)`) and fractional part.
    pub fn scale_split(self, k: u64) -> (u64, Turn) {
        let k = k as u128;
        let lo = (self.0 & u64::MAX as u128) * k;
        let hi = (self.0 >> 64) * k;
        let (frac, carry) = (hi << 64).overflowing_add(lo);
        ((hi >> 64) as u64 + carry as u64, Turn(frac))
    }

    /// Inverse of [`Turn::scale_split`]: the angle `(whole + frac) / k`.
    pub fn unscale(whole: u64, frac: Turn, k: u64) -> Turn {
        Turn(div_wide(whole, frac.0, k).0)
    }
}

/// A point of a surface in cylinder coordinates.
#[derive(Clone, Copy, Debug)]
pub struct SurfacePoint {
    pub theta: Turn,
    pub y: f64,
    pub tag: SurfaceTag,
}

impl SurfacePoint {
    pub fn new(theta: f64, y: f64, tag: SurfaceTag) -> Result<SurfacePoint> {
        if !theta.is_finite() || !y.is_finite() || !(-1.0..=1.0).contains(&y) {
            return Err(Error::InvalidArgument(format!(
                "point ({theta}, {y}) outside 𝕋 × [−1, 1]"
            )));
        }
        Ok(SurfacePoint {
            theta: Turn::from_f64(theta),
            y,
            tag,
        })
    }

    pub fn from_turn(theta: Turn, y: f64, tag: SurfaceTag) -> SurfacePoint {
        SurfacePoint { theta, y, tag }
    }

    pub fn theta(&self) -> f64 {
        self.theta.to_f64()
    }

    fn collapsed(&self) -> bool {
        self.tag.collapses(self.y)
    }

    /// Key identifying the π-image exactly; collapsed longitudes share one key.
    pub fn identity_key(&self) -> (u128, u64) {
        let y_bits = (self.y + 0.0).to_bits();
        if self.collapsed() {
            (0, y_bits)
        } else {
            (self.theta.0, y_bits)
        }
    }
}

impl PartialEq for SurfacePoint {
    fn eq(&self, other: &Self) -> bool {
        self.tag == other.tag && self.identity_key() == other.identity_key()
    }
}

/// Image of a point under π.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Ambient {
    /// The cylinder uses its own chart `(θ, y)`.
    Cylinder { theta: f64, y: f64 },
    Sphere([f64; 3]),
    Disk([f64; 2]),
}

pub fn project_pi(p: &SurfacePoint) -> Ambient {
    let th = p.theta.to_f64();
    match p.tag {
        SurfaceTag::Cylinder => Ambient::Cylinder { theta: th, y: p.y },
        SurfaceTag::Sphere => {
            if p.collapsed() {
                return Ambient::Sphere([0.0, 0.0, p.y]);
            }
            let r = (1.0 - p.y * p.y).max(0.0).sqrt();
            let (s, c) = (TAU * th).sin_cos();
            Ambient::Sphere([r * c, r * s, p.y])
        }
        SurfaceTag::Disk => {
            if p.collapsed() {
                return Ambient::Disk([0.0, 0.0]);
            }
            let r = ((1.0 + p.y) / 2.0).max(0.0).sqrt();
            let (s, c) = (TAU * th).sin_cos();
            Ambient::Disk([r * c, r * s])
        }
    }
}

pub fn dist(p1: &SurfacePoint, p2: &SurfacePoint) -> Result<f64> {
    if p1.tag != p2.tag {
        return Err(Error::TagMismatch(p1.tag, p2.tag));
    }
    Ok(match p1.tag {
        SurfaceTag::Cylinder => {
            let a = p1.theta.arc(p2.theta);
            let b = p1.y - p2.y;
            (a * a + b * b).sqrt()
        }
        _ => Coords::of(p1).dist(&Coords::of(p2)),
    })
}

/// Precomputed coordinates for fast repeated distance evaluation.
#[derive(Clone, Copy, Debug)]
pub enum Coords {
    Cylinder(f64, f64),
    Ambient([f64; 3]),
}

impl Coords {
    pub fn of(p: &SurfacePoint) -> Coords {
        match project_pi(p) {
            Ambient::Cylinder { theta, y } => Coords::Cylinder(theta, y),
            Ambient::Sphere(v) => Coords::Ambient(v),
            Ambient::Disk([a, b]) => Coords::Ambient([a, b, 0.0]),
        }
    }

    #[inline]
    pub fn dist(&self, other: &Coords) -> f64 {
        match (self, other) {
            (Coords::Cylinder(t1, y1), Coords::Cylinder(t2, y2)) => {
                let mut d = (t1 - t2).abs();
                if d > 0.5 {
                    d = 1.0 - d;
                }
                let e = y1 - y2;
                (d * d + e * e).sqrt()
            }
            (Coords::Ambient(a), Coords::Ambient(b)) => {
                let dx = a[0] - b[0];
                let dy = a[1] - b[1];
                let dz = a[2] - b[2];
                (dx * dx + dy * dy + dz * dz).sqrt()
            }
            _ => f64::NAN,
        }
    }
}

/// Weighted atoms on a surface.
#[derive(Clone, Debug)]
pub struct DiscreteMeasure {
    tag: SurfaceTag,
    points: Vec<SurfacePoint>,
    weights: Vec<f64>,
    pub label: String,
}

impl DiscreteMeasure {
    /// Builds a measure, checking non-negativity, total mass and tags.
    pub fn new(
        tag: SurfaceTag,
        atoms: Vec<(SurfacePoint, f64)>,
        label: impl Into<String>,
    ) -> Result<DiscreteMeasure> {
        if atoms.is_empty() {
            return Err(Error::InvalidArgument("measure without atoms".into()));
        }
        let mut total = 0.0;
        for (p, w) in &atoms {
            if p.tag != tag {
                return Err(Error::TagMismatch(tag, p.tag));
            }
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::InvalidArgument(format!("bad weight {w}")));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "weights sum to {total}, not 1"
            )));
        }
        let (points, weights) = atoms.into_iter().unzip();
        Ok(DiscreteMeasure {
            tag,
            points,
            weights,
            label: label.into(),
        })
    }

    /// Builds a measure from unnormalised non-negative weights.
    pub fn normalized(
        tag: SurfaceTag,
        atoms: Vec<(SurfacePoint, f64)>,
        label: impl Into<String>,
    ) -> Result<DiscreteMeasure> {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidArgument("total mass must be positive".into()));
        }
        let atoms = atoms.into_iter().map(|(p, w)| (p, w / total)).collect();
        DiscreteMeasure::new(tag, atoms, label)
    }

    pub fn tag(&self) -> SurfaceTag {
        self.tag
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[SurfacePoint] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&SurfacePoint, f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }

    pub fn coords(&self) -> Vec<Coords> {
        self.points.iter().map(Coords::of).collect()
    }

    /// Same atoms with new positions; used by pushforwards.
    pub(crate) fn with_points(&self, points: Vec<SurfacePoint>, label: String) -> DiscreteMeasure {
        debug_assert_eq!(points.len(), self.points.len());
        DiscreteMeasure {
            tag: self.tag,
            points,
            weights: self.weights.clone(),
            label,
        }
    }

    /// Convex combination `Σ cᵢ μᵢ`; atoms are concatenated.
    pub fn mixture(parts: &[(f64, &DiscreteMeasure)], label: impl Into<String>) -> Result<DiscreteMeasure> {
        let tag = parts
            .first()
            .map(|p| p.1.tag)
            .ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let mut atoms = Vec::new();
        for (c, m) in parts {
            if m.tag != tag {
                return Err(Error::TagMismatch(tag, m.tag));
            }
            if *c < 0.0 {
                return Err(Error::InvalidArgument("negative mixture weight".into()));
            }
            if *c == 0.0 {
                continue;
            }
            atoms.extend(m.atoms().map(|(p, w)| (*p, c * w)));
        }
        DiscreteMeasure::normalized(tag, atoms, label)
    }

    /// Merges atoms with identical π-images, keeping first-seen order.
    pub fn merged(&self) -> DiscreteMeasure {
        let mut index: HashMap<(u128, u64), usize> = HashMap::new();
        let mut points = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for (p, w) in self.atoms() {
            match index.get(&p.identity_key()) {
                Some(&i) => weights[i] += w,
                None => {
                    index.insert(p.identity_key(), points.len());
                    points.push(*p);
                    weights.push(w);
                }
            }
        }
        DiscreteMeasure {
            tag: self.tag,
            points,
            weights,
            label: self.label.clone(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# tag={} label={}", self.tag.name(), self.label)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["theta", "y", "weight"])?;
        for (p, wt) in self.atoms() {
            w.write_record([
                format!("{:?}", p.theta()),
                format!("{:?}", p.y),
                format!("{:?}", wt),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mut input: R) -> Result<DiscreteMeasure> {
        let mut first = String::new();
        input.read_line(&mut first)?;
        let header = first
            .trim()
            .strip_prefix("# ")
            .ok_or_else(|| Error::InvalidArgument("missing `# tag=… label=…` header".into()))?;
        let rest = header
            .strip_prefix("tag=")
            .ok_or_else(|| Error::InvalidArgument("header lacks tag".into()))?;
        let (tag_s, label) = match rest.split_once(" label=") {
            Some((t, l)) => (t, l.to_string()),
            None => (rest, String::new()),
        };
        let tag = SurfaceTag::parse(tag_s)?;
        let mut rdr = csv::Reader::from_reader(input);
        let mut atoms = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidArgument(format!("bad CSV field {i}")))
            };
            let p = SurfacePoint::new(parse(0)?, parse(1)?, tag)?;
            atoms.push((p, parse(2)?));
        }
        DiscreteMeasure::new(tag, atoms, label)
    }
}

/// Uniform measure on the longitude at height `y`, discretised at midpoints.
pub fn sample_mu_y(y: f64, m: usize, tag: SurfaceTag) -> Result<DiscreteMeasure> {
    if m == 0 {
        return Err(Error::InvalidArgument("atom count must be positive".into()));
    }
    if !(-1.0..=1.0).contains(&y) {
        return Err(Error::InvalidArgument(format!("height {y} outside [−1, 1]")));
    }
    let w = 1.0 / m as f64;
    let atoms = (0..m as u64)
        .map(|j| (SurfacePoint::from_turn(Turn::midpoint(j, m as u64), y, tag), w))
        .collect();
    DiscreteMeasure::new(tag, atoms, format!("mu_y(y={y},m={m})"))
}

/// Height of the `i`-th midpoint of a uniform partition of `[−1, 1]` into `my` cells.
pub fn y_midpoint(i: usize, my: usize) -> f64 {
    -1.0 + (2 * i + 1) as f64 / my as f64
}

/// Stratified grid discretisation of the normalised area measure.
pub fn sample_leb(m_theta: usize, m_y: usize, tag: SurfaceTag) -> Result<DiscreteMeasure> {
    if m_theta == 0 || m_y == 0 {
        return Err(Error::InvalidArgument("grid counts must be positive".into()));
    }
    let w = 1.0 / (m_theta * m_y) as f64;
    let mut atoms = Vec::with_capacity(m_theta * m_y);
    for i in 0..m_y {
        let y = y_midpoint(i, m_y);
        for j in 0..m_theta as u64 {
            atoms.push((
                SurfacePoint::from_turn(Turn::midpoint(j, m_theta as u64), y, tag),
                w,
            ));
        }
    }
    DiscreteMeasure::new(tag, atoms, format!("leb({m_theta}x{m_y})"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(t: f64, y: f64, tag: SurfaceTag) -> SurfacePoint {
        SurfacePoint::new(t, y, tag).unwrap()
    }

    #[test]
    fn pi_examples() {
        assert_eq!(
            project_pi(&pt(0.3, 1.0, SurfaceTag::Sphere)),
            Ambient::Sphere([0.0, 0.0, 1.0])
        );
        match project_pi(&pt(0.25, 0.0, SurfaceTag::Sphere)) {
            Ambient::Sphere(v) => {
                assert!(v[0].abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15 && v[2] == 0.0)
            }
            _ => unreachable!(),
        }
        assert_eq!(
            project_pi(&pt(0.0, -1.0, SurfaceTag::Disk)),
            Ambient::Disk([0.0, 0.0])
        );
    }

    #[test]
    fn dist_examples() {
        let a = pt(0.0, 0.0, SurfaceTag::Cylinder);
        let b = pt(0.5, 0.0, SurfaceTag::Cylinder);
        assert_eq!(dist(&a, &a).unwrap(), 0.0);
        assert_eq!(dist(&a, &b).unwrap(), 0.5);
        let n = pt(0.1, 1.0, SurfaceTag::Sphere);
        let s = pt(0.7, -1.0, SurfaceTag::Sphere);
        assert_eq!(dist(&n, &s).unwrap(), 2.0);
        assert!(dist(&a, &n).is_err());
    }

    #[test]
    fn collapsed_points_compare_equal() {
        assert_eq!(pt(0.1, 1.0, SurfaceTag::Sphere), pt(0.6, 1.0, SurfaceTag::Sphere));
        assert_eq!(pt(0.1, -1.0, SurfaceTag::Disk), pt(0.6, -1.0, SurfaceTag::Disk));
        assert_ne!(pt(0.1, 1.0, SurfaceTag::Disk), pt(0.6, 1.0, SurfaceTag::Disk));
        assert_ne!(pt(0.1, 1.0, SurfaceTag::Cylinder), pt(0.6, 1.0, SurfaceTag::Cylinder));
    }

    #[test]
    fn sampler_examples() {
        let m = sample_mu_y(1.0, 5, SurfaceTag::Sphere).unwrap();
        assert_eq!(m.len(), 5);
        assert!(m.points().iter().all(|p| *p == pt(0.0, 1.0, SurfaceTag::Sphere)));
        assert_eq!(m.merged().len(), 1);
        let c = sample_mu_y(0.0, 4, SurfaceTag::Cylinder).unwrap();
        let th: Vec<f64> = c.points().iter().map(|p| p.theta()).collect();
        assert_eq!(th, vec![0.125, 0.375, 0.625, 0.875]);
        assert!(c.weights().iter().all(|&w| w == 0.25));
        let l = sample_leb(1, 1, SurfaceTag::Cylinder).unwrap();
        assert_eq!(l.points()[0].theta(), 0.5);
        assert_eq!(l.points()[0].y, 0.0);
        assert!(sample_mu_y(0.0, 0, SurfaceTag::Cylinder).is_err());
        assert!(sample_leb(0, 3, SurfaceTag::Cylinder).is_err());
    }

    #[test]
    fn turn_arithmetic() {
        let third = Turn::from_ratio(&BigInt::from(1), &BigInt::from(3));
        let t = Turn::from_f64(0.2);
        let back = t.wrapping_add(third).wrapping_add(third).wrapping_add(third);
        assert!(back.arc(t) < 1e-18);
        let (d, u) = Turn::from_f64(0.7).scale_split(3);
        assert_eq!(d, 2);
        assert!((u.to_f64() - 0.1).abs() < 1e-15);
        let t = Turn(0x1234_5678_9abc_def0_0fed_cba9_8765_4321);
        for k in [1, 3, 1_000_003, u64::MAX] {
            let (d, u) = t.scale_split(k);
            assert_eq!(Turn::unscale(d, u, k), t);
        }
        assert_eq!(Turn::from_f64(-1e-40), Turn(0));
        assert_eq!(Turn(u128::MAX).to_f64(), 0.0);
        for (r, q) in [(0u64, 1u64), (1, 3), (2, 3), (5, 1_000_003), (u64::MAX - 1, u64::MAX)] {
            assert_eq!(Turn::from_small_ratio(r, q), Turn::from_ratio(&BigInt::from(r), &BigInt::from(q)));
        }
    }

    #[test]
    fn csv_round_trip() {
        let m = sample_leb(3, 2, SurfaceTag::Disk).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# tag=disk label=leb(3x2)\ntheta,y,weight\n"));
        let back = DiscreteMeasure::read_csv(&buf[..]).unwrap();
        assert_eq!(back.len(), 6);
        assert_eq!(back.label, "leb(3x2)");
        for (a, b) in m.points().iter().zip(back.points()) {
            assert!(a.theta.arc(b.theta) < 1e-16 && a.y == b.y);
        }
    }
}
