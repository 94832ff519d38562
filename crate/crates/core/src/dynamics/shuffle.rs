//! The box shuffle `g` attached to a cosine bicurve.
//!
//! Work in *straightened* coordinates `y_s = y − v(θ)`, where the annulus
//! `A(γ)` becomes `|y_s| < L` with `L = 1 − δ`. A fundamental domain of
//! `R_{1/q}` is split into `n²` periods of `v`; inside period `k` the relative
//! position is `r ∈ [0, 1)`, which is also the phase of `v`.
//!
//! * Source box `k`: `r ∈ [κ, 1 − κ)`, `|y_s| < L − 2κ/N`.
//! * Target box `(l₁, l₂) = (k / n, k mod n)`: column `l₁` of width `1/n` in
//!   the domain, `r′ ∈ [κ, 1 − κ)` relative to that column, slot `l₂` counted
//!   from the top with height `(H − 2κ/N)/n`, `H = 2(L − κ/N)`.
//! * Boxes map by `r′ = (l₁ + r)/n` and `y′_s = top′ − (top − y_s)/n`.
//! * The remaining material falls into two classes with matching fibre
//!   lengths on both sides: full-height gap columns (`r` within `κ` of a
//!   period edge) and the short strips above and below the boxes. Each class
//!   is rearranged by matching cumulative width and then cumulative fibre
//!   height; fibre lengths agree, so every residual piece is translated.
//!
//! Everything commutes with `R_{1/q}` because only `(k, r)` and `y_s` enter.

use serde::{Deserialize, Serialize};

use crate::bicurve::Bicurve;
use crate::error::{Error, Result};
use crate::surface::{SurfacePoint, Turn};

const TWO_128: f64 = 340_282_366_920_938_463_463_374_607_431_768_211_456.0;

/// Parameters of a box shuffle; everything else is derived.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShuffleParams {
    pub bicurve: Bicurve,
    pub kappa: f64,
    /// The ε the parameters were chosen for.
    pub eps: f64,
}

/// How `n, δ, δ′, κ` follow from the target ε.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schedule {
    pub n_min: u64,
    pub n_factor: f64,
    pub delta_ratio: f64,
    pub delta_prime_ratio: f64,
    pub kappa_ratio: f64,
    /// Largest admissible oscillation count `N = q·n²`.
    pub n_cap: u64,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            n_min: 3,
            n_factor: 2.0,
            delta_ratio: 1.0 / 8.0,
            delta_prime_ratio: 1.0 / 16.0,
            kappa_ratio: 0.5,
            n_cap: 1 << 62,
        }
    }
}

impl Schedule {
    pub fn params(&self, q: u64, eps: f64) -> Result<ShuffleParams> {
        if q == 0 {
            return Err(Error::InvalidArgument("q must be positive".into()));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidArgument(format!("ε = {eps} outside (0, 1)")));
        }
        let n = ((self.n_factor / eps.sqrt()).ceil() as u64).max(self.n_min);
        let needed = q as u128 * n as u128 * n as u128;
        if needed > self.n_cap as u128 {
            return Err(Error::OscillationCap {
                needed,
                cap: self.n_cap,
            });
        }
        let delta = eps * self.delta_ratio;
        let delta_prime = delta * self.delta_prime_ratio;
        let kappa = delta_prime * self.kappa_ratio;
        Ok(ShuffleParams {
            bicurve: Bicurve::new(q, n, delta, delta_prime)?,
            kappa,
            eps,
        })
    }
}

/// Which piece of the source partition a point lies in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Piece {
    Outer,
    Box { d: u64, k: u64 },
    Strip { d: u64, k: u64, target: u32 },
    Gap { d: u64, k: u64, upper_half: bool, target_left: bool },
}

/// Which piece of the target partition a point lies in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum TargetPiece {
    Outer,
    Box { d: u64, l1: u64, l2: u64 },
    Strip { d: u64, l1: u64, piece: u32 },
    Gap { d: u64, l1: u64, left: bool },
}

/// A box shuffle ready for evaluation.
#[derive(Clone, Debug)]
pub struct BoxShuffle {
    params: ShuffleParams,
    q: u64,
    n: u64,
    nn: u64,
    kappa: f64,
    kap_lo: u128,
    kap_hi: u128,
    l: f64,
    src_margin: f64,
    src_top: f64,
    t_top: f64,
    slot: f64,
    mt: f64,
    /// Lower ends and cumulative offsets of the target strip pieces, ascending.
    piece_start: Vec<f64>,
    piece_cum: Vec<f64>,
}

impl BoxShuffle {
    pub fn new(params: ShuffleParams) -> Result<BoxShuffle> {
        let b = &params.bicurve;
        let kappa = params.kappa;
        if !(kappa > 0.0 && kappa < b.delta_prime()) {
            return Err(Error::InvalidArgument(format!(
                "κ = {kappa} must lie in (0, δ′ = {})",
                b.delta_prime()
            )));
        }
        let (q, n, big_n) = (b.q(), b.n(), b.big_n() as f64);
        let l = b.half_gap();
        let src_margin = 2.0 * kappa / big_n;
        let t_top = l - kappa / big_n;
        let hh = 2.0 * (l - kappa / big_n);
        let slot = hh / n as f64;
        let mt = kappa / (big_n * n as f64);
        let mut piece_start = vec![-l];
        let mut piece_len = vec![kappa / big_n + mt];
        for i in 1..n {
            piece_start.push(t_top - (n - i) as f64 * slot - mt);
            piece_len.push(2.0 * mt);
        }
        piece_start.push(t_top - mt);
        piece_len.push(kappa / big_n + mt);
        let mut piece_cum = vec![0.0];
        for len in &piece_len {
            piece_cum.push(piece_cum.last().unwrap() + len);
        }
        let kap_lo = (kappa * TWO_128).round() as u128;
        let s = BoxShuffle {
            q,
            n,
            nn: n * n,
            kappa,
            kap_lo,
            kap_hi: kap_lo.wrapping_neg(),
            l,
            src_margin,
            src_top: l - src_margin,
            t_top,
            slot,
            mt,
            piece_start,
            piece_cum,
            params,
        };
        let (a, t) = s.box_areas();
        if (a - t).abs() > 1e-15 * a.max(1e-300) {
            return Err(Error::InvalidArgument("source and target boxes differ in area".into()));
        }
        Ok(s)
    }

    pub fn params(&self) -> &ShuffleParams {
        &self.params
    }

    pub fn bicurve(&self) -> &Bicurve {
        &self.params.bicurve
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Normalised areas `(Leb A_l, Leb Ã_l)`; area in `(θ, y)` is halved.
    pub fn box_areas(&self) -> (f64, f64) {
        let big_n = self.bicurve().big_n() as f64;
        let w = 1.0 - 2.0 * self.kappa;
        let hs = 2.0 * self.src_top;
        let src = w / big_n * hs / 2.0;
        let tgt = w / (self.q as f64 * self.n as f64) * (self.slot - 2.0 * self.mt) / 2.0;
        (src, tgt)
    }

    /// Corner `(θ, y)` of source box `k` of domain `d`: lower left.
    pub fn source_corner(&self, d: u64, k: u64) -> (Turn, f64) {
        let u = Turn::unscale(k, Turn(self.kap_lo), self.nn);
        let th = Turn::unscale(d, u, self.q);
        (th, -self.src_top + self.bicurve().v(th))
    }

    /// Corner of target box `(l₁, l₂)` of domain `d`: lower left.
    pub fn target_corner(&self, d: u64, l1: u64, l2: u64) -> (Turn, f64) {
        let u = Turn::unscale(l1, Turn(self.kap_lo), self.n);
        let th = Turn::unscale(d, u, self.q);
        let lo = self.t_top - (l2 + 1) as f64 * self.slot + self.mt;
        (th, lo + self.bicurve().v(th))
    }

    #[inline]
    fn in_gap(&self, r: Turn) -> bool {
        r.0 < self.kap_lo || r.0 >= self.kap_hi
    }

    #[inline]
    fn box_top(&self, l2: u64) -> f64 {
        self.t_top - l2 as f64 * self.slot - self.mt
    }

    fn frac_turn(x: f64) -> Turn {
        let s = (x * TWO_128).round();
        if s <= 0.0 {
            Turn(0)
        } else if s >= TWO_128 {
            Turn(u128::MAX)
        } else {
            Turn(s as u128)
        }
    }

    fn theta_in_column(&self, d: u64, l1: u64, r: Turn) -> Turn {
        let u = Turn::unscale(l1, r, self.n);
        Turn::unscale(d, u, self.q)
    }

    fn source_piece_of(&self, d: u64, k: u64, r: Turn, ys: f64) -> Piece {
        if !(ys >= -self.l && ys < self.l) {
            return Piece::Outer;
        }
        if self.in_gap(r) {
            let rho = self.gap_rho(r);
            let j = k % self.n;
            let rt = (2.0 * self.kappa * j as f64 + rho) / self.n as f64;
            Piece::Gap {
                d,
                k,
                upper_half: r.0 >= self.kap_hi,
                target_left: rt < self.kappa,
            }
        } else if ys >= -self.src_top && ys < self.src_top {
            Piece::Box { d, k }
        } else {
            let cy = self.strip_cum(ys);
            Piece::Strip {
                d,
                k,
                target: self.target_piece_index(cy) as u32,
            }
        }
    }

    /// Source piece containing `p`.
    pub fn piece(&self, p: &SurfacePoint) -> Piece {
        let (d, u) = p.theta.scale_split(self.q);
        let (k, r) = u.scale_split(self.nn);
        let ys = p.y - self.bicurve().v_at_phase(r);
        self.source_piece_of(d, k, r, ys)
    }

    fn gap_rho(&self, r: Turn) -> f64 {
        let rf = r.0 as f64 / TWO_128;
        if r.0 < self.kap_lo {
            rf
        } else {
            rf - 1.0 + 2.0 * self.kappa
        }
    }

    fn strip_cum(&self, ys: f64) -> f64 {
        if ys < -self.src_top {
            ys + self.l
        } else {
            self.src_margin + (ys - self.src_top)
        }
    }

    fn strip_from_cum(&self, cy: f64) -> f64 {
        if cy < self.src_margin {
            -self.l + cy
        } else {
            self.src_top + (cy - self.src_margin)
        }
    }

    fn target_piece_index(&self, cy: f64) -> usize {
        let n = self.n as usize;
        let mut p = self.piece_cum[1..=n].partition_point(|&c| c <= cy);
        if p > n {
            p = n;
        }
        p
    }

    fn classify_target(&self, th: Turn, y: f64) -> (TargetPiece, u64, Turn, f64) {
        let (d, u) = th.scale_split(self.q);
        let (l1, r) = u.scale_split(self.n);
        let ys = y - self.bicurve().v(th);
        if !(ys >= -self.l && ys < self.l) {
            return (TargetPiece::Outer, d, r, ys);
        }
        if self.in_gap(r) {
            return (TargetPiece::Gap { d, l1, left: r.0 < self.kap_lo }, d, r, ys);
        }
        let s = ((self.t_top - ys) / self.slot).floor();
        let l2 = s.clamp(0.0, (self.n - 1) as f64) as u64;
        let top = self.box_top(l2);
        let bottom = top - self.slot + 2.0 * self.mt;
        if ys >= bottom && ys < top {
            return (TargetPiece::Box { d, l1, l2 }, d, r, ys);
        }
        let n = self.n as usize;
        let piece = if ys < self.piece_start[0] + (self.piece_cum[1] - self.piece_cum[0]) {
            0
        } else if ys >= self.piece_start[n] {
            n
        } else {
            let i = ((ys - self.t_top) / self.slot).round() + self.n as f64;
            i.clamp(1.0, (n - 1) as f64) as usize
        };
        (TargetPiece::Strip { d, l1, piece: piece as u32 }, d, r, ys)
    }

    fn seam(p: &SurfacePoint) -> Error {
        Error::SeamHit {
            theta: p.theta(),
            y: p.y,
        }
    }

    /// Forward image, with the piece it came from.
    pub fn eval_piece(&self, p: &SurfacePoint) -> Result<(SurfacePoint, Piece)> {
        let b = self.bicurve();
        let (d, u) = p.theta.scale_split(self.q);
        let (k, r) = u.scale_split(self.nn);
        let ys = p.y - b.v_at_phase(r);
        let piece = self.source_piece_of(d, k, r, ys);
        let (l1, j) = (k / self.n, k % self.n);
        let (th2, ys2, expect) = match piece {
            Piece::Outer => return Ok((*p, piece)),
            Piece::Box { .. } => {
                let th2 = self.theta_in_column(d, l1, r);
                let ys2 = self.box_top(j) - (self.src_top - ys) / self.n as f64;
                (th2, ys2, TargetPiece::Box { d, l1, l2: j })
            }
            Piece::Strip { target, .. } => {
                let rf = r.0 as f64 / TWO_128;
                let w = 1.0 - 2.0 * self.kappa;
                let r2 = self.kappa + (j as f64 * w + (rf - self.kappa)) / self.n as f64;
                let th2 = self.theta_in_column(d, l1, Self::frac_turn(r2));
                let cy = self.strip_cum(ys);
                let t = target as usize;
                let ys2 = self.piece_start[t] + (cy - self.piece_cum[t]);
                (th2, ys2, TargetPiece::Strip { d, l1, piece: target })
            }
            Piece::Gap { target_left, .. } => {
                let rho = self.gap_rho(r);
                let rt = (2.0 * self.kappa * j as f64 + rho) / self.n as f64;
                let r2 = if target_left { rt } else { 1.0 - 2.0 * self.kappa + rt };
                let th2 = self.theta_in_column(d, l1, Self::frac_turn(r2));
                (th2, ys, TargetPiece::Gap { d, l1, left: target_left })
            }
        };
        let y2 = ys2 + b.v(th2);
        if self.classify_target(th2, y2).0 != expect {
            return Err(Self::seam(p));
        }
        Ok((SurfacePoint::from_turn(th2, y2, p.tag), piece))
    }

    pub fn eval(&self, p: &SurfacePoint) -> Result<SurfacePoint> {
        Ok(self.eval_piece(p)?.0)
    }

    pub fn eval_inv(&self, p: &SurfacePoint) -> Result<SurfacePoint> {
        let b = self.bicurve();
        let (tp, d, r2, ys2) = self.classify_target(p.theta, p.y);
        let (th, ys) = match tp {
            TargetPiece::Outer => return Ok(*p),
            TargetPiece::Box { l1, l2, .. } => {
                let k = l1 * self.n + l2;
                let th = Turn::unscale(d, Turn::unscale(k, r2, self.nn), self.q);
                (th, self.src_top - self.n as f64 * (self.box_top(l2) - ys2))
            }
            TargetPiece::Strip { l1, piece, .. } => {
                let t = piece as usize;
                let cy = self.piece_cum[t] + (ys2 - self.piece_start[t]);
                let w = 1.0 - 2.0 * self.kappa;
                let x = (r2.0 as f64 / TWO_128 - self.kappa) * self.n as f64;
                let j = ((x / w).floor().max(0.0) as u64).min(self.n - 1);
                let r = x - j as f64 * w + self.kappa;
                let k = l1 * self.n + j;
                let th = Turn::unscale(d, Turn::unscale(k, Self::frac_turn(r), self.nn), self.q);
                (th, self.strip_from_cum(cy))
            }
            TargetPiece::Gap { l1, left, .. } => {
                let rf = r2.0 as f64 / TWO_128;
                let rt = if left { rf } else { rf - 1.0 + 2.0 * self.kappa };
                let x = self.n as f64 * rt;
                let j = ((x / (2.0 * self.kappa)).floor().max(0.0) as u64).min(self.n - 1);
                let rho = x - 2.0 * self.kappa * j as f64;
                let r = if rho < self.kappa { rho } else { rho + 1.0 - 2.0 * self.kappa };
                let k = l1 * self.n + j;
                let th = Turn::unscale(d, Turn::unscale(k, Self::frac_turn(r), self.nn), self.q);
                (th, ys2)
            }
        };
        let y = ys + b.v(th);
        let back = SurfacePoint::from_turn(th, y, p.tag);
        let (_, piece_back) = self.eval_piece(&back).map_err(|_| Self::seam(p))?;
        let expected_kind = matches!(
            (tp, piece_back),
            (TargetPiece::Box { .. }, Piece::Box { .. })
                | (TargetPiece::Strip { .. }, Piece::Strip { .. })
                | (TargetPiece::Gap { .. }, Piece::Gap { .. })
        );
        if !expected_kind || !(-1.0..=1.0).contains(&y) {
            return Err(Self::seam(p));
        }
        Ok(back)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::SurfaceTag;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn shuffle(q: u64, eps: f64) -> BoxShuffle {
        BoxShuffle::new(Schedule::default().params(q, eps).unwrap()).unwrap()
    }

    #[test]
    fn schedule_values() {
        let p = Schedule::default().params(2, 0.3).unwrap();
        assert_eq!(p.bicurve.n(), 4);
        assert_eq!(p.bicurve.big_n(), 32);
        assert!((p.bicurve.delta() - 0.0375).abs() < 1e-15);
        assert!(p.kappa < p.bicurve.delta_prime());
    }

    #[test]
    fn cap_refuses() {
        let s = Schedule {
            n_cap: 100,
            ..Schedule::default()
        };
        assert!(matches!(s.params(7, 0.3), Err(Error::OscillationCap { .. })));
    }

    #[test]
    fn box_corner_maps_to_corner() {
        let g = shuffle(2, 0.3);
        for d in 0..2 {
            for k in 0..16 {
                let (th, y) = g.source_corner(d, k);
                let inside = SurfacePoint::from_turn(th.wrapping_add(Turn(1 << 72)), y + 1e-14, SurfaceTag::Cylinder);
                let img = g.eval(&inside).unwrap();
                let (th2, y2) = g.target_corner(d, k / 4, k % 4);
                assert!(img.theta.arc(th2) < 1e-15, "θ corner {d} {k}");
                assert!((img.y - y2).abs() < 1e-12, "y corner {d} {k}");
            }
        }
    }

    #[test]
    fn round_trip_everywhere() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (q, eps) in [(1, 0.5), (2, 0.3), (7, 0.2), (1_000_003, 0.05)] {
            let g = shuffle(q, eps);
            let mut hits = [0usize; 4];
            for _ in 0..20_000 {
                let p = SurfacePoint::new(rng.gen(), rng.gen_range(-1.0..=1.0), SurfaceTag::Cylinder).unwrap();
                let Ok((img, piece)) = g.eval_piece(&p) else { continue };
                hits[match piece {
                    Piece::Outer => 0,
                    Piece::Box { .. } => 1,
                    Piece::Strip { .. } => 2,
                    Piece::Gap { .. } => 3,
                }] += 1;
                let back = g.eval_inv(&img).unwrap();
                assert!(back.theta.arc(p.theta) < 1e-12 && (back.y - p.y).abs() < 1e-12, "{q} {p:?}");
            }
            assert!(hits[0] > 0 && hits[1] > 0);
        }
    }

    #[test]
    fn residual_pieces_round_trip() {
        let g = shuffle(3, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let big_n = g.bicurve().big_n() as f64;
        let mut strips = 0;
        let mut gaps = 0;
        for _ in 0..20_000 {
            let period = rng.gen_range(0..g.bicurve().big_n());
            let near_edge = rng.gen_bool(0.5);
            let r: f64 = if near_edge {
                rng.gen_range(-g.kappa..g.kappa)
            } else {
                rng.gen_range(g.kappa..1.0 - g.kappa)
            };
            let th = Turn::from_f64((period as f64 + r) / big_n);
            let v = g.bicurve().v(th);
            let ys = if near_edge {
                rng.gen_range(-g.l..g.l)
            } else if rng.gen_bool(0.5) {
                rng.gen_range(-g.l..-g.src_top)
            } else {
                rng.gen_range(g.src_top..g.l)
            };
            let p = SurfacePoint::from_turn(th, ys + v, SurfaceTag::Cylinder);
            let Ok((img, piece)) = g.eval_piece(&p) else { continue };
            match piece {
                Piece::Strip { .. } => strips += 1,
                Piece::Gap { .. } => gaps += 1,
                _ => {}
            }
            let back = g.eval_inv(&img).unwrap();
            assert!(back.theta.arc(p.theta) < 1e-13 && (back.y - p.y).abs() < 1e-13);
        }
        assert!(strips > 5000 && gaps > 5000);
    }

    #[test]
    fn inverse_is_onto_target_pieces() {
        let g = shuffle(2, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20_000 {
            let p = SurfacePoint::new(rng.gen(), rng.gen_range(-1.0..=1.0), SurfaceTag::Cylinder).unwrap();
            let Ok(pre) = g.eval_inv(&p) else { continue };
            let img = g.eval(&pre).unwrap();
            assert!(img.theta.arc(p.theta) < 1e-12 && (img.y - p.y).abs() < 1e-12);
        }
    }
}
