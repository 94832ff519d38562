//! Randomised checks of the Kantorovich-distance facts the construction relies on.
//!
//! * `pushforward_c0`: `d_K(f₁*μ, f₂*μ) ≤ d_C⁰(f₁, f₂)`, with `d_C⁰` bounded below by the
//!   largest displacement over the atoms of `μ`.
//! * `shear_distortion`: `d_K(μ₁, μ₂)/Q ≤ d_K(φ*μ₁, φ*μ₂) ≤ Q·d_K(μ₁, μ₂)` for a shear with a
//!   monotone vertical reparametrisation, whose constant `Q` is explicit.
//! * `joint_convexity`: convexity of `d_K` in both arguments.
//! * `mixture_scaling`: `d_K(αμ₁ + (1 − α)μ₂, μ₁) = (1 − α)·d_K(μ₁, μ₂)`.
//! * `cell_averaging`: equal-area cells of diameter `ε` carrying arbitrary probability
//!   measures average to within `2ε` of Leb.
//!
//! Continuity of `μ ↦ h*μ` follows from the first two together and has no
//! separate check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{build_box_shuffle, pushforward, AreaMap, Rational};
use crate::error::Result;
use crate::ot::{wasserstein1_exact_capped, ExactResult, DEFAULT_CAP};
use crate::surface::{dist, sample_leb, DiscreteMeasure, SurfacePoint, SurfaceTag};

pub const TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct PropositionReport {
    pub name: String,
    pub statement: String,
    pub trials: usize,
    pub max_violation: f64,
    /// Seed of the instance attaining the largest violation.
    pub worst_seed: u64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SolverStats {
    pub solves: usize,
    pub pivots: usize,
    pub largest_problem: usize,
}

impl SolverStats {
    fn absorb(&mut self, other: &SolverStats) {
        self.solves += other.solves;
        self.pivots += other.pivots;
        self.largest_problem = self.largest_problem.max(other.largest_problem);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LawReport {
    pub seed: u64,
    pub trials: usize,
    /// Instance `t` of proposition `k` uses seed `instance_seed(seed, k, t)`.
    pub seed_rule: String,
    pub propositions: Vec<PropositionReport>,
    pub solver: SolverStats,
    pub notes: Vec<String>,
}

impl LawReport {
    pub fn passed(&self) -> bool {
        self.propositions.iter().all(|p| p.passed)
    }

    pub fn max_violation(&self) -> f64 {
        self.propositions.iter().map(|p| p.max_violation).fold(0.0, f64::max)
    }
}

/// Seed of instance `trial` of proposition number `prop`.
pub fn instance_seed(seed: u64, prop: u64, trial: u64) -> u64 {
    seed ^ (prop.wrapping_mul(0x9E37_79B9_7F4A_7C15)) ^ trial.wrapping_mul(0xD1B5_4A32_D192_ED03)
}

struct Ctx {
    stats: SolverStats,
}

impl Ctx {
    fn w1(&mut self, a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<f64> {
        let r: ExactResult = wasserstein1_exact_capped(a, b, DEFAULT_CAP)?;
        self.stats.solves += 1;
        self.stats.pivots += r.pivots;
        self.stats.largest_problem = self.stats.largest_problem.max(a.len() * b.len());
        Ok(r.distance)
    }
}

fn random_tag(rng: &mut ChaCha8Rng) -> SurfaceTag {
    [SurfaceTag::Cylinder, SurfaceTag::Sphere, SurfaceTag::Disk][rng.gen_range(0..3)]
}

fn random_point(rng: &mut ChaCha8Rng, tag: SurfaceTag) -> SurfacePoint {
    let y = match rng.gen_range(0..10) {
        0 => 1.0,
        1 => -1.0,
        _ => rng.gen_range(-1.0..=1.0),
    };
    SurfacePoint::new(rng.gen(), y, tag).expect("in range")
}

pub fn random_measure(rng: &mut ChaCha8Rng, tag: SurfaceTag, max_atoms: usize) -> DiscreteMeasure {
    let k = rng.gen_range(1..=max_atoms);
    let atoms = (0..k)
        .map(|_| (random_point(rng, tag), rng.gen_range(0.05..1.0)))
        .collect();
    DiscreteMeasure::normalized(tag, atoms, "random").expect("positive weights")
}

fn random_map(rng: &mut ChaCha8Rng) -> Result<AreaMap> {
    let mut parts = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        if rng.gen_bool(0.5) {
            let q = rng.gen_range(1..=9i64);
            parts.push(AreaMap::rotation(Rational::from_ints(rng.gen_range(0..q), q)?));
        } else {
            let (g, _) = build_box_shuffle(rng.gen_range(1..=3), rng.gen_range(0.2..0.8))?;
            parts.push(if rng.gen_bool(0.5) { g } else { g.inverse() });
        }
    }
    Ok(AreaMap::compose(parts))
}

fn pushforward_c0(rng: &mut ChaCha8Rng, ctx: &mut Ctx) -> Result<f64> {
    let tag = random_tag(rng);
    let mu = random_measure(rng, tag, 10);
    let (f1, f2) = (random_map(rng)?, random_map(rng)?);
    let (a, b) = (pushforward(&f1, &mu)?, pushforward(&f2, &mu)?);
    let mut c0 = 0.0f64;
    for (x, z) in a.points().iter().zip(b.points()) {
        c0 = c0.max(dist(x, z)?);
    }
    Ok(ctx.w1(&a, &b)? - c0)
}

/// `(θ, y) ↦ (θ + s·y, y + a(1 − y²)/2)` together with its bi-Lipschitz constant.
struct Shear {
    s: f64,
    a: f64,
}

impl Shear {
    fn q(&self) -> f64 {
        let qy = (1.0 + self.a.abs()).max(1.0 / (1.0 - self.a.abs()));
        (1.0 + self.s.abs()) * qy
    }

    fn apply(&self, mu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
        let atoms = mu
            .atoms()
            .map(|(p, w)| {
                let y2 = (p.y + self.a * (1.0 - p.y * p.y) / 2.0).clamp(-1.0, 1.0);
                Ok((SurfacePoint::new(p.theta() + self.s * p.y, y2, p.tag)?, w))
            })
            .collect::<Result<Vec<_>>>()?;
        DiscreteMeasure::new(mu.tag(), atoms, "sheared")
    }
}

fn shear_distortion(rng: &mut ChaCha8Rng, ctx: &mut Ctx) -> Result<f64> {
    let tag = SurfaceTag::Cylinder;
    let (m1, m2) = (random_measure(rng, tag, 8), random_measure(rng, tag, 8));
    let phi = Shear {
        s: rng.gen_range(-0.8..0.8),
        a: rng.gen_range(-0.9..0.9),
    };
    let q = phi.q();
    let d = ctx.w1(&m1, &m2)?;
    let dphi = ctx.w1(&phi.apply(&m1)?, &phi.apply(&m2)?)?;
    Ok((dphi - q * d).max(d / q - dphi))
}

fn joint_convexity(rng: &mut ChaCha8Rng, ctx: &mut Ctx) -> Result<f64> {
    let tag = random_tag(rng);
    let ms: Vec<DiscreteMeasure> = (0..4).map(|_| random_measure(rng, tag, 8)).collect();
    let alpha: f64 = if rng.gen_bool(0.1) { 1.0 } else { rng.gen() };
    let (n1, n2, m1, m2) = (&ms[0], &ms[1], &ms[2], &ms[3]);
    let left = DiscreteMeasure::mixture(&[(alpha, n1), (1.0 - alpha, n2)], "ν")?;
    let right = DiscreteMeasure::mixture(&[(alpha, m1), (1.0 - alpha, m2)], "μ")?;
    let lhs = ctx.w1(&left, &right)?;
    let rhs = alpha * ctx.w1(n1, m1)? + (1.0 - alpha) * ctx.w1(n2, m2)?;
    Ok(lhs - rhs)
}

fn mixture_scaling(rng: &mut ChaCha8Rng, ctx: &mut Ctx) -> Result<f64> {
    let tag = random_tag(rng);
    let (m1, m2) = (random_measure(rng, tag, 8), random_measure(rng, tag, 8));
    let alpha: f64 = match rng.gen_range(0..10) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.gen(),
    };
    let mix = DiscreteMeasure::mixture(&[(alpha, &m1), (1.0 - alpha, &m2)], "mix")?;
    Ok((ctx.w1(&mix, &m1)? - (1.0 - alpha) * ctx.w1(&m1, &m2)?).abs())
}

fn cell_averaging(rng: &mut ChaCha8Rng, ctx: &mut Ctx) -> Result<f64> {
    const CELLS: usize = 4;
    const FINE: usize = 8;
    let tag = SurfaceTag::Cylinder;
    let (w, h) = (1.0 / CELLS as f64, 2.0 / CELLS as f64);
    let eps = (w * w + h * h).sqrt();
    let leb = sample_leb(CELLS * FINE, CELLS * FINE, tag)?;
    let mut atoms = Vec::new();
    for i in 0..CELLS {
        for j in 0..CELLS {
            let k = rng.gen_range(1..=3);
            let ws: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
            let tot: f64 = ws.iter().sum();
            for wt in ws {
                let th = (i as f64 + rng.gen::<f64>()) * w;
                let y = -1.0 + (j as f64 + rng.gen::<f64>()) * h;
                atoms.push((SurfacePoint::new(th, y, tag)?, wt / tot / (CELLS * CELLS) as f64));
            }
        }
    }
    let avg = DiscreteMeasure::normalized(tag, atoms, "cell average")?;
    Ok(ctx.w1(&leb, &avg)? - 2.0 * eps)
}

type Check = fn(&mut ChaCha8Rng, &mut Ctx) -> Result<f64>;

/// Runs every proposition `trials` times from `seed`.
pub fn metric_law_suite(seed: u64, trials: usize) -> Result<LawReport> {
    let checks: [(&str, &str, Check); 5] = [
        ("pushforward_c0", "d_K(f1*mu, f2*mu) <= d_C0(f1, f2)", pushforward_c0),
        ("shear_distortion", "d_K(mu1, mu2)/Q <= d_K(phi*mu1, phi*mu2) <= Q d_K(mu1, mu2)", shear_distortion),
        ("joint_convexity", "d_K(a nu1 + (1-a) nu2, a mu1 + (1-a) mu2) <= a d_K(nu1, mu1) + (1-a) d_K(nu2, mu2)", joint_convexity),
        ("mixture_scaling", "d_K(a mu1 + (1-a) mu2, mu1) = (1-a) d_K(mu1, mu2)", mixture_scaling),
        ("cell_averaging", "d_K(Leb, (1/N) sum mu_i) <= 2 eps for equal-area cells of diameter eps", cell_averaging),
    ];
    let trials = trials.max(1);
    let mut stats = SolverStats::default();
    let mut props = Vec::new();
    for (k, (name, statement, check)) in checks.iter().enumerate() {
        let runs: Vec<Result<(f64, u64, SolverStats)>> = (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let s = instance_seed(seed, k as u64 + 1, t);
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                let mut ctx = Ctx {
                    stats: SolverStats::default(),
                };
                let v = check(&mut rng, &mut ctx)?;
                Ok((v, s, ctx.stats))
            })
            .collect();
        let mut worst = (f64::NEG_INFINITY, 0u64);
        for r in runs {
            let (v, s, st) = r?;
            stats.absorb(&st);
            if v > worst.0 {
                worst = (v, s);
            }
        }
        let max_violation = worst.0.max(0.0);
        props.push(PropositionReport {
            name: name.to_string(),
            statement: statement.to_string(),
            trials,
            max_violation,
            worst_seed: worst.1,
            tolerance: TOLERANCE,
            passed: max_violation <= TOLERANCE,
        });
    }
    Ok(LawReport {
        seed,
        trials,
        seed_rule: "seed ^ (k * 0x9E3779B97F4A7C15) ^ (t * 0xD1B54A32D192ED03)".into(),
        propositions: props,
        solver: stats,
        notes: vec!["continuity of mu -> h*mu is the composition of the pushforward_c0 and shear_distortion checks".into()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let r = metric_law_suite(7, 6).unwrap();
        assert!(r.passed(), "{r:#?}");
        assert_eq!(r.propositions.len(), 5);
    }

    #[test]
    fn shear_constant_is_valid_pointwise() {
        let phi = Shear { s: 0.7, a: -0.6 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let x = random_measure(&mut rng, SurfaceTag::Cylinder, 1);
            let z = random_measure(&mut rng, SurfaceTag::Cylinder, 1);
            let d = dist(&x.points()[0], &z.points()[0]).unwrap();
            let (px, pz) = (phi.apply(&x).unwrap(), phi.apply(&z).unwrap());
            let dp = dist(&px.points()[0], &pz.points()[0]).unwrap();
            assert!(dp <= phi.q() * d + 1e-12 && d <= phi.q() * dp + 1e-12);
        }
    }
}
