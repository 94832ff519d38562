//! The stage-by-stage construction `(h_n, α_n)` and its certified ledger.
//!
//! A stage starts from `f_n = h_n ∘ R_{α_n} ∘ h_n⁻¹` with certified `ε_n`.
//! It picks a shuffle `g` commuting with `R_{α_n}` such that `ĥ = h_n ∘ g`
//! halves the grid estimate of `ε`, then perturbs `α_n` by `±1/(M·q_n)` with
//! `M` growing until the perturbed map stays close to `f_n` and its ergodic
//! measures stay close to the hull.

pub mod config;
pub mod estimate;

use std::path::Path;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bicurve::{Bicurve, RegionLabel};
use crate::dynamics::{build_box_shuffle_with, outer_region_moved, AreaMap, Piece, Rational, ShuffleParams};
use crate::error::{Error, Result};
use crate::surface::{dist, SurfacePoint, SurfaceTag, Turn};

pub use config::{y_grid, RunConfig};
pub use estimate::{DeltaMergEstimate, EpsEstimate, Estimator};

/// Largest admissible `|ĥ R ĥ⁻¹ − h R h⁻¹|`.
pub const CONJUGACY_TOL: f64 = 1e-10;
const CONJUGACY_POINTS: usize = 1000;
const OUTER_POINTS: usize = 1000;

/// The state after `n` accepted stages.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SchemeState {
    pub n: usize,
    pub alpha: Rational,
    /// `h_n = h_stack[0] ∘ h_stack[1] ∘ … ∘ h_stack[n−1]`.
    pub h_stack: Vec<AreaMap>,
    pub eps: f64,
    pub eps_estimate: EpsEstimate,
    /// The estimate for `h_0 = id`, kept so a resumed run can rebuild the ledger.
    pub eps0_estimate: EpsEstimate,
    pub bicurves: Vec<Bicurve>,
    pub ledger: Vec<StageReport>,
}

impl SchemeState {
    pub fn h(&self) -> AreaMap {
        AreaMap::compose(self.h_stack.clone())
    }

    /// `f_n` as a map tree.
    pub fn f(&self) -> AreaMap {
        let mut parts = self.h_stack.clone();
        parts.push(AreaMap::rotation(self.alpha.clone()));
        parts.push(self.h().inverse());
        AreaMap::compose(parts)
    }

    pub fn eps0(&self) -> f64 {
        self.eps0_estimate.eps
    }

    pub fn ledger_file(&self, cfg: &RunConfig) -> Ledger {
        Ledger::new(cfg, &self.eps0_estimate, &self.ledger)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub heights: usize,
    pub atoms: usize,
    pub leb_grid: [usize; 2],
    pub ref_atoms: usize,
    pub hull_resolution: usize,
    pub orbit_grid: [usize; 2],
    pub orbit_cap: usize,
    pub c0_grid: [usize; 2],
    pub coupling_grid: [usize; 2],
}

/// Everything a stage claims, with the raw numbers to re-check it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: usize,
    pub eps_before: f64,
    pub eps_after: f64,
    pub eps_argmax_y: f64,
    pub eps_prime: f64,
    pub halvings: usize,
    pub eps_proxy_slack: f64,
    pub reference_slack: f64,
    pub hull_gap_bound: f64,
    pub nudged_atoms: usize,
    pub shuffle: ShuffleParams,
    pub alpha_old: Rational,
    pub alpha_new: Rational,
    pub multiplier: String,
    pub sign: i8,
    pub multiplier_tries: usize,
    /// Sampled `sup |f̂(x) − f(x)|` over grid points that follow the same pieces.
    pub c0_gap: f64,
    /// The same supremum including points whose two images straddle a seam.
    pub c0_gap_all: f64,
    pub c0_points: usize,
    pub c0_excluded_band: usize,
    pub c0_excluded_seam: usize,
    pub c0_max_excluded: f64,
    /// Largest diagonal-coupling bound on `d_K(e^f_k(x), e^f̂_k(x))`.
    pub coupling_gap: f64,
    pub coupling_ks: Vec<String>,
    pub delta_merg: f64,
    pub delta_merg_slack: f64,
    pub delta_merg_argmax: (f64, f64),
    pub delta_merg_atoms: usize,
    pub delta_merg_subsampled: bool,
    pub conjugacy_gap: f64,
    pub outer_points: usize,
    pub outer_moved: usize,
    pub grids: GridRecord,
}

/// One re-derived inequality of a stage.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

fn check(name: &'static str, lhs: f64, rhs: f64) -> Check {
    Check {
        name,
        lhs,
        rhs,
        holds: lhs.is_finite() && lhs <= rhs,
    }
}

impl StageReport {
    /// Every inequality the stage claims, recomputed from the stored numbers.
    pub fn checks(&self) -> Vec<Check> {
        let q_old = self.alpha_old.denom().to_f64().unwrap_or(f64::INFINITY);
        let q_new = self.alpha_new.denom().to_f64().unwrap_or(f64::INFINITY);
        let q_ok = self.alpha_new.denom() > &(self.alpha_old.denom() * BigInt::from(2));
        let non_band = (self.c0_points - self.c0_excluded_band).max(1);
        vec![
            check("eps_halves", self.eps_after, self.eps_before / 2.0),
            check("c0_gap", self.c0_gap, self.eps_before / 2.0),
            check(
                "c0_seam_fraction",
                self.c0_excluded_seam as f64 / non_band as f64,
                self.c0_max_excluded,
            ),
            check("coupling_gap", self.coupling_gap, self.eps_before / 2.0),
            check(
                "delta_merg",
                self.delta_merg,
                2.0 * self.eps_after + self.delta_merg_slack,
            ),
            Check {
                name: "q_growth",
                lhs: q_new,
                rhs: 2.0 * q_old,
                holds: q_ok,
            },
            check("conjugacy", self.conjugacy_gap, CONJUGACY_TOL),
            check("outer_fixed", self.outer_moved as f64, 0.0),
        ]
    }

    pub fn passed(&self) -> bool {
        self.checks().iter().all(|c| c.holds)
    }
}

/// `M_k = 2⌊φ·2^{k−1}⌋ + 1`: odd and spread out modulo powers of two.
pub fn multiplier(k: usize) -> BigInt {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    if k < 60 {
        let v = (phi * 2f64.powi(k as i32 - 1)).floor() as u64;
        BigInt::from(v) * 2 + 1
    } else {
        let base = (phi * 2f64.powi(52)).floor() as u64;
        (BigInt::from(base) << (k - 53)) * 2 + 1
    }
}

pub fn initial_state(cfg: &RunConfig, est: &Estimator) -> Result<SchemeState> {
    let eps_estimate = est.epsilon(&AreaMap::identity(), &cfg.heights(), cfg.atoms)?;
    Ok(SchemeState {
        n: 0,
        alpha: Rational::zero(),
        h_stack: Vec::new(),
        eps: eps_estimate.eps,
        eps0_estimate: eps_estimate.clone(),
        eps_estimate,
        bicurves: Vec::new(),
        ledger: Vec::new(),
    })
}

fn jittered_grid(tag: SurfaceTag, [tc, yc]: [usize; 2], seed: u64, salt: u64) -> Vec<SurfacePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ salt);
    let mut pts = Vec::with_capacity(tc * yc);
    for b in 0..yc {
        for a in 0..tc {
            let t = (a as f64 + rng.gen::<f64>()) / tc as f64;
            let y = (-1.0 + (b as f64 + rng.gen::<f64>()) * 2.0 / yc as f64).clamp(-1.0, 1.0);
            pts.push(SurfacePoint::from_turn(Turn::from_f64(t), y, tag));
        }
    }
    pts
}

fn rotate(p: &SurfacePoint, t: Turn) -> SurfacePoint {
    SurfacePoint::from_turn(p.theta.wrapping_add(t), p.y, p.tag)
}

/// Cached `z = ĥ⁻¹x` and `f(x) = ĥ(R_α z)` with its piece trace.
struct C0Point {
    z: SurfacePoint,
    fx: SurfacePoint,
    trace: Vec<Piece>,
}

struct C0Cache {
    points: Vec<Option<C0Point>>,
    band: usize,
    total: usize,
}

impl C0Cache {
    fn new(hhat: &AreaMap, alpha: &Rational, bic: &Bicurve, kappa: f64, pts: &[SurfacePoint]) -> C0Cache {
        let step = alpha.to_turn();
        let mut band = 0;
        let points = pts
            .iter()
            .map(|x| {
                if bic.classify(x, kappa) == RegionLabel::Band {
                    band += 1;
                    return None;
                }
                let z = hhat.eval_inv(x).ok()?;
                let mut trace = Vec::new();
                let fx = hhat.eval_traced(&rotate(&z, step), &mut trace).ok()?;
                Some(C0Point { z, fx, trace })
            })
            .collect();
        C0Cache {
            points,
            band,
            total: pts.len(),
        }
    }

    /// `(gap over matching traces, gap over all, straddling count)`.
    fn compare(&self, hhat: &AreaMap, alpha: &Rational) -> (f64, f64, usize) {
        let step = alpha.to_turn();
        let rows: Vec<(f64, f64, usize)> = self
            .points
            .par_iter()
            .map(|c| match c {
                None => (0.0, 0.0, 0),
                Some(c) => {
                    let mut tr = Vec::with_capacity(c.trace.len());
                    match hhat.eval_traced(&rotate(&c.z, step), &mut tr) {
                        Ok(fx) => {
                            let d = dist(&fx, &c.fx).unwrap_or(f64::INFINITY);
                            if tr == c.trace {
                                (d, d, 0)
                            } else {
                                (0.0, d, 1)
                            }
                        }
                        Err(_) => (0.0, 0.0, 1),
                    }
                }
            })
            .collect();
        let seam_only = self.points.iter().filter(|c| c.is_none()).count() - self.band;
        rows.iter().fold((0.0f64, 0.0f64, seam_only), |acc, r| {
            (acc.0.max(r.0), acc.1.max(r.1), acc.2 + r.2)
        })
    }
}

/// Orbit lengths at which the coupling bound is evaluated.
fn coupling_lengths(q: u64, k_max: u64) -> Vec<u64> {
    let top = q.min(k_max);
    let mut ks = Vec::new();
    let mut k = 1u64;
    while k < top {
        ks.push(k);
        k *= 2;
    }
    ks.push(top);
    ks
}

/// Largest diagonal-coupling cost between the empirical measures of `f` and `f̂`.
fn coupling_gap(
    hhat: &AreaMap,
    alpha: &Rational,
    alpha_hat: &Rational,
    bases: &[SurfacePoint],
    k_max: u64,
) -> (f64, Vec<String>) {
    let q = alpha.denom();
    let q64 = q.to_u64().unwrap_or(u64::MAX);
    let ks = coupling_lengths(q64, k_max);
    let top = *ks.last().expect("non-empty");
    let diam = bases.first().map_or(2.0, |p| p.tag.diameter());
    let pair = |z: &SurfacePoint, j: u64| -> f64 {
        let a = hhat.eval(&rotate(z, alpha.multiple_turn(j)));
        let b = hhat.eval(&rotate(z, alpha_hat.multiple_turn(j)));
        match (a, b) {
            (Ok(a), Ok(b)) => dist(&a, &b).unwrap_or(diam),
            _ => diam,
        }
    };
    let full_orbit = q64 > top;
    let gaps: Vec<f64> = bases
        .par_iter()
        .map(|x| {
            let Ok(z) = hhat.eval_inv(x) else { return diam };
            let mut worst = 0.0f64;
            let mut sum = 0.0;
            let mut next = 0;
            for j in 1..=top {
                sum += pair(&z, j);
                if j == ks[next] {
                    worst = worst.max(sum / j as f64);
                    next += 1;
                }
            }
            if full_orbit {
                // Length q_n through a stratified sample of the orbit.
                let s: f64 = (0..top)
                    .map(|i| {
                        let j = (BigInt::from(i) * q / BigInt::from(top)).to_u64().unwrap_or(0) + 1;
                        pair(&z, j)
                    })
                    .sum();
                worst = worst.max(s / top as f64);
            }
            worst
        })
        .collect();
    let mut labels: Vec<String> = ks.iter().map(|k| k.to_string()).collect();
    if full_orbit {
        labels.push(format!("{q} (stratified, {top} samples)"));
    }
    (gaps.into_iter().fold(0.0, f64::max), labels)
}

fn conjugacy_gap(h: &AreaMap, hhat: &AreaMap, alpha: &Rational, pts: &[SurfacePoint]) -> f64 {
    let step = alpha.to_turn();
    pts.par_iter()
        .take(CONJUGACY_POINTS)
        .filter_map(|x| {
            let a = hhat.eval(&rotate(&hhat.eval_inv(x).ok()?, step)).ok()?;
            let b = h.eval(&rotate(&h.eval_inv(x).ok()?, step)).ok()?;
            dist(&a, &b).ok()
        })
        .reduce(|| 0.0, f64::max)
}

fn reject(stage: usize, condition: &str, detail: String) -> Error {
    Error::StepRejected {
        stage,
        condition: condition.to_string(),
        detail,
    }
}

/// One stage of the scheme.
pub fn step(state: &SchemeState, cfg: &RunConfig, est: &Estimator) -> Result<SchemeState> {
    let stage = state.n + 1;
    let tag = cfg.surface;
    let eps_n = state.eps;
    let target = eps_n / 2.0;
    let q_n = state
        .alpha
        .denom()
        .to_u64()
        .ok_or_else(|| reject(stage, "shuffle", format!("q = {} exceeds 64 bits", state.alpha.denom())))?;
    let heights = cfg.heights();

    let mut eps_prime = eps_n.min(0.99);
    let mut chosen = None;
    for halvings in 0..=cfg.max_halvings {
        let (g, bic) = build_box_shuffle_with(q_n, eps_prime, &cfg.schedule)?;
        let mut stack = state.h_stack.clone();
        stack.push(g.clone());
        let hhat = AreaMap::compose(stack.clone());
        let e = est.epsilon(&hhat, &heights, cfg.atoms)?;
        if e.eps <= target {
            chosen = Some((g, bic, stack, hhat, e, halvings));
            break;
        }
        eps_prime /= 2.0;
    }
    let (g, bic, stack, hhat, eps_est, halvings) = chosen.ok_or_else(|| {
        reject(
            stage,
            "eps_halves",
            format!("no shuffle within {} halvings reached ε ≤ {target}", cfg.max_halvings),
        )
    })?;
    let AreaMap::Shuffle(shuffle) = &g else {
        unreachable!("build_box_shuffle returns a shuffle node")
    };
    let kappa = shuffle.kappa();
    let h = state.h();

    let c0_pts = jittered_grid(tag, cfg.c0_grid, cfg.seed, stage as u64);
    let cache = C0Cache::new(&hhat, &state.alpha, &bic, kappa, &c0_pts);
    let bases = jittered_grid(tag, cfg.coupling_grid, cfg.seed, 0x5eed ^ stage as u64);
    let non_band = (cache.total - cache.band).max(1);

    let q_big = state.alpha.denom().clone();
    let mut last_failure = String::from("no multiplier tried");
    let mut accepted = None;
    for k in 1..=cfg.max_multiplier_tries {
        let m = multiplier(k);
        let plus = state.alpha.add_ratio(&BigInt::one(), &(&m * &q_big))?;
        let minus = state.alpha.add_ratio(&BigInt::from(-1), &(&m * &q_big))?;
        let minus_ok = minus.to_f64() > 0.0;
        let (alpha_hat, sign) = if stage % 2 == 1 && minus_ok { (minus, -1i8) } else { (plus, 1i8) };
        if alpha_hat.to_f64() >= 1.0 || alpha_hat.to_f64() <= 0.0 {
            last_failure = format!("α̂ = {alpha_hat} leaves (0, 1)");
            continue;
        }
        if alpha_hat.denom() <= &(&q_big * BigInt::from(2)) {
            last_failure = format!("q̂ = {} ≤ 2q", alpha_hat.denom());
            continue;
        }
        let (c0, c0_all, straddle) = cache.compare(&hhat, &alpha_hat);
        if c0 > target || straddle as f64 / non_band as f64 > cfg.c0_max_excluded {
            last_failure = format!("C⁰ gap {c0} with {straddle} straddling points at M = {m}");
            continue;
        }
        let (cg, ks) = coupling_gap(&hhat, &state.alpha, &alpha_hat, &bases, cfg.coupling_k_max);
        if cg > target {
            last_failure = format!("empirical-measure gap {cg} at M = {m}");
            continue;
        }
        let dm = est.delta_merg(
            &hhat,
            &alpha_hat,
            cfg.orbit_grid[0],
            &y_grid(cfg.orbit_grid[1], cfg.y_cluster),
            cfg.orbit_cap,
            cfg.orbit_subsample,
        )?;
        if dm.value > 2.0 * eps_est.eps + dm.slack() {
            last_failure = format!("Δ_merg {} at M = {m}", dm.value);
            continue;
        }
        accepted = Some((alpha_hat, sign, m, k, c0, c0_all, straddle, cg, ks, dm));
        break;
    }
    let (alpha_hat, sign, m, tries, c0, c0_all, straddle, cg, ks, dm) =
        accepted.ok_or_else(|| reject(stage, "alpha", last_failure))?;

    let outer_points = OUTER_POINTS;
    let outer_moved = outer_region_moved(&g, &bic, kappa, tag, outer_points, cfg.seed);
    let conj = conjugacy_gap(&h, &hhat, &state.alpha, &c0_pts);

    let report = StageReport {
        stage,
        eps_before: eps_n,
        eps_after: eps_est.eps,
        eps_argmax_y: eps_est.argmax_y,
        eps_prime,
        halvings,
        eps_proxy_slack: eps_est.proxy_slack,
        reference_slack: eps_est.reference_slack,
        hull_gap_bound: eps_est.hull_gap_bound,
        nudged_atoms: eps_est.nudged_atoms,
        shuffle: shuffle.params().clone(),
        alpha_old: state.alpha.clone(),
        alpha_new: alpha_hat.clone(),
        multiplier: m.to_string(),
        sign,
        multiplier_tries: tries,
        c0_gap: c0,
        c0_gap_all: c0_all,
        c0_points: cache.total,
        c0_excluded_band: cache.band,
        c0_excluded_seam: straddle,
        c0_max_excluded: cfg.c0_max_excluded,
        coupling_gap: cg,
        coupling_ks: ks,
        delta_merg: dm.value,
        delta_merg_slack: dm.slack(),
        delta_merg_argmax: dm.argmax,
        delta_merg_atoms: dm.atoms_per_orbit,
        delta_merg_subsampled: dm.subsampled,
        conjugacy_gap: conj,
        outer_points,
        outer_moved,
        grids: GridRecord {
            heights: heights.len(),
            atoms: cfg.atoms,
            leb_grid: cfg.leb_grid,
            ref_atoms: cfg.ref_atoms,
            hull_resolution: cfg.hull_resolution,
            orbit_grid: cfg.orbit_grid,
            orbit_cap: cfg.orbit_cap,
            c0_grid: cfg.c0_grid,
            coupling_grid: cfg.coupling_grid,
        },
    };
    if let Some(bad) = report.checks().into_iter().find(|c| !c.holds) {
        return Err(reject(stage, bad.name, format!("{} > {}", bad.lhs, bad.rhs)));
    }
    let mut bicurves = state.bicurves.clone();
    bicurves.push(bic);
    let mut ledger = state.ledger.clone();
    ledger.push(report);
    Ok(SchemeState {
        n: stage,
        alpha: alpha_hat,
        h_stack: stack,
        eps: eps_est.eps,
        eps_estimate: eps_est,
        eps0_estimate: state.eps0_estimate.clone(),
        bicurves,
        ledger,
    })
}

/// A checkpoint: the full state plus the configuration that produced it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config_hash: String,
    pub config: RunConfig,
    pub state: SchemeState,
}

impl Checkpoint {
    pub fn new(config: &RunConfig, state: &SchemeState) -> Checkpoint {
        Checkpoint {
            config_hash: config.hash(),
            config: config.clone(),
            state: state.clone(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Checkpoint> {
        let text = std::fs::read_to_string(path)?;
        let c: Checkpoint = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("checkpoint line {}, column {}: {e}", e.line(), e.column())))?;
        if c.config.hash() != c.config_hash {
            return Err(Error::Config("checkpoint config does not match its hash".into()));
        }
        Ok(c)
    }
}

/// The ledger file: stage reports with their re-derived checks.
#[derive(Clone, Debug, Serialize)]
pub struct Ledger {
    pub config_hash: String,
    pub surface: SurfaceTag,
    pub eps0: f64,
    pub eps0_argmax_y: f64,
    pub stages: Vec<LedgerStage>,
    pub chained: Vec<Check>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LedgerStage {
    pub report: StageReport,
    pub checks: Vec<Check>,
}

impl Ledger {
    pub fn new(cfg: &RunConfig, eps0: &EpsEstimate, reports: &[StageReport]) -> Ledger {
        let stages: Vec<LedgerStage> = reports
            .iter()
            .map(|r| LedgerStage {
                report: r.clone(),
                checks: r.checks(),
            })
            .collect();
        let mut chained = Vec::new();
        for r in reports {
            chained.push(check(
                "eps_n <= eps_0 / 2^n",
                r.eps_after,
                eps0.eps / 2f64.powi(r.stage as i32),
            ));
        }
        let c0_sum: f64 = reports.iter().map(|r| r.c0_gap).sum();
        chained.push(check("sum of c0 gaps <= eps_0", c0_sum, eps0.eps));
        let passed = stages.iter().all(|s| s.checks.iter().all(|c| c.holds)) && chained.iter().all(|c| c.holds);
        Ledger {
            config_hash: cfg.hash(),
            surface: cfg.surface,
            eps0: eps0.eps,
            eps0_argmax_y: eps0.argmax_y,
            stages,
            chained,
            passed,
        }
    }
}

/// Result of driving the scheme: the last state and, if a stage failed, why.
pub struct RunOutcome {
    pub state: SchemeState,
    pub rejection: Option<Error>,
}

impl RunOutcome {
    pub fn ledger(&self, cfg: &RunConfig) -> Ledger {
        self.state.ledger_file(cfg)
    }
}

/// Runs stages from `state` until `cfg.stages`, calling `sink` after each one.
pub fn run_from(
    mut state: SchemeState,
    cfg: &RunConfig,
    est: &Estimator,
    mut sink: impl FnMut(&SchemeState) -> Result<()>,
) -> Result<RunOutcome> {
    while state.n < cfg.stages {
        match step(&state, cfg, est) {
            Ok(next) => {
                state = next;
                sink(&state)?;
            }
            Err(e @ Error::StepRejected { .. }) => {
                return Ok(RunOutcome {
                    state,
                    rejection: Some(e),
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(RunOutcome { state, rejection: None })
}

/// Runs a whole scheme from the identity; `sink` also sees the initial state.
pub fn run(cfg: &RunConfig, mut sink: impl FnMut(&SchemeState) -> Result<()>) -> Result<RunOutcome> {
    cfg.validate()?;
    let est = Estimator::from_config(cfg)?;
    let s0 = initial_state(cfg, &est)?;
    sink(&s0)?;
    run_from(s0, cfg, &est, sink)
}

/// Continues a checkpointed run to `cfg.stages`.
pub fn resume(
    checkpoint: &Checkpoint,
    cfg: &RunConfig,
    sink: impl FnMut(&SchemeState) -> Result<()>,
) -> Result<RunOutcome> {
    cfg.validate()?;
    let est = Estimator::from_config(cfg)?;
    run_from(checkpoint.state.clone(), cfg, &est, sink)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multipliers_are_odd_and_growing() {
        let ms: Vec<BigInt> = (1..=8).map(multiplier).collect();
        let expect = [3u64, 7, 13, 25, 51, 103, 207, 415];
        for (m, e) in ms.iter().zip(expect) {
            assert_eq!(m, &BigInt::from(e));
        }
        assert!(multiplier(70) > multiplier(59));
    }

    #[test]
    fn coupling_lengths_are_log_spaced() {
        assert_eq!(coupling_lengths(1, 1024), vec![1]);
        assert_eq!(coupling_lengths(10, 1024), vec![1, 2, 4, 8, 10]);
        assert_eq!(coupling_lengths(5000, 1024).last(), Some(&1024));
    }

    #[test]
    fn zero_stages_is_the_initial_state() {
        let cfg = RunConfig {
            stages: 0,
            y_grid: 3,
            y_cluster: 0,
            atoms: 16,
            leb_grid: [6, 6],
            ref_atoms: 8,
            hull_resolution: 8,
            ..RunConfig::default()
        };
        let out = run(&cfg, |_| Ok(())).unwrap();
        assert_eq!(out.state.n, 0);
        assert!(out.state.ledger.is_empty());
        assert!(out.ledger(&cfg).passed);
    }
}
