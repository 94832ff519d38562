//! Property suites behind `anokat verify`.
//!
//! Each suite returns a table of rows, one per property, with the measured
//! value, the bound it must respect and whether it did.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{
    build_box_shuffle, jacobian_check, outer_region_moved, pushforward, AreaMap, Piece, Rational,
};
use crate::error::{Error, Result};
use crate::ot::metric_laws::{metric_law_suite, instance_seed, random_measure};
use crate::ot::{cost_matrix, lp, wasserstein1_exact_capped, DEFAULT_CAP};
use crate::scheme::estimate::{split_refinement_cost, CellSplit, Estimator};
use crate::scheme::y_grid;
use crate::surface::{dist, sample_leb, SurfacePoint, SurfaceTag, Turn};

/// Largest admissible gap between the exact solver and the LP oracle.
pub const ORACLE_TOL: f64 = 1e-9;
pub const JACOBIAN_TOL: f64 = 1e-6;
pub const COMMUTATION_TOL: f64 = 1e-12;
/// Largest quantisation slack the finer-shuffle run may report.
pub const FINERG_SLACK_MAX: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    MetricLaws,
    FinerShuffle,
    Jacobians,
    OtOracle,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::MetricLaws, Suite::FinerShuffle, Suite::Jacobians, Suite::OtOracle];

    pub fn parse(name: &str) -> Result<Suite> {
        Suite::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| {
                let known: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
                Error::Config(format!("unknown suite `{name}`; known suites: {}", known.join(", ")))
            })
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::MetricLaws => "appendix-a",
            Suite::FinerShuffle => "lemma-finerg",
            Suite::Jacobians => "jacobians",
            Suite::OtOracle => "ot-oracle",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Defaults to 200 for `appendix-a` and 100 for `ot-oracle`.
    pub trials: Option<usize>,
    pub eps: f64,
    pub q: u64,
    pub heights: usize,
    pub atoms: usize,
    pub max_atoms: usize,
    pub points: usize,
    pub step: f64,
    /// Side of the Leb grid pushed forward by the `jacobians` suite.
    pub leb: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 1,
            trials: None,
            eps: 0.3,
            q: 2,
            heights: 64,
            atoms: 512,
            max_atoms: 6,
            points: 1000,
            step: 1e-5,
            leb: 64,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
    pub detail: String,
}

impl Row {
    fn at_most(name: &str, value: f64, bound: f64, detail: impl Into<String>) -> Row {
        Row {
            name: name.into(),
            value,
            bound,
            passed: value.is_finite() && value <= bound,
            detail: detail.into(),
        }
    }

    fn below(name: &str, value: f64, bound: f64, detail: impl Into<String>) -> Row {
        Row {
            passed: value.is_finite() && value < bound,
            ..Row::at_most(name, value, bound, detail)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub rows: Vec<Row>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    /// Plain-text violation table.
    pub fn table(&self) -> String {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(8);
        let mut out = String::new();
        let _ = writeln!(out, "suite {}", self.suite);
        let _ = writeln!(out, "{:<width$}  {:>12}  {:>12}  status  detail", "property", "value", "bound");
        for r in &self.rows {
            let status = if r.passed { "ok" } else { "FAIL" };
            let _ = writeln!(
                out,
                "{:<width$}  {:>12.4e}  {:>12.4e}  {:<6}  {}",
                r.name, r.value, r.bound, status, r.detail
            );
        }
        let _ = writeln!(out, "{}", if self.passed() { "PASS" } else { "FAIL" });
        out
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<SuiteReport> {
    let rows = match suite {
        Suite::MetricLaws => metric_laws(opts)?,
        Suite::FinerShuffle => finer_shuffle(opts)?,
        Suite::Jacobians => jacobians(opts)?,
        Suite::OtOracle => ot_oracle(opts)?,
    };
    Ok(SuiteReport {
        suite: suite.name(),
        rows,
    })
}

fn metric_laws(opts: &VerifyOptions) -> Result<Vec<Row>> {
    let trials = opts.trials.unwrap_or(200);
    let rep = metric_law_suite(opts.seed, trials)?;
    Ok(rep
        .propositions
        .iter()
        .map(|p| {
            Row::at_most(
                &p.name,
                p.max_violation,
                p.tolerance,
                format!("{} trials, worst seed {:#x}: {}", p.trials, p.worst_seed, p.statement),
            )
        })
        .collect())
}

fn ot_oracle(opts: &VerifyOptions) -> Result<Vec<Row>> {
    let trials = opts.trials.unwrap_or(100);
    let mut worst = (0.0f64, 0u64);
    for t in 0..trials as u64 {
        let s = instance_seed(opts.seed, 99, t);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let tag = [SurfaceTag::Cylinder, SurfaceTag::Sphere, SurfaceTag::Disk][rng.gen_range(0..3)];
        let mu = random_measure(&mut rng, tag, opts.max_atoms);
        let nu = random_measure(&mut rng, tag, opts.max_atoms);
        let exact = wasserstein1_exact_capped(&mu, &nu, DEFAULT_CAP)?.distance;
        let oracle = lp::transport_cost(mu.weights(), nu.weights(), &cost_matrix(&mu, &nu)?)
            .ok_or_else(|| Error::InfeasiblePlan("LP oracle found no feasible coupling".into()))?;
        let gap = (exact - oracle).abs();
        if gap > worst.0 {
            worst = (gap, s);
        }
    }
    Ok(vec![Row::at_most(
        "exact vs LP",
        worst.0,
        ORACLE_TOL,
        format!("{trials} pairs of at most {} atoms, worst seed {:#x}", opts.max_atoms, worst.1),
    )])
}

fn finer_shuffle(opts: &VerifyOptions) -> Result<Vec<Row>> {
    let tag = SurfaceTag::Cylinder;
    let (g, bic) = build_box_shuffle(opts.q, opts.eps)?;
    let AreaMap::Shuffle(shuffle) = &g else {
        unreachable!("build_box_shuffle returns a shuffle node")
    };
    let cap = (4 * opts.atoms * (32 * 32 + 2 * 128)).max(DEFAULT_CAP);
    let est = Estimator::new(tag, [32, 32], 128, 64, cap, false)?;
    let e = est.epsilon(&g, &y_grid(opts.heights, 0), opts.atoms)?;

    let moved = outer_region_moved(&g, &bic, shuffle.kappa(), tag, 10_000, opts.seed);

    let rot = AreaMap::rotation(Rational::from_ints(1, opts.q as i64)?);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (mut comm, mut seams) = (0.0f64, 0usize);
    for _ in 0..10_000 {
        let p = SurfacePoint::from_turn(Turn::from_f64(rng.gen()), rng.gen_range(-1.0..=1.0), tag);
        match (g.eval(&rot.eval(&p)?), g.eval(&p)) {
            (Ok(a), Ok(b)) => comm = comm.max(dist(&a, &rot.eval(&b)?)?),
            _ => seams += 1,
        }
    }

    Ok(vec![
        Row::below(
            "sup_y dist_to_hull(g_* mu_y)",
            e.eps,
            opts.eps + e.slack(),
            format!(
                "q = {}, eps = {}, {} heights, {} atoms, argmax y = {}",
                opts.q, opts.eps, e.per_y.len(), opts.atoms, e.argmax_y
            ),
        ),
        Row::below(
            "quantisation slack",
            e.slack(),
            FINERG_SLACK_MAX,
            format!("proxy {:.4e} + reference {:.4e}", e.proxy_slack, e.reference_slack),
        ),
        Row::at_most("outer region moved", moved as f64, 0.0, "of 10000 points in O(gamma)"),
        Row::at_most(
            "g R = R g",
            comm,
            COMMUTATION_TOL,
            format!("10000 points, {seams} on seams skipped"),
        ),
    ])
}

fn jacobians(opts: &VerifyOptions) -> Result<Vec<Row>> {
    let tag = SurfaceTag::Cylinder;
    let (g, _) = build_box_shuffle(opts.q, opts.eps)?;
    let AreaMap::Shuffle(shuffle) = &g else {
        unreachable!("build_box_shuffle returns a shuffle node")
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let want = opts.points / 2;
    let (mut boxes, mut residual) = (Vec::new(), Vec::new());
    let mut seams = 0usize;
    let mut draws = 0usize;
    let mut min_step = opts.step;
    while (boxes.len() < want || residual.len() < opts.points - want) && draws < 1000 * opts.points {
        draws += 1;
        let m = 2.0 * opts.step;
        let p = SurfacePoint::from_turn(Turn::from_f64(rng.gen()), rng.gen_range(-1.0 + m..1.0 - m), tag);
        let bucket = match shuffle.piece(&p) {
            Piece::Box { .. } if boxes.len() < want => &mut boxes,
            Piece::Strip { .. } | Piece::Gap { .. } if residual.len() < opts.points - want => &mut residual,
            _ => continue,
        };
        // Residual pieces can be thinner than the stencil, so the step shrinks there.
        let mut h = opts.step;
        loop {
            match jacobian_check(&g, &p, h) {
                Ok(d) => {
                    bucket.push((d - 1.0).abs());
                    min_step = min_step.min(h);
                    break;
                }
                Err(Error::SeamHit { .. }) if h > opts.step * 1e-4 => h /= 10.0,
                Err(Error::SeamHit { .. }) => {
                    seams += 1;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
    }
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);

    let leb = sample_leb(opts.leb, opts.leb, tag)?;
    let pushed = pushforward(&g, &leb)?;
    let d = wasserstein1_exact_capped(&pushed, &leb, usize::MAX)?.distance;
    let split = CellSplit(opts.leb, opts.leb);
    let map_split = split_refinement_cost(&g, &leb, &split)?;
    let id_split = split_refinement_cost(&AreaMap::identity(), &leb, &split)?;
    let slack = 2.0 * (map_split + id_split);

    Ok(vec![
        Row::at_most(
            "|det Dg - 1| in boxes",
            max(&boxes),
            JACOBIAN_TOL,
            format!("{} points, h = {}", boxes.len(), opts.step),
        ),
        Row::at_most(
            "|det Dg - 1| in residual region",
            max(&residual),
            JACOBIAN_TOL,
            format!(
                "{} points, smallest step {min_step:.0e}, {seams} stencils crossing a seam redrawn",
                residual.len()
            ),
        ),
        Row::at_most(
            "sampled points",
            (opts.points - boxes.len() - residual.len()) as f64,
            0.0,
            format!("{} requested", opts.points),
        ),
        Row::at_most(
            "d_K(g_* Leb_m, Leb_m)",
            d,
            slack,
            format!(
                "m = {0}x{0}; slack = 2 (split cost of g {map_split:.4e} + split cost of id {id_split:.4e})",
                opts.leb
            ),
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(Suite::parse(s.name()).unwrap(), s);
        }
        assert!(matches!(Suite::parse("nope"), Err(Error::Config(_))));
    }

    #[test]
    fn small_oracle_and_jacobian_runs_pass() {
        let opts = VerifyOptions {
            trials: Some(10),
            points: 40,
            leb: 12,
            ..VerifyOptions::default()
        };
        let r = run_suite(Suite::OtOracle, &opts).unwrap();
        assert!(r.passed(), "{}", r.table());
        let r = run_suite(Suite::Jacobians, &opts).unwrap();
        assert!(r.passed(), "{}", r.table());
    }
}
