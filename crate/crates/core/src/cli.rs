//! The `anokat` command line.
//!
//! Exit codes: `0` success, `1` runtime failure, `2` configuration error
//! (unreadable or malformed config, unknown suite, bad flag), `3` a stage was
//! rejected, a ledger inequality failed or a verification suite found a
//! violation.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;

use crate::bicurve::Sign;
use crate::dynamics::{conjugate_orbit, pushforward};
use crate::error::{Error, Result};
use crate::scheme::{self, y_grid, Checkpoint, Estimator, RunConfig, SchemeState};
use crate::surface::{sample_mu_y, SurfacePoint, SurfaceTag, Turn};
use crate::verify::{run_suite, Suite, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_REJECTED: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "anokat", version, about = "Approximation-by-conjugacy schemes with certified ledgers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SurfaceArg {
    Cylinder,
    Sphere,
    Disk,
}

impl From<SurfaceArg> for SurfaceTag {
    fn from(s: SurfaceArg) -> SurfaceTag {
        match s {
            SurfaceArg::Cylinder => SurfaceTag::Cylinder,
            SurfaceArg::Sphere => SurfaceTag::Sphere,
            SurfaceArg::Disk => SurfaceTag::Disk,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlotWhat {
    Orbit,
    Measure,
    Bicurve,
    Ledger,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a scheme from the identity.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        surface: Option<SurfaceArg>,
        #[arg(long)]
        stages: Option<usize>,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Continue a run from a checkpoint.
    Resume {
        checkpoint: PathBuf,
        #[arg(long)]
        stages: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite: appendix-a, lemma-finerg, jacobians or ot-oracle.
    Verify {
        suite: String,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.3)]
        eps: f64,
        #[arg(long, default_value_t = 2)]
        q: u64,
        #[arg(long, default_value_t = 64)]
        heights: usize,
        #[arg(long, default_value_t = 512)]
        atoms: usize,
        #[arg(long, default_value_t = 6)]
        max_atoms: usize,
        #[arg(long, default_value_t = 1000)]
        points: usize,
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
        #[arg(long, default_value_t = 64)]
        leb: usize,
        /// Print the report as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Estimate Δ_merg of the map stored in a checkpoint.
    DeltaMerg {
        checkpoint: PathBuf,
        /// Base-point grid as `GxH` (θ-count x y-count).
        #[arg(long, default_value = "2x12")]
        grid: String,
    },
    /// Write plot-ready columnar data from a checkpoint.
    Plotdata {
        checkpoint: PathBuf,
        #[arg(value_enum)]
        what: PlotWhat,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Stage whose bicurve is drawn; all stages when omitted.
        #[arg(long)]
        stage: Option<usize>,
        /// Number of orbit seeds.
        #[arg(long, default_value_t = 4)]
        seeds: usize,
        /// Orbit length.
        #[arg(long, default_value_t = 100)]
        k: usize,
        /// Heights of the pushed longitude measures.
        #[arg(long, value_delimiter = ',', default_value = "-0.5,0,0.5")]
        y: Vec<f64>,
        #[arg(long, default_value_t = 512)]
        atoms: usize,
        /// Polyline samples per bicurve branch.
        #[arg(long, default_value_t = 4096)]
        samples: usize,
    },
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    init_threads();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Json(_) | Error::InvalidArgument(_) | Error::SizeCap { .. } => EXIT_CONFIG,
        Error::StepRejected { .. } => EXIT_REJECTED,
        _ => EXIT_RUNTIME,
    }
}

fn init_threads() {
    if let Some(n) = std::env::var("ANOKAT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Run {
            config,
            surface,
            stages,
            out,
        } => {
            let mut cfg = match config {
                Some(p) => RunConfig::load(&p)?,
                None => RunConfig::default(),
            };
            if let Some(s) = surface {
                cfg.surface = s.into();
            }
            if let Some(k) = stages {
                cfg.stages = k;
            }
            if out.is_some() {
                cfg.output_dir = out;
            }
            cfg.validate()?;
            let dir = output_dir(&cfg)?;
            let outcome = scheme::run(&cfg, |s| write_checkpoint(&dir, &cfg, s))?;
            finish(&dir, &cfg, outcome)
        }
        Command::Resume { checkpoint, stages, out } => {
            let cp = Checkpoint::read(&checkpoint)?;
            let mut cfg = cp.config.clone();
            if let Some(k) = stages {
                cfg.stages = k;
            }
            if out.is_some() {
                cfg.output_dir = out;
            }
            let dir = output_dir(&cfg)?;
            let outcome = scheme::resume(&cp, &cfg, |s| write_checkpoint(&dir, &cfg, s))?;
            finish(&dir, &cfg, outcome)
        }
        Command::Verify {
            suite,
            trials,
            seed,
            eps,
            q,
            heights,
            atoms,
            max_atoms,
            points,
            step,
            leb,
            json,
        } => {
            let suite = Suite::parse(&suite)?;
            let opts = VerifyOptions {
                seed,
                trials,
                eps,
                q,
                heights,
                atoms,
                max_atoms,
                points,
                step,
                leb,
            };
            let report = run_suite(suite, &opts)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.table());
            }
            Ok(if report.passed() { EXIT_OK } else { EXIT_REJECTED })
        }
        Command::DeltaMerg { checkpoint, grid } => {
            let cp = Checkpoint::read(&checkpoint)?;
            let (g, h) = parse_grid(&grid)?;
            let cfg = &cp.config;
            let est = Estimator::from_config(cfg)?;
            let dm = est.delta_merg(
                &cp.state.h(),
                &cp.state.alpha,
                g,
                &y_grid(h, cfg.y_cluster),
                cfg.orbit_cap,
                cfg.orbit_subsample,
            )?;
            println!("{}", serde_json::to_string_pretty(&dm)?);
            Ok(EXIT_OK)
        }
        Command::Plotdata {
            checkpoint,
            what,
            out,
            stage,
            seeds,
            k,
            y,
            atoms,
            samples,
        } => {
            let cp = Checkpoint::read(&checkpoint)?;
            fs::create_dir_all(&out)?;
            let path = plotdata(&cp, what, &out, stage, seeds, k, &y, atoms, samples)?;
            println!("{}", path.display());
            Ok(EXIT_OK)
        }
    }
}

fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("grid `{s}` is not of the form GxH with positive G and H"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let g: usize = a.trim().parse().map_err(|_| bad())?;
    let h: usize = b.trim().parse().map_err(|_| bad())?;
    if g == 0 || h < 2 {
        return Err(bad());
    }
    Ok((g, h))
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("anokat-out"));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_checkpoint(dir: &Path, cfg: &RunConfig, state: &SchemeState) -> Result<()> {
    let cp = Checkpoint::new(cfg, state);
    cp.write(&dir.join(format!("checkpoint_stage{}.json", state.n)))?;
    cp.write(&dir.join("checkpoint.json"))
}

fn finish(dir: &Path, cfg: &RunConfig, outcome: scheme::RunOutcome) -> Result<i32> {
    let ledger = outcome.ledger(cfg);
    fs::write(dir.join("ledger.json"), serde_json::to_string_pretty(&ledger)? + "\n")?;
    write_stages_csv(&dir.join("stages.csv"), &outcome.state)?;
    write_eps_profile(&dir.join("eps_profile.csv"), &outcome.state)?;
    for s in &ledger.stages {
        eprintln!(
            "stage {}: eps {:.6} -> {:.6}, c0 {:.3e}, delta_merg {:.6}, q = {}",
            s.report.stage,
            s.report.eps_before,
            s.report.eps_after,
            s.report.c0_gap,
            s.report.delta_merg,
            s.report.alpha_new.denom()
        );
    }
    if let Some(e) = &outcome.rejection {
        eprintln!("error: {e}");
        return Ok(EXIT_REJECTED);
    }
    if !ledger.passed {
        eprintln!("error: a ledger inequality failed; see ledger.json");
        return Ok(EXIT_REJECTED);
    }
    eprintln!("ledger passed; outputs in {}", dir.display());
    Ok(EXIT_OK)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
}

/// `stage,eps,c0_gap,delta_merg,q_n`, one row per accepted stage.
pub fn write_stages_csv(path: &Path, state: &SchemeState) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["stage", "eps", "c0_gap", "delta_merg", "q_n"])?;
    for r in &state.ledger {
        w.write_record([
            r.stage.to_string(),
            r.eps_after.to_string(),
            r.c0_gap.to_string(),
            r.delta_merg.to_string(),
            r.alpha_new.denom().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `stage,y,distance`: the per-height hull distances behind each `ε_n`.
fn write_eps_profile(path: &Path, state: &SchemeState) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["stage", "y", "distance"])?;
    let mut rows = vec![(0, &state.eps0_estimate)];
    if state.n > 0 {
        rows.push((state.n, &state.eps_estimate));
    }
    for (n, e) in rows {
        for v in &e.per_y {
            w.write_record([n.to_string(), v.y.to_string(), v.distance.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn plotdata(
    cp: &Checkpoint,
    what: PlotWhat,
    out: &Path,
    stage: Option<usize>,
    seeds: usize,
    k: usize,
    ys: &[f64],
    atoms: usize,
    samples: usize,
) -> Result<PathBuf> {
    let state = &cp.state;
    let tag = cp.config.surface;
    match what {
        PlotWhat::Orbit => {
            let path = out.join("orbit.csv");
            let mut w = csv_writer(&path)?;
            w.write_record(["seed", "j", "theta", "y"])?;
            let h = state.h();
            for s in 0..seeds.max(1) {
                let x = SurfacePoint::new(
                    (s as f64 + 0.5) / seeds.max(1) as f64 * 0.618_034 % 1.0,
                    -1.0 + 2.0 * (s as f64 + 0.5) / seeds.max(1) as f64,
                    tag,
                )?;
                for (j, p) in conjugate_orbit(&h, &state.alpha, &x, k)?.iter().enumerate() {
                    w.write_record([s.to_string(), (j + 1).to_string(), p.theta().to_string(), p.y.to_string()])?;
                }
            }
            w.flush()?;
            Ok(path)
        }
        PlotWhat::Measure => {
            let path = out.join("measure.csv");
            let mut w = csv_writer(&path)?;
            w.write_record(["y0", "theta", "y", "weight"])?;
            let h = state.h();
            for &y0 in ys {
                let mu = pushforward(&h, &sample_mu_y(y0, atoms, tag)?)?;
                for (p, wt) in mu.atoms() {
                    w.write_record([y0.to_string(), p.theta().to_string(), p.y.to_string(), wt.to_string()])?;
                }
            }
            w.flush()?;
            Ok(path)
        }
        PlotWhat::Bicurve => {
            let path = out.join("bicurve.csv");
            let mut w = csv_writer(&path)?;
            w.write_record(["stage", "branch", "theta", "height"])?;
            for (i, b) in state.bicurves.iter().enumerate() {
                let n = i + 1;
                if stage.is_some_and(|s| s != n) {
                    continue;
                }
                for (sign, name) in [(Sign::Plus, "plus"), (Sign::Minus, "minus")] {
                    for j in 0..samples {
                        let th = Turn::from_ratio(&(j as u64).into(), &(samples as u64).into());
                        w.write_record([
                            n.to_string(),
                            name.to_string(),
                            th.to_f64().to_string(),
                            b.curve_height(sign, th).to_string(),
                        ])?;
                    }
                }
            }
            w.flush()?;
            Ok(path)
        }
        PlotWhat::Ledger => {
            let path = out.join("ledger_curves.csv");
            let mut w = csv_writer(&path)?;
            w.write_record(["stage", "eps", "eps_bound", "c0_gap", "delta_merg", "log10_q"])?;
            let eps0 = state.eps0();
            w.write_record(["0".into(), eps0.to_string(), eps0.to_string(), String::new(), String::new(), "0".into()])?;
            for r in &state.ledger {
                let log10_q = r.alpha_new.denom().to_f64().map_or(f64::INFINITY, f64::log10);
                w.write_record([
                    r.stage.to_string(),
                    r.eps_after.to_string(),
                    (eps0 / 2f64.powi(r.stage as i32)).to_string(),
                    r.c0_gap.to_string(),
                    r.delta_merg.to_string(),
                    log10_q.to_string(),
                ])?;
            }
            w.flush()?;
            Ok(path)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("2x12").unwrap(), (2, 12));
        assert!(parse_grid("2by12").is_err());
        assert!(parse_grid("0x12").is_err());
    }

    #[test]
    fn unknown_suite_is_a_config_error() {
        assert_eq!(main_with(["anokat", "verify", "nope"]), EXIT_CONFIG);
        assert_eq!(main_with(["anokat", "frobnicate"]), EXIT_CONFIG);
    }
}
