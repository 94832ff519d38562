use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::Schedule;
use crate::error::{Error, Result};
use crate::surface::SurfaceTag;

/// Every knob of a scheme run. Unknown JSON fields are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub surface: SurfaceTag,
    pub stages: usize,
    /// Evenly spaced heights in `[−1, 1]`, endpoints included.
    pub y_grid: usize,
    /// Extra heights accumulating geometrically at `±1`, per side.
    pub y_cluster: usize,
    /// Atoms per longitude measure.
    pub atoms: usize,
    /// `[θ-cells, y-cells]` of the Leb reference.
    pub leb_grid: [usize; 2],
    /// Atoms of the `μ±1` references.
    pub ref_atoms: usize,
    pub hull_resolution: usize,
    /// `[θ-count, y-count]` of orbit base points for `Δ_merg`.
    pub orbit_grid: [usize; 2],
    /// Longest orbit used as-is; longer orbits are stratified down to this size.
    pub orbit_cap: usize,
    pub orbit_subsample: bool,
    /// `[θ-count, y-count]` of the C⁰ comparison grid.
    pub c0_grid: [usize; 2],
    /// Largest fraction of C⁰ grid points that may be set aside for straddling a seam.
    pub c0_max_excluded: f64,
    /// `[θ-count, y-count]` of base points for the empirical-measure comparison.
    pub coupling_grid: [usize; 2],
    pub coupling_k_max: u64,
    pub ot_cap: usize,
    pub entropic_fallback: bool,
    pub max_halvings: usize,
    pub max_multiplier_tries: usize,
    pub schedule: Schedule,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            surface: SurfaceTag::Cylinder,
            stages: 3,
            y_grid: 17,
            y_cluster: 4,
            atoms: 2048,
            leb_grid: [32, 32],
            ref_atoms: 128,
            hull_resolution: 64,
            orbit_grid: [2, 12],
            orbit_cap: 512,
            orbit_subsample: true,
            c0_grid: [100, 100],
            c0_max_excluded: 0.01,
            coupling_grid: [8, 8],
            coupling_k_max: 1024,
            ot_cap: 1 << 25,
            entropic_fallback: false,
            max_halvings: 8,
            max_multiplier_tries: 48,
            schedule: Schedule::default(),
            seed: 1,
            output_dir: None,
        }
    }
}

impl RunConfig {
    /// Parses JSON, reporting syntax errors with line and column.
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
            Error::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::from_json(&text)
    }

    /// Total atoms of the hull reference mixture.
    pub fn reference_atoms(&self) -> usize {
        self.leb_grid[0] * self.leb_grid[1] + 2 * self.ref_atoms
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("y_grid", self.y_grid),
            ("atoms", self.atoms),
            ("leb_grid[0]", self.leb_grid[0]),
            ("leb_grid[1]", self.leb_grid[1]),
            ("ref_atoms", self.ref_atoms),
            ("hull_resolution", self.hull_resolution),
            ("orbit_grid[0]", self.orbit_grid[0]),
            ("orbit_grid[1]", self.orbit_grid[1]),
            ("orbit_cap", self.orbit_cap),
            ("c0_grid[0]", self.c0_grid[0]),
            ("c0_grid[1]", self.c0_grid[1]),
            ("coupling_grid[0]", self.coupling_grid[0]),
            ("coupling_grid[1]", self.coupling_grid[1]),
            ("max_multiplier_tries", self.max_multiplier_tries),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.y_grid < 2 {
            return Err(Error::Config("y_grid must include both ends, so at least 2".into()));
        }
        if self.coupling_k_max == 0 {
            return Err(Error::Config("coupling_k_max must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.c0_max_excluded) {
            return Err(Error::Config("c0_max_excluded must lie in [0, 1)".into()));
        }
        let needed = 2 * self.atoms.max(self.orbit_cap) * self.reference_atoms().max(2 * self.atoms.max(self.orbit_cap));
        if self.ot_cap < needed && !self.entropic_fallback {
            return Err(Error::Config(format!(
                "ot_cap = {} is below the {needed} cost entries the chosen grids need",
                self.ot_cap
            )));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, excluding the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        let text = serde_json::to_string(&c).expect("config serialises");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Heights used for `sup_y`: the even grid plus geometric clusters at `±1`.
    pub fn heights(&self) -> Vec<f64> {
        y_grid(self.y_grid, self.y_cluster)
    }
}

pub fn y_grid(count: usize, cluster: usize) -> Vec<f64> {
    let step = 2.0 / (count - 1) as f64;
    let mut ys: Vec<f64> = (0..count).map(|i| -1.0 + i as f64 * step).collect();
    for k in 1..=cluster {
        let off = step * 0.5f64.powi(k as i32);
        ys.push(1.0 - off);
        ys.push(-1.0 + off);
    }
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    ys
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_hash_is_stable() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.hash(), RunConfig::default().hash());
        let mut d = c.clone();
        d.output_dir = Some("elsewhere".into());
        assert_eq!(c.hash(), d.hash());
        d.seed = 2;
        assert_ne!(c.hash(), d.hash());
    }

    #[test]
    fn shipped_default_config_matches_the_defaults() {
        let shipped = RunConfig::from_json(include_str!("../../../../configs/default.json")).unwrap();
        assert_eq!(shipped, RunConfig::default());
        RunConfig::from_json(include_str!("../../../../configs/smoke.json")).unwrap();
    }

    #[test]
    fn malformed_json_reports_position() {
        let e = RunConfig::from_json("{\n  \"stages\": 3,\n  \"atoms\": }").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert!(RunConfig::from_json("{\"stagez\": 1}").is_err());
        assert!(RunConfig::from_json("{\"ot_cap\": 10}").is_err());
    }

    #[test]
    fn grid_has_ends_and_clusters() {
        let ys = y_grid(5, 2);
        assert_eq!(ys.first(), Some(&-1.0));
        assert_eq!(ys.last(), Some(&1.0));
        assert!(ys.contains(&0.75) && ys.contains(&0.875));
        assert_eq!(ys.len(), 9);
    }
}
