//! Experiment configuration: grid, bank and command parameters, read from a
//! `key = value` file and overridden by command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{FlagError, Result};
use crate::filters::{build_compact_bank, build_filter_bank, FilterBank, FilterMode, FilterProfile};
use crate::grid::{make_grid, Grid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExperimentConfig {
    pub n: usize,
    pub m: usize,
    pub level: u32,
    pub mode: FilterMode,
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub smoothness: f64,
    pub base_frequency: f64,
    pub moment_order: u32,
    pub offset: u32,
    pub seed: u64,
    pub count: usize,
    pub p: f64,
    pub p1: f64,
    pub p2: f64,
    pub alpha: Option<f64>,
    pub budget: usize,
    pub eps: Option<f64>,
    pub tol: f64,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let profile = FilterProfile::default();
        Self {
            n: 1,
            m: 1,
            level: 7,
            mode: profile.mode,
            inner_radius: profile.inner_radius,
            outer_radius: profile.outer_radius,
            smoothness: profile.smoothness,
            base_frequency: profile.base_frequency,
            moment_order: profile.moment_order,
            offset: 2,
            seed: 0,
            count: 10,
            p: 1.0,
            p1: 2.0,
            p2: 0.5,
            alpha: None,
            budget: 64,
            eps: None,
            tol: 1e-8,
            output: PathBuf::from("flaglp-out"),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| FlagError::Config(format!("invalid value '{value}' for key '{key}'")))
}

impl ExperimentConfig {
    /// Sets one parameter by its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "n" => self.n = parse(key, v)?,
            "m" => self.m = parse(key, v)?,
            "L" | "level" => self.level = parse(key, v)?,
            "mode" => self.mode = v.parse()?,
            "inner_radius" => self.inner_radius = parse(key, v)?,
            "outer_radius" => self.outer_radius = parse(key, v)?,
            "smoothness" => self.smoothness = parse(key, v)?,
            "base_frequency" => self.base_frequency = parse(key, v)?,
            "M0" | "moment_order" => self.moment_order = parse(key, v)?,
            "N" | "offset" => self.offset = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "count" => self.count = parse(key, v)?,
            "p" => self.p = parse(key, v)?,
            "p1" => self.p1 = parse(key, v)?,
            "p2" => self.p2 = parse(key, v)?,
            "alpha" => self.alpha = Some(parse(key, v)?),
            "budget" => self.budget = parse(key, v)?,
            "eps" => self.eps = Some(parse(key, v)?),
            "tol" => self.tol = parse(key, v)?,
            "out" | "output" => self.output = PathBuf::from(v),
            other => return Err(FlagError::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| FlagError::Config(format!("line {}: expected key = value", no + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FlagError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut c = Self::default();
        c.apply_text(&text)?;
        Ok(c)
    }

    pub fn grid(&self) -> Result<Grid> {
        make_grid(self.n, self.m, self.level)
    }

    pub fn profile(&self) -> FilterProfile {
        FilterProfile {
            inner_radius: self.inner_radius,
            outer_radius: self.outer_radius,
            smoothness: self.smoothness,
            base_frequency: self.base_frequency,
            mode: self.mode,
            moment_order: self.moment_order,
        }
    }

    /// The configured bank on `grid`.
    pub fn bank_on(&self, grid: Grid) -> Result<FilterBank> {
        match self.mode {
            FilterMode::FrequencyAnnulus => build_filter_bank(grid, self.profile(), self.offset),
            FilterMode::CompactSpatial => build_compact_bank(grid, self.moment_order, self.offset),
        }
    }

    pub fn bank(&self) -> Result<FilterBank> {
        self.bank_on(self.grid()?)
    }

    /// Adopts the shape of `grid`, e.g. one read from an input block.
    pub fn adopt_grid(&mut self, grid: Grid) {
        self.n = grid.n();
        self.m = grid.m();
        self.level = grid.level();
    }
}
