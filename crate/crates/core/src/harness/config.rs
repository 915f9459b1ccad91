//! Scenario configuration: a flat `key = value` text file.
//!
//! ```text
//! # comments run to end of line
//! system = modified-t0
//! grid.n_cells = 1024
//! init.epsilon = 0.1
//! snapshot_times = 0.5, 1.0
//! ```
//!
//! Every key is optional; missing keys take the values of
//! [`ScenarioConfig::default`]. The README lists every key.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::model::{PdeSystem, StateVec, SystemLabel};
use crate::scheme::{Boundary, FieldState, Grid, SolverConfig};
use crate::thermo::{temperature_factors, ThermoParams};

use super::output::fmt_f64;

/// Environment variable naming the config file used when none is given.
pub const CONFIG_ENV: &str = "QTHYDRO_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("{origin}: unknown key `{key}`")]
    UnknownKey { origin: String, key: String },
    #[error("{origin}: key `{key}` given twice")]
    Duplicate { origin: String, key: String },
    #[error("{origin}: invalid value {value:?} for `{key}`: {message}")]
    BadValue {
        origin: String,
        key: String,
        value: String,
        message: String,
    },
    #[error("invalid config: `{key}` {message}")]
    Invalid { key: &'static str, message: String },
}

impl ConfigError {
    /// The offending key, when the error concerns one.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::UnknownKey { key, .. }
            | ConfigError::Duplicate { key, .. }
            | ConfigError::BadValue { key, .. } => Some(key),
            ConfigError::Invalid { key, .. } => Some(key),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridParams {
    pub q_min: f64,
    pub q_max: f64,
    pub n_cells: usize,
    /// `τ/h`.
    pub gamma: f64,
    pub boundary: Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitParams {
    pub u_inf: f64,
    pub v_inf: f64,
    pub epsilon: f64,
    pub sigma: f64,
    pub q0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub system: SystemLabel,
    pub thermo: ThermoParams,
    pub grid: GridParams,
    pub init: InitParams,
    pub solver: SolverConfig,
    /// Extra snapshot instants, in time units.
    pub snapshot_times: Vec<f64>,
    pub output_dir: PathBuf,
    /// Reserved; no scenario draws random numbers.
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            system: SystemLabel::ModifiedT0,
            thermo: ThermoParams::reduced(0.0),
            grid: GridParams {
                q_min: -50.0,
                q_max: 50.0,
                n_cells: 1024,
                gamma: 1.0,
                boundary: Boundary::Periodic,
            },
            init: InitParams {
                u_inf: 0.5,
                v_inf: 0.0,
                epsilon: 0.1,
                sigma: 1.0,
                q0: 0.0,
            },
            solver: SolverConfig {
                picard_tol: 1e-10,
                picard_max_iters: 50,
                blowup_factor: 1e6,
                max_steps: 60,
            },
            snapshot_times: Vec::new(),
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

/// All recognised keys, in the order [`write_config`] emits them.
pub const KEYS: &[&str] = &[
    "system",
    "thermo.hbar",
    "thermo.k_b",
    "thermo.mass",
    "thermo.omega",
    "thermo.temperature",
    "grid.q_min",
    "grid.q_max",
    "grid.n_cells",
    "grid.gamma",
    "grid.boundary",
    "init.u_inf",
    "init.v_inf",
    "init.epsilon",
    "init.sigma",
    "init.q0",
    "solver.picard_tol",
    "solver.picard_max_iters",
    "solver.blowup_factor",
    "solver.max_steps",
    "snapshot_times",
    "output_dir",
    "seed",
];

fn parse_value<T: FromStr>(origin: &str, key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| ConfigError::BadValue {
        origin: origin.to_owned(),
        key: key.to_owned(),
        value: value.to_owned(),
        message: e.to_string(),
    })
}

fn parse_list(origin: &str, key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(origin, key, s))
        .collect()
}

impl ScenarioConfig {
    /// Sets one key from its textual value. `origin` labels error messages
    /// (e.g. `config.txt:12` or `--set`).
    pub fn set(&mut self, key: &str, value: &str, origin: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        let f = |v: &str| parse_value::<f64>(origin, key, v);
        match key {
            "system" => self.system = parse_value(origin, key, value)?,
            "thermo.hbar" => self.thermo.hbar = f(value)?,
            "thermo.k_b" => self.thermo.k_b = f(value)?,
            "thermo.mass" => self.thermo.mass = f(value)?,
            "thermo.omega" => self.thermo.omega = f(value)?,
            "thermo.temperature" => self.thermo.temperature = f(value)?,
            "grid.q_min" => self.grid.q_min = f(value)?,
            "grid.q_max" => self.grid.q_max = f(value)?,
            "grid.n_cells" => self.grid.n_cells = parse_value(origin, key, value)?,
            "grid.gamma" => self.grid.gamma = f(value)?,
            "grid.boundary" => self.grid.boundary = parse_value(origin, key, value)?,
            "init.u_inf" => self.init.u_inf = f(value)?,
            "init.v_inf" => self.init.v_inf = f(value)?,
            "init.epsilon" => self.init.epsilon = f(value)?,
            "init.sigma" => self.init.sigma = f(value)?,
            "init.q0" => self.init.q0 = f(value)?,
            "solver.picard_tol" => self.solver.picard_tol = f(value)?,
            "solver.picard_max_iters" => {
                self.solver.picard_max_iters = parse_value(origin, key, value)?
            }
            "solver.blowup_factor" => self.solver.blowup_factor = f(value)?,
            "solver.max_steps" => self.solver.max_steps = parse_value(origin, key, value)?,
            "snapshot_times" => self.snapshot_times = parse_list(origin, key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "seed" => self.seed = parse_value(origin, key, value)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    origin: origin.to_owned(),
                    key: key.to_owned(),
                })
            }
        }
        Ok(())
    }

    /// Parses config text on top of the defaults and validates the result.
    pub fn parse(text: &str, source_name: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.apply_text(text, source_name)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `key = value` lines without validating.
    pub fn apply_text(&mut self, text: &str, source_name: &str) -> Result<(), ConfigError> {
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let origin = format!("{source_name}:{}", idx + 1);
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Parse {
                    origin,
                    message: format!("expected `key = value`, found {line:?}"),
                });
            };
            let key = key.trim();
            if seen.insert(key.to_owned(), idx + 1).is_some() {
                return Err(ConfigError::Duplicate {
                    origin,
                    key: key.to_owned(),
                });
            }
            self.set(key, value, &origin)?;
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let Some((key, value)) = assignment.split_once('=') else {
            return Err(ConfigError::Parse {
                origin: "--set".into(),
                message: format!("expected key=value, found {assignment:?}"),
            });
        };
        self.set(key.trim(), value, "--set")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key: &'static str, message: String| Err(ConfigError::Invalid { key, message });
        let t = &self.thermo;
        for (key, value) in [
            ("thermo.hbar", t.hbar),
            ("thermo.k_b", t.k_b),
            ("thermo.mass", t.mass),
            ("thermo.omega", t.omega),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return invalid(key, format!("must be finite and > 0 (got {value})"));
            }
        }
        if !(t.temperature.is_finite() && t.temperature >= 0.0) {
            return invalid("thermo.temperature", format!("must be >= 0 (got {})", t.temperature));
        }
        let g = &self.grid;
        if g.n_cells < 8 {
            return invalid("grid.n_cells", format!("must be >= 8 (got {})", g.n_cells));
        }
        if !(g.q_min.is_finite() && g.q_max.is_finite() && g.q_max > g.q_min) {
            return invalid("grid.q_max", format!("must exceed grid.q_min (got {} .. {})", g.q_min, g.q_max));
        }
        if !(g.gamma.is_finite() && g.gamma > 0.0) {
            return invalid("grid.gamma", format!("must be > 0 (got {})", g.gamma));
        }
        let i = &self.init;
        for (key, value) in [("init.u_inf", i.u_inf), ("init.v_inf", i.v_inf), ("init.q0", i.q0)] {
            if !value.is_finite() {
                return invalid(key, format!("must be finite (got {value})"));
            }
        }
        if !(i.epsilon.is_finite() && i.epsilon >= 0.0) {
            return invalid("init.epsilon", format!("must be >= 0 (got {})", i.epsilon));
        }
        let h = self.h();
        if !(i.sigma.is_finite() && i.sigma >= 2.0 * h) {
            return invalid("init.sigma", format!("must be >= 2h = {} (got {})", 2.0 * h, i.sigma));
        }
        let s = &self.solver;
        if !(s.picard_tol.is_finite() && s.picard_tol > 0.0) {
            return invalid("solver.picard_tol", format!("must be > 0 (got {})", s.picard_tol));
        }
        if s.picard_max_iters < 1 {
            return invalid("solver.picard_max_iters", "must be >= 1".into());
        }
        if !(s.blowup_factor.is_finite() && s.blowup_factor > 1.0) {
            return invalid("solver.blowup_factor", format!("must be > 1 (got {})", s.blowup_factor));
        }
        let horizon = self.horizon();
        for &ts in &self.snapshot_times {
            if !(ts.is_finite() && ts >= 0.0 && ts <= horizon * (1.0 + 1e-12)) {
                return invalid(
                    "snapshot_times",
                    format!("{ts} lies outside the run horizon [0, {horizon}]"),
                );
            }
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        (self.grid.q_max - self.grid.q_min) / self.grid.n_cells as f64
    }

    pub fn tau(&self) -> f64 {
        self.grid.gamma * self.h()
    }

    /// `max_steps · τ`.
    pub fn horizon(&self) -> f64 {
        self.solver.max_steps as f64 * self.tau()
    }

    pub fn grid(&self) -> Grid {
        Grid {
            q_min: self.grid.q_min,
            q_max: self.grid.q_max,
            n_cells: self.grid.n_cells,
            tau: self.tau(),
            boundary: self.grid.boundary,
        }
    }

    pub fn background(&self) -> StateVec {
        StateVec::new(self.init.u_inf, self.init.v_inf)
    }

    /// `Ξ_T` for the configured temperature (1 at `T = 0`).
    pub fn xi(&self) -> f64 {
        temperature_factors(&self.thermo).map_or(1.0, |f| f.xi)
    }

    pub fn pde_system(&self) -> PdeSystem {
        PdeSystem::from_label(self.system, self.xi())
            .expect("validated configs always yield Ξ_T >= 1")
    }

    pub fn initial_field(&self) -> FieldState {
        FieldState::gaussian_bump(
            self.grid(),
            self.background(),
            self.init.epsilon,
            self.init.sigma,
            self.init.q0,
        )
    }

    /// `{0, τ, 20τ, 50τ, horizon}` plus the configured instants, sorted and
    /// restricted to the horizon.
    pub fn relaxation_times(&self) -> Vec<f64> {
        let tau = self.tau();
        let horizon = self.horizon();
        let mut times: Vec<f64> = [0.0, tau, 20.0 * tau, 50.0 * tau, horizon]
            .into_iter()
            .chain(self.snapshot_times.iter().copied())
            .filter(|&t| t <= horizon * (1.0 + 1e-12))
            .collect();
        times.sort_by(|a, b| a.total_cmp(b));
        times.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * tau);
        times
    }
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_owned(),
        source,
    })?;
    ScenarioConfig::parse(&text, &path.display().to_string())
}

/// Renders every key so that [`ScenarioConfig::parse`] restores `cfg` exactly.
pub fn write_config(cfg: &ScenarioConfig) -> String {
    let mut out = String::new();
    let mut line = |key: &str, value: String| {
        let _ = writeln!(out, "{key} = {value}");
    };
    line("system", cfg.system.to_string());
    line("thermo.hbar", fmt_f64(cfg.thermo.hbar));
    line("thermo.k_b", fmt_f64(cfg.thermo.k_b));
    line("thermo.mass", fmt_f64(cfg.thermo.mass));
    line("thermo.omega", fmt_f64(cfg.thermo.omega));
    line("thermo.temperature", fmt_f64(cfg.thermo.temperature));
    line("grid.q_min", fmt_f64(cfg.grid.q_min));
    line("grid.q_max", fmt_f64(cfg.grid.q_max));
    line("grid.n_cells", cfg.grid.n_cells.to_string());
    line("grid.gamma", fmt_f64(cfg.grid.gamma));
    line("grid.boundary", cfg.grid.boundary.as_str().to_owned());
    line("init.u_inf", fmt_f64(cfg.init.u_inf));
    line("init.v_inf", fmt_f64(cfg.init.v_inf));
    line("init.epsilon", fmt_f64(cfg.init.epsilon));
    line("init.sigma", fmt_f64(cfg.init.sigma));
    line("init.q0", fmt_f64(cfg.init.q0));
    line("solver.picard_tol", fmt_f64(cfg.solver.picard_tol));
    line("solver.picard_max_iters", cfg.solver.picard_max_iters.to_string());
    line("solver.blowup_factor", fmt_f64(cfg.solver.blowup_factor));
    line("solver.max_steps", cfg.solver.max_steps.to_string());
    line(
        "snapshot_times",
        cfg.snapshot_times.iter().map(|&t| fmt_f64(t)).collect::<Vec<_>>().join(", "),
    );
    line("output_dir", cfg.output_dir.display().to_string());
    line("seed", cfg.seed.to_string());
    out
}
