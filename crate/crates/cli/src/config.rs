//! Flat key=value scenario configuration.
//!
//! A config file holds one `key = value` pair per line, `#` starts a comment.
//! Command-line flags override file values. The effective config can be
//! serialized back out (`--dump-config`), and re-running from that file
//! reproduces the outputs byte for byte.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use ousis_core::analysis::Scenario;
use ousis_core::{
    ClassifierConfig, IntegratorConfig, ModelParams, NoiseSpec, OuParams, Route, TimeGrid,
};

use crate::CliError;

/// Which perturbation family the config selects.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseKind {
    None,
    Ou,
    Linear,
}

impl NoiseKind {
    fn as_str(self) -> &'static str {
        match self {
            NoiseKind::None => "none",
            NoiseKind::Ou => "ou",
            NoiseKind::Linear => "linear",
        }
    }
}

impl FromStr for NoiseKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(NoiseKind::None),
            "ou" => Ok(NoiseKind::Ou),
            "linear" => Ok(NoiseKind::Linear),
            other => Err(format!("unknown noise `{other}` (expected none, ou, or linear)")),
        }
    }
}

/// Fully resolved scenario configuration with defaults for every field.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub population: f64,
    pub initial_infected: f64,
    pub beta: f64,
    pub gamma_mu: f64,
    pub noise: NoiseKind,
    pub alpha: f64,
    pub sigma: f64,
    pub route: Route,
    pub t_end: f64,
    pub dt: f64,
    pub seed: u64,
    pub paths: u32,
    pub wz_refine: usize,
    pub eps_extinct_frac: f64,
    pub window_fraction: f64,
    pub min_crossings: u32,
    pub hysteresis_frac: f64,
    pub margin_frac: f64,
    pub include_noise: bool,
}

impl Default for Config {
    fn default() -> Self {
        let classifier = ClassifierConfig::default();
        Self {
            population: 200.0,
            initial_infected: 100.0,
            beta: 0.06,
            gamma_mu: 10.0,
            noise: NoiseKind::Ou,
            alpha: 0.4,
            sigma: 0.05,
            route: Route::ClosedForm,
            t_end: 200.0,
            dt: 0.01,
            seed: 42,
            paths: 100,
            wz_refine: 1,
            eps_extinct_frac: classifier.eps_extinct_frac,
            window_fraction: classifier.window_fraction,
            min_crossings: classifier.min_crossings,
            hysteresis_frac: classifier.hysteresis_frac,
            margin_frac: IntegratorConfig::default().margin_fraction,
            include_noise: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::Config(format!("key `{key}`: cannot parse `{value}`: {e}")))
}

impl Config {
    /// Apply one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "population" => self.population = parse(key, value)?,
            "initial_infected" => self.initial_infected = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "gamma_mu" => self.gamma_mu = parse(key, value)?,
            "noise" => {
                self.noise = value
                    .parse()
                    .map_err(|e| CliError::Config(format!("key `{key}`: {e}")))?
            }
            "alpha" => self.alpha = parse(key, value)?,
            "sigma" => self.sigma = parse(key, value)?,
            "route" => {
                self.route = value
                    .parse()
                    .map_err(|e| CliError::Config(format!("key `{key}`: {e}")))?
            }
            "t_end" => self.t_end = parse(key, value)?,
            "dt" => self.dt = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "paths" => self.paths = parse(key, value)?,
            "wz_refine" => self.wz_refine = parse(key, value)?,
            "eps_extinct_frac" => self.eps_extinct_frac = parse(key, value)?,
            "window_fraction" => self.window_fraction = parse(key, value)?,
            "min_crossings" => self.min_crossings = parse(key, value)?,
            "hysteresis_frac" => self.hysteresis_frac = parse(key, value)?,
            "margin_frac" => self.margin_frac = parse(key, value)?,
            "include_noise" => self.include_noise = parse(key, value)?,
            other => {
                return Err(CliError::Config(format!("unknown config key `{other}`")));
            }
        }
        Ok(())
    }

    /// Load a key=value file over the defaults.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut cfg = Config::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!(
                    "{}:{}: expected `key = value`, got `{raw}`",
                    path.display(),
                    lineno + 1
                ))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Serialize the effective configuration; parsing the output reproduces
    /// this config exactly.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("population", format!("{}", self.population));
        kv("initial_infected", format!("{}", self.initial_infected));
        kv("beta", format!("{}", self.beta));
        kv("gamma_mu", format!("{}", self.gamma_mu));
        kv("noise", self.noise.as_str().to_string());
        kv("alpha", format!("{}", self.alpha));
        kv("sigma", format!("{}", self.sigma));
        kv("route", self.route.to_string());
        kv("t_end", format!("{}", self.t_end));
        kv("dt", format!("{}", self.dt));
        kv("seed", format!("{}", self.seed));
        kv("paths", format!("{}", self.paths));
        kv("wz_refine", format!("{}", self.wz_refine));
        kv("eps_extinct_frac", format!("{}", self.eps_extinct_frac));
        kv("window_fraction", format!("{}", self.window_fraction));
        kv("min_crossings", format!("{}", self.min_crossings));
        kv("hysteresis_frac", format!("{}", self.hysteresis_frac));
        kv("margin_frac", format!("{}", self.margin_frac));
        kv("include_noise", format!("{}", self.include_noise));
        s
    }

    pub fn noise_spec(&self) -> Result<NoiseSpec, CliError> {
        Ok(match self.noise {
            NoiseKind::None => NoiseSpec::None,
            NoiseKind::Ou => NoiseSpec::Ou(
                OuParams::new(self.alpha, self.sigma)
                    .map_err(|e| CliError::Config(e.to_string()))?,
            ),
            NoiseKind::Linear => NoiseSpec::LinearDrift {
                alpha: self.alpha,
                sigma: self.sigma,
            },
        })
    }

    /// Build and validate the core scenario.
    pub fn scenario(&self) -> Result<Scenario, CliError> {
        let model =
            ModelParams::new(self.population, self.initial_infected, self.beta, self.gamma_mu)
                .map_err(|e| CliError::Config(e.to_string()))?;
        if self.dt <= 0.0 || self.t_end <= 0.0 || !self.dt.is_finite() || !self.t_end.is_finite() {
            return Err(CliError::Config(format!(
                "t_end and dt must be positive, got t_end = {}, dt = {}",
                self.t_end, self.dt
            )));
        }
        let n_steps = (self.t_end / self.dt).round();
        if n_steps < 1.0 || ((n_steps * self.dt - self.t_end) / self.t_end).abs() > 1e-9 {
            return Err(CliError::Config(format!(
                "dt = {} does not evenly divide t_end = {}",
                self.dt, self.t_end
            )));
        }
        let grid = TimeGrid::new(self.t_end, n_steps as usize)
            .map_err(|e| CliError::Config(e.to_string()))?;

        let mut scenario = Scenario::new(model, self.noise_spec()?, self.route, grid);
        scenario.classifier = ClassifierConfig {
            eps_extinct_frac: self.eps_extinct_frac,
            window_fraction: self.window_fraction,
            min_crossings: self.min_crossings,
            hysteresis_frac: self.hysteresis_frac,
        };
        scenario.integrator = IntegratorConfig {
            margin_fraction: self.margin_frac,
        };
        scenario.wz_refine = self.wz_refine;
        scenario.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(scenario)
    }
}
