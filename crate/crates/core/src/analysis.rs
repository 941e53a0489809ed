//! Reproduction numbers, trajectory classification, Monte Carlo ensembles,
//! and convergence-study drivers.
//!
//! The extinction and persistence laws of the perturbed model are
//! `t -> infinity` statements; everything here is their finite-horizon
//! statistical proxy: terminal-value thresholds for extinction,
//! hysteresis-filtered crossing counts of the endemic level for persistence,
//! and ensemble fractions over independently seeded paths.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::closedform::{
    deterministic_infected, equilibrium, g_transform, perturbed_infected_path, ModelParams,
};
use crate::error::Error;
use crate::grid::{PathKind, SamplePath, TimeGrid};
use crate::paths::{
    gen_brownian_with, gen_general_z, gen_ou_on_increments, subsample, time_average, NoiseSpec,
};
use crate::rng::stream_rng;
use crate::sde::{
    integrate_general_z, integrate_gray, integrate_ou_sis, integrate_wong_zakai, IntegratorConfig,
};
use crate::Result;

/// Deterministic reproduction number `beta N / removal_rate`.
pub fn r0_deterministic(params: &ModelParams) -> f64 {
    params.r0_deterministic()
}

/// Reproduction number of the white-noise baseline model,
/// `r0 - sigma^2 N^2 / (2 removal_rate)`.
pub fn r0_stochastic_gray(params: &ModelParams, sigma: f64) -> f64 {
    let n = params.population();
    params.r0_deterministic() - sigma * sigma * n * n / (2.0 * params.removal_rate())
}

/// Sufficient condition for extinction of the white-noise baseline:
/// either `r0s < 1` with small noise `sigma^2 < beta/N`, or large noise
/// `sigma^2 > max(beta/N, beta^2 / (2 rr))`.
pub fn gray_extinction_condition(params: &ModelParams, sigma: f64) -> bool {
    let s2 = sigma * sigma;
    let beta_over_n = params.beta() / params.population();
    let small_noise = s2 < beta_over_n;
    let large_noise =
        s2 > beta_over_n.max(params.beta() * params.beta() / (2.0 * params.removal_rate()));
    (r0_stochastic_gray(params, sigma) < 1.0 && small_noise) || large_noise
}

/// Oscillation level `xi = (sqrt(beta^2 - 2 sigma^2 rr) - (beta - sigma^2 N)) / sigma^2`
/// of the persistent white-noise baseline. `None` when `sigma = 0` or the
/// persistence condition `r0s > 1` fails.
pub fn gray_persistence_level(params: &ModelParams, sigma: f64) -> Option<f64> {
    if sigma == 0.0 || r0_stochastic_gray(params, sigma) <= 1.0 {
        return None;
    }
    let s2 = sigma * sigma;
    let disc = params.beta() * params.beta() - 2.0 * s2 * params.removal_rate();
    if disc < 0.0 {
        return None;
    }
    Some((disc.sqrt() - (params.beta() - s2 * params.population())) / s2)
}

/// Terminal log-odds slope `(1/T) ln(I_T / (N - I_T))`.
///
/// Diagnostic for the extinction bound: a negative value at long horizons is
/// the finite-time signature of `limsup (1/t) G(I_t) < 0`.
pub fn log_odds_slope(path: &SamplePath, params: &ModelParams) -> Result<f64> {
    Ok(g_transform(params, path.terminal())? / path.grid().t_end())
}

/// Trapezoidal time average over the trailing `window_fraction` of the
/// horizon.
pub fn windowed_time_average(path: &SamplePath, window_fraction: f64) -> f64 {
    let n = path.grid().n_steps();
    let start = ((n as f64) * (1.0 - window_fraction)).ceil() as usize;
    let start = start.min(n - 1);
    let v = path.values();
    let interior: f64 = v[start + 1..n].iter().sum();
    (0.5 * v[start] + interior + 0.5 * v[n]) / (n - start) as f64
}

/// Time average of a perturbation path; tends to zero for mean-reverting
/// noise as the horizon grows (ergodicity), which is what makes the
/// perturbation invisible in the threshold.
pub fn ergodic_diagnostic(ou_path: &SamplePath) -> f64 {
    time_average(ou_path)
}

/// Finite-horizon classification thresholds.
///
/// All length-like fields are fractions of the population so one config
/// serves any scenario: extinction fires below `eps_extinct_frac * N`,
/// persistence needs `min_crossings` hysteresis-filtered crossings of the
/// endemic level within the trailing window, with a dead band of
/// `hysteresis_frac * N` on each side to keep the count finite and
/// meaningful for a diffusion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifierConfig {
    pub eps_extinct_frac: f64,
    pub window_fraction: f64,
    pub min_crossings: u32,
    pub hysteresis_frac: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            eps_extinct_frac: 1e-3,
            window_fraction: 0.5,
            min_crossings: 4,
            hysteresis_frac: 0.02,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_extinct_frac > 0.0 && self.eps_extinct_frac < 1.0) {
            return Err(Error::InvalidConfig {
                reason: format!("eps_extinct_frac out of (0, 1): {}", self.eps_extinct_frac),
            });
        }
        if !(self.window_fraction > 0.0 && self.window_fraction < 1.0) {
            return Err(Error::InvalidConfig {
                reason: format!("window_fraction out of (0, 1): {}", self.window_fraction),
            });
        }
        if self.min_crossings == 0 {
            return Err(Error::InvalidConfig {
                reason: "min_crossings must be positive".into(),
            });
        }
        if !(self.hysteresis_frac > 0.0 && self.hysteresis_frac < 0.5) {
            return Err(Error::InvalidConfig {
                reason: format!("hysteresis_frac out of (0, 0.5): {}", self.hysteresis_frac),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Extinct,
    Persistent,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Extinct => "extinct",
            Verdict::Persistent => "persistent",
            Verdict::Inconclusive => "inconclusive",
        };
        write!(f, "{s}")
    }
}

/// Classification of one trajectory with its supporting statistics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryVerdict {
    pub label: Verdict,
    pub terminal_value: f64,
    pub crossings_of_xstar: u32,
    pub slope_estimate: f64,
}

/// Hysteresis-filtered crossings of `level` in the trailing window: a
/// crossing is counted each time the path moves from beyond one dead band to
/// beyond the other, so consecutive counts alternate in direction.
fn count_crossings(path: &SamplePath, level: f64, band: f64, window_fraction: f64) -> u32 {
    let n = path.grid().n_steps();
    let start = (((n as f64) * (1.0 - window_fraction)).ceil() as usize).min(n - 1);
    let upper = level + band;
    let lower = level - band;

    #[derive(Clone, Copy, PartialEq)]
    enum Side {
        Above,
        Below,
    }
    let mut armed = None;
    let mut crossings = 0;
    for &v in &path.values()[start..] {
        match armed {
            None => {
                if v > upper {
                    armed = Some(Side::Above);
                } else if v < lower {
                    armed = Some(Side::Below);
                }
            }
            Some(Side::Above) => {
                if v < lower {
                    crossings += 1;
                    armed = Some(Side::Below);
                }
            }
            Some(Side::Below) => {
                if v > upper {
                    crossings += 1;
                    armed = Some(Side::Above);
                }
            }
        }
    }
    crossings
}

/// Classify a single infected trajectory.
///
/// Extinct if the terminal value sits below the extinction threshold;
/// otherwise persistent if the endemic level exists (`nu > 0`) and was
/// crossed at least `min_crossings` times within the trailing window;
/// otherwise inconclusive.
pub fn classify(
    path: &SamplePath,
    params: &ModelParams,
    cfg: &ClassifierConfig,
) -> Result<TrajectoryVerdict> {
    cfg.validate()?;
    let n = params.population();
    let terminal = path.terminal();
    let slope = log_odds_slope(path, params)?;
    let crossings = match equilibrium(params) {
        Some(x_star) => count_crossings(path, x_star, cfg.hysteresis_frac * n, cfg.window_fraction),
        None => 0,
    };
    let label = if terminal < cfg.eps_extinct_frac * n {
        Verdict::Extinct
    } else if equilibrium(params).is_some() && crossings >= cfg.min_crossings {
        Verdict::Persistent
    } else {
        Verdict::Inconclusive
    };
    Ok(TrajectoryVerdict {
        label,
        terminal_value: terminal,
        crossings_of_xstar: crossings,
        slope_estimate: slope,
    })
}

/// Solution route used to realize a scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    ClosedForm,
    ItoEm,
    WongZakai,
    Gray,
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Route::ClosedForm => "closed_form",
            Route::ItoEm => "ito_em",
            Route::WongZakai => "wong_zakai",
            Route::Gray => "gray",
        };
        write!(f, "{s}")
    }
}

impl FromStr for Route {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed_form" => Ok(Route::ClosedForm),
            "ito_em" => Ok(Route::ItoEm),
            "wong_zakai" => Ok(Route::WongZakai),
            "gray" => Ok(Route::Gray),
            other => Err(Error::InvalidConfig {
                reason: format!(
                    "unknown route `{other}` (expected closed_form, ito_em, wong_zakai, or gray)"
                ),
            }),
        }
    }
}

/// A complete simulation setup: model, perturbation, route, grid, and the
/// knobs of the classifier and integrator.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub model: ModelParams,
    pub noise: NoiseSpec,
    pub route: Route,
    pub grid: TimeGrid,
    pub classifier: ClassifierConfig,
    pub integrator: IntegratorConfig,
    /// RK4 substep multiplier for the smoothed route.
    pub wz_refine: usize,
}

impl Scenario {
    pub fn new(model: ModelParams, noise: NoiseSpec, route: Route, grid: TimeGrid) -> Self {
        Self {
            model,
            noise,
            route,
            grid,
            classifier: ClassifierConfig::default(),
            integrator: IntegratorConfig::default(),
            wz_refine: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.classifier.validate()?;
        match (self.route, &self.noise) {
            (Route::WongZakai, NoiseSpec::Ou(_)) => Ok(()),
            (Route::WongZakai, other) => Err(Error::Unsupported {
                reason: format!("wong_zakai requires mean-reverting noise, got {other:?}"),
            }),
            (Route::Gray, NoiseSpec::Ou(_) | NoiseSpec::None) => Ok(()),
            (Route::Gray, other) => Err(Error::Unsupported {
                reason: format!(
                    "gray uses only a noise intensity; give Ou (alpha ignored) or None, got {other:?}"
                ),
            }),
            _ => Ok(()),
        }
    }
}

/// One realized trajectory of a scenario.
#[derive(Clone, Debug)]
pub struct RouteOutput {
    pub infected: SamplePath,
    /// Perturbation path that drove the trajectory, when the route has one.
    pub noise: Option<SamplePath>,
    pub violations: u64,
}

/// Realize one trajectory of `scenario` on stream `stream` of `seed`.
///
/// Pure in `(scenario, seed, stream)`; ensembles call this with
/// `stream = path index`.
pub fn simulate_route(scenario: &Scenario, seed: u64, stream: u64) -> Result<RouteOutput> {
    scenario.validate()?;
    let grid = scenario.grid;
    let model = &scenario.model;
    let brownian = || gen_brownian_with(&grid, &mut stream_rng(seed, stream));

    match scenario.route {
        Route::ClosedForm => match &scenario.noise {
            NoiseSpec::None => {
                let values = grid.times().map(|t| deterministic_infected(model, t)).collect();
                Ok(RouteOutput {
                    infected: SamplePath::new(grid, PathKind::Infected, values)?,
                    noise: None,
                    violations: 0,
                })
            }
            NoiseSpec::Ou(p) => {
                let y = gen_ou_on_increments(&grid, p, &brownian())?;
                Ok(RouteOutput {
                    infected: perturbed_infected_path(model, &y)?,
                    noise: Some(y),
                    violations: 0,
                })
            }
            spec => {
                let z = gen_general_z(&grid, spec, &brownian())?;
                Ok(RouteOutput {
                    infected: perturbed_infected_path(model, &z)?,
                    noise: Some(z),
                    violations: 0,
                })
            }
        },
        Route::ItoEm => match &scenario.noise {
            NoiseSpec::None => {
                let zero = SamplePath::zeros(grid, PathKind::Brownian);
                let out = integrate_gray(model, 0.0, &zero, &scenario.integrator)?;
                Ok(RouteOutput {
                    infected: out.infected,
                    noise: None,
                    violations: out.violations,
                })
            }
            NoiseSpec::Ou(p) => {
                let out = integrate_ou_sis(model, p, &brownian(), &scenario.integrator)?;
                Ok(RouteOutput {
                    infected: out.infected,
                    noise: Some(out.noise),
                    violations: out.violations,
                })
            }
            spec => {
                let out = integrate_general_z(model, spec, &brownian(), &scenario.integrator)?;
                Ok(RouteOutput {
                    infected: out.infected,
                    noise: Some(out.noise),
                    violations: out.violations,
                })
            }
        },
        Route::WongZakai => match &scenario.noise {
            NoiseSpec::Ou(p) => {
                let skeleton = brownian();
                let out = integrate_wong_zakai(
                    model,
                    p,
                    &skeleton,
                    scenario.wz_refine,
                    &scenario.integrator,
                )?;
                Ok(RouteOutput {
                    infected: out.infected,
                    noise: Some(skeleton),
                    violations: out.violations,
                })
            }
            _ => unreachable!("validated above"),
        },
        Route::Gray => {
            let sigma = scenario.noise.sigma();
            let b = match scenario.noise {
                NoiseSpec::None => SamplePath::zeros(grid, PathKind::Brownian),
                _ => brownian(),
            };
            let out = integrate_gray(model, sigma, &b, &scenario.integrator)?;
            Ok(RouteOutput {
                infected: out.infected,
                noise: None,
                violations: out.violations,
            })
        }
    }
}

/// Aggregate statistics of an ensemble of independently seeded trajectories.
#[derive(Clone, Debug)]
pub struct EnsembleSummary {
    pub n_paths: u32,
    pub extinct_fraction: f64,
    pub persistent_fraction: f64,
    pub mean_path: SamplePath,
    /// Node-wise 5%, 50%, and 95% quantile paths.
    pub quantile_paths: [SamplePath; 3],
    /// Ensemble mean of the trailing-window time averages.
    pub mean_time_average_over_window: f64,
    /// Ensemble mean of the noise-path time averages (ergodic diagnostic),
    /// when the route carries a noise path.
    pub mean_noise_time_average: Option<f64>,
    /// Per-path verdicts in path-index order.
    pub verdicts: Vec<TrajectoryVerdict>,
    /// Total boundary violations across all paths (SDE routes).
    pub total_violations: u64,
}

/// Run `n_paths` independent realizations of `scenario`, classify each, and
/// aggregate. Path `i` uses stream `i` of `seed_base`; the result is a pure
/// function of `(scenario, n_paths, seed_base)` regardless of thread count.
pub fn run_ensemble(scenario: &Scenario, n_paths: u32, seed_base: u64) -> Result<EnsembleSummary> {
    if n_paths == 0 {
        return Err(Error::InvalidConfig {
            reason: "n_paths must be at least 1".into(),
        });
    }
    scenario.validate()?;

    struct PerPath {
        verdict: TrajectoryVerdict,
        infected: SamplePath,
        window_average: f64,
        noise_average: Option<f64>,
        violations: u64,
    }

    let per_path: Vec<PerPath> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let out = simulate_route(scenario, seed_base, u64::from(i))?;
            let verdict = classify(&out.infected, &scenario.model, &scenario.classifier)?;
            let window_average =
                windowed_time_average(&out.infected, scenario.classifier.window_fraction);
            let noise_average = out.noise.as_ref().map(ergodic_diagnostic);
            Ok(PerPath {
                verdict,
                infected: out.infected,
                window_average,
                noise_average,
                violations: out.violations,
            })
        })
        .collect::<Result<_>>()?;

    let nf = f64::from(n_paths);
    let extinct = per_path.iter().filter(|p| p.verdict.label == Verdict::Extinct).count();
    let persistent = per_path
        .iter()
        .filter(|p| p.verdict.label == Verdict::Persistent)
        .count();

    let grid = scenario.grid;
    let n_nodes = grid.n_nodes();
    let mut mean = vec![0.0; n_nodes];
    for p in &per_path {
        for (m, v) in mean.iter_mut().zip(p.infected.values()) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= nf;
    }

    let mut column = vec![0.0; per_path.len()];
    let mut quantiles = [vec![0.0; n_nodes], vec![0.0; n_nodes], vec![0.0; n_nodes]];
    for k in 0..n_nodes {
        for (c, p) in column.iter_mut().zip(&per_path) {
            *c = p.infected.value(k);
        }
        column.sort_by(f64::total_cmp);
        for (q, dst) in [0.05, 0.5, 0.95].iter().zip(quantiles.iter_mut()) {
            let idx = ((nf - 1.0) * q).round() as usize;
            dst[k] = column[idx];
        }
    }
    let [q05, q50, q95] = quantiles;

    let mean_window = per_path.iter().map(|p| p.window_average).sum::<f64>() / nf;
    let noise_averages: Vec<f64> = per_path.iter().filter_map(|p| p.noise_average).collect();
    let mean_noise = if noise_averages.is_empty() {
        None
    } else {
        Some(noise_averages.iter().sum::<f64>() / noise_averages.len() as f64)
    };

    Ok(EnsembleSummary {
        n_paths,
        extinct_fraction: extinct as f64 / nf,
        persistent_fraction: persistent as f64 / nf,
        mean_path: SamplePath::new(grid, PathKind::Infected, mean)?,
        quantile_paths: [
            SamplePath::new(grid, PathKind::Infected, q05)?,
            SamplePath::new(grid, PathKind::Infected, q50)?,
            SamplePath::new(grid, PathKind::Infected, q95)?,
        ],
        mean_time_average_over_window: mean_window,
        mean_noise_time_average: mean_noise,
        total_violations: per_path.iter().map(|p| p.violations).sum(),
        verdicts: per_path.into_iter().map(|p| p.verdict).collect(),
    })
}

/// One resolution of a convergence study.
#[derive(Clone, Copy, Debug)]
pub struct ConvergencePoint {
    pub dt: f64,
    pub median_error: f64,
}

/// Strong-error table with its fitted log-log slope.
#[derive(Clone, Debug)]
pub struct ConvergenceTable {
    pub points: Vec<ConvergencePoint>,
    pub slope: f64,
}

/// Strong-convergence study of `scenario.route` against the closed form.
///
/// For each seed a Brownian path is generated once on a reference grid
/// four times finer than the finest entry of `dt_list`; the closed form on
/// that grid is the reference solution, and each coarser resolution reuses
/// the same Brownian nodes by subsampling. The per-resolution error is the
/// max-node deviation from the reference, the table reports medians over
/// seeds, and the slope is the least-squares fit of `ln error` vs `ln dt`.
///
/// Routes: `ito_em` (any stochastic noise spec) or `wong_zakai` (mean
/// reverting), where `dt` is read as the polygonal mesh.
pub fn convergence_study(
    scenario: &Scenario,
    dt_list: &[f64],
    n_seeds: u32,
    seed_base: u64,
) -> Result<ConvergenceTable> {
    if dt_list.len() < 4 {
        return Err(Error::InvalidConfig {
            reason: format!("dt_list needs at least 4 entries, got {}", dt_list.len()),
        });
    }
    if !dt_list.windows(2).all(|w| w[0] > w[1]) || dt_list.iter().any(|&dt| dt <= 0.0) {
        return Err(Error::InvalidConfig {
            reason: "dt_list must be positive and strictly decreasing".into(),
        });
    }
    if n_seeds == 0 {
        return Err(Error::InvalidConfig {
            reason: "n_seeds must be at least 1".into(),
        });
    }
    if !matches!(scenario.route, Route::ItoEm | Route::WongZakai) {
        return Err(Error::Unsupported {
            reason: format!("convergence_study needs route ito_em or wong_zakai, got {}", scenario.route),
        });
    }
    scenario.validate()?;
    if matches!(scenario.noise, NoiseSpec::None) {
        return Err(Error::Unsupported {
            reason: "convergence_study needs a stochastic noise spec".into(),
        });
    }

    let t_end = scenario.grid.t_end();
    let steps: Vec<usize> = dt_list
        .iter()
        .map(|&dt| {
            let n = (t_end / dt).round();
            if n < 1.0 || ((n * dt - t_end) / t_end).abs() > 1e-9 {
                return Err(Error::InvalidConfig {
                    reason: format!("dt = {dt} does not evenly divide t_end = {t_end}"),
                });
            }
            Ok(n as usize)
        })
        .collect::<Result<_>>()?;
    let n_ref = steps.last().unwrap() * 4;
    for (&n, &dt) in steps.iter().zip(dt_list) {
        if !n_ref.is_multiple_of(n) {
            return Err(Error::InvalidConfig {
                reason: format!("dt = {dt} is not nested in the reference grid"),
            });
        }
    }
    let ref_grid = TimeGrid::new(t_end, n_ref)?;

    let model = scenario.model;
    let errors: Vec<Vec<f64>> = (0..n_seeds)
        .into_par_iter()
        .map(|s| {
            let b_ref = gen_brownian_with(&ref_grid, &mut stream_rng(seed_base, u64::from(s)));
            let noise_ref = match &scenario.noise {
                NoiseSpec::Ou(p) => gen_ou_on_increments(&ref_grid, p, &b_ref)?,
                spec => gen_general_z(&ref_grid, spec, &b_ref)?,
            };
            let reference = perturbed_infected_path(&model, &noise_ref)?;
            steps
                .iter()
                .map(|&n| {
                    let ratio = n_ref / n;
                    let b = subsample(&b_ref, ratio)?;
                    let approx = match (scenario.route, &scenario.noise) {
                        (Route::ItoEm, NoiseSpec::Ou(p)) => {
                            integrate_ou_sis(&model, p, &b, &scenario.integrator)?.infected
                        }
                        (Route::ItoEm, spec) => {
                            integrate_general_z(&model, spec, &b, &scenario.integrator)?.infected
                        }
                        (Route::WongZakai, NoiseSpec::Ou(p)) => {
                            integrate_wong_zakai(
                                &model,
                                p,
                                &b,
                                scenario.wz_refine,
                                &scenario.integrator,
                            )?
                            .infected
                        }
                        _ => unreachable!("validated above"),
                    };
                    Ok(approx
                        .values()
                        .iter()
                        .enumerate()
                        .map(|(k, &v)| (v - reference.value(k * ratio)).abs())
                        .fold(0.0f64, f64::max))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let points: Vec<ConvergencePoint> = dt_list
        .iter()
        .enumerate()
        .map(|(j, &dt)| {
            let mut per_seed: Vec<f64> = errors.iter().map(|e| e[j]).collect();
            per_seed.sort_by(f64::total_cmp);
            let m = per_seed.len();
            let median = if m % 2 == 1 {
                per_seed[m / 2]
            } else {
                0.5 * (per_seed[m / 2 - 1] + per_seed[m / 2])
            };
            ConvergencePoint { dt, median_error: median }
        })
        .collect();

    let xs: Vec<f64> = points.iter().map(|p| p.dt.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.median_error.max(1e-300).ln()).collect();
    let xm = xs.iter().sum::<f64>() / xs.len() as f64;
    let ym = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    let slope = sxy / sxx;

    Ok(ConvergenceTable { points, slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::OuParams;
    use approx::assert_relative_eq;

    fn params(removal: f64) -> ModelParams {
        ModelParams::new(200.0, 100.0, 0.06, removal).unwrap()
    }

    #[test]
    fn reproduction_numbers() {
        assert_relative_eq!(r0_deterministic(&params(10.0)), 1.2, max_relative = 1e-14);
        assert_relative_eq!(
            r0_deterministic(&params(14.0)),
            12.0 / 14.0,
            max_relative = 1e-14
        );
        // removal = beta * N: threshold in both representations at once
        let crit = params(12.0);
        assert_eq!(r0_deterministic(&crit), 1.0);
        assert_eq!(crit.nu(), 0.0);
    }

    #[test]
    fn gray_reproduction_number_and_conditions() {
        let p = params(10.0);
        assert_eq!(r0_stochastic_gray(&p, 0.0), r0_deterministic(&p));
        // 1.2 - 0.005^2 * 200^2 / 20 = 1.15
        assert_relative_eq!(r0_stochastic_gray(&p, 0.005), 1.15, max_relative = 1e-12);
        // sigma^2 = 2.5e-5 < beta/N = 3e-4, but r0s = 1.15 > 1: no extinction claim
        assert!(0.005f64 * 0.005 < p.beta() / p.population());
        assert!(!gray_extinction_condition(&p, 0.005));
        // large-noise branch
        assert!(gray_extinction_condition(&p, 0.02));

        let xi = gray_persistence_level(&p, 0.005).unwrap();
        assert!(xi.is_finite() && xi > 0.0 && xi < 200.0, "xi = {xi}");
        assert!(gray_persistence_level(&p, 0.0).is_none());
    }

    #[test]
    fn slope_of_a_balanced_constant_path_is_zero() {
        let p = params(10.0);
        let grid = TimeGrid::new(10.0, 10).unwrap();
        let path = SamplePath::new(grid, PathKind::Infected, vec![100.0; 11]).unwrap();
        assert_eq!(log_odds_slope(&path, &p).unwrap(), 0.0);
    }

    #[test]
    fn windowed_average_of_a_ramp() {
        let grid = TimeGrid::new(10.0, 1000).unwrap();
        let ramp: Vec<f64> = grid.times().collect();
        let path = SamplePath::new(grid, PathKind::Infected, ramp).unwrap();
        // mean of t over [5, 10] is 7.5
        assert_relative_eq!(windowed_time_average(&path, 0.5), 7.5, max_relative = 1e-12);
    }

    #[test]
    fn classify_extinct_persistent_inconclusive() {
        let p = params(10.0); // nu = 2, x* = 33.33
        let cfg = ClassifierConfig::default();
        let grid = TimeGrid::new(100.0, 1000).unwrap();

        // decays to 1e-6 << 0.2
        let decaying: Vec<f64> = grid
            .times()
            .map(|t| (100.0f64 * (-0.2 * t).exp()).max(1e-6))
            .collect();
        let path = SamplePath::new(grid, PathKind::Infected, decaying).unwrap();
        let v = classify(&path, &p, &cfg).unwrap();
        assert_eq!(v.label, Verdict::Extinct);
        assert!(v.terminal_value < 0.2);
        assert!(v.slope_estimate < 0.0);

        // oscillates across x* with amplitude well beyond the dead band
        let x_star = equilibrium(&p).unwrap();
        let wave: Vec<f64> = grid
            .times()
            .map(|t| x_star + 15.0 * (t * 0.7).sin())
            .collect();
        let path = SamplePath::new(grid, PathKind::Infected, wave).unwrap();
        let v = classify(&path, &p, &cfg).unwrap();
        assert_eq!(v.label, Verdict::Persistent);
        assert!(v.crossings_of_xstar >= 4);

        // parked at N/2, never crossing x*, terminal far above eps
        let stuck = SamplePath::new(grid, PathKind::Infected, vec![100.0; 1001]).unwrap();
        let v = classify(&stuck, &p, &cfg).unwrap();
        assert_eq!(v.label, Verdict::Inconclusive);
        assert_eq!(v.crossings_of_xstar, 0);
    }

    #[test]
    fn classify_rejects_invalid_config() {
        let p = params(10.0);
        let grid = TimeGrid::new(1.0, 2).unwrap();
        let path = SamplePath::new(grid, PathKind::Infected, vec![1.0; 3]).unwrap();
        let bad = ClassifierConfig {
            window_fraction: 1.5,
            ..ClassifierConfig::default()
        };
        assert!(classify(&path, &p, &bad).is_err());
    }

    fn ou_scenario(removal: f64, sigma: f64, route: Route, t_end: f64, n: usize) -> Scenario {
        Scenario::new(
            params(removal),
            NoiseSpec::Ou(OuParams { alpha: 0.4, sigma }),
            route,
            TimeGrid::new(t_end, n).unwrap(),
        )
    }

    #[test]
    fn ensembles_are_deterministic_given_seed() {
        let sc = ou_scenario(10.0, 0.05, Route::ClosedForm, 20.0, 2000);
        let a = run_ensemble(&sc, 4, 42).unwrap();
        let b = run_ensemble(&sc, 4, 42).unwrap();
        assert_eq!(a.mean_path.values(), b.mean_path.values());
        assert_eq!(a.verdicts, b.verdicts);
        let c = run_ensemble(&sc, 4, 43).unwrap();
        assert_ne!(a.mean_path.values(), c.mean_path.values());
    }

    #[test]
    fn single_path_ensemble_has_degenerate_fractions() {
        let sc = ou_scenario(14.0, 0.05, Route::ClosedForm, 50.0, 5000);
        let s = run_ensemble(&sc, 1, 7).unwrap();
        assert!(s.extinct_fraction == 0.0 || s.extinct_fraction == 1.0);
        assert!(s.persistent_fraction == 0.0 || s.persistent_fraction == 1.0);
        assert_eq!(s.verdicts.len(), 1);
        // single path: quantile paths coincide with the path itself
        assert_eq!(s.quantile_paths[0].values(), s.mean_path.values());
    }

    #[test]
    fn subcritical_ensemble_goes_extinct() {
        // nu = -2: decisive extinction long before t = 50
        let sc = ou_scenario(14.0, 0.05, Route::ClosedForm, 50.0, 5000);
        let s = run_ensemble(&sc, 20, 11).unwrap();
        assert_eq!(s.extinct_fraction, 1.0);
        assert!(s.verdicts.iter().all(|v| v.slope_estimate < 0.0));
        // ergodic diagnostic is reported and small
        assert!(s.mean_noise_time_average.unwrap().abs() < 0.1);
    }

    #[test]
    fn scenario_validation_rules() {
        let mut sc = ou_scenario(10.0, 0.05, Route::WongZakai, 1.0, 10);
        assert!(sc.validate().is_ok());
        sc.noise = NoiseSpec::LinearDrift { alpha: 0.0, sigma: 0.05 };
        assert!(sc.validate().is_err());
        sc.route = Route::Gray;
        assert!(sc.validate().is_err());
        sc.noise = NoiseSpec::None;
        assert!(sc.validate().is_ok());
    }

    #[test]
    fn deterministic_euler_convergence_has_slope_one() {
        // sigma = 0 degenerates the SDE to explicit Euler: global order 1
        let mut sc = ou_scenario(10.0, 0.0, Route::ItoEm, 10.0, 10);
        sc.noise = NoiseSpec::Ou(OuParams { alpha: 0.4, sigma: 0.0 });
        let dt_list = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
        let table = convergence_study(&sc, &dt_list, 3, 5).unwrap();
        assert!(
            table.slope > 0.8 && table.slope < 1.2,
            "slope {} out of [0.8, 1.2]",
            table.slope
        );
    }

    #[test]
    fn stochastic_em_errors_decrease_with_dt() {
        let sc = ou_scenario(10.0, 0.005, Route::ItoEm, 5.0, 10);
        let dt_list = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
        let table = convergence_study(&sc, &dt_list, 6, 3).unwrap();
        for w in table.points.windows(2) {
            assert!(
                w[0].median_error > w[1].median_error,
                "errors not decreasing: {:?}",
                table.points
            );
        }
        assert!(table.slope > 0.0);
    }

    #[test]
    fn convergence_study_input_validation() {
        let sc = ou_scenario(10.0, 0.05, Route::ItoEm, 10.0, 10);
        assert!(convergence_study(&sc, &[0.5, 0.25, 0.125], 3, 0).is_err());
        assert!(convergence_study(&sc, &[0.5, 0.25, 0.5, 0.125], 3, 0).is_err());
        let closed = ou_scenario(10.0, 0.05, Route::ClosedForm, 10.0, 10);
        assert!(convergence_study(&closed, &[0.5, 0.25, 0.125, 0.0625], 3, 0).is_err());
        assert!(convergence_study(&sc, &[0.5, 0.25, 0.125, 0.3e-1], 3, 0).is_err());
    }
}
