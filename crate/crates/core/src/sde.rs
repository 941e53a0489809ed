//! Ito integration of the perturbed SIS system and the Wong-Zakai smoothed
//! ODE route.
//!
//! All stochastic integrators are Euler-Maruyama driven by the increments of
//! an explicit Brownian path, so the same increments can drive the closed
//! form, the coupled system, and the general-drift system; pathwise
//! (strong) errors between routes are then well defined. The smoothed route
//! replaces the Brownian path by its polygonal interpolation and solves the
//! resulting random ODE with classical RK4.

use crate::closedform::ModelParams;
use crate::error::Error;
use crate::grid::{PathKind, SamplePath};
use crate::paths::{em_step, ou_drift, NoiseSpec, OuParams};
use crate::Result;

/// Discrete-time boundary policy for the infected component.
///
/// The continuous solution never leaves `(0, N)`, but a raw Euler-Maruyama
/// step can. Offending steps are projected to `margin_fraction * N` inside
/// the violated endpoint and counted; they are never clamped silently.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub margin_fraction: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            margin_fraction: 1e-12,
        }
    }
}

impl IntegratorConfig {
    fn margins(&self, population: f64) -> Result<(f64, f64)> {
        if !(self.margin_fraction > 0.0 && self.margin_fraction < 0.5) {
            return Err(Error::InvalidConfig {
                reason: format!(
                    "margin_fraction must lie in (0, 0.5), got {}",
                    self.margin_fraction
                ),
            });
        }
        let margin = self.margin_fraction * population;
        Ok((margin, population - margin))
    }
}

/// Infected/perturbation pair advanced by the coupled integrators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoupledState {
    pub infected: f64,
    pub perturbation: f64,
}

/// Result of a scalar integration.
#[derive(Clone, Debug)]
pub struct IntegrationOutput {
    pub infected: SamplePath,
    pub violations: u64,
}

/// Result of a coupled integration: the infected path, the perturbation path
/// that drove it, and the boundary-violation count.
#[derive(Clone, Debug)]
pub struct CoupledOutput {
    pub infected: SamplePath,
    pub noise: SamplePath,
    pub violations: u64,
}

/// Diffusion coefficient `sigma * I * (N - I)` shared by every Ito route.
#[inline]
pub fn diffusion_coefficient(sigma: f64, i: f64, population: f64) -> f64 {
    sigma * (i * (population - i))
}

/// Ito drift of the general-perturbation system at drift value `b`:
/// `I(N-I)(nu/N + b + sigma^2 N/2 - sigma^2 I) - rr I^2 / N`.
#[inline]
pub fn ito_drift_general(params: &ModelParams, b_value: f64, sigma: f64, i: f64) -> f64 {
    let n = params.population();
    let factor = i * (n - i);
    factor * (params.nu() / n + b_value + 0.5 * sigma * sigma * n - sigma * sigma * i)
        - params.removal_rate() * i * i / n
}

/// Ito drift of the mean-reverting system; the specialization of
/// [`ito_drift_general`] at `b = -alpha y`, evaluated identically so the two
/// coupled integrators coincide bit-for-bit on shared increments.
#[inline]
pub fn ito_drift_ou(params: &ModelParams, ou: &OuParams, i: f64, y: f64) -> f64 {
    ito_drift_general(params, ou_drift(ou.alpha, y), ou.sigma, i)
}

/// Drift of the Stratonovich form of the mean-reverting system:
/// `beta I(N-I) - rr I - alpha I(N-I) y`.
#[inline]
pub fn stratonovich_drift_ou(params: &ModelParams, ou: &OuParams, i: f64, y: f64) -> f64 {
    let n = params.population();
    let factor = i * (n - i);
    params.beta() * factor - params.removal_rate() * i - ou.alpha * factor * y
}

/// Ito-minus-Stratonovich drift difference `(sigma^2 / 2) I (N - I) (N - 2I)`.
pub fn stratonovich_correction(params: &ModelParams, sigma: f64, i: f64) -> Result<f64> {
    let n = params.population();
    if !(i > 0.0 && i < n) {
        return Err(Error::Domain { value: i, upper: n });
    }
    Ok(0.5 * sigma * sigma * i * (n - i) * (n - 2.0 * i))
}

/// White-noise baseline drift `beta I(N-I) - rr I` (transmission perturbed
/// by scaled white noise only, no mean reversion).
#[inline]
fn gray_drift(params: &ModelParams, i: f64) -> f64 {
    params.beta() * i * (params.population() - i) - params.removal_rate() * i
}

fn check_brownian(brownian: &SamplePath) -> Result<()> {
    if brownian.kind() != PathKind::Brownian {
        return Err(Error::KindMismatch {
            expected: "Brownian",
            actual: brownian.kind(),
        });
    }
    Ok(())
}

fn project(raw: f64, lo: f64, hi: f64, population: f64, violations: &mut u64) -> f64 {
    if raw <= 0.0 {
        *violations += 1;
        lo
    } else if raw >= population {
        *violations += 1;
        hi
    } else {
        raw
    }
}

/// Euler-Maruyama on the coupled system
/// `dI = [I(N-I)(nu/N - alpha Y + sigma^2 (N-2I)/2) - rr I^2/N] dt + sigma I(N-I) dB`,
/// `dY = -alpha Y dt + sigma dB`,
/// with one shared Brownian increment per step driving both equations.
pub fn integrate_ou_sis(
    params: &ModelParams,
    ou: &OuParams,
    brownian: &SamplePath,
    cfg: &IntegratorConfig,
) -> Result<CoupledOutput> {
    let alpha = ou.alpha;
    integrate_coupled(
        params,
        |_, _, y| ou_drift(alpha, y),
        ou.sigma,
        brownian,
        cfg,
        PathKind::Ou,
    )
}

/// Euler-Maruyama on the general-perturbation system
/// `dI = [I(N-I)(nu/N + b(t,Z) + sigma^2 N/2 - sigma^2 I) - rr I^2/N] dt + sigma I(N-I) dB`,
/// `dZ = b(t, Z) dt + sigma dB`.
///
/// Accepts `LinearDrift` and `GeneralDrift` specs; mean-reverting noise goes
/// through [`integrate_ou_sis`].
pub fn integrate_general_z(
    params: &ModelParams,
    spec: &NoiseSpec,
    brownian: &SamplePath,
    cfg: &IntegratorConfig,
) -> Result<CoupledOutput> {
    match spec {
        NoiseSpec::LinearDrift { alpha, sigma } => {
            let a = *alpha;
            integrate_coupled(params, |_, _, _| a, *sigma, brownian, cfg, PathKind::GeneralZ)
        }
        NoiseSpec::GeneralDrift { drift, sigma } => integrate_coupled(
            params,
            |t, _, z| drift(t, z),
            *sigma,
            brownian,
            cfg,
            PathKind::GeneralZ,
        ),
        other => Err(Error::Unsupported {
            reason: format!(
                "integrate_general_z requires LinearDrift or GeneralDrift, got {other:?}"
            ),
        }),
    }
}

/// Shared coupled stepper; `b(t, i, z)` is the perturbation drift.
fn integrate_coupled<F>(
    params: &ModelParams,
    b: F,
    sigma: f64,
    brownian: &SamplePath,
    cfg: &IntegratorConfig,
    noise_kind: PathKind,
) -> Result<CoupledOutput>
where
    F: Fn(f64, f64, f64) -> f64,
{
    check_brownian(brownian)?;
    let grid = *brownian.grid();
    let n = params.population();
    let (lo, hi) = cfg.margins(n)?;
    let dt = grid.dt();
    let bvals = brownian.values();

    let mut violations = 0;
    let mut infected = Vec::with_capacity(grid.n_nodes());
    let mut noise = Vec::with_capacity(grid.n_nodes());
    let mut state = CoupledState {
        infected: params.initial_infected(),
        perturbation: 0.0,
    };
    infected.push(state.infected);
    noise.push(state.perturbation);
    for k in 0..grid.n_steps() {
        let t = grid.time(k);
        let db = bvals[k + 1] - bvals[k];
        let b_value = b(t, state.infected, state.perturbation);
        if !b_value.is_finite() {
            return Err(Error::NonFinite {
                what: "perturbation drift",
                index: k,
            });
        }
        let drift_i = ito_drift_general(params, b_value, sigma, state.infected);
        let diff_i = diffusion_coefficient(sigma, state.infected, n);
        let raw_i = em_step(state.infected, drift_i, dt, diff_i, db);
        if !raw_i.is_finite() {
            return Err(Error::NonFinite {
                what: "infected state",
                index: k + 1,
            });
        }
        state.infected = project(raw_i, lo, hi, n, &mut violations);
        state.perturbation = em_step(state.perturbation, b_value, dt, sigma, db);
        if !state.perturbation.is_finite() {
            return Err(Error::NonFinite {
                what: "perturbation state",
                index: k + 1,
            });
        }
        infected.push(state.infected);
        noise.push(state.perturbation);
    }
    Ok(CoupledOutput {
        infected: SamplePath::new(grid, PathKind::Infected, infected)?,
        noise: SamplePath::new(grid, noise_kind, noise)?,
        violations,
    })
}

/// Euler-Maruyama on the baseline model
/// `dI = [beta I(N-I) - rr I] dt + sigma I(N-I) dB`.
pub fn integrate_gray(
    params: &ModelParams,
    sigma: f64,
    brownian: &SamplePath,
    cfg: &IntegratorConfig,
) -> Result<IntegrationOutput> {
    check_brownian(brownian)?;
    let grid = *brownian.grid();
    let n = params.population();
    let (lo, hi) = cfg.margins(n)?;
    let dt = grid.dt();
    let bvals = brownian.values();

    let mut violations = 0;
    let mut infected = Vec::with_capacity(grid.n_nodes());
    let mut i = params.initial_infected();
    infected.push(i);
    for k in 0..grid.n_steps() {
        let db = bvals[k + 1] - bvals[k];
        let raw = em_step(
            i,
            gray_drift(params, i),
            dt,
            diffusion_coefficient(sigma, i, n),
            db,
        );
        if !raw.is_finite() {
            return Err(Error::NonFinite {
                what: "infected state",
                index: k + 1,
            });
        }
        i = project(raw, lo, hi, n, &mut violations);
        infected.push(i);
    }
    Ok(IntegrationOutput {
        infected: SamplePath::new(grid, PathKind::Infected, infected)?,
        violations,
    })
}

/// Wong-Zakai route: interpret `brownian` as a polygonal skeleton and solve
/// the smoothed random ODE pair
///
/// `dY/dt = -alpha Y + sigma s_k`,
/// `dI/dt = I(N-I)(beta - alpha Y + sigma s_k) - rr I`,
///
/// where `s_k` is the constant slope of the polygonal segment, with classical
/// RK4 at `8 * refine_factor` substeps per segment. The output is sampled at
/// the skeleton nodes; as the skeleton mesh shrinks it converges to the
/// closed-form (Stratonovich) solution.
pub fn integrate_wong_zakai(
    params: &ModelParams,
    ou: &OuParams,
    brownian: &SamplePath,
    refine_factor: usize,
    cfg: &IntegratorConfig,
) -> Result<IntegrationOutput> {
    check_brownian(brownian)?;
    if refine_factor < 1 {
        return Err(Error::InvalidParam {
            name: "refine_factor",
            reason: "must be at least 1".into(),
        });
    }
    let grid = *brownian.grid();
    let n = params.population();
    let (lo, hi) = cfg.margins(n)?;
    let dt = grid.dt();
    let substeps = 8 * refine_factor;
    let h = dt / substeps as f64;
    let bvals = brownian.values();

    let beta = params.beta();
    let rr = params.removal_rate();
    let alpha = ou.alpha;
    let sigma = ou.sigma;

    let mut violations = 0;
    let mut infected = Vec::with_capacity(grid.n_nodes());
    let mut state = CoupledState {
        infected: params.initial_infected(),
        perturbation: 0.0,
    };
    infected.push(state.infected);
    for k in 0..grid.n_steps() {
        let slope = (bvals[k + 1] - bvals[k]) / dt;
        let forcing = sigma * slope;
        let f = |s: CoupledState| CoupledState {
            infected: s.infected * (n - s.infected) * (beta - alpha * s.perturbation + forcing)
                - rr * s.infected,
            perturbation: -alpha * s.perturbation + forcing,
        };
        for _ in 0..substeps {
            let k1 = f(state);
            let k2 = f(advance(state, k1, 0.5 * h));
            let k3 = f(advance(state, k2, 0.5 * h));
            let k4 = f(advance(state, k3, h));
            state.infected += h / 6.0
                * (k1.infected + 2.0 * k2.infected + 2.0 * k3.infected + k4.infected);
            state.perturbation += h / 6.0
                * (k1.perturbation
                    + 2.0 * k2.perturbation
                    + 2.0 * k3.perturbation
                    + k4.perturbation);
            if !state.infected.is_finite() || !state.perturbation.is_finite() {
                return Err(Error::NonFinite {
                    what: "smoothed state",
                    index: k + 1,
                });
            }
            state.infected = project(state.infected, lo, hi, n, &mut violations);
        }
        infected.push(state.infected);
    }
    Ok(IntegrationOutput {
        infected: SamplePath::new(grid, PathKind::WzSmoothed, infected)?,
        violations,
    })
}

#[inline]
fn advance(s: CoupledState, d: CoupledState, h: f64) -> CoupledState {
    CoupledState {
        infected: s.infected + h * d.infected,
        perturbation: s.perturbation + h * d.perturbation,
    }
}
