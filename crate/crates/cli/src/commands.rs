//! Subcommand implementations.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ousis_core::analysis::{convergence_study, run_ensemble, simulate_route, Scenario};
use ousis_core::closedform::equilibrium;
use ousis_core::{ModelParams, NoiseSpec, OuParams, Route, SamplePath, TimeGrid};

use crate::config::Config;
use crate::output;
use crate::CliError;

fn runtime(e: ousis_core::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

/// `simulate`: one trajectory of the configured scenario to CSV.
pub fn simulate(cfg: &Config, out: &Path) -> Result<(), CliError> {
    let scenario = cfg.scenario()?;
    let run = simulate_route(&scenario, cfg.seed, 0).map_err(runtime)?;
    let noise = if cfg.include_noise {
        Some(run.noise.as_ref().ok_or_else(|| {
            CliError::Config("include_noise set, but this route carries no noise path".into())
        })?)
    } else {
        None
    };
    output::write_trajectory(out, &run.infected, noise, None)
}

/// `deterministic`: the unperturbed solution on the configured grid.
pub fn deterministic(cfg: &Config, out: &Path) -> Result<(), CliError> {
    let scenario = cfg.scenario()?;
    let grid = scenario.grid;
    let values: Vec<f64> = grid
        .times()
        .map(|t| ousis_core::closedform::deterministic_infected(&scenario.model, t))
        .collect();
    let path = SamplePath::new(grid, ousis_core::PathKind::Infected, values).map_err(runtime)?;
    output::write_trajectory(out, &path, None, None)
}

/// `ensemble`: per-path verdict CSV plus a summary text file.
pub fn ensemble(cfg: &Config, out: &Path) -> Result<(), CliError> {
    let scenario = cfg.scenario()?;
    let summary = run_ensemble(&scenario, cfg.paths, cfg.seed).map_err(runtime)?;
    output::write_verdicts(out, &summary)?;

    let inconclusive = 1.0 - summary.extinct_fraction - summary.persistent_fraction;
    let lines: Vec<(String, String)> = vec![
        ("n_paths".into(), summary.n_paths.to_string()),
        ("extinct_fraction".into(), format!("{}", summary.extinct_fraction)),
        ("persistent_fraction".into(), format!("{}", summary.persistent_fraction)),
        ("inconclusive_fraction".into(), format!("{inconclusive}")),
        (
            "mean_time_average_window".into(),
            format!("{}", summary.mean_time_average_over_window),
        ),
        (
            "x_star".into(),
            match equilibrium(&scenario.model) {
                Some(x) => format!("{x}"),
                None => "none".into(),
            },
        ),
        (
            "mean_noise_time_average".into(),
            match summary.mean_noise_time_average {
                Some(v) => format!("{v}"),
                None => "none".into(),
            },
        ),
        ("total_violations".into(), summary.total_violations.to_string()),
        ("base_seed".into(), cfg.seed.to_string()),
        ("route".into(), cfg.route.to_string()),
        ("t_end".into(), format!("{}", cfg.t_end)),
        ("dt".into(), format!("{}", cfg.dt)),
    ];
    output::write_summary(&summary_path(out), &lines)
}

/// Summary sibling of an output file: `foo.csv` -> `foo.summary.txt`.
pub fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.txt")
}

/// `converge`: strong-error table of the configured route vs the closed form.
pub fn converge(cfg: &Config, dt_list: &[f64], n_seeds: u32, out: &Path) -> Result<(), CliError> {
    let mut scenario = cfg.scenario()?;
    if scenario.route == Route::ClosedForm {
        // the study compares an integrator against the closed form
        scenario.route = Route::ItoEm;
    }
    if scenario.route == Route::Gray {
        return Err(CliError::Config(
            "converge needs route ito_em or wong_zakai; the gray baseline has no \
             closed-form reference"
                .into(),
        ));
    }
    let table =
        convergence_study(&scenario, dt_list, n_seeds, cfg.seed).map_err(|e| match e {
            ousis_core::Error::InvalidConfig { .. } | ousis_core::Error::Unsupported { .. } => {
                CliError::Config(e.to_string())
            }
            other => runtime(other),
        })?;
    let points: Vec<(f64, f64)> = table.points.iter().map(|p| (p.dt, p.median_error)).collect();
    output::write_convergence(out, &points, table.slope)
}

struct Panel {
    label: char,
    gamma_mu: f64,
    noise: NoiseSpec,
    description: String,
}

struct FigureSpec {
    id: u8,
    t_end: f64,
    with_x_star: bool,
    note: Option<&'static str>,
    panels: Vec<Panel>,
}

fn ou_panel(label: char, gamma_mu: f64, sigma: f64) -> Panel {
    Panel {
        label,
        gamma_mu,
        noise: NoiseSpec::Ou(OuParams { alpha: 0.4, sigma }),
        description: format!("mean-reverting noise, alpha = 0.4, sigma = {sigma}"),
    }
}

fn linear_panel(label: char, gamma_mu: f64, alpha: f64) -> Panel {
    Panel {
        label,
        gamma_mu,
        noise: NoiseSpec::LinearDrift { alpha, sigma: 0.005 },
        description: format!("linear-drift noise, alpha = {alpha}, sigma = 0.005"),
    }
}

fn figure_spec(id: u8) -> Result<FigureSpec, CliError> {
    // All bundled scenarios share N = 200, i0 = 100, beta = 0.06; the
    // removal rate per panel sets r0 = 12 / gamma_mu.
    let spec = match id {
        2 => FigureSpec {
            id,
            t_end: 200.0,
            with_x_star: false,
            note: None,
            panels: vec![ou_panel('a', 14.0, 0.005), ou_panel('b', 14.0, 0.05)],
        },
        3 => FigureSpec {
            id,
            t_end: 200.0,
            with_x_star: false,
            note: None,
            panels: vec![ou_panel('a', 12.0, 0.005), ou_panel('b', 12.0, 0.05)],
        },
        4 => FigureSpec {
            id,
            t_end: 400.0,
            with_x_star: true,
            note: None,
            panels: vec![ou_panel('a', 10.0, 0.005), ou_panel('b', 10.0, 0.05)],
        },
        5 => FigureSpec {
            id,
            t_end: 400.0,
            with_x_star: false,
            note: None,
            panels: vec![
                linear_panel('a', 14.0, -0.011),
                linear_panel('b', 12.0, -0.011),
                linear_panel('c', 10.0, -0.011),
                linear_panel('d', 9.0, -0.011),
            ],
        },
        6 => FigureSpec {
            id,
            t_end: 400.0,
            with_x_star: false,
            note: Some(
                "figure 6 uses alpha = +0.011, the positive-drift counterpart of \
                 figure 5; some listings quote -0.011 for both, but the positive \
                 sign is what the persistence condition calls for here",
            ),
            panels: vec![
                linear_panel('a', 15.0, 0.011),
                linear_panel('b', 14.0, 0.011),
                linear_panel('c', 12.0, 0.011),
                linear_panel('d', 10.0, 0.011),
            ],
        },
        other => {
            return Err(CliError::Config(format!(
                "unknown figure id {other} (expected 2-6)"
            )))
        }
    };
    Ok(spec)
}

/// `figures`: emit the plot-ready CSVs for one bundled scenario set, plus a
/// companion file recording every parameter and seed.
pub fn figures(id: u8, out_dir: &Path, seed: u64) -> Result<(), CliError> {
    let spec = figure_spec(id)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out_dir.display())))?;

    let dt = 0.01;
    let n_steps = (spec.t_end / dt).round() as usize;
    let grid = TimeGrid::new(spec.t_end, n_steps).map_err(runtime)?;

    let mut params_text = String::new();
    let _ = writeln!(params_text, "figure: {}", spec.id);
    let _ = writeln!(params_text, "route: closed_form");
    let _ = writeln!(params_text, "population: 200");
    let _ = writeln!(params_text, "initial_infected: 100");
    let _ = writeln!(params_text, "beta: 0.06");
    let _ = writeln!(params_text, "t_end: {}", spec.t_end);
    let _ = writeln!(params_text, "dt: {dt}");
    let _ = writeln!(params_text, "base_seed: {seed}");
    if let Some(note) = spec.note {
        let _ = writeln!(params_text, "note: {note}");
    }

    for (index, panel) in spec.panels.iter().enumerate() {
        let model = ModelParams::new(200.0, 100.0, 0.06, panel.gamma_mu)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let scenario = Scenario::new(model, panel.noise.clone(), Route::ClosedForm, grid);
        let run = simulate_route(&scenario, seed, index as u64).map_err(runtime)?;
        let x_star = if spec.with_x_star { equilibrium(&model) } else { None };

        let file = out_dir.join(format!("figure{}{}.csv", spec.id, panel.label));
        output::write_trajectory(&file, &run.infected, None, x_star)?;

        let _ = writeln!(params_text, "panel_{}:", panel.label);
        let _ = writeln!(
            params_text,
            "  file: figure{}{}.csv",
            spec.id, panel.label
        );
        let _ = writeln!(params_text, "  gamma_mu: {}", panel.gamma_mu);
        let _ = writeln!(params_text, "  r0: {}", model.r0_deterministic());
        let _ = writeln!(params_text, "  nu: {}", model.nu());
        let _ = writeln!(params_text, "  noise: {}", panel.description);
        let _ = writeln!(params_text, "  stream: {index}");
        if let Some(x) = x_star {
            let _ = writeln!(params_text, "  x_star: {x}");
        }
    }

    let params_file = out_dir.join(format!("figure{}_params.txt", spec.id));
    std::fs::write(&params_file, params_text)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", params_file.display())))?;
    Ok(())
}
