//! Subcommand runners. Each one builds what it needs from the configuration,
//! writes its CSV artifacts and a `run.json` summary into the output
//! directory, and returns the summary's `results` object.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use plasmon_qse::dynamics::{
    build_kernel, decay_rate, markov_parameters, solve_volterra_with, AmplitudeTrajectory, MemoryKernel, DT_RESOLUTION,
    NORM_SLACK,
};
use plasmon_qse::entanglement::{
    concurrence, concurrence_series, reduced_density, steady_concurrence, write_concurrence_csv,
};
use plasmon_qse::green::Geometry;
use plasmon_qse::interface::InterfaceModel;
use plasmon_qse::quadrature::NOISE_FLOOR;
use plasmon_qse::spectral::{build_spectral_table, gamma0_free, spectral_element, EmitterParams, SpectralTable};
use plasmon_qse::spectrum::{
    all_bound_states, asymptotic_z, find_bound_state, threshold_integral, write_bound_state_csv, BoundState, ROOT_TOL,
};
use serde_json::{json, Value};

use crate::config::ScenarioConfig;
use crate::CliError;

/// Names of the files each runner writes.
pub const SPECTRAL_CSV: &str = "spectral.csv";
pub const BOUND_STATES_CSV: &str = "bound_states.csv";
pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const DECAY_RATE_CSV: &str = "decay_rate.csv";
pub const CONCURRENCE_CSV: &str = "concurrence.csv";
pub const SUMMARY_JSON: &str = "run.json";

/// Renders into memory with `f`, then writes `dir/name`.
fn write_artifact(
    dir: &Path,
    name: &str,
    f: impl FnOnce(&mut Vec<u8>) -> plasmon_qse::Result<()>,
) -> Result<PathBuf, CliError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    let path = dir.join(name);
    std::fs::write(&path, &buf).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// Writes `run.json` with the configuration echo, versions and tolerances.
fn write_summary(
    dir: &Path,
    command: &str,
    cfg: &ScenarioConfig,
    achieved: Value,
    results: &Value,
) -> Result<(), CliError> {
    let summary = json!({
        "command": command,
        "versions": {
            "plasmon_qse": plasmon_qse::VERSION,
            "plasmon_cli": env!("CARGO_PKG_VERSION"),
        },
        "config": cfg,
        "tolerances": {
            "requested": {
                "quadrature_rel_tol": cfg.tolerance.rel_tol,
                "quadrature_abs_tol_per_nm": cfg.tolerance.abs_tol,
                "quadrature_tail_cut_tol": cfg.tolerance.tail_cut_tol,
                "quadrature_max_panels": cfg.tolerance.max_panels,
                "quadrature_noise_floor": NOISE_FLOOR,
                "root_tol_ev": ROOT_TOL,
                "dt_resolution": DT_RESOLUTION,
                "norm_slack": NORM_SLACK,
            },
            "achieved": achieved,
        },
        "results": results,
    });
    write_artifact(dir, SUMMARY_JSON, |buf| {
        serde_json::to_writer_pretty(&mut *buf, &summary).map_err(std::io::Error::from)?;
        buf.push(b'\n');
        Ok(())
    })?;
    Ok(())
}

struct Pipeline {
    emitter: EmitterParams,
    table: SpectralTable,
}

fn pipeline(cfg: &ScenarioConfig) -> Result<Pipeline, CliError> {
    let model = cfg.model()?;
    let geometry = cfg.geometry()?;
    let emitter = cfg.emitter()?;
    let table = build_spectral_table(&model, &geometry, &cfg.quadrature(), &emitter, &cfg.grid_spec()?)?;
    Ok(Pipeline { emitter, table })
}

fn grid_report(table: &SpectralTable) -> Value {
    json!({
        "nodes": table.grid().len(),
        "omega_min_ev": table.omega_min(),
        "omega_max_ev": table.omega_max(),
    })
}

fn require_n(cfg: &ScenarioConfig, allowed: &[usize], what: &str) -> Result<(), CliError> {
    if allowed.contains(&cfg.geometry.n) {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "{what} needs n in {allowed:?}, got n = {}",
            cfg.geometry.n
        )))
    }
}

fn bound_state_json(table: &SpectralTable, states: &[BoundState]) -> Result<Value, CliError> {
    let mut rows = Vec::new();
    for c in 0..table.n_channels() {
        let threshold = threshold_integral(table, c)?;
        let state = states.iter().find(|b| b.channel == c);
        rows.push(json!({
            "channel": c,
            "threshold_ev": threshold,
            "exists": state.is_some(),
            "varpi_b_ev": state.map(|b| b.varpi_b),
            "weight_l": state.map(|b| b.weight_l),
        }));
    }
    Ok(Value::Array(rows))
}

/// Spectral density table and its peak: position, height, width and the
/// height relative to the free-space emission rate at omega_0.
pub fn run_spectral(cfg: &ScenarioConfig, out: &Path) -> Result<Value, CliError> {
    require_n(cfg, &[1, 2], "spectral")?;
    ensure_dir(out)?;
    let p = pipeline(cfg)?;
    write_artifact(out, SPECTRAL_CSV, |buf| p.table.write_csv(buf))?;
    let peak = p.table.peak();
    let gamma0 = gamma0_free(&p.emitter);
    let results = json!({
        "files": [SPECTRAL_CSV],
        "grid": grid_report(&p.table),
        "peak": {
            "omega_peak_ev": peak.omega_peak,
            "j_peak_ev": peak.j_peak,
            "fwhm_ev": peak.fwhm,
            "gamma0_free_ev": gamma0,
            "j_peak_over_gamma0": peak.j_peak / gamma0,
        },
    });
    write_summary(out, "spectral", cfg, json!({}), &results)?;
    Ok(results)
}

/// Bound states of every channel with their existence thresholds.
pub fn run_spectrum(cfg: &ScenarioConfig, out: &Path) -> Result<Value, CliError> {
    require_n(cfg, &[1, 2], "spectrum")?;
    ensure_dir(out)?;
    let p = pipeline(cfg)?;
    let states = all_bound_states(&p.table)?;
    write_artifact(out, SPECTRAL_CSV, |buf| p.table.write_csv(buf))?;
    write_artifact(out, BOUND_STATES_CSV, |buf| {
        write_bound_state_csv(buf, p.table.n_channels(), &states)
    })?;
    let results = json!({
        "files": [SPECTRAL_CSV, BOUND_STATES_CSV],
        "grid": grid_report(&p.table),
        "omega_0_ev": p.emitter.omega_0,
        "bound_states": bound_state_json(&p.table, &states)?,
    });
    write_summary(out, "spectrum", cfg, json!({ "root_tol_ev": ROOT_TOL }), &results)?;
    Ok(results)
}

fn solve(cfg: &ScenarioConfig, p: &Pipeline) -> Result<AmplitudeTrajectory, CliError> {
    let (t_max, dt) = (cfg.grid.t_max, cfg.grid.dt);
    let kernel = build_kernel(&p.table, t_max, dt)?;
    Ok(solve_volterra_with(
        &kernel,
        &p.emitter,
        &cfg.initial_state(),
        t_max,
        dt,
        cfg.grid.stepper.into(),
    )?)
}

fn write_decay_rates(buf: &mut Vec<u8>, traj: &AmplitudeTrajectory) -> plasmon_qse::Result<()> {
    let rates = (0..traj.n())
        .map(|i| decay_rate(traj, i))
        .collect::<plasmon_qse::Result<Vec<_>>>()?;
    let mut header = vec!["t_hbar_per_ev".to_string()];
    header.extend((1..=traj.n()).map(|i| format!("gamma{i}_ev")));
    writeln!(buf, "{}", header.join(","))?;
    for s in 0..traj.len() {
        write!(buf, "{:?}", traj.time(s))?;
        for r in &rates {
            write!(buf, ",{:?}", r.rates.get(s).copied().unwrap_or(f64::NAN))?;
        }
        writeln!(buf)?;
    }
    Ok(())
}

fn trajectory_report(traj: &AmplitudeTrajectory) -> Value {
    let last = traj.len() - 1;
    json!({
        "steps": traj.len(),
        "t_final": traj.time(last),
        "final_populations": (0..traj.n()).map(|i| traj.amplitudes(last)[i].norm_sqr()).collect::<Vec<_>>(),
    })
}

fn max_norm(traj: &AmplitudeTrajectory) -> f64 {
    traj.norms().into_iter().fold(0.0, f64::max)
}

/// Amplitude trajectory and instantaneous decay rates, with bound-state and
/// Markov predictions when N <= 2.
pub fn run_dynamics(cfg: &ScenarioConfig, out: &Path) -> Result<Value, CliError> {
    ensure_dir(out)?;
    let p = pipeline(cfg)?;
    let traj = solve(cfg, &p)?;
    write_artifact(out, TRAJECTORY_CSV, |buf| traj.write_csv(buf))?;
    write_artifact(out, DECAY_RATE_CSV, |buf| write_decay_rates(buf, &traj))?;
    let mut files = vec![TRAJECTORY_CSV, DECAY_RATE_CSV];
    let mut predictions = Value::Null;
    if traj.n() <= 2 {
        let states = all_bound_states(&p.table)?;
        write_artifact(out, BOUND_STATES_CSV, |buf| {
            write_bound_state_csv(buf, p.table.n_channels(), &states)
        })?;
        files.push(BOUND_STATES_CSV);
        let z = asymptotic_z(&states, &cfg.initial_state(), cfg.grid.t_max)?;
        let markov: Vec<Value> = markov_parameters(&p.table, &p.emitter)?
            .into_iter()
            .map(|(g, w)| json!({ "gamma_bar_ev": g, "omega_bar_ev": w }))
            .collect();
        predictions = json!({
            "bound_states": bound_state_json(&p.table, &states)?,
            "asymptotic_populations_at_t_max": z.iter().map(|a| a.norm_sqr()).collect::<Vec<_>>(),
            "markov_channels": markov,
        });
    }
    let results = json!({
        "files": files,
        "grid": grid_report(&p.table),
        "trajectory": trajectory_report(&traj),
        "predictions": predictions,
    });
    let achieved = json!({ "max_norm": max_norm(&traj), "dt": traj.dt() });
    write_summary(out, "dynamics", cfg, achieved, &results)?;
    Ok(results)
}

/// Two-emitter concurrence with its bound-state long-time prediction.
pub fn run_concurrence(cfg: &ScenarioConfig, out: &Path) -> Result<Value, CliError> {
    require_n(cfg, &[2], "concurrence")?;
    ensure_dir(out)?;
    let p = pipeline(cfg)?;
    let traj = solve(cfg, &p)?;
    let states = all_bound_states(&p.table)?;
    let times = traj.times();
    let conc = concurrence_series(&traj)?;
    let steady = times
        .iter()
        .map(|&t| steady_concurrence(&states, 2, t))
        .collect::<plasmon_qse::Result<Vec<_>>>()?;
    write_artifact(out, TRAJECTORY_CSV, |buf| traj.write_csv(buf))?;
    write_artifact(out, BOUND_STATES_CSV, |buf| {
        write_bound_state_csv(buf, p.table.n_channels(), &states)
    })?;
    write_artifact(out, CONCURRENCE_CSV, |buf| {
        write_concurrence_csv(buf, &times, &conc, &steady)
    })?;
    let branch = match states.as_slice() {
        [] => json!({ "kind": "none", "steady_concurrence": 0.0 }),
        [_] => json!({ "kind": "single", "steady_concurrence": steady_concurrence(&states, 2, 0.0)? }),
        [b1, b2] => {
            let (l1, l2) = (0.5 * b1.weight_l, 0.5 * b2.weight_l);
            let split = (b1.varpi_b - b2.varpi_b).abs();
            json!({
                "kind": "oscillating",
                "steady_min": 2.0 * (l1 * l1 - l2 * l2).abs(),
                "steady_max": 2.0 * (l1 * l1 + l2 * l2),
                "splitting_ev": split,
                "concurrence_period": if split > 0.0 { PI / split } else { f64::INFINITY },
            })
        }
        _ => Value::Null,
    };
    let last = traj.len() - 1;
    let results = json!({
        "files": [TRAJECTORY_CSV, BOUND_STATES_CSV, CONCURRENCE_CSV],
        "grid": grid_report(&p.table),
        "bound_states": bound_state_json(&p.table, &states)?,
        "branch": branch,
        "final_concurrence": conc[last],
        "final_steady_prediction": steady[last],
        "max_concurrence": conc.iter().copied().fold(0.0, f64::max),
    });
    let achieved = json!({ "max_norm": max_norm(&traj), "dt": traj.dt() });
    write_summary(out, "concurrence", cfg, achieved, &results)?;
    Ok(results)
}

/// One oracle comparison of the self-test.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, error: f64, bound: f64) -> Check {
    Check {
        name,
        passed: error < bound,
        detail: format!("error {error:.3e} (< {bound:.0e})"),
    }
}

/// Free-space spectral density against the closed-form emission rate.
fn free_space_sum_rule() -> plasmon_qse::Result<f64> {
    let e = EmitterParams::default();
    let g = Geometry::linear(1, 0.0, 2.9)?;
    let mut worst = 0.0f64;
    for eps_d in [1.0, 2.25] {
        let m = InterfaceModel::free_space(eps_d)?;
        let j = spectral_element(&m, &g, &Default::default(), &e, e.omega_0, 0, 0)?;
        worst = worst.max((2.0 * PI * j / (eps_d.sqrt() * gamma0_free(&e)) - 1.0).abs());
    }
    Ok(worst)
}

/// One-spike bath: Y(v) = v reduces to a quadratic with a closed-form root.
fn single_spike_bound_state() -> plasmon_qse::Result<f64> {
    let (w0, w1, mass, h) = (2.3, 3.0, 8.0, 0.5);
    let grid: Vec<f64> = (1..=20).map(|k| h * k as f64).collect();
    let j = grid
        .iter()
        .map(|&w| if (w - w1).abs() < 1e-12 { mass / h } else { 0.0 })
        .collect();
    let table = SpectralTable::single(w0, grid, j)?;
    let root = 0.5 * ((w0 + w1) - ((w1 - w0) * (w1 - w0) + 4.0 * mass).sqrt());
    let weight = 1.0 / (1.0 + mass / (w1 - root).powi(2));
    match find_bound_state(&table, 0)? {
        Some(b) => Ok((b.varpi_b - root).abs().max((b.weight_l - weight).abs())),
        None => Ok(f64::INFINITY),
    }
}

/// Lorentzian memory kernel: the amplitude is a sum of two exponentials.
fn lorentzian_dynamics() -> plasmon_qse::Result<f64> {
    let (w0, g2, wc, kappa, t_max, dt) = (2.3, 0.04, 2.4, 0.1, 20.0f64, 0.005);
    let n_lags = (t_max / dt).round() as usize + 1;
    let kernel = MemoryKernel::from_fn(1, dt, n_lags, |tau| {
        vec![g2 * (Complex64::new(-kappa, -wc) * tau).exp()]
    })?;
    let e = EmitterParams::new(w0, 1.0)?;
    let traj = solve_volterra_with(&kernel, &e, &[Complex64::new(1.0, 0.0)], t_max, dt, Default::default())?;
    // (s + i w0)(s + kappa + i wc) + g2 = 0.
    let b = Complex64::new(kappa, w0 + wc);
    let c = Complex64::new(0.0, w0) * Complex64::new(kappa, wc) + g2;
    let disc = (b * b - 4.0 * c).sqrt();
    let (sp, sm) = (0.5 * (-b + disc), 0.5 * (-b - disc));
    let shift = Complex64::new(kappa, wc);
    let exact = |t: f64| (sp + shift) / (sp - sm) * (sp * t).exp() + (sm + shift) / (sm - sp) * (sm * t).exp();
    Ok((0..traj.len())
        .map(|s| (traj.amplitudes(s)[0] - exact(traj.time(s))).norm())
        .fold(0.0, f64::max))
}

/// Concurrence of product and maximally entangled single-excitation states.
fn concurrence_limits() -> plasmon_qse::Result<f64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let zero = Complex64::new(0.0, 0.0);
    let bell = concurrence(&reduced_density(Complex64::new(h, 0.0), Complex64::new(0.0, h))?);
    let product = concurrence(&reduced_density(Complex64::new(1.0, 0.0), zero)?);
    Ok((bell - 1.0).abs().max(product))
}

/// Name, oracle returning its error, and the acceptance bound.
type Oracle = (&'static str, fn() -> plasmon_qse::Result<f64>, f64);

/// Runs the quick oracle suite.
pub fn selftest_checks() -> Vec<Check> {
    let cases: [Oracle; 4] = [
        ("free_space_sum_rule", free_space_sum_rule, 1e-6),
        ("single_spike_bound_state", single_spike_bound_state, 1e-8),
        ("lorentzian_dynamics", lorentzian_dynamics, 1e-3),
        ("concurrence_limits", concurrence_limits, 1e-10),
    ];
    cases
        .into_iter()
        .map(|(name, f, bound)| match f() {
            Ok(err) => check(name, err, bound),
            Err(e) => Check {
                name,
                passed: false,
                detail: e.to_string(),
            },
        })
        .collect()
}

/// Runs the oracle suite and writes `run.json`; fails when any check fails.
pub fn run_selftest(cfg: &ScenarioConfig, out: &Path) -> Result<Value, CliError> {
    ensure_dir(out)?;
    let checks = selftest_checks();
    let results = json!({
        "checks": checks
            .iter()
            .map(|c| json!({ "name": c.name, "passed": c.passed, "detail": c.detail }))
            .collect::<Vec<_>>(),
    });
    write_summary(out, "selftest", cfg, json!({}), &results)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(results)
    } else {
        Err(CliError::SelfTest(failed.join(", ")))
    }
}
