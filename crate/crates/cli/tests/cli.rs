use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use plasmon_cli::config::ResponseKind;
use plasmon_cli::run::{self, run_spectral, run_spectrum};
use plasmon_cli::{CliError, ScenarioConfig, DEFAULT_CONFIG_TOML, EXIT_CONFIG, EXIT_NUMERICAL};
use plasmon_qse::dynamics::{trajectory_header, TRAJECTORY_HEADER_N2};
use plasmon_qse::entanglement::CONCURRENCE_HEADER;
use plasmon_qse::spectral::{SPECTRAL_HEADER_N1, SPECTRAL_HEADER_N2};
use plasmon_qse::spectrum::BOUND_STATE_HEADER;
use serde_json::Value;
use tempfile::TempDir;

/// Coarse grid and short window so each run takes well under a second.
const QUICK: &str = "
[grid]
n_background = 200
n_resonance = 200
t_max = 20.0
dt = 0.01
";

fn plasmon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plasmon")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn quick(extra: &str) -> ScenarioConfig {
    ScenarioConfig::from_toml_str(&format!("{extra}\n{QUICK}"), None).unwrap()
}

fn first_line(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

fn run_json(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(run::SUMMARY_JSON)).unwrap()).unwrap()
}

#[test]
fn default_config_text_matches_built_in_defaults() {
    assert_eq!(
        ScenarioConfig::from_toml_str(DEFAULT_CONFIG_TOML, None).unwrap(),
        ScenarioConfig::default()
    );
    assert_eq!(
        ScenarioConfig::from_toml_str("", None).unwrap(),
        ScenarioConfig::default()
    );
    let out = plasmon(&["--print-default-config"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), DEFAULT_CONFIG_TOML);
}

#[test]
fn repeated_runs_are_bit_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "pair.toml",
        &format!("[geometry]\nn = 2\nr_nm = 10.0\n{QUICK}"),
    );
    let cfg = cfg.to_str().unwrap();
    let files = [
        run::TRAJECTORY_CSV,
        run::BOUND_STATES_CSV,
        run::CONCURRENCE_CSV,
        run::SUMMARY_JSON,
    ];
    let mut outputs = Vec::new();
    for (k, threads) in ["1", "2"].iter().enumerate() {
        let out = tmp.path().join(format!("run{k}"));
        let status = plasmon(&[
            "concurrence",
            "--config",
            cfg,
            "--out",
            out.to_str().unwrap(),
            "--threads",
            threads,
        ]);
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        outputs.push(files.map(|f| std::fs::read(out.join(f)).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn every_artifact_has_its_header() {
    let tmp = TempDir::new().unwrap();
    let single = quick("");
    let pair = quick("[geometry]\nn = 2\nr_nm = 10.0");
    let spectral1 = tmp.path().join("spectral1");
    run_spectral(&single, &spectral1).unwrap();
    assert_eq!(first_line(&spectral1.join(run::SPECTRAL_CSV)), SPECTRAL_HEADER_N1);

    let spectrum2 = tmp.path().join("spectrum2");
    run_spectrum(&pair, &spectrum2).unwrap();
    assert_eq!(first_line(&spectrum2.join(run::SPECTRAL_CSV)), SPECTRAL_HEADER_N2);
    assert_eq!(first_line(&spectrum2.join(run::BOUND_STATES_CSV)), BOUND_STATE_HEADER);

    let dyn2 = tmp.path().join("dynamics2");
    run::run_dynamics(&pair, &dyn2).unwrap();
    assert_eq!(first_line(&dyn2.join(run::TRAJECTORY_CSV)), TRAJECTORY_HEADER_N2);
    assert_eq!(
        first_line(&dyn2.join(run::DECAY_RATE_CSV)),
        "t_hbar_per_ev,gamma1_ev,gamma2_ev"
    );

    let conc = tmp.path().join("concurrence");
    run::run_concurrence(&pair, &conc).unwrap();
    assert_eq!(first_line(&conc.join(run::CONCURRENCE_CSV)), CONCURRENCE_HEADER);

    for dir in [&spectral1, &spectrum2, &dyn2, &conc] {
        let summary = run_json(dir);
        assert_eq!(summary["versions"]["plasmon_qse"], plasmon_qse::VERSION);
        assert!(summary["config"]["grid"]["n_background"] == 200);
        assert!(summary["tolerances"]["requested"]["quadrature_rel_tol"].is_f64());
    }
}

#[test]
fn dynamics_accepts_more_than_two_emitters() {
    let tmp = TempDir::new().unwrap();
    let cfg = quick("[geometry]\nn = 3\nr_nm = 8.0");
    let results = run::run_dynamics(&cfg, tmp.path()).unwrap();
    assert!(results["predictions"].is_null());
    assert_eq!(first_line(&tmp.path().join(run::TRAJECTORY_CSV)), trajectory_header(3));
    let err = run::run_concurrence(&cfg, &tmp.path().join("c")).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_CONFIG);
    assert_eq!(
        run_spectrum(&cfg, &tmp.path().join("s")).unwrap_err().exit_code(),
        EXIT_CONFIG
    );
}

#[test]
fn exit_codes_distinguish_configuration_from_numerics() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();
    let cases = [
        ("unknown.toml", "[geometry]\nheight = 3.0\n", EXIT_CONFIG),
        ("negative.toml", "[geometry]\nz0_nm = -1.0\n", EXIT_CONFIG),
        ("bad_response.toml", "[material]\nresponse = \"hydrodynamic\"\n", EXIT_CONFIG),
        ("missing_table.toml", "[material]\nresponse = \"table\"\ndparam_table = \"nope.csv\"\n", EXIT_CONFIG),
        ("coarse_dt.toml", "[grid]\nn_background = 50\nn_resonance = 50\ndt = 0.5\n", EXIT_CONFIG),
        (
            "budget.toml",
            "[tolerance]\nrel_tol = 1e-14\nabs_tol = 1e-300\nmax_panels = 1\n[grid]\nn_background = 20\nn_resonance = 20\n",
            EXIT_NUMERICAL,
        ),
    ];
    for (name, text, code) in cases {
        let cfg = write_config(tmp.path(), name, text);
        let res = plasmon(&["dynamics", "--config", cfg.to_str().unwrap(), "--out", out]);
        assert_eq!(
            res.status.code(),
            Some(code),
            "{name}: {}",
            String::from_utf8_lossy(&res.stderr)
        );
        assert!(!res.stderr.is_empty());
    }
    let res = plasmon(&["spectral", "--config", tmp.path().join("absent.toml").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(EXIT_CONFIG));
    assert_eq!(plasmon(&["selftest", "--out", out]).status.code(), Some(0));
}

#[test]
fn table_response_is_clipped_to_the_table_domain() {
    let tmp = TempDir::new().unwrap();
    let mut csv = String::from("omega_ev,re_dperp_nm,im_dperp_nm,re_dpar_nm,im_dpar_nm\n");
    for k in 0..=40 {
        let w = 0.5 + 0.125 * k as f64;
        csv.push_str(&format!("{w},0.1,0.02,0.0,0.0\n"));
    }
    std::fs::create_dir(tmp.path().join("data")).unwrap();
    std::fs::write(tmp.path().join("data/d.csv"), csv).unwrap();
    let cfg = write_config(
        tmp.path(),
        "table.toml",
        &format!("[material]\nresponse = \"table\"\ndparam_table = \"data/d.csv\"\n{QUICK}"),
    );
    let cfg = ScenarioConfig::load(&cfg).unwrap();
    assert_eq!(cfg.material.response, ResponseKind::Table);
    let results = run_spectral(&cfg, &tmp.path().join("out")).unwrap();
    assert_eq!(results["grid"]["omega_min_ev"], 0.5);
    assert_eq!(results["grid"]["omega_max_ev"], 5.5);
}

#[test]
fn surface_response_red_shifts_and_broadens_the_peak() {
    let tmp = TempDir::new().unwrap();
    let lra = run_spectral(&quick("[material]\nresponse = \"lra\""), &tmp.path().join("lra")).unwrap();
    let qse = run_spectral(&quick(""), &tmp.path().join("qse")).unwrap();
    let (pl, pq) = (&lra["peak"], &qse["peak"]);
    assert!(pq["omega_peak_ev"].as_f64().unwrap() < pl["omega_peak_ev"].as_f64().unwrap());
    assert!(pq["fwhm_ev"].as_f64().unwrap() > pl["fwhm_ev"].as_f64().unwrap());

    let doubled = run_spectral(&quick("[emitter]\nalpha_ev_nm3 = 3400.0"), &tmp.path().join("x2")).unwrap();
    let (r1, r2) = (
        pq["j_peak_over_gamma0"].as_f64().unwrap(),
        doubled["peak"]["j_peak_over_gamma0"].as_f64().unwrap(),
    );
    assert!((r1 / r2 - 1.0).abs() < 1e-12, "{r1} vs {r2}");
}

/// Bound-state flag of the single channel across a height sweep.
fn exists_over_heights(response: &str, heights: &[f64], dir: &Path) -> Vec<bool> {
    heights
        .iter()
        .map(|z| {
            let cfg = quick(&format!(
                "[material]\nresponse = \"{response}\"\n[geometry]\nz0_nm = {z:?}"
            ));
            let r = run_spectrum(&cfg, &dir.join(format!("{response}{z}"))).unwrap();
            r["bound_states"][0]["exists"].as_bool().unwrap()
        })
        .collect()
}

#[test]
fn bound_state_disappears_once_with_height_and_survives_longer_with_surface_response() {
    let tmp = TempDir::new().unwrap();
    let heights: Vec<f64> = (0..13).map(|k| 2.0 + 0.25 * k as f64).collect();
    let qse = exists_over_heights("surrogate", &heights, tmp.path());
    let lra = exists_over_heights("lra", &heights, tmp.path());
    for flags in [&qse, &lra] {
        assert!(flags[0] && !flags[flags.len() - 1], "{flags:?}");
        assert_eq!(flags.windows(2).filter(|w| w[0] != w[1]).count(), 1, "{flags:?}");
    }
    let onset = |f: &[bool]| f.iter().position(|b| !b).unwrap();
    assert!(onset(&qse) >= onset(&lra), "surrogate {qse:?}, lra {lra:?}");
}

#[test]
fn two_bound_states_at_large_separation() {
    let tmp = TempDir::new().unwrap();
    let r = run_spectrum(&quick("[geometry]\nn = 2\nr_nm = 20.0"), tmp.path()).unwrap();
    let states = r["bound_states"].as_array().unwrap();
    assert_eq!(states.len(), 2);
    assert!(states.iter().all(|s| s["exists"] == true));
}

#[test]
fn invalid_initial_state_is_a_config_error() {
    let bad_len = ScenarioConfig::from_toml_str("[emitter]\ninitial = [[1.0, 0.0], [0.0, 0.0]]", None);
    assert!(matches!(bad_len, Err(CliError::Config(_))));
    let tmp = TempDir::new().unwrap();
    let too_big = quick("[emitter]\ninitial = [[1.0, 0.5]]");
    assert_eq!(
        run::run_dynamics(&too_big, tmp.path()).unwrap_err().exit_code(),
        EXIT_CONFIG
    );
}
