use plasmon_qse::green::*;
use plasmon_qse::interface::*;
use plasmon_qse::materials::*;
use plasmon_qse::spectral::*;
use plasmon_qse::Error;

fn surrogate_model() -> InterfaceModel {
    InterfaceModel::with_surrogate(1.0, DrudeParams::default(), SurrogateDPerp::default()).unwrap()
}

fn table(m: &InterfaceModel, n: usize, r: f64, z0: f64, alpha: f64) -> SpectralTable {
    let g = Geometry::linear(n, r, z0).unwrap();
    let e = EmitterParams::new(2.3, alpha).unwrap();
    build_spectral_table(m, &g, &QuadratureSpec::default(), &e, &GridSpec::default_for_model(m)).unwrap()
}

#[test]
fn free_space_rate_matches_gamma0_times_index() {
    let e = EmitterParams::default();
    let g = Geometry::linear(1, 0.0, 2.9).unwrap();
    for eps_d in [1.0, 2.25, 4.0] {
        let m = InterfaceModel::free_space(eps_d).unwrap();
        let j = spectral_element(&m, &g, &QuadratureSpec::default(), &e, e.omega_0, 0, 0).unwrap();
        let ratio = 2.0 * std::f64::consts::PI * j / gamma0_free(&e);
        assert!((ratio / eps_d.sqrt() - 1.0).abs() < 1e-6, "eps_d {eps_d}: {ratio}");
    }
}

#[test]
fn spectral_element_is_linear_in_alpha() {
    let m = surrogate_model();
    let g = Geometry::linear(2, 10.0, 2.9).unwrap();
    let q = QuadratureSpec::default();
    let one = EmitterParams::new(2.3, 850.0).unwrap();
    let two = EmitterParams::new(2.3, 1700.0).unwrap();
    for w in [0.3, 2.3, 3.9, 4.2, 7.5] {
        for (i, j) in [(0, 0), (0, 1)] {
            let a = spectral_element(&m, &g, &q, &one, w, i, j).unwrap();
            let b = spectral_element(&m, &g, &q, &two, w, i, j).unwrap();
            assert!((b - 2.0 * a).abs() <= 1e-15 * b.abs(), "{w} ({i},{j})");
        }
    }
}

#[test]
fn single_emitter_channel_is_the_diagonal() {
    let t = table(&surrogate_model(), 1, 0.0, 2.9, DEFAULT_ALPHA);
    assert_eq!(t.n_channels(), 1);
    assert_eq!(t.channel(0).unwrap(), t.j_series(0, 0).as_slice());
    assert_eq!(t.channel_signs(0).unwrap(), vec![1.0]);
}

#[test]
fn distant_pair_decouples() {
    let t = table(&surrogate_model(), 2, 500.0, 2.9, DEFAULT_ALPHA);
    let j0 = t.j_series(0, 0);
    let j1 = t.j_series(0, 1);
    let (plus, minus) = (t.channel(0).unwrap(), t.channel(1).unwrap());
    for k in 0..j0.len() {
        assert!((plus[k] - j0[k]).abs() <= 1e-2 * j0[k], "node {k}");
        assert!((minus[k] - j0[k]).abs() <= 1e-2 * j0[k], "node {k}");
    }
    assert!(t.trapezoid(|k| j1[k].abs()) <= 1e-3 * t.trapezoid(|k| j0[k]));
}

#[test]
fn coincident_pair_is_rejected() {
    assert!(matches!(Geometry::linear(2, 0.0, 2.9), Err(Error::Config(_))));
}

#[test]
fn equal_heights_give_equal_diagonals_and_nonnegative_channels() {
    let m = surrogate_model();
    for r in [3.0, 10.0] {
        let t = table(&m, 2, r, 2.9, DEFAULT_ALPHA);
        let floor = DEFAULT_ALPHA * 1e-14 * (10.0 / plasmon_qse::HBAR_C).powi(2);
        for k in 0..t.grid().len() {
            assert_eq!(t.j_at(k, 0, 0), t.j_at(k, 1, 1));
            assert_eq!(t.j_at(k, 0, 1), t.j_at(k, 1, 0));
            assert!(t.j_at(k, 0, 0) >= -floor);
        }
        for c in 0..2 {
            let a = t.channel(c).unwrap();
            let min = a.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(min >= -floor, "R {r} channel {c}: {min}");
        }
    }
}

#[test]
fn doubling_grid_density_preserves_integral() {
    let m = surrogate_model();
    let g = Geometry::linear(1, 0.0, 2.9).unwrap();
    let e = EmitterParams::default();
    let q = QuadratureSpec::default();
    let spec = GridSpec::default_for_model(&m);
    let coarse = build_spectral_table(&m, &g, &q, &e, &spec).unwrap();
    let fine = build_spectral_table(&m, &g, &q, &e, &spec.refined(2)).unwrap();
    let ic = coarse.trapezoid(|k| coarse.j_at(k, 0, 0));
    let i_f = fine.trapezoid(|k| fine.j_at(k, 0, 0));
    assert!((ic - i_f).abs() < 5e-3 * i_f, "{ic} vs {i_f}");
}

#[test]
fn enhancement_ratio_does_not_depend_on_alpha() {
    let m = surrogate_model();
    let a = table(&m, 1, 0.0, 2.9, 170.0);
    let b = table(&m, 1, 0.0, 2.9, 1700.0);
    let ra = a.peak().j_peak / gamma0_free(&EmitterParams::new(2.3, 170.0).unwrap());
    let rb = b.peak().j_peak / gamma0_free(&EmitterParams::new(2.3, 1700.0).unwrap());
    assert!((ra - rb).abs() <= 1e-13 * rb, "{ra} vs {rb}");
}

#[test]
fn node_failures_carry_the_frequency() {
    let m = surrogate_model();
    let g = Geometry::linear(1, 0.0, 2.9).unwrap();
    let q = QuadratureSpec {
        rel_tol: 1e-14,
        abs_tol: 1e-40,
        max_panels: 1,
        ..QuadratureSpec::default()
    };
    let spec = GridSpec {
        omega_min: 3.0,
        omega_max: 5.0,
        n_background: 5,
        n_resonance: 0,
        resonance_center: 4.0,
        resonance_halfwidth: 0.1,
    };
    match build_spectral_table(&m, &g, &q, &EmitterParams::default(), &spec) {
        Err(Error::Node { omega, source }) => {
            assert!((3.0..=5.0).contains(&omega));
            assert!(matches!(*source, Error::Convergence { .. }));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn csv_headers_follow_emitter_count() {
    let grid = vec![1.0, 2.0, 3.0];
    let one = SpectralTable::single(2.3, grid.clone(), vec![0.1, 0.2, 0.3]).unwrap();
    let mut buf = Vec::new();
    one.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), SPECTRAL_HEADER_N1);
    assert_eq!(text.lines().count(), 4);

    let j = vec![0.1, 0.05, 0.05, 0.1, 0.2, -0.1, -0.1, 0.2, 0.3, 0.0, 0.0, 0.3];
    let two = SpectralTable::from_samples(2.3, 2, grid, j).unwrap();
    let mut buf = Vec::new();
    two.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), SPECTRAL_HEADER_N2);
    let row: Vec<f64> = lines.nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(row, vec![2.0, 0.2, -0.1, 0.1, 0.30000000000000004]);
}

#[test]
fn asymmetric_samples_are_rejected() {
    let j = vec![0.1, 0.05, 0.04, 0.1, 0.2, 0.0, 0.0, 0.2];
    assert!(SpectralTable::from_samples(2.3, 2, vec![1.0, 2.0], j).is_err());
}
