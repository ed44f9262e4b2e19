//! Two-emitter reduced density matrix and Wootters concurrence.
//!
//! Basis order is {ee, eg, ge, gg}. In the single-excitation sector the
//! reduced state is an X-state, but concurrence is always computed from the
//! full 4 x 4 Wootters construction.

use std::io::Write;

use nalgebra::{Matrix4, SymmetricEigen};
use num_complex::Complex64;

use crate::csvio;
use crate::dynamics::AmplitudeTrajectory;
use crate::error::{Error, Result};
use crate::spectrum::BoundState;

/// Header of the concurrence CSV.
pub const CONCURRENCE_HEADER: &str = "t_hbar_per_ev,concurrence,steady_prediction";

/// A validated two-qubit density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitState {
    rho: Matrix4<Complex64>,
}

impl TwoQubitState {
    /// Checks Hermiticity, unit trace (1e-10) and positivity (min eigenvalue
    /// >= -1e-10).
    pub fn new(rho: Matrix4<Complex64>) -> Result<Self> {
        let herm = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > 1e-10 {
            return Err(Error::Domain(format!(
                "density matrix is not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = rho.trace();
        if (tr - 1.0).norm() > 1e-10 {
            return Err(Error::Domain(format!("density matrix trace is {tr}")));
        }
        let min_eig = SymmetricEigen::new(hermitian_part(&rho))
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-10 {
            return Err(Error::Domain(format!("density matrix has eigenvalue {min_eig:e}")));
        }
        Ok(Self { rho })
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.rho
    }
}

fn hermitian_part(m: &Matrix4<Complex64>) -> Matrix4<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Reduced emitter state after tracing out the field from the
/// single-excitation state with emitter amplitudes (a1, a2).
pub fn reduced_density(a1: Complex64, a2: Complex64) -> Result<TwoQubitState> {
    let p1 = a1.norm_sqr();
    let p2 = a2.norm_sqr();
    if p1 + p2 > 1.0 + 1e-9 {
        return Err(Error::Domain(format!("|a1|^2 + |a2|^2 = {} exceeds one", p1 + p2)));
    }
    let mut rho = Matrix4::<Complex64>::zeros();
    rho[(1, 1)] = Complex64::new(p1, 0.0);
    rho[(2, 2)] = Complex64::new(p2, 0.0);
    rho[(1, 2)] = a1 * a2.conj();
    rho[(2, 1)] = a2 * a1.conj();
    rho[(3, 3)] = Complex64::new((1.0 - p1 - p2).max(0.0), 0.0);
    // Re-normalise the trace exactly in case p1 + p2 slightly exceeds one.
    let tr = rho.trace().re;
    rho /= Complex64::new(tr, 0.0);
    TwoQubitState::new(rho)
}

/// Wootters concurrence max{0, s1 - s2 - s3 - s4}, where s_k are the
/// descending square roots of the eigenvalues of rho (Y x Y) rho* (Y x Y).
///
/// The s_k are computed as the singular values of sqrt(rho) (Y x Y)
/// sqrt(rho)*, which avoids square roots of near-zero eigenvalues.
/// Eigenvalues of rho below the eigensolver's resolution (including small
/// negative noise) are treated as zero.
pub fn concurrence(state: &TwoQubitState) -> f64 {
    let rho = hermitian_part(&state.rho);
    // sigma_y x sigma_y in the {ee, eg, ge, gg} ordering.
    let mut yy = Matrix4::<Complex64>::zeros();
    yy[(0, 3)] = Complex64::new(-1.0, 0.0);
    yy[(1, 2)] = Complex64::new(1.0, 0.0);
    yy[(2, 1)] = Complex64::new(1.0, 0.0);
    yy[(3, 0)] = Complex64::new(-1.0, 0.0);

    let eig = SymmetricEigen::new(rho);
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let resolution = 16.0 * f64::EPSILON * top;
    let sqrt_vals = eig
        .eigenvalues
        .map(|v| Complex64::new(if v <= resolution { 0.0 } else { v.sqrt() }, 0.0));
    let sqrt_rho = eig.eigenvectors * Matrix4::from_diagonal(&sqrt_vals) * eig.eigenvectors.adjoint();
    let a = sqrt_rho * yy * sqrt_rho.map(|z| z.conj());
    let mut s: Vec<f64> = a.svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    (s[0] - s[1] - s[2] - s[3]).max(0.0)
}

/// Long-time concurrence predicted by the bound states of a two-emitter
/// system prepared in (1, 0), with L_j = weight_j / 2:
/// no bound state gives 0, one gives 2 L^2, two give
/// 2 |L1^2 - L2^2 + 2 i L1 L2 sin((varpi1 - varpi2) t)|.
pub fn steady_concurrence(bound_states: &[BoundState], n: usize, t: f64) -> Result<f64> {
    if n != 2 {
        return Err(Error::Unsupported(format!(
            "steady concurrence needs N = 2, got N = {n}"
        )));
    }
    match bound_states {
        [] => Ok(0.0),
        [b] => {
            let l = 0.5 * b.weight_l;
            Ok(2.0 * l * l)
        }
        [b1, b2] => {
            let (l1, l2) = (0.5 * b1.weight_l, 0.5 * b2.weight_l);
            let x = Complex64::new(l1 * l1 - l2 * l2, 2.0 * l1 * l2 * ((b1.varpi_b - b2.varpi_b) * t).sin());
            Ok(2.0 * x.norm())
        }
        _ => Err(Error::Domain("two emitters have at most two bound states".into())),
    }
}

/// Concurrence at every step of a two-emitter trajectory.
pub fn concurrence_series(traj: &AmplitudeTrajectory) -> Result<Vec<f64>> {
    if traj.n() != 2 {
        return Err(Error::Unsupported(format!(
            "concurrence needs N = 2, got N = {}",
            traj.n()
        )));
    }
    (0..traj.len())
        .map(|s| {
            let a = traj.amplitudes(s);
            Ok(concurrence(&reduced_density(a[0], a[1])?))
        })
        .collect()
}

/// Writes `t_hbar_per_ev,concurrence,steady_prediction`.
pub fn write_concurrence_csv<W: Write>(w: W, times: &[f64], c: &[f64], steady: &[f64]) -> Result<()> {
    if times.len() != c.len() || times.len() != steady.len() {
        return Err(Error::Config("concurrence columns differ in length".into()));
    }
    let rows: Vec<Vec<f64>> = (0..times.len()).map(|k| vec![times[k], c[k], steady[k]]).collect();
    csvio::write_numeric(w, CONCURRENCE_HEADER, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn basis_projectors() {
        let eg = reduced_density(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert_eq!(eg.matrix()[(1, 1)], c(1.0, 0.0));
        assert_eq!(eg.matrix().iter().filter(|z| z.norm() > 0.0).count(), 1);
        let gg = reduced_density(c(0.0, 0.0), c(0.0, 0.0)).unwrap();
        assert_eq!(gg.matrix()[(3, 3)], c(1.0, 0.0));
        assert_eq!(concurrence(&gg), 0.0);
        assert!(concurrence(&eg) < 1e-12);
    }

    #[test]
    fn symmetric_superposition_is_maximally_entangled() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let st = reduced_density(c(s, 0.0), c(s, 0.0)).unwrap();
        assert!((concurrence(&st) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn over_normalised_amplitudes_are_rejected() {
        assert!(reduced_density(c(0.8, 0.0), c(0.8, 0.0)).is_err());
    }

    #[test]
    fn mixed_state_with_generic_entries() {
        // Werner-like X state: concurrence max(0, 2|z| - 2 sqrt(p_ee p_gg)).
        let mut rho = Matrix4::<Complex64>::zeros();
        rho[(0, 0)] = c(0.1, 0.0);
        rho[(1, 1)] = c(0.35, 0.0);
        rho[(2, 2)] = c(0.35, 0.0);
        rho[(3, 3)] = c(0.2, 0.0);
        rho[(1, 2)] = c(0.2, 0.1);
        rho[(2, 1)] = c(0.2, -0.1);
        let st = TwoQubitState::new(rho).unwrap();
        let expected = (2.0 * c(0.2, 0.1).norm() - 2.0 * (0.1f64 * 0.2).sqrt()).max(0.0);
        assert!((concurrence(&st) - expected).abs() < 1e-10);
    }

    #[test]
    fn steady_branches() {
        let b1 = BoundState {
            channel: 0,
            varpi_b: -0.1,
            weight_l: 0.6,
        };
        let b2 = BoundState {
            channel: 1,
            varpi_b: -0.2,
            weight_l: 0.5,
        };
        assert_eq!(steady_concurrence(&[], 2, 3.0).unwrap(), 0.0);
        assert!((steady_concurrence(&[b1], 2, 3.0).unwrap() - 2.0 * 0.09).abs() < 1e-15);
        let (l1, l2) = (0.3, 0.25);
        let t_min = 0.0;
        let t_max = std::f64::consts::FRAC_PI_2 / 0.1;
        let lo = steady_concurrence(&[b1, b2], 2, t_min).unwrap();
        let hi = steady_concurrence(&[b1, b2], 2, t_max).unwrap();
        assert!((lo - 2.0 * (l1 * l1 - l2 * l2)).abs() < 1e-14);
        assert!((hi - 2.0 * (l1 * l1 + l2 * l2)).abs() < 1e-14);
        assert!(steady_concurrence(&[b1], 1, 0.0).is_err());
    }
}
