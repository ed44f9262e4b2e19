//! Bound states below the continuum: roots of the pole equation
//! `Y_j(varpi) = varpi` per eigen-channel, their residue weights, and the
//! non-decaying part of the emitter amplitudes they leave behind.
//!
//! With `A_j` the channel spectral density,
//! `Y_j(varpi) = omega_0 - int A_j(omega) / (omega - varpi) d omega`
//! and the residue weight is `L = [1 + int A_j / (omega - varpi)^2]^-1`.
//! Both integrals use the trapezoid rule on the table grid.

use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::SpectralTable;

/// Offset used in place of varpi = 0, keeping the integrand regular at the
/// lowest grid node.
pub const ZERO_MINUS: f64 = -1e-9;

/// Bisection stops once the bracket is narrower than this (eV).
pub const ROOT_TOL: f64 = 1e-10;

/// Header of the bound-state report CSV.
pub const BOUND_STATE_HEADER: &str = "channel,varpi_b_ev,weight_L,exists";

/// A discrete eigenstate below the continuum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundState {
    pub channel: usize,
    /// Eigenenergy (eV), negative.
    pub varpi_b: f64,
    /// Residue weight in (0, 1].
    pub weight_l: f64,
}

fn check_below_continuum(table: &SpectralTable, varpi: f64) -> Result<()> {
    if !(varpi < table.omega_min()) {
        return Err(Error::Domain(format!(
            "Y is ill defined at varpi = {varpi} eV inside the continuum (grid starts at {} eV)",
            table.omega_min()
        )));
    }
    Ok(())
}

/// Y_j(varpi) for `varpi` below the grid.
pub fn y_eval(table: &SpectralTable, channel: usize, varpi: f64) -> Result<f64> {
    check_below_continuum(table, varpi)?;
    let a = table.channel(channel)?;
    let w = table.grid();
    Ok(table.omega_0() - table.trapezoid(|k| a[k] / (w[k] - varpi)))
}

/// Residue weight [1 + int A_j / (omega - varpi)^2]^-1.
pub fn residue_weight(table: &SpectralTable, channel: usize, varpi_b: f64) -> Result<f64> {
    check_below_continuum(table, varpi_b)?;
    let a = table.channel(channel)?;
    let w = table.grid();
    let m2 = table.trapezoid(|k| {
        let d = w[k] - varpi_b;
        a[k] / (d * d)
    });
    Ok(1.0 / (1.0 + m2))
}

/// The bound state of `channel`, if `Y_j(0-) < 0`.
pub fn find_bound_state(table: &SpectralTable, channel: usize) -> Result<Option<BoundState>> {
    let f = |v: f64| y_eval(table, channel, v).map(|y| y - v);
    let mut hi = ZERO_MINUS;
    let f_hi = f(hi)?;
    if f_hi >= 0.0 {
        return Ok(None);
    }
    let mut lo = -table.omega_0();
    let mut doublings = 0;
    while f(lo)? <= 0.0 {
        hi = lo;
        lo *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::Domain(format!(
                "no bracket for the bound state of channel {channel} after 60 doublings"
            )));
        }
    }
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let varpi_b = 0.5 * (lo + hi);
    Ok(Some(BoundState {
        channel,
        varpi_b,
        weight_l: residue_weight(table, channel, varpi_b)?,
    }))
}

/// Bound state of one channel as a list with zero or one entries.
pub fn find_bound_states(table: &SpectralTable, channel: usize) -> Result<Vec<BoundState>> {
    Ok(find_bound_state(table, channel)?.into_iter().collect())
}

/// Bound states over every channel of the table, ordered by channel.
pub fn all_bound_states(table: &SpectralTable) -> Result<Vec<BoundState>> {
    let nch = table.n_channels();
    if nch == 0 {
        return Err(Error::Unsupported(format!(
            "bound-state analysis needs N <= 2, got N = {}",
            table.n()
        )));
    }
    let mut out = Vec::new();
    for c in 0..nch {
        out.extend(find_bound_state(table, c)?);
    }
    Ok(out)
}

/// int A_j(omega) / omega d omega; a bound state exists iff omega_0 is below it.
pub fn threshold_integral(table: &SpectralTable, channel: usize) -> Result<f64> {
    Ok(table.omega_0() - y_eval(table, channel, ZERO_MINUS)?)
}

/// Long-time amplitude left by the bound states for initial amplitudes `a0`:
/// `Z(t) = sum_j L_j P_j a0 exp(-i varpi_j t)` with `P_j` the projector onto
/// channel j. For a0 = (1, 0) and N = 2 each channel contributes
/// `(L_j / 2) (1, +-1)`.
pub fn asymptotic_z(bound_states: &[BoundState], a0: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
    let n = a0.len();
    let mut z = vec![Complex64::new(0.0, 0.0); n];
    match n {
        1 => {
            for b in bound_states {
                if b.channel != 0 {
                    return Err(Error::Domain(format!("N = 1 has no channel {}", b.channel)));
                }
                z[0] += a0[0] * b.weight_l * Complex64::from_polar(1.0, -b.varpi_b * t);
            }
        }
        2 => {
            for b in bound_states {
                let s = match b.channel {
                    0 => 1.0,
                    1 => -1.0,
                    c => return Err(Error::Domain(format!("N = 2 has no channel {c}"))),
                };
                let proj = 0.5 * (a0[0] + s * a0[1]);
                let phase = Complex64::from_polar(b.weight_l, -b.varpi_b * t);
                z[0] += proj * phase;
                z[1] += s * proj * phase;
            }
        }
        _ => {
            return Err(Error::Unsupported(format!(
                "asymptotic amplitudes need N <= 2, got N = {n}"
            )))
        }
    }
    Ok(z)
}

/// Writes one report row per channel; channels without a bound state carry
/// `NaN` energy and weight and `exists = 0`.
pub fn write_bound_state_csv<W: Write>(mut w: W, n_channels: usize, states: &[BoundState]) -> Result<()> {
    writeln!(w, "{BOUND_STATE_HEADER}")?;
    for c in 0..n_channels {
        match states.iter().find(|b| b.channel == c) {
            Some(b) => writeln!(w, "{c},{:?},{:?},1", b.varpi_b, b.weight_l)?,
            None => writeln!(w, "{c},NaN,NaN,0")?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_table(omega_0: f64, value: f64) -> SpectralTable {
        let grid: Vec<f64> = (0..101).map(|k| 0.1 + 0.05 * k as f64).collect();
        let j = vec![value; grid.len()];
        SpectralTable::single(omega_0, grid, j).unwrap()
    }

    #[test]
    fn zero_coupling_is_free() {
        let t = flat_table(2.0, 0.0);
        assert_eq!(y_eval(&t, 0, -3.0).unwrap(), 2.0);
        assert!(find_bound_states(&t, 0).unwrap().is_empty());
        assert_eq!(residue_weight(&t, 0, -0.5).unwrap(), 1.0);
    }

    #[test]
    fn y_inside_continuum_is_rejected() {
        let t = flat_table(2.0, 0.1);
        assert!(matches!(y_eval(&t, 0, 0.2), Err(Error::Domain(_))));
    }

    #[test]
    fn y_approaches_omega_0_from_below() {
        let t = flat_table(2.0, 0.1);
        let far = y_eval(&t, 0, -1e8).unwrap();
        assert!(far < 2.0 && 2.0 - far < 1e-8);
    }

    #[test]
    fn z_without_bound_states_vanishes() {
        let a0 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let z = asymptotic_z(&[], &a0, 12.3).unwrap();
        assert!(z.iter().all(|c| c.norm() == 0.0));
        let three = [Complex64::new(1.0, 0.0); 3];
        assert!(matches!(asymptotic_z(&[], &three, 0.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn single_channel_z_at_time_zero() {
        let b = BoundState {
            channel: 0,
            varpi_b: -0.3,
            weight_l: 0.6,
        };
        let a0 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let z = asymptotic_z(&[b], &a0, 0.0).unwrap();
        assert!((z[0] - 0.3).norm() < 1e-15 && (z[1] - 0.3).norm() < 1e-15);
    }

    #[test]
    fn report_lists_every_channel() {
        let b = BoundState {
            channel: 1,
            varpi_b: -0.25,
            weight_l: 0.5,
        };
        let mut out = Vec::new();
        write_bound_state_csv(&mut out, 2, &[b]).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "channel,varpi_b_ev,weight_L,exists\n0,NaN,NaN,0\n1,-0.25,0.5,1\n");
    }
}
