//! Bulk Drude permittivity and Feibelman d-parameter sources.
//!
//! d-parameters come either from a tabulated CSV (piecewise-linear in the
//! real and imaginary parts separately, no extrapolation) or from a
//! single-pole analytic surrogate.

use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;

use crate::csvio;
use crate::error::{Error, Result};

/// Header line of the d-parameter CSV format.
pub const DPARAM_HEADER: &str = "omega_ev,re_dperp_nm,im_dperp_nm,re_dpar_nm,im_dpar_nm";

/// Free-electron (Drude) bulk response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrudeParams {
    /// Plasma energy (eV).
    pub omega_p: f64,
    /// Damping energy (eV).
    pub gamma_p: f64,
}

impl DrudeParams {
    pub fn new(omega_p: f64, gamma_p: f64) -> Result<Self> {
        if !(omega_p > 0.0) || !omega_p.is_finite() {
            return Err(Error::Config(format!("omega_p must be positive, got {omega_p}")));
        }
        if !(gamma_p >= 0.0) || !gamma_p.is_finite() {
            return Err(Error::Config(format!("gamma_p must be non-negative, got {gamma_p}")));
        }
        Ok(Self { omega_p, gamma_p })
    }

    /// Surface plasmon energy omega_p / sqrt(1 + eps_d) of the lossless
    /// interface with a dielectric of permittivity `eps_d`.
    pub fn surface_plasmon_energy(&self, eps_d: f64) -> f64 {
        self.omega_p / (1.0 + eps_d).sqrt()
    }
}

impl Default for DrudeParams {
    /// Sodium-like parameters: omega_p = 5.9 eV, gamma_p = 0.1 eV.
    fn default() -> Self {
        Self {
            omega_p: 5.9,
            gamma_p: 0.1,
        }
    }
}

/// eps_m(omega) = 1 - omega_p^2 / (omega (omega + i gamma_p)).
pub fn drude_epsilon(p: &DrudeParams, omega: f64) -> Result<Complex64> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!(
            "Drude permittivity needs omega > 0, got {omega}"
        )));
    }
    let denom = Complex64::new(omega * omega, omega * p.gamma_p);
    Ok(Complex64::new(1.0, 0.0) - p.omega_p * p.omega_p / denom)
}

/// Tabulated complex d-parameters on an ascending frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DParamTable {
    omegas: Vec<f64>,
    d_perp: Vec<Complex64>,
    d_par: Vec<Complex64>,
}

impl DParamTable {
    /// Builds a table, checking monotone frequencies and Im d_perp >= 0.
    ///
    /// Errors name the 0-based node index as `row`.
    pub fn new(omegas: Vec<f64>, d_perp: Vec<Complex64>, d_par: Vec<Complex64>) -> Result<Self> {
        if omegas.len() != d_perp.len() || omegas.len() != d_par.len() {
            return Err(Error::Config("d-parameter columns differ in length".into()));
        }
        Self::validate(&omegas, &d_perp, |i| i)?;
        Ok(Self { omegas, d_perp, d_par })
    }

    fn validate(omegas: &[f64], d_perp: &[Complex64], row_of: impl Fn(usize) -> usize) -> Result<()> {
        if omegas.len() < 2 {
            return Err(Error::Parse {
                row: row_of(omegas.len()),
                message: "a d-parameter table needs at least two nodes".into(),
            });
        }
        for (i, &w) in omegas.iter().enumerate() {
            if !(w > 0.0) {
                return Err(Error::Parse {
                    row: row_of(i),
                    message: format!("frequency {w} eV is not positive"),
                });
            }
            if i > 0 && !(w > omegas[i - 1]) {
                return Err(Error::Parse {
                    row: row_of(i),
                    message: format!("frequencies must increase strictly ({} then {w})", omegas[i - 1]),
                });
            }
            if d_perp[i].im < 0.0 {
                return Err(Error::Parse {
                    row: row_of(i),
                    message: format!("Im d_perp = {} is negative", d_perp[i].im),
                });
            }
        }
        Ok(())
    }

    /// Node frequencies (eV).
    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn d_perp_nodes(&self) -> &[Complex64] {
        &self.d_perp
    }

    pub fn d_par_nodes(&self) -> &[Complex64] {
        &self.d_par
    }

    /// True when d_par vanishes at every node.
    pub fn is_charge_neutral(&self) -> bool {
        self.d_par.iter().all(|d| *d == Complex64::new(0.0, 0.0))
    }

    /// Frequency interval covered by the table.
    pub fn domain(&self) -> (f64, f64) {
        (self.omegas[0], *self.omegas.last().unwrap())
    }

    fn interpolate(&self, values: &[Complex64], omega: f64, quantity: &'static str) -> Result<Complex64> {
        let (min, max) = self.domain();
        if !(omega >= min && omega <= max) {
            return Err(Error::OutOfRange {
                quantity,
                omega,
                min,
                max,
            });
        }
        match self.omegas.binary_search_by(|w| w.total_cmp(&omega)) {
            Ok(i) => Ok(values[i]),
            Err(i) => {
                let (w0, w1) = (self.omegas[i - 1], self.omegas[i]);
                let t = (omega - w0) / (w1 - w0);
                Ok(values[i - 1] * (1.0 - t) + values[i] * t)
            }
        }
    }

    pub fn d_perp(&self, omega: f64) -> Result<Complex64> {
        self.interpolate(&self.d_perp, omega, "d_perp")
    }

    pub fn d_par(&self, omega: f64) -> Result<Complex64> {
        self.interpolate(&self.d_par, omega, "d_par")
    }

    /// Writes the table in the CSV format read by [`load_dparam_table`].
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let rows: Vec<Vec<f64>> = (0..self.omegas.len())
            .map(|i| {
                vec![
                    self.omegas[i],
                    self.d_perp[i].re,
                    self.d_perp[i].im,
                    self.d_par[i].re,
                    self.d_par[i].im,
                ]
            })
            .collect();
        csvio::write_numeric(w, DPARAM_HEADER, &rows)
    }
}

/// Parses a d-parameter CSV. Error rows are 1-based file line numbers.
pub fn load_dparam_table<R: BufRead>(reader: R) -> Result<DParamTable> {
    let rows = csvio::read_numeric(reader, DPARAM_HEADER)?;
    let omegas: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let d_perp: Vec<Complex64> = rows.iter().map(|r| Complex64::new(r[1], r[2])).collect();
    let d_par: Vec<Complex64> = rows.iter().map(|r| Complex64::new(r[3], r[4])).collect();
    DParamTable::validate(&omegas, &d_perp, |i| i + 2)?;
    Ok(DParamTable { omegas, d_perp, d_par })
}

/// Single-pole model d_perp(omega) = d_inf + amplitude / (pole^2 - omega^2 - i omega width).
///
/// d_par is taken as zero (charge-neutral surface).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateDPerp {
    /// High-frequency offset (nm).
    pub d_inf: Complex64,
    /// Pole strength (eV^2 nm).
    pub amplitude: Complex64,
    /// Pole position (eV).
    pub pole_omega: f64,
    /// Pole width (eV).
    pub pole_width: f64,
}

impl SurrogateDPerp {
    /// Validates the parameters. Im d_perp >= 0 for all omega > 0 is ensured
    /// by requiring Im d_inf >= 0, a real non-negative amplitude and a
    /// positive width.
    pub fn new(d_inf: Complex64, amplitude: Complex64, pole_omega: f64, pole_width: f64) -> Result<Self> {
        if !(pole_width > 0.0) {
            return Err(Error::Config(format!(
                "surrogate pole width must be positive, got {pole_width}"
            )));
        }
        if !(pole_omega > 0.0) {
            return Err(Error::Config(format!(
                "surrogate pole energy must be positive, got {pole_omega}"
            )));
        }
        if d_inf.im < 0.0 {
            return Err(Error::Config("surrogate Im d_inf must be non-negative".into()));
        }
        if amplitude.im != 0.0 || amplitude.re < 0.0 {
            return Err(Error::Config(
                "surrogate amplitude must be real and non-negative to keep Im d_perp >= 0".into(),
            ));
        }
        Ok(Self {
            d_inf,
            amplitude,
            pole_omega,
            pole_width,
        })
    }

    pub fn d_perp(&self, omega: f64) -> Complex64 {
        let denom = Complex64::new(
            self.pole_omega * self.pole_omega - omega * omega,
            -omega * self.pole_width,
        );
        self.d_inf + self.amplitude / denom
    }

    /// Returns a copy with `d_inf` and `amplitude` multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            d_inf: self.d_inf * s,
            amplitude: self.amplitude * s,
            ..*self
        }
    }
}

impl Default for SurrogateDPerp {
    /// Spill-out-like response: Re d_perp > 0 below a pole at 4.7 eV,
    /// about 0.12 nm at 2.3 eV and 0.28 nm near the surface plasmon.
    fn default() -> Self {
        Self {
            d_inf: Complex64::new(0.0, 0.0),
            amplitude: Complex64::new(2.0, 0.0),
            pole_omega: 4.7,
            pole_width: 0.8,
        }
    }
}

/// Where the surface-response d-parameters come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DParamSource {
    /// Local response: d_perp = d_par = 0.
    None,
    Table(Arc<DParamTable>),
    Surrogate(SurrogateDPerp),
}

impl DParamSource {
    pub fn d_perp(&self, omega: f64) -> Result<Complex64> {
        match self {
            DParamSource::None => Ok(Complex64::new(0.0, 0.0)),
            DParamSource::Table(t) => t.d_perp(omega),
            DParamSource::Surrogate(s) => Ok(s.d_perp(omega)),
        }
    }

    pub fn d_par(&self, omega: f64) -> Result<Complex64> {
        match self {
            DParamSource::Table(t) => t.d_par(omega),
            _ => Ok(Complex64::new(0.0, 0.0)),
        }
    }

    /// Frequency interval on which the source can be evaluated, if bounded.
    pub fn domain(&self) -> Option<(f64, f64)> {
        match self {
            DParamSource::Table(t) => Some(t.domain()),
            _ => None,
        }
    }

    pub fn is_local(&self) -> bool {
        matches!(self, DParamSource::None)
    }
}

/// Convenience for the eval of d_perp on a table or surrogate.
pub fn eval_dperp(source: &DParamSource, omega: f64) -> Result<Complex64> {
    source.d_perp(omega)
}
