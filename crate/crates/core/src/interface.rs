//! Planar dielectric/metal interface: wave-vector branches and p-polarised
//! scattering coefficients with first-order Feibelman corrections.
//!
//! The dielectric (permittivity `eps_d`, real) fills z > 0 and the metal
//! z < 0. Coefficients follow the H-field p-wave convention with
//! `e^{-i omega t}` time dependence.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::materials::{drude_epsilon, DParamSource, DrudeParams, SurrogateDPerp};
use crate::wavenumber;

/// What fills the lower half-space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Substrate {
    /// Drude metal.
    Drude(DrudeParams),
    /// The same dielectric as above: no interface, hence no reflection.
    Matched,
}

/// Dielectric half-space over a substrate with optional surface response.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceModel {
    eps_d: f64,
    substrate: Substrate,
    dsource: DParamSource,
}

impl InterfaceModel {
    pub fn new(eps_d: f64, substrate: Substrate, dsource: DParamSource) -> Result<Self> {
        if !(eps_d > 0.0) || !eps_d.is_finite() {
            return Err(Error::Config(format!("eps_d must be positive and finite, got {eps_d}")));
        }
        Ok(Self {
            eps_d,
            substrate,
            dsource,
        })
    }

    /// Drude metal in the local response approximation.
    pub fn lra(eps_d: f64, drude: DrudeParams) -> Result<Self> {
        Self::new(eps_d, Substrate::Drude(drude), DParamSource::None)
    }

    /// Drude metal with the default single-pole d_perp surrogate.
    pub fn with_surrogate(eps_d: f64, drude: DrudeParams, surrogate: SurrogateDPerp) -> Result<Self> {
        Self::new(eps_d, Substrate::Drude(drude), DParamSource::Surrogate(surrogate))
    }

    /// Homogeneous dielectric everywhere (the emitter sees free space).
    pub fn free_space(eps_d: f64) -> Result<Self> {
        Self::new(eps_d, Substrate::Matched, DParamSource::None)
    }

    pub fn eps_d(&self) -> f64 {
        self.eps_d
    }

    pub fn substrate(&self) -> &Substrate {
        &self.substrate
    }

    pub fn dsource(&self) -> &DParamSource {
        &self.dsource
    }

    /// True when no reflected field exists.
    pub fn is_free_space(&self) -> bool {
        matches!(self.substrate, Substrate::Matched)
    }

    /// Substrate permittivity at `omega`.
    pub fn eps_m(&self, omega: f64) -> Result<Complex64> {
        match &self.substrate {
            Substrate::Drude(p) => drude_epsilon(p, omega),
            Substrate::Matched => {
                if !(omega > 0.0) {
                    return Err(Error::Domain(format!("omega must be positive, got {omega}")));
                }
                Ok(Complex64::new(self.eps_d, 0.0))
            }
        }
    }

    /// Resolves all frequency-dependent material data once for `omega`.
    pub fn at(&self, omega: f64) -> Result<InterfaceAt> {
        let eps_m = self.eps_m(omega)?;
        let (d_perp, d_par) = match self.substrate {
            Substrate::Matched => (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
            Substrate::Drude(_) => (self.dsource.d_perp(omega)?, self.dsource.d_par(omega)?),
        };
        Ok(InterfaceAt {
            omega,
            k0: wavenumber(omega),
            eps_d: Complex64::new(self.eps_d, 0.0),
            eps_m,
            d_perp,
            d_par,
        })
    }
}

/// An [`InterfaceModel`] frozen at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceAt {
    pub omega: f64,
    /// Vacuum wavenumber (nm^-1).
    pub k0: f64,
    pub eps_d: Complex64,
    pub eps_m: Complex64,
    pub d_perp: Complex64,
    pub d_par: Complex64,
}

impl InterfaceAt {
    pub fn kz_d(&self, ks: f64) -> Complex64 {
        kz_from_k0(self.k0, ks, self.eps_d)
    }

    pub fn kz_m(&self, ks: f64) -> Complex64 {
        kz_from_k0(self.k0, ks, self.eps_m)
    }

    fn parts(&self, ks: f64) -> (Complex64, Complex64, Complex64) {
        let kzd = self.kz_d(ks);
        let kzm = self.kz_m(ks);
        let i = Complex64::i();
        let de = self.eps_m - self.eps_d;
        let perp = de * ks * ks * self.d_perp;
        let par = de * kzd * kzm * self.d_par;
        let num = self.eps_m * kzd - self.eps_d * kzm + i * (perp - par);
        let den = self.eps_m * kzd + self.eps_d * kzm - i * (perp + par);
        (num, den, kzm)
    }

    /// Reflection coefficient r^p at parallel wavenumber `ks`.
    pub fn reflection(&self, ks: f64) -> Complex64 {
        if self.eps_m == self.eps_d {
            // Both numerator terms vanish identically; avoid 0/0 at ks = k.
            return Complex64::new(0.0, 0.0);
        }
        let (num, den, _) = self.parts(ks);
        num / den
    }

    /// Transmission coefficient t^p = 2 eps_d kz_m / D, sharing the
    /// denominator D of [`reflection`](Self::reflection).
    ///
    /// This is the coefficient in the reciprocal (metal to dielectric)
    /// normalisation; the transmitted H amplitude of a wave incident from
    /// the dielectric is `eps_m kz_d / (eps_d kz_m)` times this value.
    pub fn transmission(&self, ks: f64) -> Complex64 {
        if self.eps_m == self.eps_d {
            return Complex64::new(1.0, 0.0);
        }
        let (_, den, kzm) = self.parts(ks);
        2.0 * self.eps_d * kzm / den
    }

    /// Classical p-polarised Fresnel reflection for the same media.
    pub fn fresnel_reflection(&self, ks: f64) -> Complex64 {
        fresnel_reflection_p(self.eps_d, self.eps_m, self.kz_d(ks), self.kz_m(ks))
    }

    /// Classical p-polarised Fresnel transmission for the same media.
    pub fn fresnel_transmission(&self, ks: f64) -> Complex64 {
        fresnel_transmission_p(self.eps_d, self.eps_m, self.kz_d(ks), self.kz_m(ks))
    }

    /// Relative residuals of the two surface boundary equations for given
    /// reflection `r` and transmission `t` (in the [`transmission`]
    /// normalisation).
    ///
    /// Equation one is tangential E with the d_perp jump, equation two is
    /// tangential H with the d_par surface current. Each residual is divided
    /// by the largest individual term of its equation.
    ///
    /// [`transmission`]: Self::transmission
    pub fn boundary_residuals(&self, ks: f64, r: Complex64, t: Complex64) -> [f64; 2] {
        let kzd = self.kz_d(ks);
        let kzm = self.kz_m(ks);
        let i = Complex64::i();
        // Transmitted H amplitude of the field ansatz.
        let th = t * self.eps_m * kzd / (self.eps_d * kzm);
        let one = Complex64::new(1.0, 0.0);
        let ks2 = ks * ks;

        let e1 = [
            kzd * r / self.eps_d,
            -kzd / self.eps_d,
            kzm * th / self.eps_m,
            -i * ks2 * self.d_perp / self.eps_d,
            -i * ks2 * self.d_perp * r / self.eps_d,
            i * ks2 * self.d_perp * th / self.eps_m,
        ];
        let e2 = [
            self.d_par * kzd * r,
            -self.d_par * kzd,
            self.d_par * kzm * th,
            -i * one,
            -i * r,
            i * th,
        ];
        [relative_sum(&e1), relative_sum(&e2)]
    }
}

fn relative_sum(terms: &[Complex64]) -> f64 {
    let sum: Complex64 = terms.iter().sum();
    let scale = terms.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        0.0
    } else {
        sum.norm() / scale
    }
}

/// Normal wavenumber sqrt(eps k0^2 - ks^2) on the decaying branch Im >= 0;
/// a positive real argument gives the positive root.
pub fn kz(omega: f64, ks: f64, eps: Complex64) -> Complex64 {
    kz_from_k0(wavenumber(omega), ks, eps)
}

#[inline]
fn kz_from_k0(k0: f64, ks: f64, eps: Complex64) -> Complex64 {
    let s = (eps * (k0 * k0) - ks * ks).sqrt();
    if s.im < 0.0 {
        -s
    } else {
        s
    }
}

/// Classical Fresnel p reflection (eps_m kz_d - eps_d kz_m) / (eps_m kz_d + eps_d kz_m).
pub fn fresnel_reflection_p(eps_d: Complex64, eps_m: Complex64, kzd: Complex64, kzm: Complex64) -> Complex64 {
    (eps_m * kzd - eps_d * kzm) / (eps_m * kzd + eps_d * kzm)
}

/// Classical Fresnel p transmission 2 eps_d kz_m / (eps_m kz_d + eps_d kz_m).
pub fn fresnel_transmission_p(eps_d: Complex64, eps_m: Complex64, kzd: Complex64, kzm: Complex64) -> Complex64 {
    2.0 * eps_d * kzm / (eps_m * kzd + eps_d * kzm)
}

/// r^p of `m` at (`omega`, `ks`).
pub fn reflection_p(m: &InterfaceModel, omega: f64, ks: f64) -> Result<Complex64> {
    check_ks(ks)?;
    Ok(m.at(omega)?.reflection(ks))
}

/// t^p of `m` at (`omega`, `ks`).
pub fn transmission_p(m: &InterfaceModel, omega: f64, ks: f64) -> Result<Complex64> {
    check_ks(ks)?;
    Ok(m.at(omega)?.transmission(ks))
}

/// Boundary-equation residuals of the computed (r^p, t^p) pair.
pub fn check_boundary_conditions(m: &InterfaceModel, omega: f64, ks: f64) -> Result<[f64; 2]> {
    check_ks(ks)?;
    let at = m.at(omega)?;
    Ok(at.boundary_residuals(ks, at.reflection(ks), at.transmission(ks)))
}

fn check_ks(ks: f64) -> Result<()> {
    if !(ks >= 0.0) {
        return Err(Error::Domain(format!("ks must be non-negative, got {ks}")));
    }
    Ok(())
}
