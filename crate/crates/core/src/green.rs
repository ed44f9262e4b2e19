//! Imaginary part of the zz Green's function component between emitters at a
//! common height above the interface.
//!
//! The direct (homogeneous-medium) part uses its closed form. The reflected
//! part is a Sommerfeld integral over the in-plane wavenumber `ks`, split at
//! `ks = k` (with `k = sqrt(eps_d) omega / hbar c`) into
//!
//! * a propagating piece, written in `q = kz_d` on `[0, k]`, which removes the
//!   inverse square-root endpoint singularity of `1 / kz_d`, and
//! * an evanescent piece, written in `kappa = -i kz_d` on `[0, kappa_max]`,
//!   whose integrand carries the decay `exp(-2 kappa z0)`.
//!
//! With `rho` the in-plane separation and `z+ = 2 z0`,
//!
//! ```text
//! Im G_ref = 1/(4 pi k^2) [ int_0^k dq (k^2 - q^2) J0(sqrt(k^2 - q^2) rho) Re(r e^{i q z+})
//!                         + int_0^kmax dkappa (k^2 + kappa^2) J0(sqrt(k^2 + kappa^2) rho) Im(r) e^{-kappa z+} ]
//! ```

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::interface::{InterfaceAt, InterfaceModel, Substrate};
use crate::quadrature::{integrate, Quad, Tolerance};
use crate::wavenumber;

/// Emitters at a common height `z0` above the interface.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    z0: f64,
    xy: Vec<[f64; 2]>,
}

impl Geometry {
    /// Emitters at the given in-plane positions (nm). Coincident emitters are
    /// rejected.
    pub fn new(z0: f64, xy: Vec<[f64; 2]>) -> Result<Self> {
        if !(z0 > 0.0) || !z0.is_finite() {
            return Err(Error::Config(format!("emitter height z0 must be positive, got {z0}")));
        }
        if xy.is_empty() {
            return Err(Error::Config("at least one emitter is required".into()));
        }
        for (i, p) in xy.iter().enumerate() {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::Config(format!("emitter {i} has a non-finite position")));
            }
            for (j, q) in xy.iter().enumerate().take(i) {
                if p == q {
                    return Err(Error::Config(format!("emitters {j} and {i} coincide")));
                }
            }
        }
        Ok(Self { z0, xy })
    }

    /// `n` emitters on the x axis with spacing `r`.
    pub fn linear(n: usize, r: f64, z0: f64) -> Result<Self> {
        if n > 1 && !(r > 0.0) {
            return Err(Error::Config(format!("emitter separation must be positive, got {r}")));
        }
        Self::new(z0, (0..n).map(|i| [i as f64 * r, 0.0]).collect())
    }

    pub fn z0(&self) -> f64 {
        self.z0
    }

    /// z_i + z_j for every pair.
    pub fn z_plus(&self) -> f64 {
        2.0 * self.z0
    }

    pub fn len(&self) -> usize {
        self.xy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xy.is_empty()
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.xy
    }

    /// In-plane distance between emitters `i` and `j`.
    pub fn r_par(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.xy[i], self.xy[j]);
        (a[0] - b[0]).hypot(a[1] - b[1])
    }
}

/// Accuracy controls for the Sommerfeld quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    /// Absolute tolerance on Im G (nm^-1).
    pub abs_tol: f64,
    /// Target size of the neglected exponential tail relative to its
    /// integrand scale; sets the cut-off `-ln(tail_cut_tol) / z+`.
    pub tail_cut_tol: f64,
    pub max_panels: usize,
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.tail_cut_tol > 0.0 && self.tail_cut_tol < 1.0) {
            return Err(Error::Config(
                "rel_tol, abs_tol and tail_cut_tol must be positive (tail_cut_tol < 1)".into(),
            ));
        }
        if self.max_panels == 0 {
            return Err(Error::Config("max_panels must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-14,
            tail_cut_tol: 1e-16,
            max_panels: 2000,
        }
    }
}

/// A Green's-function value with its estimated absolute error (nm^-1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenValue {
    pub value: f64,
    pub error: f64,
}

/// Im G_zz of the homogeneous dielectric between two points at equal height
/// separated by `r_par` (nm). At coincidence this is `sqrt(eps_d) k0 / (6 pi)`.
pub fn im_gzz_free(omega: f64, r_par: f64, eps_d: f64) -> f64 {
    let k = eps_d.sqrt() * wavenumber(omega);
    let x = k * r_par;
    if x < 0.1 {
        let x2 = x * x;
        let series = 2.0 / 3.0 - x2 * (2.0 / 15.0 - x2 * (1.0 / 140.0 - x2 * (1.0 / 5670.0 - x2 / 399_168.0)));
        k / (4.0 * PI) * series
    } else {
        let (s, c) = x.sin_cos();
        (s * (1.0 - 1.0 / (x * x)) + c / x) / (4.0 * PI * r_par)
    }
}

/// Im of the direct term of the Sommerfeld integral, evaluated by quadrature
/// rather than in closed form. Serves as a check of the spectral
/// representation against [`im_gzz_free`].
pub fn im_gzz_free_sommerfeld(omega: f64, r_par: f64, eps_d: f64, q: &QuadratureSpec) -> Result<GreenValue> {
    let k = eps_d.sqrt() * wavenumber(omega);
    let pref = 1.0 / (4.0 * PI * k * k);
    let quad = integrate(
        |qz| {
            let ks2 = k * k - qz * qz;
            ks2 * libm::j0(ks2.max(0.0).sqrt() * r_par)
        },
        &[0.0, k],
        Tolerance {
            rel: q.rel_tol,
            abs: q.abs_tol / pref,
            max_panels: q.max_panels,
        },
    )?;
    Ok(GreenValue {
        value: pref * quad.value,
        error: pref * quad.error,
    })
}

/// How the evanescent Sommerfeld range is split into initial panels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PanelStrategy {
    /// Breakpoints only at the resonances of r^p; refinement is adaptive.
    Adaptive,
    /// Additional breakpoints at every zero of J0(ks rho).
    BesselZeros,
}

/// Im G_zz(r_i, r_j, omega) above the interface of `m`.
pub fn im_gzz(m: &InterfaceModel, g: &Geometry, q: &QuadratureSpec, omega: f64, i: usize, j: usize) -> Result<f64> {
    Ok(im_gzz_detailed(m, g, q, omega, i, j, PanelStrategy::Adaptive)?.value)
}

/// As [`im_gzz`] with an explicit panel strategy and the error estimate.
pub fn im_gzz_detailed(
    m: &InterfaceModel,
    g: &Geometry,
    q: &QuadratureSpec,
    omega: f64,
    i: usize,
    j: usize,
    strategy: PanelStrategy,
) -> Result<GreenValue> {
    if i >= g.len() || j >= g.len() {
        return Err(Error::Domain(format!(
            "emitter index out of range ({i}, {j}) for N = {}",
            g.len()
        )));
    }
    q.validate()?;
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("omega must be positive, got {omega}")));
    }
    let rho = g.r_par(i, j);
    let free = im_gzz_free(omega, rho, m.eps_d());
    if m.is_free_space() {
        return Ok(GreenValue {
            value: free,
            error: 0.0,
        });
    }
    let at = m.at(omega)?;
    let refl = reflected(&at, m, rho, g.z_plus(), q, strategy)?;
    Ok(GreenValue {
        value: free + refl.value,
        error: refl.error,
    })
}

/// Cut-off in ks beyond which the evanescent tail is dropped.
pub fn ks_cutoff(k: f64, z_plus: f64, tail_cut_tol: f64) -> f64 {
    (4.0 * k).max(-tail_cut_tol.ln() / z_plus)
}

fn reflected(
    at: &InterfaceAt,
    m: &InterfaceModel,
    rho: f64,
    z_plus: f64,
    q: &QuadratureSpec,
    strategy: PanelStrategy,
) -> Result<GreenValue> {
    let k = at.eps_d.re.sqrt() * at.k0;
    let k2 = k * k;
    let pref = 1.0 / (4.0 * PI * k2);
    // Each of the two pieces gets half of the absolute budget.
    let abs_int = 0.5 * q.abs_tol / pref;

    let propagating = integrate(
        |qz| {
            let ks2 = k2 - qz * qz;
            let ks = ks2.max(0.0).sqrt();
            let r = at.reflection(ks);
            let phase = num_complex::Complex64::from_polar(1.0, qz * z_plus);
            ks2 * libm::j0(ks * rho) * (r * phase).re
        },
        &[0.0, k],
        Tolerance {
            rel: q.rel_tol,
            abs: abs_int,
            max_panels: q.max_panels + oscillation_allowance(k, rho),
        },
    )?;

    let ks_max = ks_cutoff(k, z_plus, q.tail_cut_tol);
    let kappa_max = (ks_max * ks_max - k2).sqrt();
    let mut points = vec![0.0];
    let mut ks_marks = resonance_marks(at, m, k);
    if strategy == PanelStrategy::BesselZeros && rho > 0.0 {
        ks_marks.extend(bessel_j0_zeros_below(ks_max * rho).into_iter().map(|z| z / rho));
    }
    for ks in ks_marks {
        if ks > k && ks < ks_max {
            points.push((ks * ks - k2).sqrt());
        }
    }
    points.push(kappa_max);
    points.sort_by(f64::total_cmp);
    points.dedup();
    let budget = q.max_panels.max(points.len() + q.max_panels / 2) + oscillation_allowance(ks_max, rho);

    let integrand = |kappa: f64| {
        let ks2 = k2 + kappa * kappa;
        let ks = ks2.sqrt();
        ks2 * libm::j0(ks * rho) * at.reflection(ks).im * (-kappa * z_plus).exp()
    };
    let evanescent: Quad = integrate(
        integrand,
        &points,
        Tolerance {
            rel: q.rel_tol,
            abs: abs_int,
            max_panels: budget,
        },
    )?;

    // Bound on the dropped tail with |J0| <= 1 and |r| <= sup over a probe set.
    let r_sup = [ks_max, 2.0 * ks_max, 10.0 * ks_max]
        .iter()
        .map(|&ks| at.reflection(ks).norm())
        .fold(1.0, f64::max);
    let p = z_plus;
    let kk = kappa_max;
    let tail = (-p * kk).exp() * ((kk * kk + k2) / p + 2.0 * kk / (p * p) + 2.0 / (p * p * p)) * r_sup;

    Ok(GreenValue {
        value: pref * (propagating.value + evanescent.value),
        error: pref * (propagating.error + evanescent.error + tail),
    })
}

/// Extra panels granted on top of `max_panels`: two per half-period of
/// J0(ks rho) below `ks_max`, so that widely separated emitters do not
/// exhaust the budget on Bessel oscillations alone.
fn oscillation_allowance(ks_max: f64, rho: f64) -> usize {
    2 * (ks_max * rho / PI).ceil() as usize
}

/// In-plane wavenumbers where r^p is sharply structured: the retarded
/// surface plasmon pole of the local response and the quasistatic pole
/// shifted by d_perp.
fn resonance_marks(at: &InterfaceAt, m: &InterfaceModel, k: f64) -> Vec<f64> {
    let mut marks = Vec::new();
    if !matches!(m.substrate(), Substrate::Drude(_)) {
        return marks;
    }
    let (em, ed) = (at.eps_m, at.eps_d);
    if em.re < -ed.re {
        let spp = at.k0 * (em * ed / (em + ed)).sqrt();
        if spp.re.is_finite() && spp.re > k {
            marks.push(spp.re);
            let width = spp.im.abs();
            if width > 0.0 {
                marks.push(spp.re - 3.0 * width);
                marks.push(spp.re + 3.0 * width);
            }
        }
    }
    if at.d_perp.norm() > 0.0 {
        let pole = (em + ed) / ((em - ed) * at.d_perp);
        if pole.re.is_finite() && pole.re > k {
            marks.push(pole.re);
            let width = pole.im.abs();
            if width > 0.0 {
                marks.push(pole.re - 3.0 * width);
                marks.push(pole.re + 3.0 * width);
            }
        }
    }
    marks.retain(|x| x.is_finite() && *x > 0.0);
    marks
}

/// Positive zeros of J0 below `x_max`, ascending.
pub fn bessel_j0_zeros_below(x_max: f64) -> Vec<f64> {
    let mut zeros = Vec::new();
    let mut n = 1usize;
    loop {
        let z = bessel_j0_zero(n);
        if z >= x_max {
            break;
        }
        zeros.push(z);
        n += 1;
    }
    zeros
}

/// n-th positive zero of J0 (n >= 1): McMahon expansion refined by Newton.
pub fn bessel_j0_zero(n: usize) -> f64 {
    let beta = (n as f64 - 0.25) * PI;
    let b8 = 8.0 * beta;
    let mut x = beta + 1.0 / b8 - 124.0 / (3.0 * b8.powi(3)) + 120_928.0 / (15.0 * b8.powi(5));
    for _ in 0..8 {
        let step = libm::j0(x) / libm::j1(x);
        x += step;
        if step.abs() < 1e-15 * x {
            break;
        }
    }
    x
}
