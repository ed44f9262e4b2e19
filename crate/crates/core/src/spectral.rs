//! Spectral-density matrix J_ij(omega) of N emitters on a frequency grid,
//! its eigen-channels, and the free-space reference rate.

use std::io::Write;

use rayon::prelude::*;

use crate::csvio;
use crate::error::{Error, Result};
use crate::green::{im_gzz, Geometry, QuadratureSpec};
use crate::interface::{InterfaceModel, Substrate};
use crate::materials::DrudeParams;
use crate::wavenumber;

/// Default coupling scale alpha = mu^2 / (pi hbar eps0) in eV nm^3.
///
/// Chosen so that a single emitter at z0 = 2.9 nm above the default metal
/// with the default d_perp surrogate supports a bound state, while the same
/// emitter in the local response approximation does not.
pub const DEFAULT_ALPHA: f64 = 1700.0;

/// Transition energy and coupling scale of identical emitters whose dipoles
/// point along the interface normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmitterParams {
    /// Transition energy (eV).
    pub omega_0: f64,
    /// Coupling scale (eV nm^3).
    pub coupling_alpha: f64,
}

impl EmitterParams {
    pub fn new(omega_0: f64, coupling_alpha: f64) -> Result<Self> {
        if !(omega_0 > 0.0) || !omega_0.is_finite() {
            return Err(Error::Config(format!("omega_0 must be positive, got {omega_0}")));
        }
        if !(coupling_alpha > 0.0) || !coupling_alpha.is_finite() {
            return Err(Error::Config(format!(
                "coupling alpha must be positive, got {coupling_alpha}"
            )));
        }
        Ok(Self {
            omega_0,
            coupling_alpha,
        })
    }
}

impl Default for EmitterParams {
    fn default() -> Self {
        Self {
            omega_0: 2.3,
            coupling_alpha: DEFAULT_ALPHA,
        }
    }
}

/// J_ij(omega) = alpha (omega / hbar c)^2 Im G_zz(r_i, r_j, omega), in eV.
pub fn spectral_element(
    m: &InterfaceModel,
    g: &Geometry,
    q: &QuadratureSpec,
    e: &EmitterParams,
    omega: f64,
    i: usize,
    j: usize,
) -> Result<f64> {
    let k0 = wavenumber(omega);
    Ok(e.coupling_alpha * k0 * k0 * im_gzz(m, g, q, omega, i, j)?)
}

/// Free-space spontaneous emission rate Gamma_0 = alpha (omega_0 / hbar c)^3 / 3 (eV).
pub fn gamma0_free(e: &EmitterParams) -> f64 {
    let k0 = wavenumber(e.omega_0);
    e.coupling_alpha * k0 * k0 * k0 / 3.0
}

/// Frequency grid: log-spaced background nodes plus a uniform block around
/// the surface plasmon resonance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub omega_min: f64,
    pub omega_max: f64,
    /// Log-spaced nodes across `[omega_min, omega_max]`.
    pub n_background: usize,
    /// Uniform nodes across `resonance_center +- resonance_halfwidth`.
    pub n_resonance: usize,
    pub resonance_center: f64,
    pub resonance_halfwidth: f64,
}

impl GridSpec {
    /// 1000 + 1000 nodes on [0.02, 10] eV, refined within +-0.5 eV of
    /// omega_p / sqrt(1 + eps_d).
    pub fn default_for(drude: &DrudeParams, eps_d: f64) -> Self {
        Self {
            omega_min: 0.02,
            omega_max: 10.0,
            n_background: 1000,
            n_resonance: 1000,
            resonance_center: drude.surface_plasmon_energy(eps_d),
            resonance_halfwidth: 0.5,
        }
    }

    /// Default grid for `m`'s substrate (the resonance block sits at the
    /// default metal's plasmon energy for a matched substrate).
    pub fn default_for_model(m: &InterfaceModel) -> Self {
        let drude = match m.substrate() {
            Substrate::Drude(p) => *p,
            Substrate::Matched => DrudeParams::default(),
        };
        Self::default_for(&drude, m.eps_d())
    }

    /// Same layout with every node count multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            n_background: self.n_background * factor,
            n_resonance: self.n_resonance * factor,
            ..*self
        }
    }

    /// Sorted, de-duplicated nodes, clipped to `domain` when given.
    pub fn nodes(&self, domain: Option<(f64, f64)>) -> Result<Vec<f64>> {
        let (mut lo, mut hi) = (self.omega_min, self.omega_max);
        if let Some((dlo, dhi)) = domain {
            lo = lo.max(dlo);
            hi = hi.min(dhi);
        }
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::Config(format!(
                "empty or non-positive frequency range [{lo}, {hi}] eV"
            )));
        }
        if self.n_background < 2 {
            return Err(Error::Config("the background grid needs at least two nodes".into()));
        }
        let mut nodes = Vec::with_capacity(self.n_background + self.n_resonance);
        let ratio = (hi / lo).ln();
        for i in 0..self.n_background {
            let t = i as f64 / (self.n_background - 1) as f64;
            nodes.push(lo * (ratio * t).exp());
        }
        *nodes.last_mut().unwrap() = hi;
        if self.n_resonance >= 2 && self.resonance_halfwidth > 0.0 {
            let a = (self.resonance_center - self.resonance_halfwidth).max(lo);
            let b = (self.resonance_center + self.resonance_halfwidth).min(hi);
            if b > a {
                for i in 0..self.n_resonance {
                    let t = i as f64 / (self.n_resonance - 1) as f64;
                    nodes.push(a + (b - a) * t);
                }
            }
        }
        nodes.sort_by(f64::total_cmp);
        // Drop nodes closer than a relative 1e-9; keeps trapezoid steps sane.
        let mut out: Vec<f64> = Vec::with_capacity(nodes.len());
        for w in nodes {
            match out.last() {
                Some(&prev) if w - prev <= 1e-9 * w => {}
                _ => out.push(w),
            }
        }
        Ok(out)
    }
}

/// Sampled spectral-density matrix and its eigen-channels.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTable {
    omega_0: f64,
    n: usize,
    grid: Vec<f64>,
    /// Node-major, row-major n x n blocks.
    j: Vec<f64>,
    channels: Option<Vec<Vec<f64>>>,
}

impl SpectralTable {
    /// Builds a table from samples. `j` holds one row-major `n x n` block per
    /// grid node. The matrices must be symmetric.
    pub fn from_samples(omega_0: f64, n: usize, grid: Vec<f64>, j: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("a spectral table needs at least one emitter".into()));
        }
        if grid.len() < 2 || j.len() != grid.len() * n * n {
            return Err(Error::Config("spectral samples do not match the grid".into()));
        }
        if !(grid[0] > 0.0) || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config(
                "spectral grid must be positive and strictly increasing".into(),
            ));
        }
        for (k, block) in j.chunks(n * n).enumerate() {
            for a in 0..n {
                for b in 0..a {
                    if block[a * n + b] != block[b * n + a] {
                        return Err(Error::Config(format!("J is not symmetric at node {k}")));
                    }
                }
            }
        }
        let channels = match n {
            1 => Some(vec![j.clone()]),
            2 => {
                let plus = j.chunks(4).map(|b| b[0] + b[1]).collect();
                let minus = j.chunks(4).map(|b| b[0] - b[1]).collect();
                Some(vec![plus, minus])
            }
            _ => None,
        };
        Ok(Self {
            omega_0,
            n,
            grid,
            j,
            channels,
        })
    }

    /// Single-emitter table from J_00 samples.
    pub fn single(omega_0: f64, grid: Vec<f64>, j00: Vec<f64>) -> Result<Self> {
        Self::from_samples(omega_0, 1, grid, j00)
    }

    pub fn omega_0(&self) -> f64 {
        self.omega_0
    }

    /// Number of emitters.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn omega_min(&self) -> f64 {
        self.grid[0]
    }

    pub fn omega_max(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// J_ab at grid node `k`.
    #[inline]
    pub fn j_at(&self, k: usize, a: usize, b: usize) -> f64 {
        self.j[k * self.n * self.n + a * self.n + b]
    }

    /// J_ab over the whole grid.
    pub fn j_series(&self, a: usize, b: usize) -> Vec<f64> {
        (0..self.grid.len()).map(|k| self.j_at(k, a, b)).collect()
    }

    /// Number of eigen-channels (N for N <= 2, none otherwise).
    pub fn n_channels(&self) -> usize {
        self.channels.as_ref().map_or(0, Vec::len)
    }

    /// Channel spectral density A_c over the grid. For N = 2, channel 0 is
    /// J_0 + J_1 and channel 1 is J_0 - J_1.
    pub fn channel(&self, c: usize) -> Result<&[f64]> {
        match &self.channels {
            Some(ch) if c < ch.len() => Ok(&ch[c]),
            Some(_) => Err(Error::Domain(format!("channel {c} does not exist"))),
            None => Err(Error::Unsupported(format!(
                "eigen-channels are only available for N <= 2 (N = {})",
                self.n
            ))),
        }
    }

    /// Amplitude pattern of channel `c` on the emitters: (1) for N = 1,
    /// (1, 1) and (1, -1) for N = 2 (before normalisation).
    pub fn channel_signs(&self, c: usize) -> Result<Vec<f64>> {
        match (self.n, c) {
            (1, 0) => Ok(vec![1.0]),
            (2, 0) => Ok(vec![1.0, 1.0]),
            (2, 1) => Ok(vec![1.0, -1.0]),
            _ => Err(Error::Unsupported(format!("no channel {c} for N = {}", self.n))),
        }
    }

    /// J_ab interpolated linearly at `omega` inside the grid.
    pub fn j_interp(&self, a: usize, b: usize, omega: f64) -> Result<f64> {
        let (lo, hi) = (self.omega_min(), self.omega_max());
        if !(omega >= lo && omega <= hi) {
            return Err(Error::OutOfRange {
                quantity: "spectral density",
                omega,
                min: lo,
                max: hi,
            });
        }
        Ok(match self.grid.binary_search_by(|w| w.total_cmp(&omega)) {
            Ok(k) => self.j_at(k, a, b),
            Err(k) => {
                let t = (omega - self.grid[k - 1]) / (self.grid[k] - self.grid[k - 1]);
                (1.0 - t) * self.j_at(k - 1, a, b) + t * self.j_at(k, a, b)
            }
        })
    }

    /// Trapezoid integral of `f(node index)` times the grid measure.
    pub fn trapezoid(&self, f: impl Fn(usize) -> f64) -> f64 {
        let mut s = 0.0;
        let mut prev = f(0);
        for k in 1..self.grid.len() {
            let cur = f(k);
            s += 0.5 * (self.grid[k] - self.grid[k - 1]) * (prev + cur);
            prev = cur;
        }
        s
    }

    /// Peak position (refined by a parabola through the three top nodes),
    /// peak value and full width at half maximum of J_00.
    pub fn peak(&self) -> PeakReport {
        let y = self.j_series(0, 0);
        let x = &self.grid;
        let mut imax = 0;
        for k in 1..y.len() {
            if y[k] > y[imax] {
                imax = k;
            }
        }
        let (mut xp, mut yp) = (x[imax], y[imax]);
        if imax > 0 && imax + 1 < y.len() {
            let (x0, x1, x2) = (x[imax - 1], x[imax], x[imax + 1]);
            let (y0, y1, y2) = (y[imax - 1], y[imax], y[imax + 1]);
            let d01 = (y1 - y0) / (x1 - x0);
            let d12 = (y2 - y1) / (x2 - x1);
            let curv = (d12 - d01) / (x2 - x0);
            if curv < 0.0 {
                // Vertex of the Newton-form parabola through the three nodes.
                let xv = (0.5 * (x0 + x1) - d01 / (2.0 * curv)).clamp(x0, x2);
                xp = xv;
                yp = (y0 + d01 * (xv - x0) + curv * (xv - x0) * (xv - x1)).max(y1);
            }
        }
        let half = 0.5 * yp;
        let left = (1..=imax).rev().find(|&k| y[k - 1] < half).map(|k| {
            let t = (half - y[k - 1]) / (y[k] - y[k - 1]);
            x[k - 1] + t * (x[k] - x[k - 1])
        });
        let right = (imax..y.len() - 1).find(|&k| y[k + 1] < half).map(|k| {
            let t = (y[k] - half) / (y[k] - y[k + 1]);
            x[k] + t * (x[k + 1] - x[k])
        });
        PeakReport {
            omega_peak: xp,
            j_peak: yp,
            fwhm: match (left, right) {
                (Some(l), Some(r)) => Some(r - l),
                _ => None,
            },
        }
    }

    /// Writes `omega_ev,J00_ev` (N = 1) or
    /// `omega_ev,J00_ev,J01_ev,Aplus_ev,Aminus_ev` (N = 2).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let rows: Vec<Vec<f64>> = match self.n {
            1 => (0..self.grid.len())
                .map(|k| vec![self.grid[k], self.j_at(k, 0, 0)])
                .collect(),
            2 => {
                let ch = self.channels.as_ref().unwrap();
                (0..self.grid.len())
                    .map(|k| vec![self.grid[k], self.j_at(k, 0, 0), self.j_at(k, 0, 1), ch[0][k], ch[1][k]])
                    .collect()
            }
            n => return Err(Error::Unsupported(format!("spectral CSV export needs N <= 2, got {n}"))),
        };
        let header = if self.n == 1 {
            SPECTRAL_HEADER_N1
        } else {
            SPECTRAL_HEADER_N2
        };
        csvio::write_numeric(w, header, &rows)
    }
}

pub const SPECTRAL_HEADER_N1: &str = "omega_ev,J00_ev";
pub const SPECTRAL_HEADER_N2: &str = "omega_ev,J00_ev,J01_ev,Aplus_ev,Aminus_ev";

/// Peak summary of J_00.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakReport {
    pub omega_peak: f64,
    pub j_peak: f64,
    /// `None` when the half-maximum level is not crossed on both sides
    /// within the grid.
    pub fwhm: Option<f64>,
}

/// Evaluates J on every node of `grid_spec` (clipped to the d-parameter
/// table domain, if any) in parallel.
pub fn build_spectral_table(
    m: &InterfaceModel,
    g: &Geometry,
    q: &QuadratureSpec,
    e: &EmitterParams,
    grid_spec: &GridSpec,
) -> Result<SpectralTable> {
    let grid = grid_spec.nodes(m.dsource().domain())?;
    let n = g.len();
    // Equal heights: Im G depends on the pair only through the in-plane
    // distance, so evaluate each distinct distance once.
    let mut distances: Vec<f64> = Vec::new();
    let mut pair_of = vec![0usize; n * n];
    let mut representative: Vec<(usize, usize)> = Vec::new();
    for a in 0..n {
        for b in 0..n {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let d = g.r_par(lo, hi);
            let idx = match distances.iter().position(|&x| x == d) {
                Some(idx) => idx,
                None => {
                    distances.push(d);
                    representative.push((lo, hi));
                    distances.len() - 1
                }
            };
            pair_of[a * n + b] = idx;
        }
    }
    let per_node: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&omega| {
            representative
                .iter()
                .map(|&(a, b)| spectral_element(m, g, q, e, omega, a, b))
                .collect::<Result<Vec<f64>>>()
                .map_err(|source| Error::Node {
                    omega,
                    source: Box::new(source),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut j = Vec::with_capacity(grid.len() * n * n);
    for vals in &per_node {
        for &p in &pair_of {
            j.push(vals[p]);
        }
    }
    SpectralTable::from_samples(e.omega_0, n, grid, j)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma0_scaling() {
        let e = EmitterParams::new(2.3, 10.0).unwrap();
        let g0 = gamma0_free(&e);
        assert!((gamma0_free(&EmitterParams::new(2.3, 20.0).unwrap()) - 2.0 * g0).abs() < 1e-15 * g0);
        assert!((gamma0_free(&EmitterParams::new(4.6, 10.0).unwrap()) - 8.0 * g0).abs() < 1e-14 * g0);
    }

    #[test]
    fn grid_is_sorted_clipped_and_refined() {
        let spec = GridSpec::default_for(&DrudeParams::default(), 1.0);
        let nodes = spec.nodes(None).unwrap();
        assert!(nodes.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(nodes[0], 0.02);
        assert_eq!(*nodes.last().unwrap(), 10.0);
        assert!(nodes.len() > 1900);
        let near = nodes.iter().filter(|w| (**w - 4.172).abs() < 0.5).count();
        assert!(near >= 1000);
        let clipped = spec.nodes(Some((1.0, 5.0))).unwrap();
        assert_eq!(clipped[0], 1.0);
        assert_eq!(*clipped.last().unwrap(), 5.0);
    }

    #[test]
    fn from_samples_builds_channels() {
        let grid = vec![1.0, 2.0, 3.0];
        let j = vec![3.0, 1.0, 1.0, 3.0, 2.0, -0.5, -0.5, 2.0, 1.0, 0.0, 0.0, 1.0];
        let t = SpectralTable::from_samples(2.0, 2, grid, j).unwrap();
        assert_eq!(t.channel(0).unwrap(), &[4.0, 1.5, 1.0]);
        assert_eq!(t.channel(1).unwrap(), &[2.0, 2.5, 1.0]);
        assert!(t.channel(2).is_err());
        let asym = vec![3.0, 1.0, 0.0, 3.0, 2.0, 0.0, 0.0, 2.0];
        assert!(SpectralTable::from_samples(2.0, 2, vec![1.0, 2.0], asym).is_err());
    }

    #[test]
    fn peak_of_a_sampled_lorentzian() {
        let grid: Vec<f64> = (0..4001).map(|k| 1.0 + k as f64 * 1e-3).collect();
        let j: Vec<f64> = grid.iter().map(|w| 0.01 / ((w - 3.0f64).powi(2) + 1e-4)).collect();
        let t = SpectralTable::single(2.0, grid, j).unwrap();
        let p = t.peak();
        assert!((p.omega_peak - 3.0).abs() < 1e-6);
        assert!((p.fwhm.unwrap() - 0.02).abs() < 1e-4);
    }
}
