//! Exact single-excitation dynamics of the emitter amplitudes.
//!
//! The amplitudes obey the Volterra integro-differential equation
//!
//! ```text
//! da/dt = -i omega_0 a(t) - int_0^t K(t - s) a(s) ds,   K(tau) = int J(omega) e^{-i omega tau} d omega
//! ```
//!
//! The kernel is the exact Fourier transform of the piecewise-linear
//! interpolant of the tabulated J (Filon-trapezoid weights), which reduces to
//! the trapezoid rule at tau = 0 and does not alias at long lags. The
//! stepper works in the frame rotating at omega_0 with a trapezoid
//! discretisation of the convolution.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::csvio;
use crate::error::{Error, Result};
use crate::spectral::{EmitterParams, SpectralTable};

/// Largest admissible `dt * omega_max`.
pub const DT_RESOLUTION: f64 = 0.1;

/// Allowed excess of |a| over one before the stepper reports instability.
pub const NORM_SLACK: f64 = 1e-6;

/// Amplitudes below this are too small for a meaningful decay rate.
pub const RATE_AMPLITUDE_FLOOR: f64 = 1e-8;

/// Memory kernel K(tau) on the uniform lag grid `tau_l = l dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryKernel {
    n: usize,
    dt: f64,
    /// Lag-major, row-major n x n blocks.
    k: Vec<Complex64>,
}

impl MemoryKernel {
    /// Samples `f(tau)` (a row-major n x n block per lag) on `n_lags` lags.
    pub fn from_fn(n: usize, dt: f64, n_lags: usize, f: impl Fn(f64) -> Vec<Complex64>) -> Result<Self> {
        if n == 0 || !(dt > 0.0) || n_lags == 0 {
            return Err(Error::Config("kernel needs n >= 1, dt > 0 and at least one lag".into()));
        }
        let mut k = Vec::with_capacity(n * n * n_lags);
        for l in 0..n_lags {
            let block = f(l as f64 * dt);
            if block.len() != n * n {
                return Err(Error::Config(format!(
                    "kernel block has {} entries, expected {}",
                    block.len(),
                    n * n
                )));
            }
            k.extend(block);
        }
        Ok(Self { n, dt, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_lags(&self) -> usize {
        self.k.len() / (self.n * self.n)
    }

    /// Longest lag covered.
    pub fn t_max(&self) -> f64 {
        (self.n_lags() - 1) as f64 * self.dt
    }

    pub fn taus(&self) -> Vec<f64> {
        (0..self.n_lags()).map(|l| l as f64 * self.dt).collect()
    }

    /// K(tau_l) as a row-major n x n block.
    pub fn lag(&self, l: usize) -> &[Complex64] {
        let nn = self.n * self.n;
        &self.k[l * nn..(l + 1) * nn]
    }

    /// K_ab over all lags.
    pub fn series(&self, a: usize, b: usize) -> Vec<Complex64> {
        let nn = self.n * self.n;
        self.k.iter().skip(a * self.n + b).step_by(nn).copied().collect()
    }
}

fn steps_for(t_max: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(t_max > 0.0) || !dt.is_finite() || !t_max.is_finite() {
        return Err(Error::Config(format!(
            "need T > 0 and dt > 0, got T = {t_max}, dt = {dt}"
        )));
    }
    let steps = (t_max / dt - 1e-9).ceil().max(1.0);
    if steps > 5e7 {
        return Err(Error::Config(format!("T / dt = {steps} steps is too many")));
    }
    Ok(steps as usize)
}

/// Filon weights (w1, w2) of the left and right node for one interval with
/// phase increment theta = tau h: int_0^1 ((1 - s), s) e^{-i theta s} ds.
#[inline]
fn filon_weights(theta: f64, e: Complex64) -> (Complex64, Complex64) {
    if theta.abs() < 0.1 {
        // Power series in c = -i theta.
        let c = Complex64::new(0.0, -theta);
        let mut term = Complex64::new(1.0, 0.0);
        let mut w0 = Complex64::new(0.0, 0.0);
        let mut w2 = Complex64::new(0.0, 0.0);
        for k in 0..14 {
            let kf = k as f64;
            w0 += term / (kf + 1.0);
            w2 += term / (kf + 2.0);
            term = term * c / (kf + 1.0);
        }
        (w0 - w2, w2)
    } else {
        let inv = 1.0 / theta;
        let em1 = e - 1.0;
        let i = Complex64::i();
        let w0 = i * em1 * inv;
        let w2 = i * e * inv + em1 * (inv * inv);
        (w0 - w2, w2)
    }
}

/// Distinct matrix elements (a <= b) of the table and their series.
fn element_series(table: &SpectralTable) -> (Vec<(usize, usize)>, Vec<Vec<f64>>) {
    let n = table.n();
    let mut pairs = Vec::new();
    let mut series = Vec::new();
    for a in 0..n {
        for b in a..n {
            pairs.push((a, b));
            series.push(table.j_series(a, b));
        }
    }
    (pairs, series)
}

/// Accumulates K for every element at lag `tau` given node phases
/// `z_k = e^{-i omega_k tau}`.
fn kernel_from_phases(grid: &[f64], series: &[Vec<f64>], tau: f64, z: &[Complex64], out: &mut [Complex64]) {
    out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
    for k in 0..grid.len() - 1 {
        let h = grid[k + 1] - grid[k];
        let theta = tau * h;
        let e = z[k + 1] * z[k].conj();
        let (w1, w2) = filon_weights(theta, e);
        let left = z[k] * w1 * h;
        let right = z[k] * w2 * h;
        for (o, f) in out.iter_mut().zip(series) {
            *o += left * f[k] + right * f[k + 1];
        }
    }
}

fn assemble_block(n: usize, pairs: &[(usize, usize)], values: &[Complex64], block: &mut [Complex64]) {
    for (p, &(a, b)) in pairs.iter().enumerate() {
        block[a * n + b] = values[p];
        block[b * n + a] = values[p];
    }
}

/// K(tau) for one lag, by the same Filon rule as [`build_kernel`].
pub fn kernel_at(table: &SpectralTable, tau: f64) -> Vec<Complex64> {
    let (pairs, series) = element_series(table);
    let z: Vec<Complex64> = table
        .grid()
        .iter()
        .map(|&w| Complex64::from_polar(1.0, -w * tau))
        .collect();
    let mut vals = vec![Complex64::new(0.0, 0.0); pairs.len()];
    kernel_from_phases(table.grid(), &series, tau, &z, &mut vals);
    let n = table.n();
    let mut block = vec![Complex64::new(0.0, 0.0); n * n];
    assemble_block(n, &pairs, &vals, &mut block);
    block
}

/// Kernel on lags `0, dt, ..., ceil(T / dt) dt`.
///
/// Requires `dt <= 0.1 / omega_max` so the fastest bath frequency is
/// resolved.
pub fn build_kernel(table: &SpectralTable, t_max: f64, dt: f64) -> Result<MemoryKernel> {
    let steps = steps_for(t_max, dt)?;
    let limit = DT_RESOLUTION / table.omega_max();
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "dt = {dt} does not resolve omega_max = {} eV; need dt <= {limit}",
            table.omega_max()
        )));
    }
    let n = table.n();
    let nn = n * n;
    let n_lags = steps + 1;
    let (pairs, series) = element_series(table);
    let grid = table.grid();
    let step_phase: Vec<Complex64> = grid.iter().map(|&w| Complex64::from_polar(1.0, -w * dt)).collect();

    const CHUNK: usize = 256;
    let mut k = vec![Complex64::new(0.0, 0.0); n_lags * nn];
    k.par_chunks_mut(CHUNK * nn).enumerate().for_each(|(c, out)| {
        let l0 = c * CHUNK;
        let tau0 = l0 as f64 * dt;
        let mut z: Vec<Complex64> = grid.iter().map(|&w| Complex64::from_polar(1.0, -w * tau0)).collect();
        let mut vals = vec![Complex64::new(0.0, 0.0); pairs.len()];
        for (i, block) in out.chunks_mut(nn).enumerate() {
            let tau = (l0 + i) as f64 * dt;
            if i > 0 {
                for (zk, s) in z.iter_mut().zip(&step_phase) {
                    *zk *= s;
                }
            }
            kernel_from_phases(grid, &series, tau, &z, &mut vals);
            assemble_block(n, &pairs, &vals, block);
        }
    });
    Ok(MemoryKernel { n, dt, k })
}

/// Time-stepping scheme for [`solve_volterra_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stepper {
    /// Trapezoid rule with the new-time convolution term solved exactly
    /// (an N x N linear solve per step).
    #[default]
    ImplicitTrapezoid,
    /// Explicit Euler predictor and one trapezoidal corrector pass.
    PredictorCorrector,
}

/// Sampled amplitudes a_i(t_n), t_n = n dt.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeTrajectory {
    n: usize,
    dt: f64,
    omega_0: f64,
    /// Step-major, lab frame.
    a: Vec<Complex64>,
}

impl AmplitudeTrajectory {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn omega_0(&self) -> f64 {
        self.omega_0
    }

    pub fn len(&self) -> usize {
        self.a.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|s| self.time(s)).collect()
    }

    /// Amplitudes at `step`.
    pub fn amplitudes(&self, step: usize) -> &[Complex64] {
        &self.a[step * self.n..(step + 1) * self.n]
    }

    /// a_i over all steps.
    pub fn component(&self, i: usize) -> Vec<Complex64> {
        self.a.iter().skip(i).step_by(self.n).copied().collect()
    }

    /// |a_i|^2 over all steps.
    pub fn population(&self, i: usize) -> Vec<f64> {
        self.a.iter().skip(i).step_by(self.n).map(|z| z.norm_sqr()).collect()
    }

    /// |a(t)|_2 over all steps.
    pub fn norms(&self) -> Vec<f64> {
        self.a
            .chunks(self.n)
            .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .collect()
    }

    /// Writes `t_hbar_per_ev,re_a1,im_a1[,re_a2,im_a2],pop1[,pop2],gamma1_ev`
    /// (columns continue the same pattern for N > 2). The rate column is
    /// `NaN` where the decay rate is undefined.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let header = trajectory_header(self.n);
        let rate = decay_rate(self, 0)?;
        let rows: Vec<Vec<f64>> = (0..self.len())
            .map(|s| {
                let a = self.amplitudes(s);
                let mut row = vec![self.time(s)];
                for z in a {
                    row.push(z.re);
                    row.push(z.im);
                }
                for z in a {
                    row.push(z.norm_sqr());
                }
                row.push(rate.rates.get(s).copied().unwrap_or(f64::NAN));
                row
            })
            .collect();
        csvio::write_numeric(w, &header, &rows)
    }
}

/// Trajectory CSV header for `n` emitters.
pub fn trajectory_header(n: usize) -> String {
    let mut cols = vec!["t_hbar_per_ev".to_string()];
    for i in 1..=n {
        cols.push(format!("re_a{i}"));
        cols.push(format!("im_a{i}"));
    }
    for i in 1..=n {
        cols.push(format!("pop{i}"));
    }
    cols.push("gamma1_ev".into());
    cols.join(",")
}

pub const TRAJECTORY_HEADER_N1: &str = "t_hbar_per_ev,re_a1,im_a1,pop1,gamma1_ev";
pub const TRAJECTORY_HEADER_N2: &str = "t_hbar_per_ev,re_a1,im_a1,re_a2,im_a2,pop1,pop2,gamma1_ev";

/// Solves the Volterra equation on `[0, T]` with the default stepper.
pub fn solve_volterra(
    kernel: &MemoryKernel,
    e: &EmitterParams,
    a0: &[Complex64],
    t_max: f64,
    dt: f64,
) -> Result<AmplitudeTrajectory> {
    solve_volterra_with(kernel, e, a0, t_max, dt, Stepper::default())
}

/// Complex dot product of a reversed kernel slice with amplitudes, in split
/// real/imaginary storage with four independent accumulators.
#[inline]
fn dot_split(kr: &[f64], ki: &[f64], br: &[f64], bi: &[f64]) -> Complex64 {
    let len = kr.len();
    debug_assert!(ki.len() == len && br.len() == len && bi.len() == len);
    let mut acc = [0.0f64; 8];
    let chunks = len / 4;
    for c in 0..chunks {
        let o = 4 * c;
        for u in 0..4 {
            let (xr, xi, yr, yi) = (kr[o + u], ki[o + u], br[o + u], bi[o + u]);
            acc[u] += xr * yr - xi * yi;
            acc[4 + u] += xr * yi + xi * yr;
        }
    }
    let mut re = acc[0] + acc[1] + acc[2] + acc[3];
    let mut im = acc[4] + acc[5] + acc[6] + acc[7];
    for o in 4 * chunks..len {
        re += kr[o] * br[o] - ki[o] * bi[o];
        im += kr[o] * bi[o] + ki[o] * br[o];
    }
    Complex64::new(re, im)
}

/// Solves `M x = rhs` for a small dense complex matrix by Gaussian
/// elimination with partial pivoting.
fn solve_small(n: usize, mut m: Vec<Complex64>, mut rhs: Vec<Complex64>) -> Result<Vec<Complex64>> {
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| m[x * n + col].norm().total_cmp(&m[y * n + col].norm()))
            .unwrap();
        if m[piv * n + col].norm() == 0.0 {
            return Err(Error::Config("singular implicit-step matrix".into()));
        }
        if piv != col {
            for c in 0..n {
                m.swap(piv * n + c, col * n + c);
            }
            rhs.swap(piv, col);
        }
        let d = m[col * n + col];
        for r in col + 1..n {
            let f = m[r * n + col] / d;
            for c in col..n {
                let v = m[col * n + c];
                m[r * n + c] -= f * v;
            }
            let v = rhs[col];
            rhs[r] -= f * v;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for r in (0..n).rev() {
        let mut s = rhs[r];
        for c in r + 1..n {
            s -= m[r * n + c] * x[c];
        }
        x[r] = s / m[r * n + r];
    }
    Ok(x)
}

/// Solves the Volterra equation on `[0, T]` with step `dt` from `a0`.
pub fn solve_volterra_with(
    kernel: &MemoryKernel,
    e: &EmitterParams,
    a0: &[Complex64],
    t_max: f64,
    dt: f64,
    stepper: Stepper,
) -> Result<AmplitudeTrajectory> {
    let n = kernel.n();
    if a0.len() != n {
        return Err(Error::Config(format!(
            "initial state has {} amplitudes, kernel has N = {n}",
            a0.len()
        )));
    }
    let norm0: f64 = a0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(norm0 <= 1.0 + 1e-12) {
        return Err(Error::Config(format!("initial state norm {norm0} exceeds one")));
    }
    if (kernel.dt() - dt).abs() > 1e-12 * dt {
        return Err(Error::Config(format!(
            "kernel step {} differs from dt = {dt}",
            kernel.dt()
        )));
    }
    let steps = steps_for(t_max, dt)?;
    if kernel.n_lags() < steps + 1 {
        return Err(Error::Config(format!(
            "kernel covers {} lags, {} needed for T = {t_max}",
            kernel.n_lags(),
            steps + 1
        )));
    }
    let h = dt;
    let w0 = e.omega_0;
    let nn = n * n;
    let len = steps + 1;

    // Rotating-frame kernel, stored reversed per element: rev[L - l] = K~(l).
    let mut rev_re = vec![vec![0.0; len]; nn];
    let mut rev_im = vec![vec![0.0; len]; nn];
    let mut k0 = vec![Complex64::new(0.0, 0.0); nn];
    for l in 0..len {
        let rot = Complex64::from_polar(1.0, w0 * l as f64 * h);
        for (p, &kv) in kernel.lag(l).iter().enumerate() {
            let v = kv * rot;
            rev_re[p][steps - l] = v.re;
            rev_im[p][steps - l] = v.im;
            if l == 0 {
                k0[p] = v;
            }
        }
    }

    // Rotating-frame amplitudes b, split storage per emitter.
    let mut b_re = vec![vec![0.0; len]; n];
    let mut b_im = vec![vec![0.0; len]; n];
    for i in 0..n {
        b_re[i][0] = a0[i].re;
        b_im[i][0] = a0[i].im;
    }
    let mut f = vec![Complex64::new(0.0, 0.0); n];
    // Implicit system matrix I + h^2 K~(0) / 4.
    let mut implicit = vec![Complex64::new(0.0, 0.0); nn];
    for a in 0..n {
        for c in 0..n {
            implicit[a * n + c] = k0[a * n + c] * (h * h / 4.0);
        }
        implicit[a * n + a] += 1.0;
    }

    let limit = (1.0 + NORM_SLACK) * (1.0 + NORM_SLACK);
    let mut s = vec![Complex64::new(0.0, 0.0); n];
    let mut bn = vec![Complex64::new(0.0, 0.0); n];
    for step in 0..steps {
        let next = step + 1;
        // s = K~(next) b_0 / 2 + sum_{m=1}^{step} K~(next - m) b_m
        for (a, sa) in s.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in 0..n {
                let p = a * n + c;
                let kr = &rev_re[p];
                let ki = &rev_im[p];
                let base = steps - next;
                let k_first = Complex64::new(kr[base], ki[base]);
                acc += 0.5 * k_first * Complex64::new(b_re[c][0], b_im[c][0]);
                if step > 0 {
                    acc += dot_split(
                        &kr[base + 1..base + 1 + step],
                        &ki[base + 1..base + 1 + step],
                        &b_re[c][1..=step],
                        &b_im[c][1..=step],
                    );
                }
            }
            *sa = acc;
        }
        for i in 0..n {
            bn[i] = Complex64::new(b_re[i][step], b_im[i][step]);
        }
        let conv_new = |b: &[Complex64], a: usize| -> Complex64 {
            let mut v = Complex64::new(0.0, 0.0);
            for c in 0..n {
                v += k0[a * n + c] * b[c];
            }
            v
        };
        let b_next: Vec<Complex64> = match stepper {
            Stepper::ImplicitTrapezoid => {
                let rhs: Vec<Complex64> = (0..n).map(|i| bn[i] + 0.5 * h * (f[i] - h * s[i])).collect();
                if n == 1 {
                    vec![rhs[0] / implicit[0]]
                } else {
                    solve_small(n, implicit.clone(), rhs)?
                }
            }
            Stepper::PredictorCorrector => {
                let pred: Vec<Complex64> = (0..n).map(|i| bn[i] + h * f[i]).collect();
                let f_pred: Vec<Complex64> = (0..n).map(|i| -h * (s[i] + 0.5 * conv_new(&pred, i))).collect();
                (0..n).map(|i| bn[i] + 0.5 * h * (f[i] + f_pred[i])).collect()
            }
        };
        for i in 0..n {
            f[i] = -h * (s[i] + 0.5 * conv_new(&b_next, i));
            b_re[i][next] = b_next[i].re;
            b_im[i][next] = b_next[i].im;
        }
        let norm2: f64 = b_next.iter().map(|z| z.norm_sqr()).sum();
        if !(norm2 <= limit) {
            return Err(Error::Instability {
                t: next as f64 * h,
                norm: norm2.sqrt(),
            });
        }
    }

    let mut a = Vec::with_capacity(len * n);
    for step in 0..len {
        let rot = Complex64::from_polar(1.0, -w0 * step as f64 * h);
        for i in 0..n {
            if step == 0 {
                a.push(a0[i]);
            } else {
                a.push(Complex64::new(b_re[i][step], b_im[i][step]) * rot);
            }
        }
    }
    Ok(AmplitudeTrajectory {
        n,
        dt: h,
        omega_0: w0,
        a,
    })
}

/// Principal value int J_ab(omega) / (omega - omega_0) d omega on the grid,
/// by subtracting J_ab(omega_0) and integrating the remainder with the
/// trapezoid rule. A node exactly at omega_0 takes the centred-difference
/// slope of its neighbours as the value of the regularised integrand.
pub fn principal_value(table: &SpectralTable, series: &[f64], omega_0: f64) -> Result<f64> {
    let grid = table.grid();
    let (lo, hi) = (table.omega_min(), table.omega_max());
    if !(omega_0 > lo && omega_0 < hi) {
        return Err(Error::OutOfRange {
            quantity: "emitter energy in spectral grid",
            omega: omega_0,
            min: lo,
            max: hi,
        });
    }
    let j0 = interp(grid, series, omega_0);
    let g = |k: usize| -> f64 {
        let d = grid[k] - omega_0;
        if d == 0.0 {
            (series[k + 1] - series[k - 1]) / (grid[k + 1] - grid[k - 1])
        } else {
            (series[k] - j0) / d
        }
    };
    let regular = table.trapezoid(g);
    Ok(regular + j0 * ((hi - omega_0) / (omega_0 - lo)).ln())
}

fn interp(grid: &[f64], y: &[f64], x: f64) -> f64 {
    match grid.binary_search_by(|w| w.total_cmp(&x)) {
        Ok(k) => y[k],
        Err(k) => {
            let t = (x - grid[k - 1]) / (grid[k] - grid[k - 1]);
            (1.0 - t) * y[k - 1] + t * y[k]
        }
    }
}

/// Markov rates and frequencies of each channel: (gamma_bar, omega_bar).
pub fn markov_parameters(table: &SpectralTable, e: &EmitterParams) -> Result<Vec<(f64, f64)>> {
    let nch = table.n_channels();
    if nch == 0 {
        return Err(Error::Unsupported(format!(
            "Markov solution needs N <= 2, got N = {}",
            table.n()
        )));
    }
    let grid = table.grid();
    (0..nch)
        .map(|c| {
            let a = table.channel(c)?;
            let pv = principal_value(table, a, e.omega_0)?;
            Ok((2.0 * PI * interp(grid, a, e.omega_0), e.omega_0 + pv))
        })
        .collect()
}

/// Markovian amplitudes exp[-(gamma_bar / 2 + i omega_bar) t] a0, evaluated in
/// the eigen-channel basis.
pub fn markov_solution(table: &SpectralTable, e: &EmitterParams, a0: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
    if a0.len() != table.n() {
        return Err(Error::Config("initial state length differs from N".into()));
    }
    let params = markov_parameters(table, e)?;
    let evolve = |(g, w): (f64, f64)| (Complex64::new(-0.5 * g, -w) * t).exp();
    match table.n() {
        1 => Ok(vec![a0[0] * evolve(params[0])]),
        _ => {
            let plus = 0.5 * (a0[0] + a0[1]) * evolve(params[0]);
            let minus = 0.5 * (a0[0] - a0[1]) * evolve(params[1]);
            Ok(vec![plus + minus, plus - minus])
        }
    }
}

/// Instantaneous decay rate -Re[(da/dt) / a] of one emitter.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayRate {
    /// One value per trajectory step up to the truncation point (eV).
    pub rates: Vec<f64>,
    /// True when |a_i| fell below the floor and the series stops early.
    pub truncated: bool,
}

/// -Re[(da_i/dt) / a_i] by finite differences in the rotating frame (the
/// real part is frame-independent), centred in the interior and one-sided
/// at the ends.
pub fn decay_rate(traj: &AmplitudeTrajectory, i: usize) -> Result<DecayRate> {
    if i >= traj.n() {
        return Err(Error::Domain(format!("emitter {i} does not exist")));
    }
    let len = traj.len();
    let b: Vec<Complex64> = traj
        .component(i)
        .into_iter()
        .enumerate()
        .map(|(s, a)| a * Complex64::from_polar(1.0, traj.omega_0() * traj.time(s)))
        .collect();
    let end = b.iter().position(|z| z.norm() < RATE_AMPLITUDE_FLOOR).unwrap_or(len);
    let h = traj.dt();
    let mut rates = Vec::with_capacity(end);
    for s in 0..end {
        let db = if len < 2 {
            Complex64::new(0.0, 0.0)
        } else if s == 0 {
            (b[1] - b[0]) / h
        } else if s + 1 >= len {
            (b[s] - b[s - 1]) / h
        } else {
            (b[s + 1] - b[s - 1]) / (2.0 * h)
        };
        rates.push(-(db / b[s]).re);
    }
    Ok(DecayRate {
        rates,
        truncated: end < len,
    })
}

/// Least-squares slope of -ln |a_i|^2 over steps with `t0 <= t <= t1`: the
/// population decay rate of an exponential fit.
pub fn fit_population_rate(traj: &AmplitudeTrajectory, i: usize, t0: f64, t1: f64) -> Result<f64> {
    let pop = traj.population(i);
    let (mut sx, mut sy, mut sxx, mut sxy, mut m) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (s, p) in pop.iter().enumerate() {
        let t = traj.time(s);
        if t < t0 || t > t1 || *p <= 0.0 {
            continue;
        }
        let y = -p.ln();
        sx += t;
        sy += y;
        sxx += t * t;
        sxy += t * y;
        m += 1.0;
    }
    let den = m * sxx - sx * sx;
    if m < 2.0 || den <= 0.0 {
        return Err(Error::Domain("fit window holds fewer than two samples".into()));
    }
    Ok((m * sxy - sx * sy) / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_header_extends_fixed_layouts() {
        assert_eq!(trajectory_header(1), TRAJECTORY_HEADER_N1);
        assert_eq!(trajectory_header(2), TRAJECTORY_HEADER_N2);
        assert_eq!(trajectory_header(3).split(',').count(), 11);
    }

    #[test]
    fn filon_series_matches_closed_form_at_switch() {
        for theta in [0.099_999, 0.1, 0.100_001] {
            let e = Complex64::from_polar(1.0, -theta);
            let a = filon_weights(theta, e);
            // Reference by fine midpoint quadrature.
            let m = 200_000;
            let (mut w1, mut w2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for j in 0..m {
                let s = (j as f64 + 0.5) / m as f64;
                let p = Complex64::from_polar(1.0, -theta * s) / m as f64;
                w1 += p * (1.0 - s);
                w2 += p * s;
            }
            assert!((a.0 - w1).norm() < 1e-11 && (a.1 - w2).norm() < 1e-11, "{theta}");
        }
    }

    #[test]
    fn small_solve_matches_direct() {
        let m = vec![
            Complex64::new(1.0, 0.5),
            Complex64::new(0.2, 0.0),
            Complex64::new(0.0, -0.3),
            Complex64::new(2.0, 0.1),
        ];
        let x = [Complex64::new(0.3, -0.7), Complex64::new(-1.1, 0.4)];
        let rhs = vec![m[0] * x[0] + m[1] * x[1], m[2] * x[0] + m[3] * x[1]];
        let got = solve_small(2, m, rhs).unwrap();
        assert!((got[0] - x[0]).norm() < 1e-14 && (got[1] - x[1]).norm() < 1e-14);
    }

    #[test]
    fn dot_split_handles_remainders() {
        for len in 0..11 {
            let kr: Vec<f64> = (0..len).map(|i| i as f64 * 0.5).collect();
            let ki: Vec<f64> = (0..len).map(|i| 1.0 - i as f64).collect();
            let br: Vec<f64> = (0..len).map(|i| (i as f64).sin()).collect();
            let bi: Vec<f64> = (0..len).map(|i| (i as f64).cos()).collect();
            let naive: Complex64 = (0..len)
                .map(|i| Complex64::new(kr[i], ki[i]) * Complex64::new(br[i], bi[i]))
                .sum();
            assert!((dot_split(&kr, &ki, &br, &bi) - naive).norm() < 1e-12);
        }
    }
}
