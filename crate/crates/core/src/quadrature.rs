//! Globally adaptive Gauss-Kronrod (10, 21) quadrature on finite intervals.
//!
//! Integration starts from the panels delimited by caller-supplied
//! breakpoints and repeatedly bisects the panel with the largest error
//! estimate until the summed estimate meets the tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Kronrod abscissae on [0, 1]; odd indices are the Gauss nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

/// Weights of the 10-point Gauss rule at XGK[1], XGK[3], ..., XGK[9].
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Weights of the 21-point Kronrod rule.
#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Relative evaluation noise assumed for integrands built from special
/// functions and near-cancelling rational expressions.
pub const NOISE_FLOOR: f64 = 1e-12;

/// Outcome of a quadrature: value, absolute error estimate, panels used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

/// Tolerances and budget for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_panels: usize,
}

/// Applies the 21-point Kronrod rule on [a, b], returning the estimate and
/// the Kronrod minus Gauss difference as an error estimate.
pub fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let (value, err, _) = gk21_with_abs(f, a, b);
    (value, err)
}

/// [`gk21`] plus the Kronrod estimate of the integral of |f|.
fn gk21_with_abs<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * WGK[10];
    let mut resabs = fc.abs() * WGK[10];
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let (f1, f2) = (f(centre - dx), f(centre + dx));
        let s = f1 + f2;
        kronrod += WGK[j] * s;
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err, resabs * half.abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    resabs: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrates `f` over `[points[0], points[last]]`, seeding one panel between
/// each pair of consecutive breakpoints.
///
/// Converges when the summed error estimate is at most
/// `max(tol.abs, tol.rel * |value|, NOISE_FLOOR * int |f|)`; the last term
/// keeps strongly cancelling integrands from chasing evaluation noise. Exhausting `tol.max_panels` yields
/// [`Error::Convergence`] carrying the best estimate reached.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, points: &[f64], tol: Tolerance) -> Result<Quad> {
    if points.len() < 2 {
        return Err(Error::Domain("quadrature needs at least two breakpoints".into()));
    }
    if points.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::Domain("quadrature breakpoints must be non-decreasing".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut value = 0.0;
    let mut error = 0.0;
    let mut l1 = 0.0;
    for w in points.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (v, e, r) = gk21_with_abs(&mut f, w[0], w[1]);
        value += v;
        error += e;
        l1 += r;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
            resabs: r,
        });
    }
    let mut panels = heap.len();
    loop {
        if !value.is_finite() {
            return Err(Error::Domain("integrand produced a non-finite value".into()));
        }
        let floor = NOISE_FLOOR * l1;
        if error <= tol.abs.max(tol.rel * value.abs()).max(floor) {
            return Ok(Quad { value, error, panels });
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => return Ok(Quad { value, error, panels }),
        };
        let mid = 0.5 * (worst.a + worst.b);
        if panels >= tol.max_panels || mid <= worst.a || mid >= worst.b {
            return Err(Error::Convergence {
                estimate: value,
                error,
                panels,
            });
        }
        let (v1, e1, r1) = gk21_with_abs(&mut f, worst.a, mid);
        let (v2, e2, r2) = gk21_with_abs(&mut f, mid, worst.b);
        value += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        l1 += r1 + r2 - worst.resabs;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
            resabs: r1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
            resabs: r2,
        });
        panels += 1;
        // Running sums drift after many updates; resum occasionally.
        if panels % 256 == 0 {
            value = heap.iter().map(|p| p.value).sum();
            error = heap.iter().map(|p| p.error).sum();
            l1 = heap.iter().map(|p| p.resabs).sum();
        }
    }
}
