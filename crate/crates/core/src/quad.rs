//! Globally adaptive Gauss–Kronrod (7/15 → 10/21 point) quadrature on finite
//! intervals.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate drops below `max(abs_tol, rel_tol * |I|)`. Error estimates follow
//! the QUADPACK `qk21` rescaling, which is conservative for smooth integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

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

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

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

/// Stopping rule and subdivision budget for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs,
            rel,
            max_intervals: 4000,
        }
    }

    pub fn absolute(abs: f64) -> Self {
        Self::new(abs, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_err: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lower: f64,
    upper: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 {
            res_asc * scale
        } else {
            res_asc
        };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

/// One 21-point Kronrod evaluation with its embedded 10-point Gauss error estimate.
pub fn gauss_kronrod21<F>(f: &mut F, lower: f64, upper: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let center = 0.5 * (lower + upper);
    let half = 0.5 * (upper - lower);
    let f_center = f(center);

    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    let mut res_gauss = 0.0;
    let mut res_kronrod = f_center * WGK[10];
    let mut res_abs = res_kronrod.abs();

    for j in 0..10 {
        let x = half * XGK[j];
        let a = f(center - x);
        let b = f(center + x);
        fv1[j] = a;
        fv2[j] = b;
        if j % 2 == 1 {
            res_gauss += WG[j / 2] * (a + b);
        }
        res_kronrod += WGK[j] * (a + b);
        res_abs += WGK[j] * (a.abs() + b.abs());
    }

    let mean = 0.5 * res_kronrod;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let err = (res_kronrod - res_gauss) * half;
    let width = half.abs();
    (
        res_kronrod * half,
        rescale_error(err, res_abs * width, res_asc * width),
    )
}

/// Integrates `f` over `[lower, upper]`.
pub fn integrate<F>(f: F, lower: f64, upper: f64, tol: Tolerance) -> Result<Integral>
where
    F: FnMut(f64) -> f64,
{
    integrate_with_breaks(f, &[lower, upper], tol)
}

/// Integrates `f` over `[breaks[0], breaks[last]]`, seeding the subdivision at
/// the given (sorted) breakpoints.
pub fn integrate_with_breaks<F>(mut f: F, breaks: &[f64], tol: Tolerance) -> Result<Integral>
where
    F: FnMut(f64) -> f64,
{
    if breaks.len() < 2
        || breaks
            .windows(2)
            .any(|w| w[0].is_nan() || w[1].is_nan() || w[0] > w[1])
    {
        return Err(Error::InvalidParameter(
            "quadrature breakpoints must be sorted and at least two".into(),
        ));
    }
    let (lower, upper) = (breaks[0], breaks[breaks.len() - 1]);
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in breaks.windows(2) {
        if w[0] == w[1] {
            continue;
        }
        let (value, err) = gauss_kronrod21(&mut f, w[0], w[1]);
        total += value;
        total_err += err;
        heap.push(Segment {
            lower: w[0],
            upper: w[1],
            value,
            err,
        });
    }

    loop {
        let target = tol.abs.max(tol.rel * total.abs());
        if total_err <= target {
            return Ok(Integral {
                value: total,
                abs_err: total_err,
                intervals: heap.len(),
            });
        }
        if heap.len() >= tol.max_intervals {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.lower + worst.upper);
        if mid <= worst.lower || mid >= worst.upper {
            // Interval at machine resolution; nothing left to refine.
            heap.push(worst);
            break;
        }
        let (v1, e1) = gauss_kronrod21(&mut f, worst.lower, mid);
        let (v2, e2) = gauss_kronrod21(&mut f, mid, worst.upper);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Segment {
            lower: worst.lower,
            upper: mid,
            value: v1,
            err: e1,
        });
        heap.push(Segment {
            lower: mid,
            upper: worst.upper,
            value: v2,
            err: e2,
        });
    }

    // Re-sum to shed drift from the incremental updates before the final check.
    let total: f64 = heap.iter().map(|s| s.value).sum();
    let total_err: f64 = heap.iter().map(|s| s.err).sum();
    if total_err <= tol.abs.max(tol.rel * total.abs()) {
        return Ok(Integral {
            value: total,
            abs_err: total_err,
            intervals: heap.len(),
        });
    }
    Err(Error::QuadratureFailure {
        lower,
        upper,
        abs_err: total_err,
        intervals: heap.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| 3.0 * x * x, 0.0, 2.0, Tolerance::new(1e-14, 1e-13)).unwrap();
        assert!((r.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn exponential_decay() {
        let r = integrate(|x| (-x).exp(), 0.0, 50.0, Tolerance::new(1e-13, 1e-13)).unwrap();
        assert!((r.value - (1.0 - (-50.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn integrable_endpoint_singularity() {
        // ∫₀¹ x^{-1/2} dx = 2
        let r = integrate(|x| x.powf(-0.5), 0.0, 1.0, Tolerance::absolute(1e-9)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn oscillatory_integrand() {
        let r = integrate(
            |x| (10.0 * x).sin(),
            0.0,
            std::f64::consts::PI,
            Tolerance::absolute(1e-12),
        )
        .unwrap();
        assert!(r.value.abs() < 1e-11);
    }

    #[test]
    fn breakpoints_are_honoured() {
        let r = integrate_with_breaks(
            |x: f64| if x < 1.0 { 0.0 } else { 1.0 },
            &[0.0, 1.0, 3.0],
            Tolerance::absolute(1e-12),
        )
        .unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unsorted_breaks_rejected() {
        assert!(integrate_with_breaks(|x| x, &[1.0, 0.0], Tolerance::absolute(1e-6)).is_err());
    }

    #[test]
    fn budget_exhaustion_reports_failure() {
        let tol = Tolerance {
            abs: 1e-15,
            rel: 0.0,
            max_intervals: 3,
        };
        let r = integrate(|x: f64| x.powf(-0.9), 0.0, 1.0, tol);
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }
}
