//! Special functions for the transient M/M/1 occupancy law: modified Bessel
//! functions of the first kind (integer order), Poisson weights and the
//! generalized Marcum Q-function.

use crate::error::{Error, Result};

/// Below this argument the power series is used for every order.
const SERIES_CUTOFF: f64 = 15.0;
const RESCALE_HIGH: f64 = 1e250;
const RESCALE_LOW: f64 = 1e-250;
/// Poisson tail mass dropped when building [`PoissonTable`].
const POISSON_TAIL: f64 = 1e-18;

/// `ln(n!)`.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    if n <= 170 {
        let mut p = 1.0f64;
        for k in 2..=n {
            p *= k as f64;
        }
        return p.ln();
    }
    // Stirling series; the first omitted term is below 1e-20 for n > 170.
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x + 0.5) * x.ln() - x
        + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

/// `ln(e^{-x} I_k(x))` by the power series, rescaled so that it neither
/// overflows nor underflows for any order.
fn ln_bessel_i_scaled_series(k: u32, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let kf = k as f64;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut log_offset = 0.0f64;
    let mut i = 1.0f64;
    loop {
        term *= q / (i * (kf + i));
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
        if sum > RESCALE_HIGH {
            sum *= RESCALE_LOW;
            term *= RESCALE_LOW;
            log_offset += RESCALE_HIGH.ln();
        }
        i += 1.0;
    }
    kf * (0.5 * x).ln() - ln_factorial(k as u64) - x + sum.ln() + log_offset
}

/// `e^{-x} I_k(x)` for `k = 0..=k_max` by Miller's backward recurrence,
/// normalized with `I_0 + 2 Σ_{k≥1} I_k = e^x`.
fn bessel_i_scaled_miller(k_max: usize, x: f64) -> Vec<f64> {
    let significant = (9.0 * x.sqrt()) as usize + 20;
    let m = k_max.max(significant);
    let start = 2 * (m + (40.0 * m as f64).sqrt() as usize) + 10;

    let mut out = vec![0.0; k_max + 1];
    let two_over_x = 2.0 / x;
    let mut f_next = 0.0f64;
    let mut f_cur = 1e-30f64;
    let mut norm = 0.0f64;
    for n in (1..=start).rev() {
        if n <= k_max {
            out[n] = f_cur;
        }
        norm += 2.0 * f_cur;
        let f_prev = (n as f64) * two_over_x * f_cur + f_next;
        f_next = f_cur;
        f_cur = f_prev;
        if f_cur > RESCALE_HIGH {
            f_cur *= RESCALE_LOW;
            f_next *= RESCALE_LOW;
            norm *= RESCALE_LOW;
            for v in out.iter_mut().skip(n.min(k_max + 1)) {
                *v *= RESCALE_LOW;
            }
        }
    }
    out[0] = f_cur;
    norm += f_cur;
    for v in &mut out {
        *v /= norm;
    }
    out
}

/// Exponentially scaled modified Bessel function `e^{-x} I_k(x)`, `x ≥ 0`.
/// Negative orders use `I_{-k} = I_k`.
pub fn bessel_i_scaled(k: i32, x: f64) -> f64 {
    assert!(x >= 0.0, "bessel_i_scaled requires x >= 0, got {x}");
    let k = k.unsigned_abs();
    if x == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if x < SERIES_CUTOFF || (k as f64) > x {
        ln_bessel_i_scaled_series(k, x).exp()
    } else {
        bessel_i_scaled_miller(k as usize, x)[k as usize]
    }
}

/// `ln(e^{-x} I_k(x))`; finite wherever the true value is positive, even when
/// `e^{-x} I_k(x)` itself underflows.
pub fn ln_bessel_i_scaled(k: i32, x: f64) -> f64 {
    assert!(x >= 0.0, "ln_bessel_i_scaled requires x >= 0, got {x}");
    let k = k.unsigned_abs();
    if x == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if x < SERIES_CUTOFF || (k as f64) > x {
        ln_bessel_i_scaled_series(k, x)
    } else {
        let v = bessel_i_scaled_miller(k as usize, x)[k as usize];
        if v > 1e-280 {
            v.ln()
        } else {
            ln_bessel_i_scaled_series(k, x)
        }
    }
}

/// `e^{-x} I_k(x)` for every order `0..=k_max`.
pub fn bessel_i_scaled_seq(k_max: usize, x: f64) -> Vec<f64> {
    assert!(x >= 0.0, "bessel_i_scaled_seq requires x >= 0, got {x}");
    if x == 0.0 {
        let mut v = vec![0.0; k_max + 1];
        v[0] = 1.0;
        return v;
    }
    if x < SERIES_CUTOFF {
        (0..=k_max)
            .map(|k| ln_bessel_i_scaled_series(k as u32, x).exp())
            .collect()
    } else {
        bessel_i_scaled_miller(k_max, x)
    }
}

/// Modified Bessel function of the first kind `I_k(x)`.
///
/// Fails with [`Error::InvalidParameter`] when the result overflows `f64`;
/// use [`bessel_i_scaled`] in that regime.
pub fn bessel_i(k: i32, x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "bessel_i requires x >= 0, got {x}"
        )));
    }
    let ln = ln_bessel_i_scaled(k, x) + x;
    if ln > f64::MAX.ln() {
        return Err(Error::InvalidParameter(format!(
            "I_{k}({x}) overflows; use the exponentially scaled variant"
        )));
    }
    if x < SERIES_CUTOFF || (k.unsigned_abs() as f64) > x {
        Ok(ln.exp())
    } else {
        // Multiply rather than exponentiate the log to keep the Miller value's precision.
        Ok(bessel_i_scaled(k, x) * x.exp())
    }
}

/// Truncated Poisson(`mean`) law with cumulative tails, covering all but
/// ~1e-18 of the mass.
#[derive(Debug, Clone)]
pub struct PoissonTable {
    lo: usize,
    pmf: Vec<f64>,
    /// `upper[i] = P[N ≥ lo + i]`
    upper: Vec<f64>,
    /// `lower[i] = P[N ≤ lo + i]`
    lower: Vec<f64>,
}

impl PoissonTable {
    pub fn new(mean: f64) -> Self {
        assert!(
            mean >= 0.0 && mean.is_finite(),
            "Poisson mean must be finite and >= 0"
        );
        if mean == 0.0 {
            return Self {
                lo: 0,
                pmf: vec![1.0],
                upper: vec![1.0],
                lower: vec![1.0],
            };
        }
        let mode = mean.floor() as usize;
        let p_mode = (mode as f64 * mean.ln() - mean - ln_factorial(mode as u64)).exp();

        let mut below = Vec::new();
        let mut p = p_mode;
        let mut k = mode;
        while k > 0 {
            p *= k as f64 / mean;
            k -= 1;
            if p < POISSON_TAIL * 1e-3 {
                break;
            }
            below.push(p);
        }
        let lo = mode - below.len();

        let mut pmf: Vec<f64> = below.into_iter().rev().collect();
        pmf.push(p_mode);
        let mut p = p_mode;
        let mut k = mode;
        loop {
            k += 1;
            p *= mean / k as f64;
            if p < POISSON_TAIL * 1e-3 {
                break;
            }
            pmf.push(p);
        }
        // The mode value carries the rounding of a large log; the truncated
        // mass is far below that, so renormalizing removes it.
        let total: f64 = pmf.iter().sum();
        for v in &mut pmf {
            *v /= total;
        }

        let n = pmf.len();
        let mut upper = vec![0.0; n];
        let mut acc = 0.0;
        for i in (0..n).rev() {
            acc += pmf[i];
            upper[i] = acc;
        }
        let mut lower = vec![0.0; n];
        let mut acc = 0.0;
        for i in 0..n {
            acc += pmf[i];
            lower[i] = acc;
        }
        Self {
            lo,
            pmf,
            upper,
            lower,
        }
    }

    /// Smallest index with non-negligible mass.
    pub fn lo(&self) -> usize {
        self.lo
    }

    /// Largest index with non-negligible mass.
    pub fn hi(&self) -> usize {
        self.lo + self.pmf.len() - 1
    }

    pub fn pmf(&self, k: usize) -> f64 {
        if k < self.lo || k > self.hi() {
            0.0
        } else {
            self.pmf[k - self.lo]
        }
    }

    /// `P[N ≥ k]`.
    pub fn upper_tail(&self, k: usize) -> f64 {
        if k <= self.lo {
            1.0
        } else if k > self.hi() {
            0.0
        } else {
            self.upper[k - self.lo]
        }
    }

    /// `P[N ≤ k]`.
    pub fn cdf(&self, k: usize) -> f64 {
        if k < self.lo {
            0.0
        } else if k >= self.hi() {
            1.0
        } else {
            self.lower[k - self.lo]
        }
    }

    /// `(k, pmf)` over the retained support.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.pmf
            .iter()
            .enumerate()
            .map(move |(i, &p)| (self.lo + i, p))
    }
}

/// Generalized Marcum Q-function
/// `Q_k(a,b) = ∫_b^∞ x (x/a)^{k-1} e^{-(x²+a²)/2} I_{k-1}(ax) dx`.
///
/// For integer order the upper regularized gamma ratio reduces to a Poisson
/// CDF, so `Q_k(a,b) = Σ_n Pois(n; a²/2) · P[Pois(b²/2) ≤ k+n-1]`.
pub fn marcum_q(k: u32, a: f64, b: f64) -> f64 {
    assert!(k >= 1, "Marcum Q order must be >= 1");
    assert!(a >= 0.0 && b >= 0.0, "Marcum Q arguments must be >= 0");
    if b == 0.0 {
        return 1.0;
    }
    let outer = PoissonTable::new(0.5 * a * a);
    let inner = PoissonTable::new(0.5 * b * b);
    marcum_q_tables(k as usize, &outer, &inner).clamp(0.0, 1.0)
}

/// `1 - Q_k(a,b)`, summed directly so that it keeps absolute accuracy when
/// `Q_k` is close to one.
pub fn marcum_q_complement(k: u32, a: f64, b: f64) -> f64 {
    assert!(k >= 1, "Marcum Q order must be >= 1");
    assert!(a >= 0.0 && b >= 0.0, "Marcum Q arguments must be >= 0");
    if b == 0.0 {
        return 0.0;
    }
    let outer = PoissonTable::new(0.5 * a * a);
    let inner = PoissonTable::new(0.5 * b * b);
    marcum_q_complement_tables(k as usize, &outer, &inner).clamp(0.0, 1.0)
}

/// Same series as [`marcum_q`] with precomputed `Pois(a²/2)` and `Pois(b²/2)` tables.
pub fn marcum_q_tables(k: usize, outer: &PoissonTable, inner: &PoissonTable) -> f64 {
    outer.iter().map(|(n, p)| p * inner.cdf(k + n - 1)).sum()
}

/// `1 - Q_k` with precomputed tables.
pub fn marcum_q_complement_tables(k: usize, outer: &PoissonTable, inner: &PoissonTable) -> f64 {
    outer.iter().map(|(n, p)| p * inner.upper_tail(k + n)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn ln_factorial_matches_product_and_stirling_boundary() {
        assert_eq!(ln_factorial(0), 0.0);
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-15);
        // Continuity across the switch to the asymptotic series.
        let a = ln_factorial(170) + 171f64.ln();
        assert!((ln_factorial(171) - a).abs() < 1e-11 * a);
    }

    #[test]
    fn bessel_at_zero() {
        assert_eq!(bessel_i(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_i(3, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_i_scaled(-2, 0.0), 0.0);
    }

    #[test]
    fn bessel_i0_at_one_against_direct_series() {
        // Σ (x/2)^{2m}/(m!)² at x = 1
        let mut sum = 0.0;
        let mut term = 1.0f64;
        for m in 0..30 {
            if m > 0 {
                term *= 0.25 / (m as f64 * m as f64);
            }
            sum += term;
        }
        assert!(rel(bessel_i(0, 1.0).unwrap(), sum) < 1e-15);
        assert!(rel(sum, 1.266_065_877_752_008_4) < 1e-15);
    }

    #[test]
    fn negative_order_symmetry() {
        for &x in &[0.3, 4.0, 17.0, 60.0] {
            for k in 1..6 {
                assert_eq!(bessel_i_scaled(-k, x), bessel_i_scaled(k, x));
            }
        }
    }

    #[test]
    fn miller_agrees_with_series_in_overlap() {
        // The series is exact (positive terms) for moderate x; compare it with
        // the recurrence where both are valid.
        for &x in &[15.0, 22.5, 35.0, 50.0] {
            let seq = bessel_i_scaled_miller(12, x);
            for (k, v) in seq.iter().enumerate() {
                let s = ln_bessel_i_scaled_series(k as u32, x).exp();
                assert!(rel(*v, s) < 1e-13, "k={k} x={x}: {v} vs {s}");
            }
        }
    }

    #[test]
    fn sequence_matches_pointwise() {
        let x = 140.0;
        let seq = bessel_i_scaled_seq(300, x);
        for &k in &[0usize, 10, 139, 141, 250, 300] {
            let p = bessel_i_scaled(k as i32, x);
            assert!(rel(seq[k], p) < 1e-11, "k={k}: {} vs {p}", seq[k]);
        }
    }

    #[test]
    fn ln_scaled_survives_underflow() {
        let v = ln_bessel_i_scaled(700, 140.0);
        assert!(v.is_finite() && v < -745.0);
        let direct = ln_bessel_i_scaled_series(700, 140.0);
        assert!((v - direct).abs() < 1e-10 * direct.abs());
    }

    #[test]
    fn overflow_is_reported() {
        assert!(bessel_i(0, 800.0).is_err());
        assert!(bessel_i_scaled(0, 800.0) > 0.0);
    }

    #[test]
    fn poisson_table_is_normalized() {
        for &m in &[0.0, 1e-3, 0.7, 12.0, 450.0, 3000.0] {
            let t = PoissonTable::new(m);
            let s: f64 = t.iter().map(|(_, p)| p).sum();
            assert!((s - 1.0).abs() < 1e-13, "mean {m}: {s}");
            assert!((t.upper_tail(0) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn marcum_limits() {
        for k in 1..4 {
            assert_eq!(marcum_q(k, 1.3, 0.0), 1.0);
        }
        for &b in &[0.1, 1.0, 2.5, 6.0] {
            assert!((marcum_q(1, 0.0, b) - (-0.5 * b * b).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn marcum_complement_is_consistent() {
        for &(k, a, b) in &[
            (1, 0.5, 0.7),
            (3, 2.0, 1.0),
            (10, 4.0, 9.0),
            (2, 20.0, 18.0),
        ] {
            let q = marcum_q(k, a, b);
            let p = marcum_q_complement(k, a, b);
            assert!((q + p - 1.0).abs() < 1e-13, "{k} {a} {b}: {q} + {p}");
        }
    }

    #[test]
    fn marcum_q_against_defining_integral() {
        // Adaptive quadrature of the defining integral at 30 digits.
        assert!((marcum_q(2, 1.0, 1.0) - 0.940_790_219_146_528_7).abs() < 1e-14);
    }
}
