//! Exact multi-source M/M/1 AoI.
//!
//! Builds on the transient occupancy law `P̄_{m|j}(τ)` of an M/M/1 queue fed
//! only by the interfering sources (rate `λ₂`, service rate `μ`):
//!
//! ```text
//! P̄_{m|j}(τ) = e^{-(λ₂+μ)τ} [ρ₂^{(m-j)/2} I_{m-j}(x) + ρ₂^{(m-j-1)/2} I_{m+j+1}(x)]
//!             + ρ₂^m (1-ρ₂) (1 - Q_{m+j+2}(√(2λ₂τ), √(2μτ))),   x = 2τ√(λ₂μ)
//! ```
//!
//! Each Bessel term is formed as `exp(-(√μ-√λ₂)²τ + c·ln ρ₂ + ln(e^{-x}I_n(x)))`
//! so nothing overflows for large `τ`. A uniformized birth-death chain gives
//! an independent route to the same probabilities.

use serde::{Deserialize, Serialize};

use crate::analytic::{mean_wait, QueueConfig};
use crate::error::{Error, Result};
use crate::quad::{integrate_with_breaks, Tolerance};
use crate::specfun::{
    bessel_i_scaled_seq, ln_bessel_i_scaled, ln_factorial, marcum_q_complement_tables, PoissonTable,
};

/// Smallest retained occupancy mass per initial state before reporting a
/// truncation failure.
const MASS_TOL: f64 = 1e-9;
/// Series truncation target for the `j` and `m` tails.
const SERIES_EPS: f64 = 1e-16;

/// One occupancy probability request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransientQuery {
    /// Initial number in system.
    pub j: usize,
    /// Target number in system.
    pub m: usize,
    pub lambda2: f64,
    pub mu: f64,
    pub tau: f64,
}

impl TransientQuery {
    pub fn new(j: usize, m: usize, lambda2: f64, mu: f64, tau: f64) -> Result<Self> {
        let q = Self {
            j,
            m,
            lambda2,
            mu,
            tau,
        };
        q.validate()?;
        Ok(q)
    }

    fn validate(&self) -> Result<()> {
        validate_rates(self.lambda2, self.mu)?;
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tau must be finite and >= 0, got {}",
                self.tau
            )));
        }
        Ok(())
    }
}

fn validate_rates(lambda2: f64, mu: f64) -> Result<()> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "mu must be positive and finite, got {mu}"
        )));
    }
    if !(lambda2 >= 0.0 && lambda2.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda2 must be finite and >= 0, got {lambda2}"
        )));
    }
    if lambda2 >= mu {
        return Err(Error::Unstable { rho: lambda2 / mu });
    }
    Ok(())
}

/// `P̄_{m|j}(τ)` at one time point for all `m ≤ m_max`, `j ≤ j_max`.
///
/// Holds `ln(e^{-x} I_n(x))` for every order needed and the Marcum
/// complements `1 - Q_k` for `k ∈ [2, m_max + j_max + 2]`.
#[derive(Debug, Clone)]
pub struct TransientKernel {
    lambda2: f64,
    mu: f64,
    tau: f64,
    ln_rho: f64,
    /// `-(√μ - √λ₂)² τ`
    ln_decay: f64,
    ln_bessel: Vec<f64>,
    marcum_c: Vec<f64>,
    /// Pure-death case (`λ₂ = 0`): `Pois(μτ)`.
    death: Option<PoissonTable>,
}

impl TransientKernel {
    /// Prepares the kernel for `m ≤ m_max`, `j ≤ j_max`.
    pub fn new(lambda2: f64, mu: f64, tau: f64, m_max: usize, j_max: usize) -> Result<Self> {
        validate_rates(lambda2, mu)?;
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tau must be finite and >= 0, got {tau}"
            )));
        }
        let mut kernel = Self {
            lambda2,
            mu,
            tau,
            ln_rho: (lambda2 / mu).ln(),
            ln_decay: -(mu.sqrt() - lambda2.sqrt()).powi(2) * tau,
            ln_bessel: Vec::new(),
            marcum_c: Vec::new(),
            death: None,
        };
        if tau == 0.0 {
            return Ok(kernel);
        }
        if lambda2 == 0.0 {
            kernel.death = Some(PoissonTable::new(mu * tau));
            return Ok(kernel);
        }

        let x = 2.0 * tau * (lambda2 * mu).sqrt();
        let n_max = m_max + j_max + 1;
        kernel.ln_bessel = bessel_i_scaled_seq(n_max, x)
            .into_iter()
            .enumerate()
            .map(|(n, v)| {
                if v > 1e-280 {
                    v.ln()
                } else {
                    ln_bessel_i_scaled(n as i32, x)
                }
            })
            .collect();

        // 1 - Q_k(√(2λ₂τ), √(2μτ)) = P[B - A ≥ k], A ~ Pois(λ₂τ), B ~ Pois(μτ).
        let arrivals = PoissonTable::new(lambda2 * tau);
        let services = PoissonTable::new(mu * tau);
        let k_max = m_max + j_max + 2;
        kernel.marcum_c = (0..=k_max)
            .map(|k| {
                if k < 2 {
                    return f64::NAN;
                }
                marcum_q_complement_tables(k, &arrivals, &services)
            })
            .collect();
        Ok(kernel)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    fn bessel_term(&self, half_power: f64, order: i64) -> f64 {
        let n = order.unsigned_abs() as usize;
        (self.ln_decay + half_power * self.ln_rho + self.ln_bessel[n]).exp()
    }

    /// `P̄_{m|j}(τ)`; `m` and `j` must lie within the bounds given to [`TransientKernel::new`].
    pub fn prob(&self, m: usize, j: usize) -> f64 {
        if self.tau == 0.0 {
            return if m == j { 1.0 } else { 0.0 };
        }
        if let Some(deaths) = &self.death {
            return if m > j {
                0.0
            } else if m == 0 {
                deaths.upper_tail(j)
            } else {
                deaths.pmf(j - m)
            };
        }
        let (mi, ji) = (m as i64, j as i64);
        let t1 = self.bessel_term(0.5 * (mi - ji) as f64, mi - ji);
        let t2 = self.bessel_term(0.5 * (mi - ji - 1) as f64, mi + ji + 1);
        let rho = self.lambda2 / self.mu;
        let t3 = (m as f64 * self.ln_rho).exp() * (1.0 - rho) * self.marcum_c[m + j + 2];
        t1 + t2 + t3
    }

    /// The occupancy row `P̄_{·|j}(τ)` for `m ≤ m_max`.
    pub fn row(&self, j: usize, m_max: usize) -> Vec<f64> {
        (0..=m_max).map(|m| self.prob(m, j)).collect()
    }
}

/// Occupancy probability via the closed-form transient solution.
pub fn transient_prob(q: &TransientQuery) -> Result<f64> {
    q.validate()?;
    let kernel = TransientKernel::new(q.lambda2, q.mu, q.tau, q.m, q.j)?;
    Ok(kernel.prob(q.m, q.j).clamp(0.0, 1.0))
}

/// Distribution at time `τ` of a birth-death chain (births `λ₂`, deaths `μ`,
/// reflecting at 0) started in state `j`, by uniformization.
///
/// The chain moves at most one level per uniformized step, so truncating at
/// `j + N + 1`, with `N` the largest retained Poisson step count, is exact up to
/// the Poisson tail.
pub fn ctmc_distribution(j: usize, lambda2: f64, mu: f64, tau: f64) -> Result<Vec<f64>> {
    validate_rates(lambda2, mu)?;
    let rate = lambda2 + mu;
    let steps = PoissonTable::new(rate * tau);
    let levels = j + steps.hi() + 2;
    let (up, down) = (lambda2 / rate, mu / rate);

    let mut v = vec![0.0; levels];
    v[j] = 1.0;
    let mut out = vec![0.0; levels];
    let mut next = vec![0.0; levels];
    for n in 0..=steps.hi() {
        let w = steps.pmf(n);
        if w > 0.0 {
            for (o, p) in out.iter_mut().zip(&v) {
                *o += w * p;
            }
        }
        next.iter_mut().for_each(|x| *x = 0.0);
        next[0] += down * v[0];
        for i in 0..levels - 1 {
            next[i + 1] += up * v[i];
            next[i] += down * v[i + 1];
        }
        std::mem::swap(&mut v, &mut next);
    }
    Ok(out)
}

/// Occupancy probability via CTMC uniformization; independent of the Bessel route.
pub fn ctmc_oracle(q: &TransientQuery) -> Result<f64> {
    q.validate()?;
    let dist = ctmc_distribution(q.j, q.lambda2, q.mu, q.tau)?;
    Ok(dist.get(q.m).copied().unwrap_or(0.0))
}

/// Truncation of the series and integration domains in [`psi`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiTruncation {
    pub m_max: usize,
    pub j_max: usize,
    pub t_max: f64,
    pub tau_max: f64,
    pub abs_tol: f64,
}

impl PsiTruncation {
    /// Bounds sized from the geometric decay `ρ₂^j` of the initial-state
    /// weights and the exponential decay of the two integrands.
    pub fn for_rates(mu: f64, rho1: f64, lambda2: f64) -> Self {
        let rho2 = lambda2 / mu;
        let geometric = if rho2 > 0.0 {
            (SERIES_EPS.ln() / rho2.ln()).ceil() as usize
        } else {
            0
        };
        let j_max = (geometric + 20).max(20);
        Self {
            m_max: j_max + 50 + geometric,
            j_max,
            t_max: 50.0 / (mu * (1.0 - rho2)),
            tau_max: 50.0 / (mu * rho1),
            abs_tol: 1e-7,
        }
    }
}

/// Parameters of the transient double integral `Ψ(μ, ρ₁, λ₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiParams {
    pub mu: f64,
    pub rho1: f64,
    pub lambda2: f64,
    pub truncation: PsiTruncation,
}

impl PsiParams {
    pub fn new(mu: f64, rho1: f64, lambda2: f64) -> Result<Self> {
        let p = Self {
            mu,
            rho1,
            lambda2,
            truncation: PsiTruncation::for_rates(mu, rho1, lambda2),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_config(cfg: &QueueConfig) -> Result<Self> {
        Self::new(cfg.mu(), cfg.rho1(), cfg.lambda2())
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.truncation.abs_tol = abs_tol;
        self
    }

    pub fn lambda1(&self) -> f64 {
        self.rho1 * self.mu
    }

    fn validate(&self) -> Result<()> {
        validate_rates(self.lambda2, self.mu)?;
        if !(self.rho1 > 0.0 && self.rho1.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rho1 must be positive, got {}",
                self.rho1
            )));
        }
        let rho = self.rho1 + self.lambda2 / self.mu;
        if rho >= 1.0 {
            return Err(Error::Unstable { rho });
        }
        let t = &self.truncation;
        let positive = |v: f64| v > 0.0;
        if t.j_max == 0
            || t.m_max == 0
            || ![t.t_max, t.tau_max, t.abs_tol].into_iter().all(positive)
        {
            return Err(Error::InvalidParameter(format!(
                "truncation bounds must be positive: {t:?}"
            )));
        }
        Ok(())
    }
}

/// `g_j(τ) = Σ_m m P̄_{m|j}(τ)` for `j ≤ j_max`, the mean occupancy after `τ`
/// from `j` initial packets.
pub fn mean_occupancy(lambda2: f64, mu: f64, tau: f64, trunc: &PsiTruncation) -> Result<Vec<f64>> {
    let kernel = TransientKernel::new(lambda2, mu, tau, trunc.m_max, trunc.j_max)?;
    (0..=trunc.j_max)
        .map(|j| {
            let mut mass = 0.0;
            let mut mean = 0.0;
            for m in 0..=trunc.m_max {
                let p = kernel.prob(m, j);
                mass += p;
                mean += m as f64 * p;
            }
            if (1.0 - mass).abs() > MASS_TOL {
                return Err(Error::TruncationFailure(format!(
                    "occupancy mass {mass} from j={j} at tau={tau} with m_max={}",
                    trunc.m_max
                )));
            }
            Ok(mean)
        })
        .collect()
}

/// Evenly spaced break points on `[0, upper]`.
fn breaks(upper: f64, pieces: usize) -> Vec<f64> {
    (0..=pieces)
        .map(|i| upper * i as f64 / pieces as f64)
        .collect()
}

/// `Ψ(μ,ρ₁,λ₂) = ∫₀^∞∫₀^∞ (t+τ) e^{-μ(t+ρ₁τ)} Σ_m Σ_j m P̄_{m|j}(τ) (λ₂t)^j/j! dτ dt`,
/// by iterated adaptive quadrature on `[0, τ_max] × [0, t_max]`.
///
/// The outer integral runs over `τ` so that the occupancy means `g_j(τ)` are
/// evaluated once per outer node.
pub fn psi(p: &PsiParams) -> Result<f64> {
    p.validate()?;
    if p.lambda2 == 0.0 {
        return Ok(0.0);
    }
    let t = p.truncation;
    let (mu, lambda1, lambda2) = (p.mu, p.lambda1(), p.lambda2);
    let ln_lambda2 = lambda2.ln();
    let inner_tol = Tolerance::new(0.01 * t.abs_tol * lambda1.min(1.0), 1e-10);
    let t_breaks = breaks(t.t_max, 16);

    let mut failure: Option<Error> = None;
    let outer = |tau: f64| -> f64 {
        if failure.is_some() {
            return 0.0;
        }
        let g = match mean_occupancy(lambda2, mu, tau, &t) {
            Ok(g) => g,
            Err(e) => {
                failure = Some(e);
                return 0.0;
            }
        };
        let inner = |s: f64| -> f64 {
            if s == 0.0 {
                return tau * g[0];
            }
            // e^{-μs} (λ₂s)^j / j!, in logs so large μs does not underflow early.
            let ln_ls = ln_lambda2 + s.ln();
            let mut acc = 0.0;
            for (j, gj) in g.iter().enumerate() {
                let ln_w = -mu * s + j as f64 * ln_ls - ln_factorial(j as u64);
                acc += ln_w.exp() * gj;
            }
            (s + tau) * acc
        };
        match integrate_with_breaks(inner, &t_breaks, inner_tol) {
            Ok(r) => (-lambda1 * tau).exp() * r.value,
            Err(e) => {
                failure = Some(e);
                0.0
            }
        }
    };
    let r = integrate_with_breaks(
        outer,
        &breaks(t.tau_max, 16),
        Tolerance::new(t.abs_tol, 1e-9),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r?.value)
}

/// `Ψ` with the `t`-integral done in closed form:
/// `∫₀^∞ e^{-λ₁τ} Σ_j ρ₂^j ((j+1)/μ² + τ/μ) g_j(τ) dτ`.
pub fn psi_reduced(p: &PsiParams) -> Result<f64> {
    p.validate()?;
    if p.lambda2 == 0.0 {
        return Ok(0.0);
    }
    let t = p.truncation;
    let (mu, lambda1, lambda2) = (p.mu, p.lambda1(), p.lambda2);
    let rho2 = lambda2 / mu;
    let mut failure: Option<Error> = None;
    let f = |tau: f64| -> f64 {
        if failure.is_some() {
            return 0.0;
        }
        match mean_occupancy(lambda2, mu, tau, &t) {
            Ok(g) => {
                let mut w = 1.0;
                let mut acc = 0.0;
                for (j, gj) in g.iter().enumerate() {
                    acc += w * ((j as f64 + 1.0) / (mu * mu) + tau / mu) * gj;
                    w *= rho2;
                }
                (-lambda1 * tau).exp() * acc
            }
            Err(e) => {
                failure = Some(e);
                0.0
            }
        }
    };
    let r = integrate_with_breaks(f, &breaks(t.tau_max, 16), Tolerance::new(t.abs_tol, 1e-10));
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r?.value)
}

fn require_exponential(cfg: &QueueConfig) -> Result<()> {
    if cfg.service().is_exponential() {
        Ok(())
    } else {
        Err(Error::NotExponential(cfg.service().to_string()))
    }
}

/// Closed-form part of the exact M/M/1 AoI (everything except `λ₁²(1-ρ)Ψ`):
/// `(1/μ)(1/ρ₁ + ρ/(1-ρ) + (2ρ₂-1)(ρ-1)/(1-ρ₂)² + 2ρ₁ρ₂(ρ-1)/(1-ρ₂)³)`.
pub fn exact_mm1_remainder(cfg: &QueueConfig) -> Result<f64> {
    require_exponential(cfg)?;
    cfg.check_stable()?;
    let (mu, r1, r2, r) = (cfg.mu(), cfg.rho1(), cfg.rho2(), cfg.rho());
    Ok((1.0 / r1
        + r / (1.0 - r)
        + (2.0 * r2 - 1.0) * (r - 1.0) / (1.0 - r2).powi(2)
        + 2.0 * r1 * r2 * (r - 1.0) / (1.0 - r2).powi(3))
        / mu)
}

/// The same remainder assembled from the generic M/G/1 pieces
/// `E[W] + (2/μ)(λ₂/λ₁ + 1) - 1/λ₁ + 2(1-ρ₂)/λ₁·L_T + (2ρ₂-1)L'_T - λ₁ρ₂L''_T`.
pub fn exact_mm1_remainder_generic(cfg: &QueueConfig) -> Result<f64> {
    require_exponential(cfg)?;
    let lt = crate::analytic::laplace_system_time(cfg, cfg.lambda1())?;
    let (mu, l1, l2, r2) = (cfg.mu(), cfg.lambda1(), cfg.lambda2(), cfg.rho2());
    Ok(mean_wait(cfg)? + 2.0 / mu * (l2 / l1 + 1.0) - 1.0 / l1
        + 2.0 * (1.0 - r2) / l1 * lt.value
        + (2.0 * r2 - 1.0) * lt.d1
        - l1 * r2 * lt.d2)
}

/// Exact average AoI of source 1 in a multi-source M/M/1 FCFS queue.
pub fn aoi_exact_mm1(cfg: &QueueConfig) -> Result<f64> {
    aoi_exact_mm1_with(cfg, &PsiParams::from_config(cfg)?)
}

/// [`aoi_exact_mm1`] with explicit `Ψ` truncation.
pub fn aoi_exact_mm1_with(cfg: &QueueConfig, params: &PsiParams) -> Result<f64> {
    require_exponential(cfg)?;
    let remainder = exact_mm1_remainder(cfg)?;
    let l1 = cfg.lambda1();
    Ok(l1 * l1 * (1.0 - cfg.rho()) * psi(params)? + remainder)
}
