//! Steady-state M/G/1 quantities for the tagged source: system-time
//! transform, brief/long event probabilities, the three AoI approximations
//! and the exact single-source AoI.

use serde::{Deserialize, Serialize};

use crate::distributions::ServiceDistribution;
use crate::error::{Error, Result};

/// Two-class view of a multi-source FCFS queue: the tagged source 1 and the
/// aggregate of every other source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueConfig {
    lambda1: f64,
    lambda2: f64,
    service: ServiceDistribution,
}

impl QueueConfig {
    /// Validated stable configuration.
    pub fn new(lambda1: f64, lambda2: f64, service: ServiceDistribution) -> Result<Self> {
        let cfg = Self::with_any_load(lambda1, lambda2, service)?;
        cfg.check_stable()?;
        Ok(cfg)
    }

    /// Validates the rates only; `ρ ≥ 1` is accepted (simulation of overload).
    pub fn with_any_load(lambda1: f64, lambda2: f64, service: ServiceDistribution) -> Result<Self> {
        if !(lambda1 > 0.0 && lambda1.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda1 must be positive and finite, got {lambda1}"
            )));
        }
        if !(lambda2 >= 0.0 && lambda2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda2 must be finite and >= 0, got {lambda2}"
            )));
        }
        Ok(Self {
            lambda1,
            lambda2,
            service,
        })
    }

    /// Folds sources `others` into the aggregate rate `λ₂ = Σ λ_c`.
    pub fn from_sources(
        lambda1: f64,
        others: &[f64],
        service: ServiceDistribution,
    ) -> Result<Self> {
        if let Some(&bad) = others.iter().find(|&&l| !(l >= 0.0 && l.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "source rates must be finite and >= 0, got {bad}"
            )));
        }
        Self::new(lambda1, others.iter().sum(), service)
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    pub fn lambda(&self) -> f64 {
        self.lambda1 + self.lambda2
    }

    pub fn service(&self) -> &ServiceDistribution {
        &self.service
    }

    pub fn mu(&self) -> f64 {
        self.service.rate()
    }

    pub fn rho1(&self) -> f64 {
        self.lambda1 * self.service.mean()
    }

    pub fn rho2(&self) -> f64 {
        self.lambda2 * self.service.mean()
    }

    pub fn rho(&self) -> f64 {
        self.lambda() * self.service.mean()
    }

    pub fn is_stable(&self) -> bool {
        self.rho() < 1.0
    }

    pub fn check_stable(&self) -> Result<()> {
        if self.is_stable() {
            Ok(())
        } else {
            Err(Error::Unstable { rho: self.rho() })
        }
    }
}

/// `L_T(a)` with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemTimeTransform {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Pollaczek–Khinchine mean wait `λE[S²] / (2(1-ρ))`.
pub fn mean_wait(cfg: &QueueConfig) -> Result<f64> {
    cfg.check_stable()?;
    let s2 = cfg.service.second_moment()?;
    Ok(cfg.lambda() * s2 / (2.0 * (1.0 - cfg.rho())))
}

/// Mean system time `E[W] + 1/μ`.
pub fn mean_delay(cfg: &QueueConfig) -> Result<f64> {
    Ok(mean_wait(cfg)? + cfg.service.mean())
}

/// FCFS M/G/1 system-time transform
/// `L_T(a) = (1-ρ) a L_S(a) / (a - λ(1 - L_S(a)))` and its derivatives.
///
/// `L_T(0) = 1`; the derivatives at `a = 0` are `-E[T]` and `E[T²]` by
/// continuity and are not provided there.
pub fn laplace_system_time(cfg: &QueueConfig, a: f64) -> Result<SystemTimeTransform> {
    cfg.check_stable()?;
    if !(a > 0.0 && a.is_finite()) {
        if a == 0.0 {
            return Err(Error::InvalidParameter(
                "system-time transform derivatives need a > 0".into(),
            ));
        }
        return Err(Error::InvalidParameter(format!(
            "Laplace argument must be finite and > 0, got {a}"
        )));
    }
    let (l, l1, l2) = cfg.service.laplace_with_derivatives(a)?;
    Ok(system_time_from_service(
        cfg.lambda(),
        cfg.rho(),
        a,
        l,
        l1,
        l2,
    ))
}

/// `L_T(a)` alone; returns 1 at `a = 0`.
pub fn laplace_system_time_value(cfg: &QueueConfig, a: f64) -> Result<f64> {
    if a == 0.0 {
        cfg.check_stable()?;
        return Ok(1.0);
    }
    Ok(laplace_system_time(cfg, a)?.value)
}

fn system_time_from_service(
    lambda: f64,
    rho: f64,
    a: f64,
    l: f64,
    l1: f64,
    l2: f64,
) -> SystemTimeTransform {
    let d = a - lambda * (1.0 - l);
    let d_prime = 1.0 + lambda * l1;
    let p = lambda * l * l - lambda * l + (a * a - a * lambda) * l1;
    let p_prime = (a * a - a * lambda) * l2 + 2.0 * l1 * (a - lambda + lambda * l);
    SystemTimeTransform {
        value: (1.0 - rho) * a * l / d,
        d1: (1.0 - rho) * p / (d * d),
        d2: (1.0 - rho) * (p_prime / (d * d) - 2.0 * p * d_prime / (d * d * d)),
    }
}

/// Brief and long event probabilities of the tagged source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventProbabilities {
    /// Next source-1 arrival comes before the previous source-1 packet departs.
    pub brief: f64,
    pub long: f64,
}

/// `p_long = L_T(λ₁)` and `p_brief = 1 - p_long`.
pub fn event_probabilities(cfg: &QueueConfig) -> Result<EventProbabilities> {
    let long = laplace_system_time_value(cfg, cfg.lambda1)?;
    Ok(EventProbabilities {
        brief: 1.0 - long,
        long,
    })
}

pub fn p_brief(cfg: &QueueConfig) -> Result<f64> {
    Ok(event_probabilities(cfg)?.brief)
}

pub fn p_long(cfg: &QueueConfig) -> Result<f64> {
    Ok(event_probabilities(cfg)?.long)
}

/// Direct closed form
/// `(L_S(λ₁)(λ + (ρ-1)λ₁) - λ₂) / (λL_S(λ₁) - λ₂)`.
/// Degenerates when `λL_S(λ₁) = λ₂`; kept for cross-checking.
pub fn p_brief_closed_form(cfg: &QueueConfig) -> Result<f64> {
    cfg.check_stable()?;
    let l = cfg.service.laplace(cfg.lambda1)?;
    let (l1, l2, lam, rho) = (cfg.lambda1, cfg.lambda2, cfg.lambda(), cfg.rho());
    Ok((l * (lam + (rho - 1.0) * l1) - l2) / (lam * l - l2))
}

struct Terms {
    wait: f64,
    mu: f64,
    rho2: f64,
    lambda1: f64,
    lt: SystemTimeTransform,
}

impl Terms {
    fn new(cfg: &QueueConfig) -> Result<Self> {
        Ok(Self {
            wait: mean_wait(cfg)?,
            mu: cfg.mu(),
            rho2: cfg.rho2(),
            lambda1: cfg.lambda1,
            lt: laplace_system_time(cfg, cfg.lambda1)?,
        })
    }

    /// `E[W] + 2/μ + (2ρ₂-1)/λ₁`, shared by all three approximations.
    fn base(&self) -> f64 {
        self.wait + 2.0 / self.mu + (2.0 * self.rho2 - 1.0) / self.lambda1
    }
}

/// First approximation of the tagged source's average AoI.
pub fn aoi_approx1(cfg: &QueueConfig) -> Result<f64> {
    let t = Terms::new(cfg)?;
    Ok(t.base() + 2.0 * (1.0 - t.rho2) / t.lambda1 * t.lt.value + (t.rho2 - 1.0) * t.lt.d1)
}

/// Second approximation; never below the first.
pub fn aoi_approx2(cfg: &QueueConfig) -> Result<f64> {
    let t = Terms::new(cfg)?;
    Ok(t.base()
        + (1.0 / t.mu + 2.0 * (1.0 - t.rho2) / t.lambda1) * t.lt.value
        + (t.rho2 - 1.0 - t.lambda1 / t.mu) * t.lt.d1)
}

/// Third approximation; additionally uses the residual work of the other
/// sources and `L''_T`.
pub fn aoi_approx3(cfg: &QueueConfig) -> Result<f64> {
    let t = Terms::new(cfg)?;
    let s2 = cfg.service.second_moment()?;
    let residual = cfg.lambda2 * s2 / (2.0 * (1.0 - t.rho2));
    Ok(t.base()
        + (residual + 2.0 * (1.0 - t.rho2) / t.lambda1) * t.lt.value
        + (2.0 * t.rho2 - 1.0 - t.lambda1 * residual) * t.lt.d1
        - t.lambda1 * t.rho2 * t.lt.d2)
}

/// `approx2 - approx1 = (1/μ)L_T(λ₁) - (λ₁/μ)L'_T(λ₁)`, both terms nonnegative.
pub fn approx_gap(cfg: &QueueConfig) -> Result<f64> {
    let lt = laplace_system_time(cfg, cfg.lambda1)?;
    let mu = cfg.mu();
    Ok(lt.value / mu - cfg.lambda1 / mu * lt.d1)
}

/// Exact single-source M/G/1 average AoI
/// `1/μ + λE[S²]/(2(1-ρ)) + (1-ρ)/(λ L_S(λ))`.
pub fn aoi_single_source_mg1(lambda: f64, service: &ServiceDistribution) -> Result<f64> {
    let cfg = QueueConfig::new(lambda, 0.0, service.clone())?;
    let rho = cfg.rho();
    let s2 = service.second_moment()?;
    let l = service.laplace(lambda)?;
    Ok(service.mean() + lambda * s2 / (2.0 * (1.0 - rho)) + (1.0 - rho) / (lambda * l))
}
