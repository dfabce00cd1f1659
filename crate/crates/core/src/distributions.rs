//! Service-time laws: moments, Laplace transform of the density (with its
//! first two derivatives) and seeded samplers.
//!
//! Exponential, gamma and hyper-exponential transforms are closed form.
//! Log-normal and Pareto transforms are computed by adaptive quadrature of
//! `E[S^k e^{-aS}]` after a change of variables that makes the integrand
//! smooth; the neglected tail is bounded analytically.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, LogNormal, Pareto};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate_with_breaks, Tolerance};

const WEIGHT_SUM_TOL: f64 = 1e-12;
const QUAD_TOL: f64 = 1e-13;
/// Tail mass allowed outside the truncated integration domain.
const TAIL_BOUND: f64 = 1e-16;

/// Parameters of a service-time law, as they appear in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ServiceKind {
    Exponential {
        rate: f64,
    },
    Gamma {
        shape: f64,
        rate: f64,
    },
    #[serde(alias = "hyperexponential")]
    HyperExponential {
        weights: Vec<f64>,
        rates: Vec<f64>,
    },
    #[serde(alias = "lognormal")]
    LogNormal {
        location: f64,
        scale: f64,
    },
    Pareto {
        scale: f64,
        shape: f64,
    },
}

/// A validated service-time distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ServiceKind", into = "ServiceKind")]
pub struct ServiceDistribution {
    kind: ServiceKind,
}

impl TryFrom<ServiceKind> for ServiceDistribution {
    type Error = Error;

    fn try_from(kind: ServiceKind) -> Result<Self> {
        Self::new(kind)
    }
}

impl From<ServiceDistribution> for ServiceKind {
    fn from(d: ServiceDistribution) -> Self {
        d.kind
    }
}

impl fmt::Display for ServiceDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ServiceKind::Exponential { rate } => write!(f, "Exponential(rate={rate})"),
            ServiceKind::Gamma { shape, rate } => write!(f, "Gamma(shape={shape}, rate={rate})"),
            ServiceKind::HyperExponential { weights, rates } => {
                write!(f, "HyperExponential(weights={weights:?}, rates={rates:?})")
            }
            ServiceKind::LogNormal { location, scale } => {
                write!(f, "LogNormal(location={location}, scale={scale})")
            }
            ServiceKind::Pareto { scale, shape } => {
                write!(f, "Pareto(scale={scale}, shape={shape})")
            }
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

impl ServiceDistribution {
    pub fn new(kind: ServiceKind) -> Result<Self> {
        match &kind {
            ServiceKind::Exponential { rate } => positive("exponential rate", *rate)?,
            ServiceKind::Gamma { shape, rate } => {
                positive("gamma shape", *shape)?;
                positive("gamma rate", *rate)?;
            }
            ServiceKind::HyperExponential { weights, rates } => {
                if weights.is_empty() || weights.len() != rates.len() {
                    return Err(Error::InvalidParameter(
                        "hyper-exponential needs equally many weights and rates (at least one)"
                            .into(),
                    ));
                }
                for &w in weights {
                    if !(w >= 0.0 && w.is_finite()) {
                        return Err(Error::InvalidParameter(format!(
                            "hyper-exponential weight must be >= 0, got {w}"
                        )));
                    }
                }
                for &r in rates {
                    positive("hyper-exponential rate", r)?;
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > WEIGHT_SUM_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "hyper-exponential weights must sum to 1, got {total}"
                    )));
                }
            }
            ServiceKind::LogNormal { location, scale } => {
                if !location.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "log-normal location must be finite, got {location}"
                    )));
                }
                positive("log-normal scale", *scale)?;
            }
            ServiceKind::Pareto { scale, shape } => {
                positive("Pareto scale", *scale)?;
                positive("Pareto shape", *shape)?;
                if *shape <= 1.0 {
                    return Err(Error::InfiniteMoment {
                        order: 1,
                        distribution: format!("Pareto(scale={scale}, shape={shape})"),
                    });
                }
            }
        }
        Ok(Self { kind })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(ServiceKind::Exponential { rate })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        Self::new(ServiceKind::Gamma { shape, rate })
    }

    pub fn hyper_exponential(weights: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        Self::new(ServiceKind::HyperExponential { weights, rates })
    }

    pub fn log_normal(location: f64, scale: f64) -> Result<Self> {
        Self::new(ServiceKind::LogNormal { location, scale })
    }

    pub fn pareto(scale: f64, shape: f64) -> Result<Self> {
        Self::new(ServiceKind::Pareto { scale, shape })
    }

    pub fn kind(&self) -> &ServiceKind {
        &self.kind
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self.kind, ServiceKind::Exponential { .. })
    }

    /// `E[S]`.
    pub fn mean(&self) -> f64 {
        match &self.kind {
            ServiceKind::Exponential { rate } => 1.0 / rate,
            ServiceKind::Gamma { shape, rate } => shape / rate,
            ServiceKind::HyperExponential { weights, rates } => {
                weights.iter().zip(rates).map(|(p, g)| p / g).sum()
            }
            ServiceKind::LogNormal { location, scale } => (location + 0.5 * scale * scale).exp(),
            // shape > 1 is enforced at construction
            ServiceKind::Pareto { scale, shape } => shape * scale / (shape - 1.0),
        }
    }

    /// Service rate `μ = 1 / E[S]`.
    pub fn rate(&self) -> f64 {
        1.0 / self.mean()
    }

    /// `E[S²]`.
    pub fn second_moment(&self) -> Result<f64> {
        Ok(match &self.kind {
            ServiceKind::Exponential { rate } => 2.0 / (rate * rate),
            ServiceKind::Gamma { shape, rate } => shape * (shape + 1.0) / (rate * rate),
            ServiceKind::HyperExponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(p, g)| 2.0 * p / (g * g))
                .sum(),
            ServiceKind::LogNormal { location, scale } => {
                (2.0 * location + 2.0 * scale * scale).exp()
            }
            ServiceKind::Pareto { scale, shape } => {
                if *shape <= 2.0 {
                    return Err(Error::InfiniteMoment {
                        order: 2,
                        distribution: self.to_string(),
                    });
                }
                shape * scale * scale / (shape - 2.0)
            }
        })
    }

    /// `L_S(a) = E[e^{-aS}]`.
    pub fn laplace(&self, a: f64) -> Result<f64> {
        self.laplace_moment(0, a)
    }

    /// `dL_S/da = -E[S e^{-aS}]`.
    pub fn laplace_d1(&self, a: f64) -> Result<f64> {
        self.laplace_moment(1, a).map(|v| -v)
    }

    /// `d²L_S/da² = E[S² e^{-aS}]`.
    pub fn laplace_d2(&self, a: f64) -> Result<f64> {
        self.laplace_moment(2, a)
    }

    /// `(L_S(a), L'_S(a), L''_S(a))`.
    pub fn laplace_with_derivatives(&self, a: f64) -> Result<(f64, f64, f64)> {
        Ok((self.laplace(a)?, self.laplace_d1(a)?, self.laplace_d2(a)?))
    }

    /// `E[S^k e^{-aS}]` for `k ∈ {0, 1, 2}`.
    fn laplace_moment(&self, k: u32, a: f64) -> Result<f64> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Laplace argument must be finite and >= 0, got {a}"
            )));
        }
        debug_assert!(k <= 2);
        let kf = k as f64;
        Ok(match &self.kind {
            ServiceKind::Exponential { rate } => gamma_moment(1.0, *rate, kf, a),
            ServiceKind::Gamma { shape, rate } => gamma_moment(*shape, *rate, kf, a),
            ServiceKind::HyperExponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(p, g)| p * gamma_moment(1.0, *g, kf, a))
                .sum(),
            ServiceKind::LogNormal { location, scale } => {
                log_normal_moment(*location, *scale, kf, a)?
            }
            ServiceKind::Pareto { scale, shape } => {
                if a == 0.0 && *shape <= kf {
                    return Err(Error::InfiniteMoment {
                        order: k,
                        distribution: self.to_string(),
                    });
                }
                pareto_moment(*scale, *shape, kf, a)?
            }
        })
    }

    /// A sampler drawing i.i.d. service times.
    pub fn sampler(&self) -> ServiceSampler {
        let inner = match &self.kind {
            ServiceKind::Exponential { rate } => SamplerKind::Exponential(Exp::new(*rate).unwrap()),
            ServiceKind::Gamma { shape, rate } => {
                SamplerKind::Gamma(Gamma::new(*shape, 1.0 / rate).unwrap())
            }
            ServiceKind::HyperExponential { weights, rates } => {
                let mut acc = 0.0;
                let cumulative = weights
                    .iter()
                    .map(|w| {
                        acc += w;
                        acc
                    })
                    .collect();
                SamplerKind::HyperExponential {
                    cumulative,
                    phases: rates.iter().map(|r| Exp::new(*r).unwrap()).collect(),
                }
            }
            ServiceKind::LogNormal { location, scale } => {
                SamplerKind::LogNormal(LogNormal::new(*location, *scale).unwrap())
            }
            ServiceKind::Pareto { scale, shape } => {
                SamplerKind::Pareto(Pareto::new(*scale, *shape).unwrap())
            }
        };
        ServiceSampler { inner }
    }

    /// One draw from `rng`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sampler().sample(rng)
    }
}

/// `E[S^k e^{-aS}]` for `S ~ Gamma(shape, rate)`, `k ∈ {0,1,2}`:
/// `(β/(β+a))^κ · κ(κ+1)…(κ+k-1)/(β+a)^k`.
fn gamma_moment(shape: f64, rate: f64, k: f64, a: f64) -> f64 {
    let b = rate + a;
    let base = (rate / b).powf(shape);
    match k as u32 {
        0 => base,
        1 => base * shape / b,
        _ => base * shape * (shape + 1.0) / (b * b),
    }
}

/// With `s = e^{ν+σz}`:
/// `E[S^k e^{-aS}] = ∫ φ(z) exp(k(ν+σz) - a e^{ν+σz}) dz`.
/// The integrand is bounded by `e^{kν + k²σ²/2} φ(z - kσ)`, so `[kσ-39, kσ+39]`
/// holds all but a negligible fraction of it.
fn log_normal_moment(location: f64, scale: f64, k: f64, a: f64) -> Result<f64> {
    let ln_norm = -0.5 * (2.0 * std::f64::consts::PI).ln();
    let integrand = |z: f64| {
        let ln_s = location + scale * z;
        let s = ln_s.exp();
        (ln_norm - 0.5 * z * z + k * ln_s - a * s).exp()
    };
    let center = k * scale;
    let breaks: Vec<f64> = (-8..=8).map(|i| center + 39.0 * i as f64 / 8.0).collect();
    let r = integrate_with_breaks(integrand, &breaks, Tolerance::new(QUAD_TOL, QUAD_TOL))?;
    Ok(r.value)
}

/// With `s = ω e^y`: `E[S^k e^{-aS}] = ∫₀^∞ α ω^k e^{(k-α)y} exp(-aω e^y) dy`.
fn pareto_moment(scale: f64, shape: f64, k: f64, a: f64) -> Result<f64> {
    let c = shape * scale.powf(k);
    let slope = k - shape;
    let log_integrand = |y: f64| c.ln() + slope * y - a * scale * y.exp();
    let integrand = |y: f64| log_integrand(y).exp();

    // Past y*, d/dy ln(integrand) = slope - aωe^y ≤ -1, so the tail beyond any
    // Y ≥ y* is bounded by the integrand at Y.
    let tail_bound = |y: f64| {
        let by_decay = if a > 0.0 && slope - a * scale * y.exp() <= -1.0 {
            log_integrand(y).exp()
        } else {
            f64::INFINITY
        };
        let by_power = if slope < 0.0 {
            log_integrand(y).exp() / -slope
        } else {
            f64::INFINITY
        };
        by_decay.min(by_power)
    };
    let mut upper = 1.0;
    while tail_bound(upper) > TAIL_BOUND {
        upper *= 1.25;
        if upper > 1e4 {
            return Err(Error::TruncationFailure(format!(
                "Pareto transform tail does not decay (scale={scale}, shape={shape}, k={k}, a={a})"
            )));
        }
    }

    let n = 16;
    let breaks: Vec<f64> = (0..=n).map(|i| upper * i as f64 / n as f64).collect();
    let r = integrate_with_breaks(integrand, &breaks, Tolerance::new(QUAD_TOL, QUAD_TOL))?;
    // With a = 0 the tail is exactly c e^{slope·Y}/(-slope).
    let tail = if a == 0.0 {
        (c.ln() + slope * upper).exp() / -slope
    } else {
        0.0
    };
    Ok(r.value + tail)
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Exponential(Exp<f64>),
    Gamma(Gamma<f64>),
    HyperExponential {
        cumulative: Vec<f64>,
        phases: Vec<Exp<f64>>,
    },
    LogNormal(LogNormal<f64>),
    Pareto(Pareto<f64>),
}

/// Prepared sampler for a [`ServiceDistribution`].
#[derive(Debug, Clone)]
pub struct ServiceSampler {
    inner: SamplerKind,
}

impl Distribution<f64> for ServiceSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.inner {
            SamplerKind::Exponential(d) => d.sample(rng),
            SamplerKind::Gamma(d) => d.sample(rng),
            SamplerKind::HyperExponential { cumulative, phases } => {
                let u: f64 = rng.random();
                let idx = cumulative
                    .iter()
                    .position(|&c| u < c)
                    .unwrap_or(phases.len() - 1);
                phases[idx].sample(rng)
            }
            SamplerKind::LogNormal(d) => d.sample(rng),
            SamplerKind::Pareto(d) => d.sample(rng),
        }
    }
}
