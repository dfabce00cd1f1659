//! Experiment files.
//!
//! One TOML document per experiment:
//!
//! ```toml
//! service = { kind = "gamma", shape = 2.0, rate = 2.0 }
//! lambda1 = { min = 0.05, max = 0.35, steps = 7 }   # or a number, or a list
//! lambda2 = [0.2, 0.6]
//! methods = ["approx1", "simulate"]
//!
//! [sim]
//! events = 500000
//! replications = 20
//! warmup = 0.1
//! seed = 1
//! ```
//!
//! `rho1` / `rho2` may replace `lambda1` / `lambda2`; they are loads and are
//! multiplied by the service rate.

use std::fmt;
use std::path::{Path, PathBuf};

use aoi_core::ServiceDistribution;
use serde::Deserialize;
use toml::Spanned;

use crate::error::{CliError, ConfigError};

/// What to compute at each grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[value(name = "exact_mm1")]
    ExactMm1,
    #[value(name = "approx1")]
    Approx1,
    #[value(name = "approx2")]
    Approx2,
    #[value(name = "approx3")]
    Approx3,
    #[value(name = "simulate")]
    Simulate,
    #[value(name = "delay")]
    Delay,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ExactMm1 => "exact_mm1",
            Method::Approx1 => "approx1",
            Method::Approx2 => "approx2",
            Method::Approx3 => "approx3",
            Method::Simulate => "simulate",
            Method::Delay => "delay",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Simulation settings shared by every grid point.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSettings {
    /// Arrivals per replication, over all sources.
    pub events: u64,
    pub replications: usize,
    pub warmup: f64,
    pub seed: u64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            events: 500_000,
            replications: aoi_core::sim::DEFAULT_REPLICATIONS,
            warmup: aoi_core::sim::DEFAULT_WARMUP,
            seed: 1,
        }
    }
}

/// A rate axis as written in the file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum Axis {
    Single(f64),
    List(Vec<f64>),
    Range { min: f64, max: f64, steps: usize },
}

impl Axis {
    fn values(&self) -> Result<Vec<f64>, String> {
        let v = match self {
            Axis::Single(x) => vec![*x],
            Axis::List(xs) => xs.clone(),
            Axis::Range { min, max, steps } => linspace(*min, *max, *steps)?,
        };
        if v.is_empty() {
            return Err("grid is empty".into());
        }
        if let Some(x) = v.iter().find(|x| !x.is_finite()) {
            return Err(format!("grid value {x} is not finite"));
        }
        Ok(v)
    }
}

/// `steps` evenly spaced points from `min` to `max`, both included.
pub fn linspace(min: f64, max: f64, steps: usize) -> Result<Vec<f64>, String> {
    if steps == 0 {
        return Err("steps must be at least 1".into());
    }
    if !(min.is_finite() && max.is_finite()) || min > max {
        return Err(format!("need finite min <= max, got min={min} max={max}"));
    }
    if steps == 1 {
        return Ok(vec![min]);
    }
    let h = (max - min) / (steps - 1) as f64;
    let mut v: Vec<f64> = (0..steps).map(|i| min + i as f64 * h).collect();
    v[steps - 1] = max;
    Ok(v)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    service: ServiceDistribution,
    lambda1: Option<Spanned<Axis>>,
    rho1: Option<Spanned<Axis>>,
    lambda2: Option<Spanned<Axis>>,
    rho2: Option<Spanned<Axis>>,
    methods: Option<Spanned<Vec<Method>>>,
    sim: Option<Spanned<SimSettings>>,
    output: Option<PathBuf>,
}

/// A grid over `(λ₁, λ₂)` with the methods to run at each point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub service: ServiceDistribution,
    /// May be empty when the file only describes a single point; `validate`
    /// rejects that for sweeps.
    pub methods: Vec<Method>,
    pub sim: SimSettings,
    pub output: Option<PathBuf>,
}

impl SweepSpec {
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s.start));
            ConfigError::new(origin, line, None, e.message().trim_end().to_string())
        })?;
        let mu = raw.service.rate();
        let axis = |field: &str,
                    rate: Option<Spanned<Axis>>,
                    load: Option<Spanned<Axis>>,
                    default: Option<f64>| {
            let (name, spanned, scale) = match (rate, load) {
                (Some(_), Some(l)) => {
                    let name = if field == "1" { "rho1" } else { "rho2" };
                    return Err(ConfigError::new(
                        origin,
                        Some(line_of(text, l.span().start)),
                        Some(name),
                        format!("give either lambda{field} or rho{field}, not both"),
                    ));
                }
                (Some(r), None) => (format!("lambda{field}"), r, 1.0),
                (None, Some(l)) => (format!("rho{field}"), l, mu),
                (None, None) => {
                    return match default {
                        Some(d) => Ok(vec![d]),
                        None => Err(ConfigError::new(
                            origin,
                            None,
                            Some(&format!("lambda{field}")),
                            format!("missing lambda{field} (or rho{field})"),
                        )),
                    }
                }
            };
            let line = Some(line_of(text, spanned.span().start));
            let values = spanned
                .get_ref()
                .values()
                .map_err(|m| ConfigError::new(origin, line, Some(&name), m))?;
            Ok(values.into_iter().map(|v| v * scale).collect::<Vec<_>>())
        };
        let lambda1 = axis("1", raw.lambda1, raw.rho1, None)?;
        let lambda2 = axis("2", raw.lambda2, raw.rho2, Some(0.0))?;

        let methods = match raw.methods {
            Some(m) => {
                let line = Some(line_of(text, m.span().start));
                let methods = m.into_inner();
                if let Some(dup) = methods
                    .iter()
                    .enumerate()
                    .find(|(i, m)| methods[..*i].contains(m))
                {
                    return Err(ConfigError::new(
                        origin,
                        line,
                        Some("methods"),
                        format!("method {} listed twice", dup.1),
                    ));
                }
                methods
            }
            None => Vec::new(),
        };
        let (sim, sim_line) = match raw.sim {
            Some(s) => {
                let line = line_of(text, s.span().start);
                (s.into_inner(), Some(line))
            }
            None => (SimSettings::default(), None),
        };
        validate_sim(&sim)
            .map_err(|(field, m)| ConfigError::new(origin, sim_line, Some(field), m))?;

        let spec = SweepSpec {
            lambda1,
            lambda2,
            service: raw.service,
            methods,
            sim,
            output: raw.output,
        };
        spec.check_rates()
            .map_err(|(field, m)| ConfigError::new(origin, None, Some(field), m))?;
        Ok(spec)
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::parse(&text, &path.display().to_string())?)
    }

    pub fn preset(name: &str) -> Result<Self, CliError> {
        let text = preset_text(name).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown preset {name:?}; available: {}",
                PRESETS.iter().map(|p| p.0).collect::<Vec<_>>().join(", ")
            ))
        })?;
        Ok(Self::parse(text, &format!("preset {name}"))?)
    }

    /// Rejects what a sweep cannot run. Unstable points are fine.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.methods.is_empty() {
            return Err(ConfigError::new(
                "sweep",
                None,
                Some("methods"),
                "method list is empty".into(),
            ));
        }
        validate_sim(&self.sim).map_err(|(f, m)| ConfigError::new("sweep", None, Some(f), m))?;
        self.check_rates()
            .map_err(|(f, m)| ConfigError::new("sweep", None, Some(f), m))
    }

    fn check_rates(&self) -> Result<(), (&'static str, String)> {
        if let Some(x) = self.lambda1.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
            return Err((
                "lambda1",
                format!("arrival rates must be positive, got {x}"),
            ));
        }
        if let Some(x) = self.lambda2.iter().find(|&&x| !(x >= 0.0 && x.is_finite())) {
            return Err((
                "lambda2",
                format!("arrival rates must be nonnegative, got {x}"),
            ));
        }
        Ok(())
    }

    /// Grid points in output order: `λ₂` outer, `λ₁` inner.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.lambda2
            .iter()
            .flat_map(|&l2| self.lambda1.iter().map(move |&l1| (l1, l2)))
            .collect()
    }
}

fn validate_sim(s: &SimSettings) -> Result<(), (&'static str, String)> {
    if s.events == 0 {
        return Err(("sim.events", "events must be positive".into()));
    }
    if s.replications == 0 {
        return Err(("sim.replications", "replications must be at least 1".into()));
    }
    if !(0.0..=0.5).contains(&s.warmup) {
        return Err((
            "sim.warmup",
            format!("warmup must lie in [0, 0.5], got {}", s.warmup),
        ));
    }
    Ok(())
}

/// 1-based line of a byte offset.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())]
        .bytes()
        .filter(|&b| b == b'\n')
        .count()
        + 1
}

/// Parses a service distribution given inline, e.g.
/// `{kind = "pareto", scale = 0.5, shape = 4.0}`.
pub fn parse_service(inline: &str) -> Result<ServiceDistribution, ConfigError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Wrapper {
        service: ServiceDistribution,
    }
    let doc = format!("service = {inline}");
    toml::from_str::<Wrapper>(&doc)
        .map(|w| w.service)
        .map_err(|e| ConfigError::new("--service", None, None, e.message().trim_end().to_string()))
}

pub const PRESETS: &[(&str, &str)] = &[
    ("fig4", include_str!("../presets/fig4.cfg")),
    ("fig5", include_str!("../presets/fig5.cfg")),
    ("fig6", include_str!("../presets/fig6.cfg")),
    ("fig7", include_str!("../presets/fig7.cfg")),
    ("fig8", include_str!("../presets/fig8.cfg")),
    ("fig9", include_str!("../presets/fig9.cfg")),
    ("mm1-lambda2", include_str!("../presets/mm1-lambda2.cfg")),
];

pub fn preset_text(name: &str) -> Option<&'static str> {
    let name = name.strip_suffix(".cfg").unwrap_or(name);
    PRESETS.iter().find(|p| p.0 == name).map(|p| p.1)
}
