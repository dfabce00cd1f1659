//! Discrete-event simulation of a single-server FCFS queue shared by several
//! Poisson sources with a common service law.
//!
//! AoI is integrated exactly: between consecutive deliveries of a source the
//! age is linear with slope one, so each inter-delivery interval contributes
//! the trapezoid `½[(d_k - g_{k-1})² - (d_{k-1} - g_{k-1})²]`.

use std::collections::VecDeque;
use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::QueueConfig;
use crate::distributions::{ServiceDistribution, ServiceSampler};
use crate::error::{Error, Result};

/// Length of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    /// Total number of arrivals over all sources.
    Events(u64),
    /// Simulated time; arrivals after it are not generated.
    Time(f64),
}

/// A simulation experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    /// Arrival rate per source; source 0 is the tagged source.
    rates: Vec<f64>,
    service: ServiceDistribution,
    horizon: Horizon,
    warmup: f64,
    seed: u64,
    replications: usize,
}

pub const DEFAULT_WARMUP: f64 = 0.1;
pub const DEFAULT_REPLICATIONS: usize = 20;

impl SimSpec {
    /// Two sources: the tagged source and the aggregate of the others.
    pub fn new(cfg: &QueueConfig, horizon: Horizon, seed: u64) -> Result<Self> {
        Self::with_sources(
            vec![cfg.lambda1(), cfg.lambda2()],
            cfg.service().clone(),
            horizon,
            seed,
        )
    }

    pub fn with_sources(
        rates: Vec<f64>,
        service: ServiceDistribution,
        horizon: Horizon,
        seed: u64,
    ) -> Result<Self> {
        let spec = Self {
            rates,
            service,
            horizon,
            warmup: DEFAULT_WARMUP,
            seed,
            replications: DEFAULT_REPLICATIONS,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn warmup(mut self, fraction: f64) -> Result<Self> {
        self.warmup = fraction;
        self.validate()?;
        Ok(self)
    }

    pub fn replications(mut self, n: usize) -> Result<Self> {
        self.replications = n;
        self.validate()?;
        Ok(self)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn service(&self) -> &ServiceDistribution {
        &self.service
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn replication_count(&self) -> usize {
        self.replications
    }

    pub fn warmup_fraction(&self) -> f64 {
        self.warmup
    }

    fn validate(&self) -> Result<()> {
        if self.rates.is_empty() || self.rates[0] <= 0.0 {
            return Err(Error::InvalidParameter(
                "the tagged source needs a positive arrival rate".into(),
            ));
        }
        if let Some(r) = self.rates.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "arrival rates must be finite and >= 0, got {r}"
            )));
        }
        if !(0.0..=0.5).contains(&self.warmup) {
            return Err(Error::InvalidParameter(format!(
                "warmup fraction must lie in [0, 0.5], got {}",
                self.warmup
            )));
        }
        if self.replications == 0 {
            return Err(Error::InvalidParameter("replications must be >= 1".into()));
        }
        match self.horizon {
            Horizon::Events(n) if n < 2 => Err(Error::InvalidParameter(format!(
                "event horizon must be >= 2, got {n}"
            ))),
            Horizon::Time(t) if !(t > 0.0 && t.is_finite()) => Err(Error::InvalidParameter(
                format!("time horizon must be positive, got {t}"),
            )),
            _ => Ok(()),
        }
    }

    fn load(&self) -> f64 {
        self.rates.iter().sum::<f64>() * self.service.mean()
    }
}

/// Mean over replications with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// Zero with a single replication.
    pub std_error: f64,
}

impl Estimate {
    pub fn from_replications(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std_error = if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Self { mean, std_error }
    }

    /// `|mean - target| ≤ k·std_error`.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error
    }
}

/// Time-average AoI of one source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AoiEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// Number of trapezoids integrated, over all replications.
    pub n_effective: u64,
    pub replication_means: Vec<f64>,
}

impl AoiEstimate {
    pub fn estimate(&self) -> Estimate {
        Estimate {
            mean: self.mean,
            std_error: self.std_error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceReport {
    pub rate: f64,
    /// `None` for sources with zero arrival rate.
    pub aoi: Option<AoiEstimate>,
    pub mean_delay: Option<Estimate>,
    pub mean_wait: Option<Estimate>,
}

/// Brief/long event statistics of the tagged source.
///
/// For packet `i`: `X` is its interarrival time, `T_prev` the system time of
/// packet `i-1` and `W` its waiting time. The event is long when `T_prev < X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalMoments {
    /// `E[W X 1{long}] = E[WX | long]·P(long)`
    pub wx_long: Estimate,
    /// `E[W X 1{brief}] = E[WX | brief]·P(brief)`
    pub wx_brief: Estimate,
    pub p_brief: Estimate,
    pub p_long: Estimate,
    pub samples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub sources: Vec<SourceReport>,
    /// Time-average number in system.
    pub mean_in_system: Estimate,
    /// Mean wait over all packets.
    pub mean_wait: Estimate,
    pub conditional: ConditionalMoments,
}

impl SimReport {
    /// AoI estimate of the tagged source.
    pub fn tagged_aoi(&self) -> &AoiEstimate {
        self.sources[0]
            .aoi
            .as_ref()
            .expect("the tagged source always has deliveries in a successful report")
    }
}

/// One generated packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Packet {
    pub source: usize,
    pub gen_time: f64,
    pub service: f64,
}

/// Per-replication accumulators.
#[derive(Debug, Clone, Default)]
struct SourceAcc {
    last_gen: Option<f64>,
    last_depart: Option<f64>,
    first_measured_depart: Option<f64>,
    area: f64,
    trapezoids: u64,
    delay_sum: f64,
    wait_sum: f64,
    measured: u64,
}

#[derive(Debug, Clone, Default)]
struct CondAcc {
    prev_gen: Option<f64>,
    prev_system: f64,
    wx_long: f64,
    wx_brief: f64,
    brief: u64,
    n: u64,
}

#[derive(Debug, Clone)]
struct Replication {
    aoi: Vec<Option<(f64, u64)>>,
    delay: Vec<Option<f64>>,
    wait: Vec<Option<f64>>,
    all_wait: f64,
    in_system: f64,
    cond: (f64, f64, f64, u64),
}

/// Processed packet, as written to a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Served {
    pub source: usize,
    pub gen_time: f64,
    pub start: f64,
    pub depart: f64,
}

impl Served {
    pub fn wait(&self) -> f64 {
        self.start - self.gen_time
    }
}

/// The FCFS engine over an arrival-ordered packet stream. Packets with
/// `measured == false` only advance the server state.
struct Engine {
    sources: Vec<SourceAcc>,
    cond: CondAcc,
    last_depart: f64,
    pending: VecDeque<f64>,
    n_in_system: usize,
    clock: f64,
    area_n: f64,
    window_start: Option<f64>,
    all_wait_sum: f64,
    all_measured: u64,
}

impl Engine {
    fn new(n_sources: usize) -> Self {
        Self {
            sources: vec![SourceAcc::default(); n_sources],
            cond: CondAcc::default(),
            last_depart: f64::NEG_INFINITY,
            pending: VecDeque::new(),
            n_in_system: 0,
            clock: 0.0,
            area_n: 0.0,
            window_start: None,
            all_wait_sum: 0.0,
            all_measured: 0,
        }
    }

    /// Advances the number-in-system integral to `t`, retiring departures.
    fn advance(&mut self, t: f64) {
        while let Some(&d) = self.pending.front() {
            if d > t {
                break;
            }
            if self.window_start.is_some() {
                self.area_n += self.n_in_system as f64 * (d - self.clock);
            }
            self.clock = d;
            self.n_in_system -= 1;
            self.pending.pop_front();
        }
        if self.window_start.is_some() {
            self.area_n += self.n_in_system as f64 * (t - self.clock);
        }
        self.clock = t;
    }

    fn push(&mut self, p: Packet, measured: bool) -> Served {
        self.advance(p.gen_time);
        if measured && self.window_start.is_none() {
            self.window_start = Some(p.gen_time);
        }
        let start = p.gen_time.max(self.last_depart);
        let depart = start + p.service;
        debug_assert!(depart >= self.last_depart, "FCFS departures out of order");
        self.last_depart = depart;
        self.pending.push_back(depart);
        self.n_in_system += 1;

        let wait = start - p.gen_time;
        if p.source == 0 {
            let c = &mut self.cond;
            if let Some(prev) = c.prev_gen {
                if measured {
                    let x = p.gen_time - prev;
                    c.n += 1;
                    if c.prev_system < x {
                        c.wx_long += wait * x;
                    } else {
                        c.wx_brief += wait * x;
                        c.brief += 1;
                    }
                }
            }
            c.prev_gen = Some(p.gen_time);
            c.prev_system = depart - p.gen_time;
        }

        let s = &mut self.sources[p.source];
        if measured {
            match (s.last_gen, s.last_depart) {
                (Some(g_prev), Some(d_prev)) if s.first_measured_depart.is_some() => {
                    s.area += 0.5 * ((depart - g_prev).powi(2) - (d_prev - g_prev).powi(2));
                    s.trapezoids += 1;
                }
                _ => s.first_measured_depart = Some(depart),
            }
            s.delay_sum += depart - p.gen_time;
            s.wait_sum += wait;
            s.measured += 1;
            self.all_wait_sum += wait;
            self.all_measured += 1;
        }
        s.last_gen = Some(p.gen_time);
        s.last_depart = Some(depart);

        Served {
            source: p.source,
            gen_time: p.gen_time,
            start,
            depart,
        }
    }

    fn finish(mut self, rates: &[f64], end: f64) -> Result<Replication> {
        self.advance(end);
        let mut aoi = Vec::with_capacity(self.sources.len());
        let mut delay = Vec::with_capacity(self.sources.len());
        let mut wait = Vec::with_capacity(self.sources.len());
        for (c, s) in self.sources.iter().enumerate() {
            if rates[c] == 0.0 {
                aoi.push(None);
                delay.push(None);
                wait.push(None);
                continue;
            }
            let (Some(d0), Some(dk)) = (s.first_measured_depart, s.last_depart) else {
                return Err(Error::NoDeliveries { source_index: c });
            };
            if s.trapezoids == 0 || dk <= d0 {
                return Err(Error::NoDeliveries { source_index: c });
            }
            aoi.push(Some((s.area / (dk - d0), s.trapezoids)));
            delay.push(Some(s.delay_sum / s.measured as f64));
            wait.push(Some(s.wait_sum / s.measured as f64));
        }
        let window = self.window_start.map(|t0| end - t0).unwrap_or(0.0);
        let n = self.cond.n.max(1) as f64;
        Ok(Replication {
            aoi,
            delay,
            wait,
            all_wait: self.all_wait_sum / self.all_measured.max(1) as f64,
            in_system: if window > 0.0 {
                self.area_n / window
            } else {
                0.0
            },
            cond: (
                self.cond.wx_long / n,
                self.cond.wx_brief / n,
                self.cond.brief as f64 / n,
                self.cond.n,
            ),
        })
    }
}

/// Stream ids: three per source (arrivals, services, spare) per replication.
fn stream_id(replication: usize, n_sources: usize, source: usize, purpose: u64) -> u64 {
    (replication as u64 * n_sources as u64 + source as u64) * 3 + purpose
}

/// Merged Poisson arrivals of all sources, with service times attached.
struct Arrivals {
    next: Vec<f64>,
    gaps: Vec<Option<Exp<f64>>>,
    arrival_rngs: Vec<ChaCha8Rng>,
    service_rngs: Vec<ChaCha8Rng>,
    sampler: ServiceSampler,
}

impl Arrivals {
    fn new(spec: &SimSpec, replication: usize) -> Self {
        let n = spec.rates.len();
        let rng = |purpose| -> Vec<ChaCha8Rng> {
            (0..n)
                .map(|c| {
                    let mut r = ChaCha8Rng::seed_from_u64(spec.seed);
                    r.set_stream(stream_id(replication, n, c, purpose));
                    r
                })
                .collect()
        };
        let mut arrival_rngs = rng(0);
        let gaps: Vec<Option<Exp<f64>>> = spec
            .rates
            .iter()
            .map(|&r| (r > 0.0).then(|| Exp::new(r).unwrap()))
            .collect();
        let next = gaps
            .iter()
            .zip(arrival_rngs.iter_mut())
            .map(|(g, rng)| g.map_or(f64::INFINITY, |g| g.sample(rng)))
            .collect();
        Self {
            next,
            gaps,
            arrival_rngs,
            service_rngs: rng(1),
            sampler: spec.service.sampler(),
        }
    }
}

impl Iterator for Arrivals {
    type Item = Packet;

    fn next(&mut self) -> Option<Packet> {
        // Ties go to the lower source index.
        let (c, &t) = self
            .next
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))?;
        if !t.is_finite() {
            return None;
        }
        let gap = self.gaps[c].expect("finite arrival implies positive rate");
        self.next[c] = t + gap.sample(&mut self.arrival_rngs[c]);
        Some(Packet {
            source: c,
            gen_time: t,
            service: self.sampler.sample(&mut self.service_rngs[c]),
        })
    }
}

fn run_stream<I, F>(
    packets: I,
    rates: &[f64],
    horizon: Horizon,
    warmup: f64,
    mut on_served: F,
) -> Result<Replication>
where
    I: Iterator<Item = Packet>,
    F: FnMut(&Served),
{
    let mut engine = Engine::new(rates.len());
    let mut end = 0.0;
    match horizon {
        Horizon::Events(total) => {
            let skip = (warmup * total as f64).floor() as u64;
            for (i, p) in packets.take(total as usize).enumerate() {
                let served = engine.push(p, i as u64 >= skip);
                on_served(&served);
                end = p.gen_time;
            }
        }
        Horizon::Time(t_end) => {
            let t_skip = warmup * t_end;
            for p in packets.take_while(|p| p.gen_time <= t_end) {
                let served = engine.push(p, p.gen_time >= t_skip);
                on_served(&served);
                end = p.gen_time;
            }
        }
    }
    engine.finish(rates, end)
}

fn run_replication(spec: &SimSpec, replication: usize) -> Result<Replication> {
    run_stream(
        Arrivals::new(spec, replication),
        &spec.rates,
        spec.horizon,
        spec.warmup,
        |_| {},
    )
}

/// Runs every replication (in parallel) and aggregates them in replication order.
pub fn simulate(spec: &SimSpec) -> Result<SimReport> {
    spec.validate()?;
    if spec.load() >= 1.0 {
        log::warn!(
            "simulating an overloaded queue (rho = {:.4}); estimates grow with the horizon",
            spec.load()
        );
    }
    let reps: Vec<Replication> = (0..spec.replications)
        .into_par_iter()
        .map(|r| run_replication(spec, r))
        .collect::<Result<_>>()?;

    let column = |f: &dyn Fn(&Replication) -> f64| -> Estimate {
        Estimate::from_replications(&reps.iter().map(f).collect::<Vec<_>>())
    };
    let sources = (0..spec.rates.len())
        .map(|c| {
            if spec.rates[c] == 0.0 {
                return SourceReport {
                    rate: 0.0,
                    aoi: None,
                    mean_delay: None,
                    mean_wait: None,
                };
            }
            let means: Vec<f64> = reps.iter().map(|r| r.aoi[c].unwrap().0).collect();
            let est = Estimate::from_replications(&means);
            SourceReport {
                rate: spec.rates[c],
                aoi: Some(AoiEstimate {
                    mean: est.mean,
                    std_error: est.std_error,
                    n_effective: reps.iter().map(|r| r.aoi[c].unwrap().1).sum(),
                    replication_means: means,
                }),
                mean_delay: Some(column(&|r| r.delay[c].unwrap())),
                mean_wait: Some(column(&|r| r.wait[c].unwrap())),
            }
        })
        .collect();
    let p_brief = column(&|r| r.cond.2);
    Ok(SimReport {
        sources,
        mean_in_system: column(&|r| r.in_system),
        mean_wait: column(&|r| r.all_wait),
        conditional: ConditionalMoments {
            wx_long: column(&|r| r.cond.0),
            wx_brief: column(&|r| r.cond.1),
            p_long: Estimate {
                mean: 1.0 - p_brief.mean,
                std_error: p_brief.std_error,
            },
            p_brief,
            samples: reps.iter().map(|r| r.cond.3).sum(),
        },
    })
}

/// Brief/long event statistics of the tagged source.
pub fn simulate_conditional_moments(spec: &SimSpec) -> Result<ConditionalMoments> {
    Ok(simulate(spec)?.conditional)
}

/// Writes every packet of one replication as CSV
/// (`source,gen_time,arrive_service,depart,wait`).
pub fn write_trace<W: Write>(spec: &SimSpec, replication: usize, mut out: W) -> Result<()> {
    spec.validate()?;
    let mut io_err: Option<io::Error> = None;
    let header = writeln!(out, "source,gen_time,arrive_service,depart,wait");
    if let Err(e) = header {
        return Err(Error::InvalidParameter(format!("trace write failed: {e}")));
    }
    run_stream(
        Arrivals::new(spec, replication),
        &spec.rates,
        spec.horizon,
        spec.warmup,
        |s| {
            if io_err.is_none() {
                if let Err(e) = writeln!(
                    out,
                    "{},{},{},{},{}",
                    s.source,
                    s.gen_time,
                    s.start,
                    s.depart,
                    s.wait()
                ) {
                    io_err = Some(e);
                }
            }
        },
    )?;
    match io_err {
        Some(e) => Err(Error::InvalidParameter(format!("trace write failed: {e}"))),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp(mu: f64) -> ServiceDistribution {
        ServiceDistribution::exponential(mu).unwrap()
    }

    #[test]
    fn hand_trace_single_source() {
        let packets = vec![
            Packet {
                source: 0,
                gen_time: 1.0,
                service: 0.5,
            },
            Packet {
                source: 0,
                gen_time: 2.0,
                service: 0.5,
            },
        ];
        let rep = run_stream(packets.into_iter(), &[1.0], Horizon::Events(2), 0.0, |_| {}).unwrap();
        let (avg, n) = rep.aoi[0].unwrap();
        assert_eq!(n, 1);
        assert!((avg - 1.0).abs() < 1e-15, "{avg}");
    }

    #[test]
    fn hand_trace_with_queueing() {
        // Arrivals 0, 0.5, 1 with service 1: departures 1, 2, 3.
        // Age rises 1→2 on (1,2), drops to 1.5 and rises to 2.5 on (2,3).
        let packets = [0.0, 0.5, 1.0].map(|t| Packet {
            source: 0,
            gen_time: t,
            service: 1.0,
        });
        let mut served = Vec::new();
        let rep = run_stream(packets.into_iter(), &[1.0], Horizon::Events(3), 0.0, |s| {
            served.push(*s)
        })
        .unwrap();
        assert_eq!(
            served.iter().map(|s| s.depart).collect::<Vec<_>>(),
            [1.0, 2.0, 3.0]
        );
        assert_eq!(
            served.iter().map(|s| s.wait()).collect::<Vec<_>>(),
            [0.0, 0.5, 1.0]
        );
        let (avg, n) = rep.aoi[0].unwrap();
        assert_eq!(n, 2);
        // ½(2² - 1²) + ½(2.5² - 1.5²) = 1.5 + 2 = 3.5 over 2 time units
        assert!((avg - 1.75).abs() < 1e-15, "{avg}");
    }

    #[test]
    fn brief_long_classification() {
        // Source 0 at 0 (service 2) and 1 (service 1): previous system time 2 ≥ X = 1 is brief;
        // source 0 at 5: previous system time 2 < X = 4 is long.
        let packets = [(0.0, 2.0), (1.0, 1.0), (5.0, 1.0)].map(|(t, s)| Packet {
            source: 0,
            gen_time: t,
            service: s,
        });
        let rep = run_stream(packets.into_iter(), &[1.0], Horizon::Events(3), 0.0, |_| {}).unwrap();
        let (wx_long, wx_brief, p_brief, n) = rep.cond;
        assert_eq!(n, 2);
        assert_eq!(p_brief, 0.5);
        // Brief packet waits 1 with X = 1; long packet waits 0.
        assert_eq!(wx_brief, 0.5);
        assert_eq!(wx_long, 0.0);
    }

    #[test]
    fn number_in_system_integral() {
        // Packets at 0 and 0.5 with service 1: N = 1 on [0,0.5), 2 on [0.5,1), 1 on [1,2).
        let packets = [0.0, 0.5].map(|t| Packet {
            source: 0,
            gen_time: t,
            service: 1.0,
        });
        let mut engine = Engine::new(1);
        for p in packets {
            engine.push(p, true);
        }
        engine.advance(2.0);
        assert!((engine.area_n - 2.5).abs() < 1e-15, "{}", engine.area_n);
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = QueueConfig::new(0.3, 0.3, exp(1.0)).unwrap();
        let spec = SimSpec::new(&cfg, Horizon::Events(20_000), 7)
            .unwrap()
            .replications(4)
            .unwrap();
        let a = simulate(&spec).unwrap();
        let b = simulate(&spec).unwrap();
        assert_eq!(a, b);
        let other = SimSpec::new(&cfg, Horizon::Events(20_000), 8)
            .unwrap()
            .replications(4)
            .unwrap();
        assert_ne!(
            simulate(&other).unwrap().tagged_aoi().mean,
            a.tagged_aoi().mean
        );
    }

    #[test]
    fn zero_rate_sources_are_skipped_and_starved_sources_fail() {
        let cfg = QueueConfig::new(0.5, 0.0, exp(1.0)).unwrap();
        let spec = SimSpec::new(&cfg, Horizon::Events(2_000), 1).unwrap();
        let r = simulate(&spec).unwrap();
        assert!(r.sources[1].aoi.is_none());

        let spec =
            SimSpec::with_sources(vec![1.0, 1e-12], exp(4.0), Horizon::Events(1_000), 1).unwrap();
        assert!(matches!(
            simulate(&spec),
            Err(Error::NoDeliveries { source_index: 1 })
        ));
    }

    #[test]
    fn spec_validation() {
        let cfg = QueueConfig::new(0.3, 0.3, exp(1.0)).unwrap();
        let spec = SimSpec::new(&cfg, Horizon::Events(100), 1).unwrap();
        assert!(spec.clone().warmup(0.6).is_err());
        assert!(spec.clone().replications(0).is_err());
        assert!(SimSpec::new(&cfg, Horizon::Time(-1.0), 1).is_err());
        assert!(SimSpec::with_sources(vec![0.0, 1.0], exp(1.0), Horizon::Events(10), 1).is_err());
    }

    #[test]
    fn time_horizon_runs() {
        let cfg = QueueConfig::new(0.5, 0.0, exp(1.0)).unwrap();
        let spec = SimSpec::new(&cfg, Horizon::Time(2.0e5), 3)
            .unwrap()
            .replications(8)
            .unwrap();
        let r = simulate(&spec).unwrap();
        let aoi = r.tagged_aoi();
        assert!((aoi.mean - 3.5).abs() < 0.1, "{}", aoi.mean);
    }

    #[test]
    fn trace_is_written() {
        let cfg = QueueConfig::new(0.3, 0.3, exp(1.0)).unwrap();
        let spec = SimSpec::new(&cfg, Horizon::Events(50), 1).unwrap();
        let mut buf = Vec::new();
        write_trace(&spec, 0, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "source,gen_time,arrive_service,depart,wait");
        assert_eq!(lines.len(), 51);
        let departs: Vec<f64> = lines[1..]
            .iter()
            .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
            .collect();
        assert!(departs.windows(2).all(|w| w[0] <= w[1]));
    }
}
