//! Grid evaluation and the CSV table it produces.

use std::io::{Read, Write};
use std::time::Instant;

use aoi_core::{
    aoi_approx1, aoi_approx2, aoi_approx3, aoi_exact_mm1, mean_delay, simulate, Horizon,
    QueueConfig, ServiceDistribution, SimSpec,
};
use rayon::prelude::*;

use crate::config::{Method, SimSettings, SweepSpec};
use crate::error::{status_tag, CliError};

pub const HEADER: [&str; 7] = [
    "lambda1",
    "lambda2",
    "method",
    "value",
    "std_error",
    "runtime_ms",
    "status",
];

pub const STATUS_OK: &str = "ok";

/// One CSV line.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub lambda1: f64,
    pub lambda2: f64,
    pub method: String,
    pub value: Option<f64>,
    /// Only for simulated values.
    pub std_error: Option<f64>,
    pub runtime_ms: Option<f64>,
    pub status: String,
}

impl Row {
    pub fn is_ok(&self) -> bool {
        self.status == STATUS_OK && self.value.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    /// Leave `runtime_ms` empty so that output is byte-for-byte reproducible.
    pub timing: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { timing: true }
    }
}

/// Value and standard error of one method at one point.
pub fn evaluate(
    method: Method,
    lambda1: f64,
    lambda2: f64,
    service: &ServiceDistribution,
    sim: &SimSettings,
) -> aoi_core::Result<(f64, Option<f64>)> {
    let cfg = QueueConfig::new(lambda1, lambda2, service.clone())?;
    let analytic = |v: aoi_core::Result<f64>| v.map(|v| (v, None));
    match method {
        Method::ExactMm1 => analytic(aoi_exact_mm1(&cfg)),
        Method::Approx1 => analytic(aoi_approx1(&cfg)),
        Method::Approx2 => analytic(aoi_approx2(&cfg)),
        Method::Approx3 => analytic(aoi_approx3(&cfg)),
        Method::Delay => analytic(mean_delay(&cfg)),
        Method::Simulate => {
            let spec = sim_spec(&cfg, sim)?;
            let aoi = simulate(&spec)?.tagged_aoi().estimate();
            Ok((aoi.mean, Some(aoi.std_error)))
        }
    }
}

pub fn sim_spec(cfg: &QueueConfig, sim: &SimSettings) -> aoi_core::Result<SimSpec> {
    SimSpec::new(cfg, Horizon::Events(sim.events), sim.seed)?
        .warmup(sim.warmup)?
        .replications(sim.replications)
}

/// Runs `f` and turns its outcome into a row.
pub fn timed_row<F>(lambda1: f64, lambda2: f64, method: &str, timing: bool, f: F) -> Row
where
    F: FnOnce() -> aoi_core::Result<(f64, Option<f64>)>,
{
    let start = Instant::now();
    let outcome = f();
    let runtime_ms = timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    let (value, std_error, status) = match outcome {
        Ok((v, se)) => (Some(v), se, STATUS_OK.to_string()),
        Err(e) => {
            log::info!("λ₁={lambda1} λ₂={lambda2} {method}: {e}");
            (None, None, status_tag(&e).to_string())
        }
    };
    Row {
        lambda1,
        lambda2,
        method: method.to_string(),
        value,
        std_error,
        runtime_ms,
        status,
    }
}

/// Evaluates every `(point, method)` pair in parallel. Rows come back in grid
/// order (`λ₂`, then `λ₁`, then method as listed). Every point uses the same
/// seed, so simulated curves share their random numbers.
pub fn run_sweep(spec: &SweepSpec, opts: SweepOptions) -> Result<Vec<Row>, CliError> {
    spec.validate()?;
    let tasks: Vec<(f64, f64, Method)> = spec
        .points()
        .into_iter()
        .flat_map(|(l1, l2)| spec.methods.iter().map(move |&m| (l1, l2, m)))
        .collect();
    log::info!(
        "{} points x {} methods, service {}",
        tasks.len() / spec.methods.len(),
        spec.methods.len(),
        spec.service
    );
    Ok(tasks
        .into_par_iter()
        .map(|(l1, l2, m)| {
            timed_row(l1, l2, m.as_str(), opts.timing, || {
                evaluate(m, l1, l2, &spec.service, &spec.sim)
            })
        })
        .collect())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Shortest round-trip decimal form, independent of locale.
pub fn write_rows<W: Write>(rows: &[Row], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            r.lambda1.to_string(),
            r.lambda2.to_string(),
            r.method.clone(),
            fmt_opt(r.value),
            fmt_opt(r.std_error),
            r.runtime_ms.map(|t| format!("{t:.3}")).unwrap_or_default(),
            r.status.clone(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R, origin: &str) -> Result<Vec<Row>, CliError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(HEADER) {
        return Err(CliError::Usage(format!(
            "{origin}: header must be `{}`, got `{}`",
            HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |col: &str, raw: &str| {
            CliError::Usage(format!(
                "{origin}:{line}: column `{col}`: cannot parse {raw:?}"
            ))
        };
        let num = |idx: usize| -> Result<f64, CliError> {
            rec[idx].parse().map_err(|_| bad(HEADER[idx], &rec[idx]))
        };
        let opt = |idx: usize| -> Result<Option<f64>, CliError> {
            if rec[idx].is_empty() {
                Ok(None)
            } else {
                num(idx).map(Some)
            }
        };
        rows.push(Row {
            lambda1: num(0)?,
            lambda2: num(1)?,
            method: rec[2].to_string(),
            value: opt(3)?,
            std_error: opt(4)?,
            runtime_ms: opt(5)?,
            status: rec[6].to_string(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(methods: Vec<Method>) -> SweepSpec {
        SweepSpec {
            lambda1: vec![0.1, 0.3, 0.5],
            lambda2: vec![0.2, 0.6],
            service: ServiceDistribution::exponential(1.0).unwrap(),
            methods,
            sim: SimSettings {
                events: 20_000,
                replications: 2,
                ..SimSettings::default()
            },
            output: None,
        }
    }

    #[test]
    fn rows_follow_grid_order() {
        let s = spec(vec![Method::Approx2, Method::Delay]);
        let rows = run_sweep(&s, SweepOptions { timing: false }).unwrap();
        assert_eq!(rows.len(), 12);
        let keys: Vec<_> = rows
            .iter()
            .map(|r| (r.lambda2, r.lambda1, r.method.as_str()))
            .collect();
        assert_eq!(keys[0], (0.2, 0.1, "approx2"));
        assert_eq!(keys[1], (0.2, 0.1, "delay"));
        assert_eq!(keys[2], (0.2, 0.3, "approx2"));
        assert_eq!(keys[6], (0.6, 0.1, "approx2"));
        assert!(rows.iter().all(|r| r.runtime_ms.is_none()));
    }

    #[test]
    fn unstable_points_are_kept() {
        let rows = run_sweep(&spec(vec![Method::Delay]), SweepOptions::default()).unwrap();
        let last = rows.last().unwrap();
        assert_eq!((last.lambda1, last.lambda2), (0.5, 0.6));
        assert_eq!(last.status, "unstable");
        assert_eq!(last.value, None);
        assert!(rows[0].is_ok());
    }

    #[test]
    fn exact_needs_exponential_service() {
        let mut s = spec(vec![Method::ExactMm1]);
        s.service = ServiceDistribution::gamma(2.0, 2.0).unwrap();
        s.lambda1 = vec![0.1];
        s.lambda2 = vec![0.2];
        let rows = run_sweep(&s, SweepOptions::default()).unwrap();
        assert_eq!(rows[0].status, "not_exponential");
    }

    #[test]
    fn empty_methods_rejected() {
        assert!(matches!(
            run_sweep(&spec(vec![]), SweepOptions::default()),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            Row {
                lambda1: 0.1,
                lambda2: 0.6,
                method: "simulate".into(),
                value: Some(12.345678901234567),
                std_error: Some(0.01),
                runtime_ms: Some(3.25),
                status: STATUS_OK.into(),
            },
            Row {
                lambda1: 0.5,
                lambda2: 0.6,
                method: "approx1".into(),
                value: None,
                std_error: None,
                runtime_ms: None,
                status: "unstable".into(),
            },
        ];
        let mut buf = Vec::new();
        write_rows(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("lambda1,lambda2,method,value,std_error,runtime_ms,status\n"));
        assert!(text.contains("0.5,0.6,approx1,,,,unstable"));
        assert_eq!(read_rows(buf.as_slice(), "t").unwrap(), rows);
    }

    #[test]
    fn wrong_header_rejected() {
        let e = read_rows("a,b\n1,2\n".as_bytes(), "t").unwrap_err();
        assert!(e.to_string().contains("header"));
    }
}
