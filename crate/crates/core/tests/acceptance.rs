//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use aoi_core::analytic::{approx_gap, laplace_system_time, p_brief_closed_form};
use aoi_core::specfun::{bessel_i, bessel_i_scaled, marcum_q};
use aoi_core::transient::{ctmc_distribution, TransientKernel};
use aoi_core::{
    aoi_approx1, aoi_approx2, aoi_approx3, aoi_exact_mm1, aoi_single_source_mg1, mean_wait, psi,
    simulate, Horizon, PsiParams, QueueConfig, ServiceDistribution, SimSpec,
};

/// Name and check of one acceptance criterion.
type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

fn exp(mu: f64) -> ServiceDistribution {
    ServiceDistribution::exponential(mu).unwrap()
}

fn figure_services() -> Vec<(&'static str, ServiceDistribution)> {
    vec![
        ("gamma(2,2)", ServiceDistribution::gamma(2.0, 2.0).unwrap()),
        (
            "pareto(0.5,4)",
            ServiceDistribution::pareto(0.5, 4.0).unwrap(),
        ),
        (
            "lognormal(1,1)",
            ServiceDistribution::log_normal(1.0, 1.0).unwrap(),
        ),
        (
            "hyperexp(0.5,1,1.5)",
            ServiceDistribution::hyper_exponential(vec![1.0 / 3.0; 3], vec![0.5, 1.0, 1.5])
                .unwrap(),
        ),
    ]
}

fn sim_spec(cfg: &QueueConfig, events: u64, seed: u64) -> SimSpec {
    SimSpec::new(cfg, Horizon::Events(events), seed)
        .unwrap()
        .replications(20)
        .unwrap()
}

fn transient_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for &(lambda2, mu) in &[(0.3, 1.0), (0.6, 1.0), (1.5, 2.5)] {
        for &tau in &[0.1, 0.5, 1.0, 3.0] {
            let t = tau / mu;
            for &j in &[0usize, 1, 2, 5] {
                let kernel = TransientKernel::new(lambda2, mu, t, 8, j).unwrap();
                let oracle = ctmc_distribution(j, lambda2, mu, t).unwrap();
                for m in 0..=8 {
                    let err = (kernel.prob(m, j) - oracle.get(m).copied().unwrap_or(0.0)).abs();
                    worst = worst.max(err);
                    points += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        worst <= 1e-8 && elapsed < Duration::from_secs(10),
        format!(
            "{points} points, max |diff| = {worst:.2e} (limit 1e-8), {elapsed:.2?} (limit 10 s)"
        ),
    )
}

fn exact_vs_simulation() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut rows = Vec::new();
    for (i, &l1) in [0.05, 0.1, 0.2, 0.3, 0.35].iter().enumerate() {
        let cfg = QueueConfig::new(l1, 0.6, exp(1.0)).unwrap();
        let exact = aoi_exact_mm1(&cfg).unwrap();
        let report = simulate(&sim_spec(&cfg, 500_000, 2024 + i as u64)).unwrap();
        let est = report.tagged_aoi();
        let diff = (exact - est.mean).abs();
        let ok = diff <= (0.01 * exact).max(3.0 * est.std_error);
        pass &= ok;
        rows.push(format!(
            "λ₁={l1}: exact {exact:.4} sim {:.4}±{:.4} rel {:.2}%{}",
            est.mean,
            est.std_error,
            100.0 * diff / exact,
            if ok { "" } else { " ✗" }
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(300);
    Outcome::new(
        pass,
        format!("{}; {elapsed:.2?} (limit 5 min)", rows.join("; ")),
    )
}

fn single_source_exactness() -> Outcome {
    let v = aoi_single_source_mg1(0.5, &exp(1.0)).unwrap();
    let cfg = QueueConfig::new(0.5, 1e-9, exp(1.0)).unwrap();
    let a1 = aoi_approx1(&cfg).unwrap();
    let a3 = aoi_approx3(&cfg).unwrap();
    let pass = (v - 3.5).abs() <= 1e-9 && (a1 - v).abs() <= 1e-5 && (a3 - v).abs() <= 1e-5;
    Outcome::new(
        pass,
        format!(
            "single-source {v:.12} (|Δ-3.5| ≤ 1e-9); approx1 off by {:.2e}, approx3 off by {:.2e} (limit 1e-5)",
            (a1 - v).abs(),
            (a3 - v).abs()
        ),
    )
}

/// Light and heavy interference per figure, as `ρ₂`, with the `ρ₁` grid used for each.
fn regimes() -> [(f64, &'static [f64]); 2] {
    [
        (0.2, &[0.05, 0.1, 0.2, 0.3, 0.4, 0.6]),
        (0.5, &[0.05, 0.1, 0.2, 0.3, 0.4]),
    ]
}

fn approximation_tightness() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut summary = Vec::new();
    let mut seed = 77;
    for (name, service) in figure_services() {
        let mu = service.rate();
        let mut worst1: f64 = 0.0;
        let mut worst3: f64 = 0.0;
        let mut ordered = true;
        for (rho2, rho1s) in regimes() {
            for &rho1 in rho1s {
                let cfg = QueueConfig::new(rho1 * mu, rho2 * mu, service.clone()).unwrap();
                seed += 1;
                let sim = simulate(&sim_spec(&cfg, 500_000, seed))
                    .unwrap()
                    .tagged_aoi()
                    .mean;
                let a1 = aoi_approx1(&cfg).unwrap();
                let a2 = aoi_approx2(&cfg).unwrap();
                let a3 = aoi_approx3(&cfg).unwrap();
                worst1 = worst1.max((a1 - sim).abs() / sim);
                worst3 = worst3.max((a3 - sim).abs() / sim);
                ordered &= a2 >= a1;
            }
        }
        let ok = worst1 <= 0.15 && worst3 <= 0.15 && ordered;
        pass &= ok;
        summary.push(format!(
            "{name}: max rel err approx1 {:.1}% approx3 {:.1}% approx2≥approx1 {ordered}{}",
            100.0 * worst1,
            100.0 * worst3,
            if ok { "" } else { " ✗" }
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(1200);
    Outcome::new(
        pass,
        format!("{}; {elapsed:.2?} (limit 20 min)", summary.join("; ")),
    )
}

fn pk_and_brief_probability() -> Outcome {
    let mut services = figure_services();
    services.insert(0, ("exponential(1)", exp(1.0)));
    let mut pass = true;
    let mut rows = Vec::new();
    for (i, (name, service)) in services.into_iter().enumerate() {
        let mu = service.rate();
        let cfg = QueueConfig::new(0.3 * mu, 0.4 * mu, service).unwrap();
        let report = simulate(&sim_spec(&cfg, 1_000_000, 500 + i as u64)).unwrap();
        let w = mean_wait(&cfg).unwrap();
        let pb = p_brief_closed_form(&cfg).unwrap();
        let zw = (report.mean_wait.mean - w) / report.mean_wait.std_error;
        let c = report.conditional.p_brief;
        let zp = (c.mean - pb) / c.std_error;
        let ok = zw.abs() <= 3.0 && zp.abs() <= 3.0;
        pass &= ok;
        rows.push(format!(
            "{name}: E[W] z={zw:+.2}, p_brief z={zp:+.2}{}",
            if ok { "" } else { " ✗" }
        ));
    }
    Outcome::new(pass, rows.join("; "))
}

fn psi_cross_validation() -> Outcome {
    let mut pass = true;
    let mut rows = Vec::new();
    for (i, &(l1, l2, mu)) in [(0.3, 0.4, 1.0), (0.4, 0.6, 2.0)].iter().enumerate() {
        let cfg = QueueConfig::new(l1, l2, exp(mu)).unwrap();
        let analytic =
            l1 * (1.0 - cfg.rho()) * psi(&PsiParams::from_config(&cfg).unwrap()).unwrap();
        let est = simulate(&sim_spec(&cfg, 1_000_000, 900 + i as u64))
            .unwrap()
            .conditional
            .wx_long;
        let z = (est.mean - analytic) / est.std_error;
        let ok = z.abs() <= 3.0;
        pass &= ok;
        rows.push(format!(
            "(λ₁,λ₂,μ)=({l1},{l2},{mu}): λ₁(1-ρ)Ψ {analytic:.5} sim {:.5}±{:.5} z={z:+.2}{}",
            est.mean,
            est.std_error,
            if ok { "" } else { " ✗" }
        ));
    }
    Outcome::new(pass, rows.join("; "))
}

fn numerical_hygiene() -> Outcome {
    let mut failures = Vec::new();
    let h = 1e-5;
    let mut services = figure_services();
    services.push(("exponential(1)", exp(1.0)));
    services.push((
        "lognormal(0.1,0.2)",
        ServiceDistribution::log_normal(0.1, 0.2).unwrap(),
    ));
    services.push((
        "pareto(0.25,3)",
        ServiceDistribution::pareto(0.25, 3.0).unwrap(),
    ));
    let mut fd_checks = 0;
    for (name, s) in &services {
        let mu = s.rate();
        for &a in &[0.1 * mu, 0.5 * mu, mu, 3.0 * mu] {
            let fd1 = (s.laplace(a + h).unwrap() - s.laplace(a - h).unwrap()) / (2.0 * h);
            let fd2 = (s.laplace_d1(a + h).unwrap() - s.laplace_d1(a - h).unwrap()) / (2.0 * h);
            let (d1, d2) = (s.laplace_d1(a).unwrap(), s.laplace_d2(a).unwrap());
            if (d1 - fd1).abs() > 1e-6 * d1.abs() || (d2 - fd2).abs() > 1e-6 * d2.abs() {
                failures.push(format!("L_S derivative {name} at {a}"));
            }
            fd_checks += 2;
        }
        let cfg = QueueConfig::new(0.3 * mu, 0.4 * mu, s.clone()).unwrap();
        for &a in &[0.1 * mu, 0.3 * mu, mu] {
            let t = laplace_system_time(&cfg, a).unwrap();
            let p = laplace_system_time(&cfg, a + h).unwrap();
            let m = laplace_system_time(&cfg, a - h).unwrap();
            let fd1 = (p.value - m.value) / (2.0 * h);
            let fd2 = (p.d1 - m.d1) / (2.0 * h);
            if (t.d1 - fd1).abs() > 1e-6 * t.d1.abs() || (t.d2 - fd2).abs() > 1e-6 * t.d2.abs() {
                failures.push(format!("L_T derivative {name} at {a}"));
            }
            fd_checks += 2;
        }
        let gap = approx_gap(&cfg).unwrap();
        let diff = aoi_approx2(&cfg).unwrap() - aoi_approx1(&cfg).unwrap();
        if (gap - diff).abs() > 1e-10 * gap.max(1.0) {
            failures.push(format!("approx2-approx1 gap {name}"));
        }
    }

    let mut worst_rec: f64 = 0.0;
    let mut worst_scale: f64 = 0.0;
    for &x in &[0.5, 1.0, 5.0, 20.0] {
        for k in 1..=8 {
            let (lo, mid, hi) = (
                bessel_i(k - 1, x).unwrap(),
                bessel_i(k, x).unwrap(),
                bessel_i(k + 1, x).unwrap(),
            );
            let rhs = 2.0 * k as f64 / x * mid;
            worst_rec = worst_rec.max(((lo - hi) - rhs).abs() / rhs.abs());
            let scaled = bessel_i_scaled(k, x) * x.exp();
            worst_scale = worst_scale.max((scaled - mid).abs() / mid);
        }
    }
    if worst_rec > 1e-9 {
        failures.push(format!("Bessel recurrence {worst_rec:.2e}"));
    }
    if worst_scale > 1e-12 {
        failures.push(format!("Bessel scaled vs unscaled {worst_scale:.2e}"));
    }

    let grid = [0.0, 0.5, 1.5, 3.0, 6.0];
    let mut marcum_ok = true;
    for k in 1..=3u32 {
        for &a in &grid {
            for &b in &grid {
                let q = marcum_q(k, a, b);
                marcum_ok &= (0.0..=1.0).contains(&q);
                for &b2 in grid.iter().filter(|&&b2| b2 > b) {
                    marcum_ok &= marcum_q(k, a, b2) <= q + 1e-14;
                }
                for &a2 in grid.iter().filter(|&&a2| a2 > a) {
                    marcum_ok &= marcum_q(k, a2, b) >= q - 1e-14;
                }
                marcum_ok &= marcum_q(k + 1, a, b) >= q - 1e-14;
            }
        }
    }
    if !marcum_ok {
        failures.push("Marcum Q bounds/monotonicity".into());
    }

    let p = PsiParams::new(1.0, 0.3, 0.4).unwrap();
    let tol = p.truncation.abs_tol;
    let coarse = psi(&p).unwrap();
    let fine = psi(&p.with_abs_tol(tol / 2.0)).unwrap();
    if (coarse - fine).abs() >= tol {
        failures.push(format!(
            "psi tolerance halving moved {:.2e}",
            (coarse - fine).abs()
        ));
    }

    let pass = failures.is_empty();
    Outcome::new(
        pass,
        if pass {
            format!(
                "{fd_checks} finite-difference checks, Bessel recurrence {worst_rec:.1e}, scaling {worst_scale:.1e}, Marcum 5×5×3 grid, psi halving Δ={:.1e}",
                (coarse - fine).abs()
            )
        } else {
            failures.join("; ")
        },
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("transient distribution vs uniformization", transient_oracle),
        ("exact M/M/1 vs simulation", exact_vs_simulation),
        ("single-source exactness", single_source_exactness),
        ("approximation tightness", approximation_tightness),
        (
            "Pollaczek-Khinchine and brief-event probability",
            pk_and_brief_probability,
        ),
        ("psi vs conditional Monte-Carlo", psi_cross_validation),
        ("numerical hygiene", numerical_hygiene),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        println!(
            "criterion {} {}: {name} [{:.1?}] {}",
            i + 1,
            if outcome.pass { "PASS" } else { "FAIL" },
            start.elapsed(),
            outcome.detail
        );
        if !outcome.pass {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
