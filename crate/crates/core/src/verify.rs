//! The end-to-end checks behind `fpt verify` and the acceptance test target.
//!
//! Each check builds its own inputs from fixed seeds, so a run is
//! reproducible and independent of the thread count.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::analytic::FptLaw;
use crate::error::Result;
use crate::model::{planck_density, DetectorParams, SignalModel, SpectrumQuery};
use crate::montecarlo::{
    sample_fpt, simulate_coincidence, simulate_detector, NoiseStreams, RunConfig,
};
use crate::numerics::{integrate, integrate_to_infinity};
use crate::pde::{solve, PdeGrid};
use crate::stats::{
    coincidence_rate, cross_correlation, empirical_rate, ks_critical_01, ks_statistic, median_gap,
    pooled_rate, renewal_rate, shuffled_baseline,
};

/// How much work each check does.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// Sample sizes and resolutions of the acceptance thresholds.
    Full,
    /// Smaller samples with thresholds rescaled to match; a smoke run.
    Quick,
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    /// Wall-time allowance at full scale, if the check has one.
    pub budget: Option<Duration>,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] {}. {:<28} {:>8.2}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

type CheckFn = fn(Scale) -> Result<(bool, String)>;

struct Check {
    id: u8,
    name: &'static str,
    budget_secs: Option<u64>,
    run: CheckFn,
}

const CHECKS: [Check; 9] = [
    Check {
        id: 1,
        name: "rate law",
        budget_secs: Some(120),
        run: rate_law,
    },
    Check {
        id: 2,
        name: "zeropoint subtraction",
        budget_secs: Some(60),
        run: zeropoint_subtraction,
    },
    Check {
        id: 3,
        name: "passage-time distribution",
        budget_secs: Some(60),
        run: distribution_identity,
    },
    Check {
        id: 4,
        name: "mean and variance",
        budget_secs: Some(60),
        run: mean_and_variance,
    },
    Check {
        id: 5,
        name: "PDE vs closed form",
        budget_secs: Some(120),
        run: pde_triangle,
    },
    Check {
        id: 6,
        name: "normalization and barrier",
        budget_secs: None,
        run: normalization,
    },
    Check {
        id: 7,
        name: "time-varying signal",
        budget_secs: None,
        run: time_varying,
    },
    Check {
        id: 8,
        name: "coincidence proportionality",
        budget_secs: Some(180),
        run: coincidences,
    },
    Check {
        id: 9,
        name: "Planck spectrum",
        budget_secs: None,
        run: planck,
    },
];

/// Number of checks.
pub const N_CHECKS: usize = CHECKS.len();

/// Runs check `id` (1-based).
pub fn run_check(id: u8, scale: Scale) -> Option<CheckOutcome> {
    let check = CHECKS.iter().find(|c| c.id == id)?;
    let start = Instant::now();
    let result = (check.run)(scale);
    let elapsed = start.elapsed();
    let budget = check.budget_secs.map(Duration::from_secs);
    let (mut passed, mut detail) = match result {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    if let (Scale::Full, Some(b)) = (scale, budget) {
        if elapsed > b {
            passed = false;
            detail.push_str(&format!("; over the {}s budget", b.as_secs()));
        }
    }
    Some(CheckOutcome {
        id,
        name: check.name,
        passed,
        detail,
        elapsed,
        budget,
    })
}

/// Runs every check in order, calling `report` as each one finishes.
pub fn run_all(scale: Scale, mut report: impl FnMut(&CheckOutcome)) -> Vec<CheckOutcome> {
    CHECKS
        .iter()
        .map(|c| {
            let outcome = run_check(c.id, scale).expect("listed check");
            report(&outcome);
            outcome
        })
        .collect()
}

const REFERENCE_STEP: f64 = 1e-3;
const PARAMETER_SETS: [(f64, f64, f64); 4] = [
    (1.0, 1.0, 1.0),
    (1.0, 2.0, 1.0),
    (2.0, 1.0, 0.5),
    (1.0, 1.0, 5.0),
];

fn rate_law(_: Scale) -> Result<(bool, String)> {
    let horizon = 1e4;
    let estimates = PARAMETER_SETS
        .par_iter()
        .enumerate()
        .map(|(i, &(em, is, sigma))| {
            let params = DetectorParams::new(em, sigma)?;
            let cfg = RunConfig::new(100 + i as u64, REFERENCE_STEP, horizon)?;
            let train = simulate_detector(&SignalModel::constant(is)?, &params, &cfg)?;
            Ok((is / em, renewal_rate(&train), empirical_rate(&train)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut passed = true;
    let mut parts = Vec::new();
    for (&(em, is, sigma), (expect, est, poisson)) in PARAMETER_SETS.iter().zip(&estimates) {
        let z = (est.rate - expect) / est.std_error;
        let z_poisson = (est.rate - expect) / poisson.std_error;
        passed &= z.abs() < 3.0;
        parts.push(format!(
            "({em},{is},{sigma}) R={:.4} z={z:+.2} (poisson z={z_poisson:+.2})",
            est.rate
        ));
    }
    let (a, b) = (&estimates[0].1, &estimates[3].1);
    let combined = a.std_error.hypot(b.std_error);
    let z_sigma = (a.rate - b.rate) / combined;
    passed &= z_sigma.abs() < 3.0;
    parts.push(format!("sigma 1 vs 5: z={z_sigma:+.2}"));
    Ok((passed, parts.join("; ")))
}

fn zeropoint_subtraction(scale: Scale) -> Result<(bool, String)> {
    let step = match scale {
        Scale::Full => REFERENCE_STEP,
        Scale::Quick => 1e-2,
    };
    let n_trains = 128;
    let params = DetectorParams::new(1.0, 1.0)?;
    let model = SignalModel::constant(0.0)?;
    let trains = (0..n_trains)
        .into_par_iter()
        .map(|i| simulate_detector(&model, &params, &RunConfig::new(200 + i, step, 1e4)?))
        .collect::<Result<Vec<_>>>()?;

    let mut rates = Vec::new();
    for h in [1e2, 1e3, 1e4] {
        let cut = trains
            .iter()
            .map(|t| t.truncated(h))
            .collect::<Result<Vec<_>>>()?;
        rates.push(pooled_rate(&cut).rate);
    }
    let decreasing = rates.windows(2).all(|w| w[1] < w[0]);
    let small = rates[2] < 0.05;
    let expect = FptLaw::new(1.0, 0.0, 1.0)?.median_fpt();
    let median = median_gap(&trains);
    let median_ok = median.is_some_and(|m| (m / expect - 1.0).abs() < 0.05);
    let detail = format!(
        "rates at 1e2/1e3/1e4 = {:.4}/{:.4}/{:.4}; median gap {} vs {expect:.4}",
        rates[0],
        rates[1],
        rates[2],
        median.map_or("none".to_owned(), |m| format!("{m:.4}")),
    );
    Ok((decreasing && small && median_ok, detail))
}

fn distribution_identity(scale: Scale) -> Result<(bool, String)> {
    let n = match scale {
        Scale::Full => 10_000,
        Scale::Quick => 2_000,
    };
    let critical = ks_critical_01(n);
    let mut passed = true;
    let mut parts = Vec::new();
    for (i, &(em, is, sigma)) in PARAMETER_SETS.iter().enumerate() {
        let law = FptLaw::new(em, is, sigma)?;
        let cfg = RunConfig::new(300 + i as u64, REFERENCE_STEP, 1e3)?;
        let mut samples = sample_fpt(&law, &cfg, n)?;
        samples.sort_by(f64::total_cmp);
        let d = ks_statistic(&samples, |t| law.cdf(t).unwrap_or(f64::NAN))?;
        passed &= d < critical;
        parts.push(format!("({em},{is},{sigma}) D={d:.4}"));
    }
    parts.push(format!("critical {critical:.4}"));
    Ok((passed, parts.join("; ")))
}

fn mean_and_variance(scale: Scale) -> Result<(bool, String)> {
    let (n, widen) = match scale {
        Scale::Full => (100_000, 1.0),
        Scale::Quick => (10_000, 10f64.sqrt()),
    };
    let law = FptLaw::new(1.0, 1.0, 1.0)?;
    let pdf = |t: f64| law.pdf(t).unwrap_or(0.0);
    let mean_ref = integrate_to_infinity(|t| t * pdf(t), 0.0, 1e-12, 1e-12)?;
    let second = integrate_to_infinity(|t| t * t * pdf(t), 0.0, 1e-12, 1e-12)?;
    let var_ref = second - mean_ref * mean_ref;

    let samples = sample_fpt(&law, &RunConfig::new(400, REFERENCE_STEP, 1e3)?, n)?;
    let (mean, var) = crate::stats::mean_and_variance(&samples);
    let mean_ok = (mean - mean_ref).abs() <= 0.01 * widen;
    let var_ok = (var - var_ref).abs() <= 0.03 * widen;
    let detail = format!(
        "mean {mean:.5} (quadrature {mean_ref:.6}), variance {var:.5} (quadrature {var_ref:.6}), n={n}"
    );
    Ok((mean_ok && var_ok, detail))
}

fn pde_triangle(_: Scale) -> Result<(bool, String)> {
    let law = FptLaw::new(1.0, 1.0, 1.0)?;
    let t_max = 5.0;
    let error_at = |n_cells: usize, dt: f64| -> Result<f64> {
        let sol = solve(&law, &PdeGrid::for_law(&law, n_cells, dt, t_max)?)?;
        let mut worst = 0.0f64;
        for k in 0..=490 {
            let t = 0.1 + 0.01 * k as f64;
            worst = worst.max((sol.numeric_cdf(t)? - law.cdf(t)?).abs());
        }
        Ok(worst)
    };
    let fine = error_at(2048, 1e-3)?;
    let coarse = error_at(1024, 2e-3)?;
    let ratio = coarse / fine;
    let detail =
        format!("max error {fine:.2e} at 2048/1e-3, {coarse:.2e} at 1024/2e-3, ratio {ratio:.2}");
    Ok((fine < 1e-3 && ratio >= 3.0, detail))
}

fn normalization(_: Scale) -> Result<(bool, String)> {
    let law = FptLaw::new(1.0, 1.0, 1.0)?;
    let mut analytic_worst = 0.0f64;
    let mut barrier_zero = true;
    for t in [0.05, 0.3, 1.0, 2.5, 5.0] {
        let lo = law.drift() * t - 40.0 * law.noise_scale() * t.sqrt();
        let rho = |e: f64| law.transition_density(e, t).unwrap_or(f64::NAN);
        let mass = integrate(rho, lo, law.threshold(), 1e-14, 1e-13)?;
        analytic_worst = analytic_worst.max((mass + law.cdf(t)? - 1.0).abs());
        barrier_zero &= law.transition_density(law.threshold(), t)? == 0.0;
    }

    let sol = solve(&law, &PdeGrid::for_law(&law, 2048, 1e-3, 5.0)?)?;
    let pde_worst = sol
        .mass()
        .iter()
        .zip(sol.barrier_outflux())
        .map(|(m, p)| (m + p - 1.0).abs())
        .fold(0.0, f64::max);
    let column_zero = sol
        .rows()
        .iter()
        .all(|row| *row.last().expect("non-empty row") == 0.0);
    let passed = analytic_worst < 1e-8 && barrier_zero && pde_worst < 1e-6 && column_zero;
    let detail = format!(
        "analytic |mass+P-1| {analytic_worst:.1e}, PDE per step {pde_worst:.1e}, barrier zero {}",
        barrier_zero && column_zero
    );
    Ok((passed, detail))
}

fn time_varying(_: Scale) -> Result<(bool, String)> {
    let model = SignalModel::piecewise(vec![50.0], vec![1.0, 3.0])?;
    let params = DetectorParams::new(1.0, 0.1)?;
    let train = simulate_detector(
        &model,
        &params,
        &RunConfig::new(700, REFERENCE_STEP, 100.0)?,
    )?;
    let early = train.count_between(0.0, 50.0) as f64;
    let late = train.count_between(50.0, 100.0) as f64;
    let passed = (early / 50.0 - 1.0).abs() < 0.1 && (late / 150.0 - 1.0).abs() < 0.1;
    Ok((
        passed,
        format!("counts {early} (expect 50) and {late} (expect 150)"),
    ))
}

fn coincidences(scale: Scale) -> Result<(bool, String)> {
    let (step, horizon) = match scale {
        Scale::Full => (REFERENCE_STEP, 2e5),
        Scale::Quick => (1e-2, 5e4),
    };
    let window = 0.1;
    let params = DetectorParams::new(1.0, 1.0)?;
    let mut passed = true;
    let mut parts = Vec::new();
    for rho in [0.0, 0.8] {
        let model = SignalModel::modulated_pair(1.0, 20.0, 0.6, rho)?;
        let cfg = RunConfig::new(800, step, horizon)?;
        let run = simulate_coincidence(&model, &params, &params, &cfg, NoiseStreams::Independent)?;
        let measured = coincidence_rate(&run.first, &run.second, 0.0, window)?;
        let baseline = shuffled_baseline(&run.first, &run.second, 0.0, window, 8, 800)?;
        let ratio = measured.rate / baseline.rate;

        let paths = &run.paths;
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let product = cross_correlation(paths.first(), paths.second(), paths.step(), 0.0)?;
        let expect = product / (mean(paths.first()) * mean(paths.second()));
        passed &= !run.slow_signal_violated && (ratio / expect - 1.0).abs() < 0.1;
        parts.push(format!("rho {rho}: ratio {ratio:.4} vs {expect:.4}"));
    }
    Ok((passed, parts.join("; ")))
}

fn planck(_: Scale) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    let mut passed = true;
    for omega in [0.1, 1.0, 10.0] {
        for temperature in [0.0, 1.0, 10.0] {
            let with = planck_density(&SpectrumQuery::new(omega, temperature, true)?);
            let without = planck_density(&SpectrumQuery::new(omega, temperature, false)?);
            let expect = omega.powi(3) / (2.0 * PI * PI);
            let err = (with - without - expect).abs();
            passed &= err <= 8.0 * f64::EPSILON * with;
            worst = worst.max(err / expect);
        }
    }
    let omega = 1e-4;
    let rj = planck_density(&SpectrumQuery::new(omega, 1.0, false)?) / (omega * omega / (PI * PI));
    passed &= (rj - 1.0).abs() < 1e-3;
    Ok((
        passed,
        format!("worst relative difference {worst:.1e}; Rayleigh-Jeans ratio {rj:.6}"),
    ))
}
