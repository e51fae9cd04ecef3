use std::path::Path;

use fpt_core::analytic::FptLaw;
use fpt_core::error::Error;
use fpt_core::model::SignalModel;
use fpt_core::montecarlo::{
    is_slow_signal, sample_fpt, simulate_coincidence, simulate_detector, EventTrain,
};
use fpt_core::pde::{solve, PdeGrid};
use fpt_core::stats::{
    coincidence_rate, cross_correlation, empirical_rate, ks_statistic, mean_and_variance,
    renewal_rate, shuffled_baseline, EstimateRecord,
};
use fpt_core::verify::{run_all, Scale};
use serde::Serialize;

use crate::config::{constant_intensity, Resolved};
use crate::error::{core_error, CliError};
use crate::output::{number, report, Header, Sink};

fn law(config: &Resolved) -> Result<FptLaw, CliError> {
    let params = config.detector.params("detector")?;
    let intensity = constant_intensity(&config.signal)?;
    FptLaw::for_detector(&params, intensity).map_err(|e| core_error("detector", e))
}

fn record(name: &str, estimate: f64, std_error: Option<f64>, n: usize) -> EstimateRecord {
    EstimateRecord {
        name: name.to_owned(),
        estimate,
        std_error,
        n,
    }
}

#[derive(Serialize)]
struct LawSummary {
    name: &'static str,
    rate: f64,
    mean_fpt: Option<f64>,
    variance_fpt: Option<f64>,
    median_fpt: f64,
}

pub fn analytic(config: &Resolved, out: Option<&Path>) -> Result<(), CliError> {
    let law = law(config)?;
    let settings = config.analytic;
    if !(settings.t_max.is_finite() && settings.t_max > 0.0) {
        return Err(schema(
            "analytic.t_max",
            format!("must be > 0, got {}", settings.t_max),
        ));
    }
    if settings.points == 0 {
        return Err(schema("analytic.points", "must be >= 1"));
    }
    let header = Header::new("analytic", config);
    let mut sink = Sink::csv(out, &header, &["t", "cdf", "pdf"])?;
    for k in 1..=settings.points {
        let t = settings.t_max * k as f64 / settings.points as f64;
        let cdf = law.cdf(t).map_err(|e| core_error("analytic", e))?;
        let pdf = law.pdf(t).map_err(|e| core_error("analytic", e))?;
        sink.row(&[t, cdf, pdf])?;
    }
    sink.finish()?;
    report(&LawSummary {
        name: "passage_law",
        rate: law.rate(),
        mean_fpt: law.mean_fpt().ok(),
        variance_fpt: law.variance_fpt().ok(),
        median_fpt: law.median_fpt(),
    });
    Ok(())
}

#[derive(Serialize)]
struct PdeSummary {
    name: &'static str,
    final_mass: f64,
    numeric_cdf: f64,
    analytic_cdf: f64,
    most_negative_density: f64,
}

pub fn pde(config: &Resolved, out: Option<&Path>) -> Result<(), CliError> {
    let law = law(config)?;
    let s = config.pde;
    if s.snapshots == 0 {
        return Err(schema("pde.snapshots", "must be >= 1"));
    }
    let grid =
        PdeGrid::for_law(&law, s.n_cells, s.dt, s.t_max).map_err(|e| core_error("pde", e))?;
    let sol = solve(&law, &grid).map_err(|e| core_error("pde", e))?;

    let header = Header::new("pde", config);
    let mut sink = Sink::csv(out, &header, &["t", "E", "rho"])?;
    let mut last_time = f64::NEG_INFINITY;
    for k in 0..=s.snapshots {
        let (t, row) = sol.density_near(s.t_max * k as f64 / s.snapshots as f64);
        if t == last_time {
            continue;
        }
        last_time = t;
        for (j, &rho) in row.iter().enumerate() {
            sink.row(&[t, grid.energy(j), rho])?;
        }
    }
    sink.finish()?;
    report(&PdeSummary {
        name: "pde",
        final_mass: *sol.mass().last().expect("at least the initial step"),
        numeric_cdf: sol.numeric_cdf(s.t_max).map_err(|e| core_error("pde", e))?,
        analytic_cdf: law.cdf(s.t_max).map_err(|e| core_error("pde", e))?,
        most_negative_density: sol.most_negative_density(),
    });
    Ok(())
}

pub fn sample(config: &Resolved, out: Option<&Path>) -> Result<(), CliError> {
    let law = law(config)?;
    let cfg = config.run.config()?;
    let samples = sample_fpt(&law, &cfg, config.n).map_err(|e| core_error("", e))?;

    let header = Header::new("sample-fpt", config);
    let mut sink = Sink::csv(out, &header, &["t"])?;
    for &t in &samples {
        sink.row(&[t])?;
    }
    sink.finish()?;

    let crossed: Vec<f64> = samples.iter().copied().filter(|t| t.is_finite()).collect();
    if crossed.len() >= 2 {
        let (mean, var) = mean_and_variance(&crossed);
        let se = (var / crossed.len() as f64).sqrt();
        report(&record("mean_fpt", mean, Some(se), crossed.len()));
    }
    let mut sorted = samples;
    sorted.sort_by(f64::total_cmp);
    let d =
        ks_statistic(&sorted, |t| law.cdf(t).unwrap_or(f64::NAN)).map_err(|e| core_error("", e))?;
    report(&record("ks_statistic", d, None, sorted.len()));
    report(&record(
        "uncrossed",
        (sorted.len() - crossed.len()) as f64,
        None,
        sorted.len(),
    ));
    Ok(())
}

fn warn_if_fast(signal: &SignalModel, config: &Resolved) -> Result<(), CliError> {
    if let SignalModel::ModulatedPair(pair) = signal {
        let first = config.detector.params("detector")?;
        let second = config.second_detector.params("second_detector")?;
        if !is_slow_signal(pair, &first) || !is_slow_signal(pair, &second) {
            eprintln!(
                "warning: relaxation_time {} is shorter than a typical inter-count interval; \
                 counts will not follow the intensity",
                pair.relaxation_time()
            );
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct TrainDocument<'a> {
    header: Header<'a>,
    train: &'a EventTrain,
}

pub fn detect(
    config: &Resolved,
    out: Option<&Path>,
    train_json: Option<&Path>,
) -> Result<(), CliError> {
    let params = config.detector.params("detector")?;
    let cfg = config.run.config()?;
    warn_if_fast(&config.signal, config)?;
    let train =
        simulate_detector(&config.signal, &params, &cfg).map_err(|e| core_error("signal", e))?;

    let header = Header::new("detect", config);
    let mut sink = Sink::csv(out, &header, &["t"])?;
    for &t in train.timestamps() {
        sink.row(&[t])?;
    }
    sink.finish()?;
    if let Some(path) = train_json {
        Sink::json(
            Some(path),
            &TrainDocument {
                header,
                train: &train,
            },
        )?;
    }
    report(&empirical_rate(&train).record("rate"));
    report(&renewal_rate(&train).record("rate_renewal_se"));
    Ok(())
}

#[derive(Serialize)]
struct PairDocument<'a> {
    header: Header<'a>,
    first: &'a EventTrain,
    second: &'a EventTrain,
}

pub fn coincide(
    config: &Resolved,
    out: Option<&Path>,
    paths_out: Option<&Path>,
) -> Result<(), CliError> {
    let first = config.detector.params("detector")?;
    let second = config.second_detector.params("second_detector")?;
    let cfg = config.run.config()?;
    let c = config.coincide;
    if !matches!(config.signal, SignalModel::ModulatedPair(_)) {
        return Err(schema(
            "signal.kind",
            "coincide needs a modulated_pair signal",
        ));
    }
    if c.surrogates == 0 {
        return Err(schema("coincide.surrogates", "must be >= 1"));
    }
    warn_if_fast(&config.signal, config)?;
    let run = simulate_coincidence(&config.signal, &first, &second, &cfg, c.noise)
        .map_err(|e| core_error("signal", e))?;

    let header = Header::new("coincide", config);
    Sink::json(
        out,
        &PairDocument {
            header: header.clone(),
            first: &run.first,
            second: &run.second,
        },
    )?;
    let paths = &run.paths;
    if let Some(path) = paths_out {
        let mut sink = Sink::csv(Some(path), &header, &["t", "I1", "I2"])?;
        for (k, (a, b)) in paths.first().iter().zip(paths.second()).enumerate() {
            sink.row(&[k as f64 * paths.step(), *a, *b])?;
        }
        sink.finish()?;
    }

    let measured = coincidence_rate(&run.first, &run.second, c.delay, c.window)
        .map_err(|e| core_error("coincide", e))?;
    let baseline = shuffled_baseline(
        &run.first,
        &run.second,
        c.delay,
        c.window,
        c.surrogates,
        cfg.seed(),
    )
    .map_err(|e| core_error("coincide", e))?;
    report(&empirical_rate(&run.first).record("rate_first"));
    report(&empirical_rate(&run.second).record("rate_second"));
    report(&measured.record("coincidence_rate"));
    report(&baseline.record("shuffled_baseline"));
    if baseline.rate > 0.0 && measured.rate > 0.0 {
        let ratio = measured.rate / baseline.rate;
        let rel = (measured.std_error / measured.rate).hypot(baseline.std_error / baseline.rate);
        report(&record(
            "coincidence_ratio",
            ratio,
            Some(ratio * rel),
            measured.n_events,
        ));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    match cross_correlation(paths.first(), paths.second(), paths.step(), c.delay) {
        Ok(product) => {
            let expect = product / (mean(paths.first()) * mean(paths.second()));
            report(&record(
                "intensity_moment_ratio",
                expect,
                None,
                paths.first().len(),
            ));
        }
        Err(Error::Usage(msg)) => eprintln!("warning: no intensity moment ratio: {msg}"),
        Err(e) => return Err(core_error("coincide", e)),
    }
    Ok(())
}

pub fn verify(quick: bool) -> Result<(), CliError> {
    let scale = if quick { Scale::Quick } else { Scale::Full };
    println!("result  check                          wall time  detail");
    let outcomes = run_all(scale, |o| println!("{}", o.line()));
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    let total_secs: f64 = outcomes.iter().map(|o| o.elapsed.as_secs_f64()).sum();
    println!(
        "{} of {} checks passed in {}s",
        outcomes.len() - failed,
        outcomes.len(),
        number((total_secs * 100.0).round() / 100.0)
    );
    if failed > 0 {
        return Err(CliError::ChecksFailed {
            failed,
            total: outcomes.len(),
        });
    }
    Ok(())
}

fn schema(path: &str, message: impl Into<String>) -> CliError {
    CliError::Schema {
        path: path.to_owned(),
        message: message.into(),
    }
}
