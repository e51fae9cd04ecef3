//! Counting-rate, goodness-of-fit and coincidence estimators.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montecarlo::EventTrain;
use crate::rng::{stream, Purpose};

/// Trains with fewer events than this get the low-count flag.
pub const LOW_COUNT: usize = 10;

/// A counting rate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub rate: f64,
    pub std_error: f64,
    pub n_events: usize,
    pub low_count: bool,
}

impl RateEstimate {
    fn poisson(count: usize, exposure: f64) -> Self {
        Self {
            rate: count as f64 / exposure,
            std_error: (count as f64).sqrt() / exposure,
            n_events: count,
            low_count: count < LOW_COUNT,
        }
    }

    pub fn record(&self, name: &str) -> EstimateRecord {
        EstimateRecord {
            name: name.to_owned(),
            estimate: self.rate,
            std_error: Some(self.std_error),
            n: self.n_events,
        }
    }
}

/// One-line JSON form shared by every estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub name: String,
    pub estimate: f64,
    pub std_error: Option<f64>,
    pub n: usize,
}

impl EstimateRecord {
    pub fn json_line(&self) -> String {
        serde_json::to_string(self).expect("plain data serializes")
    }
}

/// Counts per unit time over the train's horizon.
///
/// The standard error is the Poisson value `√n/horizon`. For a renewal
/// process whose gaps have coefficient of variation `c`, the actual spread
/// is `c` times that; see [`renewal_rate`].
pub fn empirical_rate(train: &EventTrain) -> RateEstimate {
    RateEstimate::poisson(train.len(), train.horizon())
}

/// Like [`empirical_rate`], with the standard error from the renewal
/// central limit theorem, `Var N(H) ≈ n·c²`, using the coefficient of
/// variation `c` of the observed gaps.
pub fn renewal_rate(train: &EventTrain) -> RateEstimate {
    let mut est = empirical_rate(train);
    let gaps = train.gaps();
    if gaps.len() >= 2 {
        let (mean, var) = mean_and_variance(&gaps);
        let cv2 = var / (mean * mean);
        est.std_error = (est.n_events as f64 * cv2).sqrt() / train.horizon();
    }
    est
}

/// Pooled rate of several trains, total events over total exposure.
pub fn pooled_rate(trains: &[EventTrain]) -> RateEstimate {
    let count = trains.iter().map(EventTrain::len).sum();
    let exposure = trains.iter().map(EventTrain::horizon).sum();
    RateEstimate::poisson(count, exposure)
}

/// Sample mean and unbiased variance.
pub fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Kaplan–Meier median of inter-count gaps pooled over `trains`.
///
/// The interval still open at each train's horizon is a right-censored
/// observation: dropping it would bias the estimate toward short gaps.
pub fn median_gap(trains: &[EventTrain]) -> Option<f64> {
    let mut obs: Vec<(f64, bool)> = Vec::new();
    for train in trains {
        obs.extend(train.gaps().into_iter().map(|g| (g, true)));
        obs.push((train.open_gap(), false));
    }
    kaplan_meier_median(obs)
}

/// Median of the Kaplan–Meier survival curve; `(time, observed)` pairs,
/// `observed == false` meaning right-censored.
pub fn kaplan_meier_median(mut obs: Vec<(f64, bool)>) -> Option<f64> {
    // events before censorings at tied times
    obs.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    let mut at_risk = obs.len() as f64;
    let mut survival = 1.0;
    let mut i = 0;
    while i < obs.len() {
        let t = obs[i].0;
        let mut deaths = 0.0;
        let mut leaving = 0.0;
        while i < obs.len() && obs[i].0 == t {
            if obs[i].1 {
                deaths += 1.0;
            }
            leaving += 1.0;
            i += 1;
        }
        if deaths > 0.0 {
            survival *= 1.0 - deaths / at_risk;
            if survival <= 0.5 {
                return Some(t);
            }
        }
        at_risk -= leaving;
    }
    None
}

/// Kolmogorov–Smirnov distance between sorted `samples` and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Usage(
            "KS statistic needs at least one sample".into(),
        ));
    }
    if samples.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Usage("samples must be sorted ascending".into()));
    }
    let n = samples.len() as f64;
    let d = samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            above.abs().max(below.abs())
        })
        .fold(0.0, f64::max);
    Ok(d)
}

/// Critical KS distance at significance 0.01 for large `n`.
pub fn ks_critical_01(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

fn check_same_horizon(a: &EventTrain, b: &EventTrain) -> Result<()> {
    let (ha, hb) = (a.horizon(), b.horizon());
    if (ha - hb).abs() > 1e-12 * ha.max(hb) {
        return Err(Error::Usage(format!(
            "trains observed over different horizons: {ha} and {hb}"
        )));
    }
    Ok(())
}

fn coincidence_count(a: &[f64], b: &[f64], delay: f64, window: f64) -> usize {
    let half = 0.5 * window;
    let mut j = 0;
    let mut count = 0;
    for &ta in a {
        let target = ta + delay;
        while j < b.len() && b[j] < target - half {
            j += 1;
        }
        if j < b.len() && b[j] <= target + half {
            count += 1;
            j += 1;
        }
    }
    count
}

/// Rate of pairs `(t_a, t_b)` with `|t_b - t_a - delay| <= window/2`.
///
/// Each event is used at most once; events of `a` are taken in order and
/// matched to the earliest free event of `b`, which for equal windows gives
/// the largest possible set of pairs.
pub fn coincidence_rate(
    a: &EventTrain,
    b: &EventTrain,
    delay: f64,
    window: f64,
) -> Result<RateEstimate> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::Usage(format!("window must be > 0, got {window}")));
    }
    check_same_horizon(a, b)?;
    let count = coincidence_count(a.timestamps(), b.timestamps(), delay, window);
    Ok(RateEstimate::poisson(count, a.horizon()))
}

/// `train` with its completed gaps randomly permuted.
///
/// Keeps the count and the gap distribution but scrambles where in time the
/// short and long gaps fall, destroying any slow modulation.
pub fn gap_shuffled(train: &EventTrain, seed: u64, index: u64) -> EventTrain {
    let mut gaps = train.gaps();
    let mut rng = stream(seed, Purpose::Surrogate, index);
    gaps.shuffle(&mut rng);
    let mut t = 0.0;
    let timestamps = gaps
        .into_iter()
        .map(|g| {
            t += g;
            t.min(train.horizon())
        })
        .collect();
    EventTrain::new(timestamps, train.horizon()).expect("positive gaps keep the order")
}

/// Coincidence rate of `a` against `n_surrogates` gap-shuffled copies of
/// `b`: the level expected from two uncorrelated trains with the same
/// singles statistics.
pub fn shuffled_baseline(
    a: &EventTrain,
    b: &EventTrain,
    delay: f64,
    window: f64,
    n_surrogates: usize,
    seed: u64,
) -> Result<RateEstimate> {
    if n_surrogates == 0 {
        return Err(Error::Usage("need at least one surrogate".into()));
    }
    let mut total = 0;
    for k in 0..n_surrogates {
        let shuffled = gap_shuffled(b, seed, k as u64);
        total += coincidence_rate(a, &shuffled, delay, window)?.n_events;
    }
    let exposure = a.horizon() * n_surrogates as f64;
    let mut est = RateEstimate::poisson(total, exposure);
    est.n_events = total / n_surrogates;
    est.low_count = est.n_events < LOW_COUNT;
    Ok(est)
}

/// Time average of `a(t)·b(t + delay)` over the overlap of two paths
/// sampled on the same uniform grid of spacing `step`. The delay is rounded
/// to the nearest grid lag.
pub fn cross_correlation(a: &[f64], b: &[f64], step: f64, delay: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Usage(format!(
            "paths must share a grid: lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if !(step > 0.0) {
        return Err(Error::Usage(format!("grid step must be > 0, got {step}")));
    }
    let lag = (delay / step).round();
    let n = a.len() as f64;
    if !(n - lag.abs() >= 10.0) {
        return Err(Error::Usage(format!(
            "overlap of {} samples at lag {lag} is shorter than 10",
            (n - lag.abs()).max(0.0)
        )));
    }
    let lag = lag as i64;
    let (a, b) = if lag >= 0 {
        (&a[..a.len() - lag as usize], &b[lag as usize..])
    } else {
        (&a[(-lag) as usize..], &b[..b.len() - (-lag) as usize])
    };
    Ok(a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn train(ts: Vec<f64>, h: f64) -> EventTrain {
        EventTrain::new(ts, h).unwrap()
    }

    fn poisson_train(rate: f64, horizon: f64, seed: u64) -> EventTrain {
        let mut rng = stream(seed, Purpose::Surrogate, 999);
        let mut t = 0.0;
        let mut ts = Vec::new();
        loop {
            t += -(1.0 - rng.random::<f64>()).ln() / rate;
            if t > horizon {
                break;
            }
            ts.push(t);
        }
        train(ts, horizon)
    }

    #[test]
    fn rate_examples() {
        let regular = train(
            (1..200).map(|k| 0.5 * k as f64).chain([99.999]).collect(),
            100.0,
        );
        let est = empirical_rate(&regular);
        assert_eq!(est.n_events, 200);
        assert_eq!(est.rate, 2.0);
        assert!((est.std_error - 200f64.sqrt() / 100.0).abs() < 1e-15);
        assert!(!est.low_count);

        // 0.5, 1.0, ..., 99.5 is 199 events
        let listed = train((1..200).map(|k| 0.5 * k as f64).collect(), 100.0);
        let est = empirical_rate(&listed);
        assert_eq!(est.n_events, 199);
        assert!((est.rate - 1.99).abs() < 1e-12);
        assert!((est.std_error - 0.141).abs() < 1e-3);

        let empty = empirical_rate(&train(vec![], 1e4));
        assert_eq!((empty.rate, empty.std_error, empty.n_events), (0.0, 0.0, 0));
        assert!(empty.low_count);
    }

    #[test]
    fn renewal_error_tracks_gap_spread() {
        let regular = train((1..200).map(|k| 0.5 * k as f64).collect(), 100.0);
        assert!(renewal_rate(&regular).std_error < 1e-9);
        let poisson = poisson_train(2.0, 1e4, 4);
        let ratio = renewal_rate(&poisson).std_error / empirical_rate(&poisson).std_error;
        assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn json_record_is_one_line() {
        let line = empirical_rate(&train(vec![1.0, 2.0], 4.0))
            .record("rate")
            .json_line();
        assert!(!line.contains('\n'));
        let back: EstimateRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back.estimate, 0.5);
        assert_eq!(back.n, 2);
    }

    #[test]
    fn ks_exact_quantiles() {
        // uniform law: cdf⁻¹((i - ½)/n) = (i - ½)/n
        let n = 100;
        let xs: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!((d - 0.005).abs() < 1e-15);
    }

    #[test]
    fn ks_errors() {
        assert!(matches!(ks_statistic(&[], |x| x), Err(Error::Usage(_))));
        assert!(matches!(
            ks_statistic(&[0.5, 0.2], |x| x),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn kaplan_meier_without_censoring_is_the_sample_median() {
        let obs = [5.0, 1.0, 3.0, 2.0, 4.0]
            .iter()
            .map(|&t| (t, true))
            .collect();
        assert_eq!(kaplan_meier_median(obs), Some(3.0));
        let mut obs: Vec<_> = [1.0, 2.0, 3.0].iter().map(|&t| (t, true)).collect();
        obs.push((0.5, false));
        obs.push((0.7, false));
        obs.push((0.9, false));
        // three early censorings leave only the later deaths at risk
        assert_eq!(kaplan_meier_median(obs), Some(2.0));
        assert_eq!(kaplan_meier_median(vec![(1.0, false)]), None);
    }

    #[test]
    fn coincidence_examples() {
        let a = poisson_train(1.0, 1000.0, 1);
        for w in [0.01, 0.3, 2.0] {
            assert_eq!(
                coincidence_rate(&a, &a, 0.0, w).unwrap(),
                empirical_rate(&a)
            );
        }
        let a = train(vec![1.0, 3.0, 5.0], 10.0);
        let b = train(vec![2.0, 4.0, 6.0], 10.0);
        assert_eq!(coincidence_rate(&a, &b, 0.0, 1.5).unwrap().n_events, 0);
        assert_eq!(coincidence_rate(&a, &b, 1.0, 0.1).unwrap().n_events, 3);
    }

    #[test]
    fn coincidence_errors() {
        let a = train(vec![1.0], 10.0);
        let b = train(vec![1.0], 11.0);
        assert!(matches!(
            coincidence_rate(&a, &b, 0.0, 1.0),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            coincidence_rate(&a, &a, 0.0, 0.0),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn one_to_one_matching() {
        let a = train(vec![1.0], 10.0);
        let b = train(vec![0.9, 1.0, 1.1], 10.0);
        assert_eq!(coincidence_rate(&a, &b, 0.0, 1.0).unwrap().n_events, 1);
        assert_eq!(coincidence_rate(&b, &a, 0.0, 1.0).unwrap().n_events, 1);
    }

    #[test]
    fn independent_trains_hit_the_accidental_level() {
        let (r1, r2, w, h) = (1.0, 2.0, 0.02, 2e5);
        let a = poisson_train(r1, h, 10);
        let b = poisson_train(r2, h, 11);
        let est = coincidence_rate(&a, &b, 0.0, w).unwrap();
        let expect = empirical_rate(&a).rate * empirical_rate(&b).rate * w;
        assert!(
            (est.rate / expect - 1.0).abs() < 0.1,
            "{} vs {expect}",
            est.rate
        );
        let base = shuffled_baseline(&a, &b, 0.0, w, 8, 3).unwrap();
        assert!(
            (base.rate / expect - 1.0).abs() < 0.1,
            "{} vs {expect}",
            base.rate
        );
    }

    #[test]
    fn gap_shuffle_keeps_count_and_horizon() {
        let a = poisson_train(1.0, 500.0, 2);
        let s = gap_shuffled(&a, 1, 0);
        assert_eq!(s.len(), a.len());
        assert_eq!(s.horizon(), a.horizon());
        let mut g1 = a.gaps();
        let mut g2 = s.gaps();
        g1.sort_by(f64::total_cmp);
        g2.sort_by(f64::total_cmp);
        for (x, y) in g1.iter().zip(&g2) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn cross_correlation_examples() {
        let c = vec![1.5; 100];
        assert!((cross_correlation(&c, &c, 0.1, 0.0).unwrap() - 2.25).abs() < 1e-12);
        let base: Vec<f64> = (0..200).map(|k| (k as f64 * 0.37).sin() + 2.0).collect();
        let shift = 7;
        let shifted: Vec<f64> = (0..200).map(|k| base[(k + 200 - shift) % 200]).collect();
        let got = cross_correlation(&base, &shifted, 0.5, shift as f64 * 0.5).unwrap();
        let expect = base[..200 - shift].iter().map(|x| x * x).sum::<f64>() / (200 - shift) as f64;
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn cross_correlation_errors() {
        let a = vec![1.0; 20];
        assert!(matches!(
            cross_correlation(&a, &a[..19], 1.0, 0.0),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            cross_correlation(&a, &a, 1.0, 11.0),
            Err(Error::Usage(_))
        ));
        assert!(cross_correlation(&a, &a, 1.0, 10.0).is_ok());
    }

    fn sorted_train(mut ts: Vec<f64>, h: f64) -> EventTrain {
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        train(ts, h)
    }

    proptest! {
        #[test]
        fn ks_invariant_under_monotone_maps(mut xs in proptest::collection::vec(0.001f64..0.999, 1..200)) {
            xs.sort_by(f64::total_cmp);
            let d = ks_statistic(&xs, |x| x).unwrap();
            // x ↦ x³ + x applied to both the samples and the law
            let ys: Vec<f64> = xs.iter().map(|x| x * x * x + x).collect();
            let inverse = |y: f64| crate::numerics::bisect(|x| x * x * x + x - y, 0.0, 1.0, 1e-15).unwrap();
            let d2 = ks_statistic(&ys, inverse).unwrap();
            prop_assert!((d - d2).abs() < 1e-9);
        }

        #[test]
        fn self_coincidence_is_the_singles_rate(ts in proptest::collection::vec(0.0f64..100.0, 0..100), w in 1e-3f64..5.0) {
            let a = sorted_train(ts, 100.0);
            prop_assert_eq!(coincidence_rate(&a, &a, 0.0, w).unwrap(), empirical_rate(&a));
        }

        #[test]
        fn coincidence_symmetric_under_swap(
            ta in proptest::collection::vec(0.0f64..100.0, 0..80),
            tb in proptest::collection::vec(0.0f64..100.0, 0..80),
            delay in -3.0f64..3.0,
            w in 1e-2f64..3.0,
        ) {
            let a = sorted_train(ta, 100.0);
            let b = sorted_train(tb, 100.0);
            let ab = coincidence_rate(&a, &b, delay, w).unwrap();
            let ba = coincidence_rate(&b, &a, -delay, w).unwrap();
            prop_assert_eq!(ab.n_events, ba.n_events);
        }
    }
}
