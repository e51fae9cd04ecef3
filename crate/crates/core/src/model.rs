//! Physical parameters, the radiation spectrum and signal intensity models.
//!
//! Units are natural (ħ = c = k_B = 1). The vacuum (zeropoint) fluctuations
//! do not appear in any [`SignalModel`]: they enter the detector as white
//! noise of scale [`DetectorParams::noise_scale`].

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, non_negative, positive, Error, Result};
use crate::rng::{stream, Purpose};

/// Physical identity of a threshold detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDetectorParams")]
pub struct DetectorParams {
    threshold_energy: f64,
    noise_scale: f64,
    area: f64,
    dead_time: f64,
}

#[derive(Deserialize)]
struct RawDetectorParams {
    threshold_energy: f64,
    noise_scale: f64,
    #[serde(default = "one")]
    area: f64,
    #[serde(default)]
    dead_time: f64,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<RawDetectorParams> for DetectorParams {
    type Error = Error;

    fn try_from(raw: RawDetectorParams) -> Result<Self> {
        DetectorParams::new(raw.threshold_energy, raw.noise_scale)?
            .with_area(raw.area)?
            .with_dead_time(raw.dead_time)
    }
}

impl DetectorParams {
    /// Unit-area detector with no dead time.
    pub fn new(threshold_energy: f64, noise_scale: f64) -> Result<Self> {
        Ok(Self {
            threshold_energy: positive("threshold_energy", threshold_energy)?,
            noise_scale: positive("noise_scale", noise_scale)?,
            area: 1.0,
            dead_time: 0.0,
        })
    }

    pub fn with_area(mut self, area: f64) -> Result<Self> {
        self.area = positive("area", area)?;
        Ok(self)
    }

    pub fn with_dead_time(mut self, dead_time: f64) -> Result<Self> {
        self.dead_time = non_negative("dead_time", dead_time)?;
        Ok(self)
    }

    pub fn threshold_energy(&self) -> f64 {
        self.threshold_energy
    }

    pub fn noise_scale(&self) -> f64 {
        self.noise_scale
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn dead_time(&self) -> f64 {
        self.dead_time
    }
}

/// Selects one beam of a two-beam signal. Single-beam models return the
/// same intensity on both channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    First,
    Second,
}

/// Signal intensity above the vacuum level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignalRepr", into = "SignalRepr")]
pub enum SignalModel {
    Constant(ConstantSignal),
    Piecewise(PiecewiseSignal),
    ModulatedPair(ModulatedPair),
}

/// Wire form of [`SignalModel`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum SignalRepr {
    Constant {
        intensity: f64,
    },
    Piecewise {
        breakpoints: Vec<f64>,
        levels: Vec<f64>,
    },
    ModulatedPair {
        mean: f64,
        relaxation_time: f64,
        amplitude: f64,
        cross_correlation: f64,
    },
}

impl TryFrom<SignalRepr> for SignalModel {
    type Error = Error;

    fn try_from(repr: SignalRepr) -> Result<Self> {
        match repr {
            SignalRepr::Constant { intensity } => SignalModel::constant(intensity),
            SignalRepr::Piecewise {
                breakpoints,
                levels,
            } => SignalModel::piecewise(breakpoints, levels),
            SignalRepr::ModulatedPair {
                mean,
                relaxation_time,
                amplitude,
                cross_correlation,
            } => SignalModel::modulated_pair(mean, relaxation_time, amplitude, cross_correlation),
        }
    }
}

impl From<SignalModel> for SignalRepr {
    fn from(model: SignalModel) -> Self {
        match model {
            SignalModel::Constant(c) => SignalRepr::Constant {
                intensity: c.intensity,
            },
            SignalModel::Piecewise(p) => SignalRepr::Piecewise {
                breakpoints: p.breakpoints,
                levels: p.levels,
            },
            SignalModel::ModulatedPair(m) => SignalRepr::ModulatedPair {
                mean: m.mean,
                relaxation_time: m.relaxation_time,
                amplitude: m.amplitude,
                cross_correlation: m.cross_correlation,
            },
        }
    }
}

impl SignalModel {
    pub fn constant(intensity: f64) -> Result<Self> {
        Ok(SignalModel::Constant(ConstantSignal {
            intensity: non_negative("intensity", intensity)?,
        }))
    }

    /// Level `levels[i]` holds on `[breakpoints[i-1], breakpoints[i])`, with
    /// the first level starting at 0 and the last running forever.
    pub fn piecewise(breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        PiecewiseSignal::new(breakpoints, levels).map(SignalModel::Piecewise)
    }

    pub fn modulated_pair(
        mean: f64,
        relaxation_time: f64,
        amplitude: f64,
        cross_correlation: f64,
    ) -> Result<Self> {
        ModulatedPair::new(mean, relaxation_time, amplitude, cross_correlation)
            .map(SignalModel::ModulatedPair)
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, SignalModel::ModulatedPair(_))
    }

    /// Intensity on `channel` at time `t`.
    ///
    /// The stochastic pair needs `seed` and evaluates the same realization
    /// the detector simulations see for that seed.
    pub fn intensity(&self, channel: Channel, t: f64, seed: Option<u64>) -> Result<f64> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!(
                "time must be finite and >= 0, got {t}"
            )));
        }
        match (self, seed) {
            (SignalModel::Constant(c), _) => Ok(c.intensity),
            (SignalModel::Piecewise(p), _) => Ok(p.level_at(t)),
            (SignalModel::ModulatedPair(_), None) => Err(Error::Usage(
                "the modulated pair is stochastic: a seed is required".into(),
            )),
            (SignalModel::ModulatedPair(m), Some(seed)) => {
                let path = PairPath::realize(m, seed, t)?;
                let k = path.index_of(t);
                Ok(match channel {
                    Channel::First => path.first[k],
                    Channel::Second => path.second[k],
                })
            }
        }
    }

    /// Exact `∫_{t0}^{t1} I(t) dt` for the deterministic variants.
    pub fn integrated_signal(&self, t0: f64, t1: f64) -> Result<f64> {
        if !(0.0 <= t0 && t0 <= t1 && t1.is_finite()) {
            return Err(Error::Domain(format!(
                "need 0 <= t0 <= t1 < inf, got [{t0}, {t1}]"
            )));
        }
        match self {
            SignalModel::Constant(c) => Ok(c.integral(t0, t1)),
            SignalModel::Piecewise(p) => Ok(p.integral(t0, t1)),
            SignalModel::ModulatedPair(_) => Err(Error::Usage(
                "integrated_signal needs a deterministic model; integrate a realized PairPath instead"
                    .into(),
            )),
        }
    }
}

/// Time-integrable intensity, as consumed by the detector simulation.
pub trait IntensityPath: Sync {
    /// `∫_{t0}^{t1} I(t) dt` for `0 <= t0 <= t1`.
    fn integral(&self, t0: f64, t1: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantSignal {
    intensity: f64,
}

impl ConstantSignal {
    pub fn intensity(&self) -> f64 {
        self.intensity
    }
}

impl IntensityPath for ConstantSignal {
    #[inline]
    fn integral(&self, t0: f64, t1: f64) -> f64 {
        self.intensity * (t1 - t0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseSignal {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
    // cumulative integral from 0 to each breakpoint
    cumulative: Vec<f64>,
}

impl PiecewiseSignal {
    fn new(breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if levels.len() != breakpoints.len() + 1 {
            return Err(invalid(
                "levels",
                format!(
                    "need one more level than breakpoints, got {} levels for {} breakpoints",
                    levels.len(),
                    breakpoints.len()
                ),
            ));
        }
        for &l in &levels {
            non_negative("levels", l)?;
        }
        for &b in &breakpoints {
            positive("breakpoints", b)?;
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("breakpoints", "must be strictly increasing"));
        }
        let mut cumulative = Vec::with_capacity(breakpoints.len());
        let mut acc = 0.0;
        let mut start = 0.0;
        for (b, l) in breakpoints.iter().zip(&levels) {
            acc += l * (b - start);
            cumulative.push(acc);
            start = *b;
        }
        Ok(Self {
            breakpoints,
            levels,
            cumulative,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    fn segment(&self, t: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= t)
    }

    fn level_at(&self, t: f64) -> f64 {
        self.levels[self.segment(t)]
    }

    // ∫_0^t
    fn antiderivative(&self, t: f64) -> f64 {
        let k = self.segment(t);
        if k == 0 {
            self.levels[0] * t
        } else {
            self.cumulative[k - 1] + self.levels[k] * (t - self.breakpoints[k - 1])
        }
    }
}

impl IntensityPath for PiecewiseSignal {
    fn integral(&self, t0: f64, t1: f64) -> f64 {
        if self.segment(t0) == self.segment(t1) {
            // one segment: avoid the cancellation in the antiderivative difference
            self.level_at(t0) * (t1 - t0)
        } else {
            self.antiderivative(t1) - self.antiderivative(t0)
        }
    }
}

/// Two beams whose intensities fluctuate slowly around a common mean.
///
/// Each beam is `max(0, mean + amplitude·X)` with `X` a unit-variance
/// stationary Ornstein–Uhlenbeck process of correlation time
/// `relaxation_time`. The two driving processes have equal-time correlation
/// `cross_correlation`, so before clamping
/// `⟨I₁(t)I₂(t+τ)⟩ = mean² + cross_correlation·amplitude²·exp(-|τ|/relaxation_time)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulatedPair {
    mean: f64,
    relaxation_time: f64,
    amplitude: f64,
    cross_correlation: f64,
}

/// Realized paths are piecewise constant on a grid of this many points per
/// relaxation time.
pub const PATH_POINTS_PER_RELAXATION: f64 = 100.0;

impl ModulatedPair {
    fn new(
        mean: f64,
        relaxation_time: f64,
        amplitude: f64,
        cross_correlation: f64,
    ) -> Result<Self> {
        non_negative("mean", mean)?;
        positive("relaxation_time", relaxation_time)?;
        non_negative("amplitude", amplitude)?;
        if !(-1.0..=1.0).contains(&cross_correlation) {
            return Err(invalid(
                "cross_correlation",
                format!("must lie in [-1, 1], got {cross_correlation}"),
            ));
        }
        Ok(Self {
            mean,
            relaxation_time,
            amplitude,
            cross_correlation,
        })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn relaxation_time(&self) -> f64 {
        self.relaxation_time
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn cross_correlation(&self) -> f64 {
        self.cross_correlation
    }

    /// Grid spacing of realized paths.
    pub fn path_step(&self) -> f64 {
        self.relaxation_time / PATH_POINTS_PER_RELAXATION
    }

    /// Unclamped `⟨I₁(t)I₂(t+τ)⟩` of the generator.
    pub fn cross_moment(&self, delay: f64) -> f64 {
        self.mean * self.mean
            + self.cross_correlation
                * self.amplitude
                * self.amplitude
                * (-delay.abs() / self.relaxation_time).exp()
    }
}

/// One realization of a [`ModulatedPair`] on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PairPath {
    step: f64,
    first: Vec<f64>,
    second: Vec<f64>,
    first_prefix: Vec<f64>,
    second_prefix: Vec<f64>,
}

impl PairPath {
    /// Realizes the pair on `[0, horizon]`. Paths for the same seed agree on
    /// their common prefix whatever the horizon.
    pub fn realize(pair: &ModulatedPair, seed: u64, horizon: f64) -> Result<Self> {
        non_negative("horizon", horizon)?;
        let step = pair.path_step();
        let n = (horizon / step).floor() as usize + 1;
        let decay = (-step / pair.relaxation_time).exp();
        let kick = (1.0 - decay * decay).sqrt();
        let rho = pair.cross_correlation;
        let rho_c = (1.0 - rho * rho).max(0.0).sqrt();

        let mut rng_x = stream(seed, Purpose::SignalPath, 0);
        let mut rng_y = stream(seed, Purpose::SignalPath, 1);
        let mut x: f64 = rng_x.sample(StandardNormal);
        let mut y: f64 = rng_y.sample(StandardNormal);
        let mut first = Vec::with_capacity(n);
        let mut second = Vec::with_capacity(n);
        for k in 0..n {
            if k > 0 {
                x = decay * x + kick * rng_x.sample::<f64, _>(StandardNormal);
                y = decay * y + kick * rng_y.sample::<f64, _>(StandardNormal);
            }
            let x2 = rho * x + rho_c * y;
            first.push((pair.mean + pair.amplitude * x).max(0.0));
            second.push((pair.mean + pair.amplitude * x2).max(0.0));
        }
        let first_prefix = prefix(&first, step);
        let second_prefix = prefix(&second, step);
        Ok(Self {
            step,
            first,
            second,
            first_prefix,
            second_prefix,
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn first(&self) -> &[f64] {
        &self.first
    }

    pub fn second(&self) -> &[f64] {
        &self.second
    }

    pub fn channel(&self, channel: Channel) -> ChannelPath<'_> {
        match channel {
            Channel::First => ChannelPath {
                step: self.step,
                values: &self.first,
                prefix: &self.first_prefix,
            },
            Channel::Second => ChannelPath {
                step: self.step,
                values: &self.second,
                prefix: &self.second_prefix,
            },
        }
    }

    fn index_of(&self, t: f64) -> usize {
        ((t / self.step).floor() as usize).min(self.first.len() - 1)
    }
}

fn prefix(values: &[f64], step: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len() + 1);
    let mut acc = 0.0;
    out.push(acc);
    for v in values {
        acc += v * step;
        out.push(acc);
    }
    out
}

/// One beam of a realized pair, piecewise constant between grid points and
/// held at its last value past the end of the grid.
#[derive(Debug, Clone, Copy)]
pub struct ChannelPath<'a> {
    step: f64,
    values: &'a [f64],
    prefix: &'a [f64],
}

impl ChannelPath<'_> {
    fn antiderivative(&self, t: f64) -> f64 {
        let k = ((t / self.step).floor() as usize).min(self.values.len() - 1);
        self.prefix[k] + self.values[k] * (t - k as f64 * self.step)
    }
}

impl IntensityPath for ChannelPath<'_> {
    fn integral(&self, t0: f64, t1: f64) -> f64 {
        self.antiderivative(t1) - self.antiderivative(t0)
    }
}

/// Arguments of the radiation spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumQuery {
    angular_frequency: f64,
    temperature: f64,
    include_zpf: bool,
}

impl SpectrumQuery {
    pub fn new(angular_frequency: f64, temperature: f64, include_zpf: bool) -> Result<Self> {
        if !(angular_frequency > 0.0 && angular_frequency.is_finite()) {
            return Err(Error::Domain(format!(
                "angular frequency must be finite and > 0, got {angular_frequency}"
            )));
        }
        non_negative("temperature", temperature)?;
        Ok(Self {
            angular_frequency,
            temperature,
            include_zpf,
        })
    }
}

/// Spectral energy density `ω²/π² · [ω/(e^{ω/T} - 1) + ω/2]`, the last
/// (zeropoint) term only when requested. Natural units.
pub fn planck_density(q: &SpectrumQuery) -> f64 {
    let w = q.angular_frequency;
    let thermal = if q.temperature == 0.0 {
        0.0
    } else {
        w / (w / q.temperature).exp_m1()
    };
    let zpf = if q.include_zpf { 0.5 * w } else { 0.0 };
    w * w / (PI * PI) * (thermal + zpf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn planck_examples() {
        let q = SpectrumQuery::new(1.0, 0.0, true).unwrap();
        assert!((planck_density(&q) - 1.0 / (2.0 * PI * PI)).abs() < 1e-16);
        assert!((planck_density(&q) - 0.050_660).abs() < 1e-6);
        let q = SpectrumQuery::new(1.0, 0.0, false).unwrap();
        assert_eq!(planck_density(&q), 0.0);
        // Rayleigh–Jeans: expm1(x) ≈ x for x = 1e-4
        let q = SpectrumQuery::new(1e-4, 1.0, false).unwrap();
        let rj = 1e-8 / (PI * PI);
        assert!((planck_density(&q) / rj - 1.0).abs() < 1e-3);
    }

    #[test]
    fn planck_rejects_bad_frequency() {
        assert!(matches!(
            SpectrumQuery::new(0.0, 1.0, true),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            SpectrumQuery::new(-1.0, 1.0, true),
            Err(Error::Domain(_))
        ));
        assert!(SpectrumQuery::new(1.0, -1.0, true).is_err());
    }

    #[test]
    fn planck_large_ratio_does_not_produce_nan() {
        let q = SpectrumQuery::new(1e4, 1.0, false).unwrap();
        assert_eq!(planck_density(&q), 0.0);
    }

    #[test]
    fn detector_params_invariants() {
        assert!(DetectorParams::new(0.0, 1.0).is_err());
        assert!(DetectorParams::new(1.0, 0.0).is_err());
        let p = DetectorParams::new(1.0, 1.0).unwrap();
        assert_eq!(p.area(), 1.0);
        assert_eq!(p.dead_time(), 0.0);
        assert!(p.with_area(0.0).is_err());
        assert!(p.with_dead_time(-1.0).is_err());
        let p: DetectorParams =
            serde_json::from_str(r#"{"threshold_energy": 2, "noise_scale": 0.5}"#).unwrap();
        assert_eq!(p.threshold_energy(), 2.0);
        assert!(serde_json::from_str::<DetectorParams>(
            r#"{"threshold_energy": -2, "noise_scale": 0.5}"#
        )
        .is_err());
    }

    #[test]
    fn signal_intensity_examples() {
        let c = SignalModel::constant(2.5).unwrap();
        assert_eq!(c.intensity(Channel::First, 7.0, None).unwrap(), 2.5);
        let p = SignalModel::piecewise(vec![1.0], vec![3.0, 5.0]).unwrap();
        assert_eq!(p.intensity(Channel::First, 0.5, None).unwrap(), 3.0);
        assert_eq!(p.intensity(Channel::First, 1.0, None).unwrap(), 5.0);
        let m = SignalModel::modulated_pair(1.0, 10.0, 0.3, 1.0).unwrap();
        for &t in &[0.0, 3.3, 17.0] {
            let a = m.intensity(Channel::First, t, Some(11)).unwrap();
            let b = m.intensity(Channel::Second, t, Some(11)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn signal_intensity_errors() {
        let c = SignalModel::constant(1.0).unwrap();
        assert!(matches!(
            c.intensity(Channel::First, -1.0, None),
            Err(Error::Domain(_))
        ));
        let m = SignalModel::modulated_pair(1.0, 10.0, 0.3, 0.5).unwrap();
        assert!(matches!(
            m.intensity(Channel::First, 1.0, None),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            m.integrated_signal(0.0, 1.0),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn signal_model_invariants() {
        assert!(SignalModel::constant(-1.0).is_err());
        assert!(SignalModel::piecewise(vec![2.0, 1.0], vec![1.0, 1.0, 1.0]).is_err());
        assert!(SignalModel::piecewise(vec![1.0], vec![1.0]).is_err());
        assert!(SignalModel::piecewise(vec![1.0], vec![1.0, -1.0]).is_err());
        assert!(SignalModel::modulated_pair(1.0, 0.0, 0.3, 0.5).is_err());
        assert!(SignalModel::modulated_pair(1.0, 1.0, 0.3, 1.5).is_err());
    }

    #[test]
    fn integrated_signal_examples() {
        let c = SignalModel::constant(2.0).unwrap();
        assert_eq!(c.integrated_signal(0.0, 3.0).unwrap(), 6.0);
        assert_eq!(c.integrated_signal(4.0, 4.0).unwrap(), 0.0);
        let p = SignalModel::piecewise(vec![1.0], vec![1.0, 3.0]).unwrap();
        assert_eq!(p.integrated_signal(0.0, 2.0).unwrap(), 4.0);
        assert!(c.integrated_signal(2.0, 1.0).is_err());
    }

    #[test]
    fn signal_json_round_trip() {
        let json = r#"{"kind":"piecewise","breakpoints":[50.0],"levels":[1.0,3.0]}"#;
        let m: SignalModel = serde_json::from_str(json).unwrap();
        assert_eq!(serde_json::to_string(&m).unwrap(), json);
        let m: SignalModel = serde_json::from_str(
            r#"{"kind":"modulated_pair","mean":1,"relaxation_time":5,"amplitude":0.2,"cross_correlation":0.8}"#,
        )
        .unwrap();
        assert!(m.is_stochastic());
        assert!(
            serde_json::from_str::<SignalModel>(r#"{"kind":"constant","intensity":-1}"#).is_err()
        );
        assert!(serde_json::from_str::<SignalModel>(r#"{"kind":"ramp"}"#).is_err());
    }

    #[test]
    fn realized_path_is_prefix_stable() {
        let pair = ModulatedPair::new(1.0, 2.0, 0.5, 0.3).unwrap();
        let short = PairPath::realize(&pair, 5, 10.0).unwrap();
        let long = PairPath::realize(&pair, 5, 50.0).unwrap();
        assert_eq!(short.first(), &long.first()[..short.first().len()]);
        assert_eq!(short.second(), &long.second()[..short.second().len()]);
        assert!(long.first().iter().chain(long.second()).all(|&v| v >= 0.0));
    }

    #[test]
    fn channel_integral_matches_sum() {
        let pair = ModulatedPair::new(1.0, 1.0, 0.5, 0.0).unwrap();
        let path = PairPath::realize(&pair, 9, 3.0).unwrap();
        let ch = path.channel(Channel::Second);
        let k = 150;
        let direct: f64 = path.second()[..k].iter().sum::<f64>() * path.step();
        assert!((ch.integral(0.0, k as f64 * path.step()) - direct).abs() < 1e-12);
        let split = ch.integral(0.0, 1.234) + ch.integral(1.234, 2.5);
        assert!((split - ch.integral(0.0, 2.5)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn planck_monotone_in_temperature(w in 1e-3f64..50.0, t1 in 0.0f64..20.0, dt in 1e-3f64..20.0, zpf: bool) {
            let lo = planck_density(&SpectrumQuery::new(w, t1, zpf).unwrap());
            let hi = planck_density(&SpectrumQuery::new(w, t1 + dt, zpf).unwrap());
            prop_assert!(hi >= lo);
        }

        #[test]
        fn zpf_term_is_temperature_independent(w in 1e-2f64..20.0, t in 0.0f64..20.0) {
            let with = planck_density(&SpectrumQuery::new(w, t, true).unwrap());
            let without = planck_density(&SpectrumQuery::new(w, t, false).unwrap());
            let zpf = w * w * w / (2.0 * PI * PI);
            prop_assert!(((with - without) - zpf).abs() <= 8.0 * f64::EPSILON * with);
        }

        #[test]
        fn piecewise_integral_is_additive(
            levels in proptest::collection::vec(0.0f64..10.0, 1..6),
            a in 0.0f64..10.0, b in 0.0f64..10.0, c in 0.0f64..10.0,
        ) {
            let breakpoints: Vec<f64> = (1..levels.len()).map(|i| 1.7 * i as f64).collect();
            let m = SignalModel::piecewise(breakpoints, levels).unwrap();
            let mut x = [a, b, c];
            x.sort_by(f64::total_cmp);
            let lhs = m.integrated_signal(x[0], x[1]).unwrap() + m.integrated_signal(x[1], x[2]).unwrap();
            let rhs = m.integrated_signal(x[0], x[2]).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-13 * (1.0 + rhs.abs()));
        }

        #[test]
        fn perfectly_correlated_pair_is_identical(seed: u64, mean in 0.0f64..3.0, amp in 0.0f64..2.0) {
            let pair = ModulatedPair::new(mean, 3.0, amp, 1.0).unwrap();
            let path = PairPath::realize(&pair, seed, 5.0).unwrap();
            prop_assert_eq!(path.first(), path.second());
        }
    }
}
