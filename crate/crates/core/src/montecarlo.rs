//! Monte Carlo threshold detectors.
//!
//! The detector accumulates `E(t) = A∫(I_s(t') + noise) dt'` from its last
//! count and fires when `E` first reaches the threshold. The noise is white,
//! so `E` is integrated by Euler–Maruyama:
//! `E_{k+1} = E_k + A∫I_s dt + Aσ√h·ξ_k`, with the signal integral taken
//! exactly over each step.
//!
//! A step that ends below the threshold may still have crossed it in between;
//! given both endpoints this happens with the Brownian-bridge probability
//! `exp(-2(E_m - E_k)(E_m - E_{k+1})/(A²σ²h))`, and such a crossing is
//! registered at the step midpoint. A step that ends above the threshold is
//! timed by linear interpolation. The accumulator is not floored: the noise
//! is signed and `E` may wander arbitrarily far below zero.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::FptLaw;
use crate::error::{invalid, positive, Error, Result};
use crate::model::{Channel, DetectorParams, IntensityPath, ModulatedPair, PairPath, SignalModel};
use crate::rng::{stream, Purpose};

// Bridge crossings less likely than exp(-40) are not drawn.
const BRIDGE_CUTOFF: f64 = 40.0;

/// Seed, time step and horizon of a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    seed: u64,
    step: f64,
    horizon: f64,
}

impl RunConfig {
    pub fn new(seed: u64, step: f64, horizon: f64) -> Result<Self> {
        positive("step", step)?;
        positive("horizon", horizon)?;
        if step > horizon / 10.0 {
            return Err(invalid(
                "step",
                format!(
                    "must be at most horizon/10 = {}, got {step}",
                    horizon / 10.0
                ),
            ));
        }
        Ok(Self {
            seed,
            step,
            horizon,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn with_step(self, step: f64) -> Result<Self> {
        Self::new(self.seed, step, self.horizon)
    }

    pub fn with_horizon(self, horizon: f64) -> Result<Self> {
        Self::new(self.seed, self.step, horizon)
    }
}

/// Detection timestamps of one detector over `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventTrain {
    timestamps: Vec<f64>,
    horizon: f64,
}

impl EventTrain {
    pub fn new(timestamps: Vec<f64>, horizon: f64) -> Result<Self> {
        positive("horizon", horizon)?;
        if timestamps.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("timestamps", "must be strictly increasing"));
        }
        if let (Some(&first), Some(&last)) = (timestamps.first(), timestamps.last()) {
            if !(first >= 0.0 && last <= horizon) {
                return Err(invalid(
                    "timestamps",
                    format!("must lie in [0, {horizon}], got [{first}, {last}]"),
                ));
            }
        }
        Ok(Self {
            timestamps,
            horizon,
        })
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Intervals between consecutive counts. Accumulation starts at `t = 0`
    /// as if a count had just happened, so the first gap is the first
    /// timestamp itself.
    pub fn gaps(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.timestamps
            .iter()
            .map(|&t| {
                let g = t - prev;
                prev = t;
                g
            })
            .collect()
    }

    /// Time from the last count (or from 0) to the horizon: a gap that had
    /// not finished when observation stopped.
    pub fn open_gap(&self) -> f64 {
        self.horizon - self.timestamps.last().copied().unwrap_or(0.0)
    }

    /// Events in `[t0, t1)`.
    pub fn count_between(&self, t0: f64, t1: f64) -> usize {
        let lo = self.timestamps.partition_point(|&t| t < t0);
        let hi = self.timestamps.partition_point(|&t| t < t1);
        hi - lo
    }

    /// The train cut at a shorter horizon.
    pub fn truncated(&self, horizon: f64) -> Result<Self> {
        let n = self.timestamps.partition_point(|&t| t <= horizon);
        Self::new(self.timestamps[..n].to_vec(), horizon)
    }
}

struct Drift(f64);

impl IntensityPath for Drift {
    #[inline]
    fn integral(&self, t0: f64, t1: f64) -> f64 {
        self.0 * (t1 - t0)
    }
}

/// Accumulator dynamics shared by every simulation.
struct Accumulator<'a, P: IntensityPath + ?Sized> {
    path: &'a P,
    area: f64,
    threshold: f64,
    noise: f64,
    step: f64,
}

impl<P: IntensityPath + ?Sized> Accumulator<'_, P> {
    /// First time after `start` (accumulator at 0) that the threshold is
    /// reached, or `None` if it is not reached by `stop`.
    fn first_crossing(&self, start: f64, stop: f64, rng: &mut ChaCha8Rng) -> Option<f64> {
        let full_sd = self.noise * self.step.sqrt();
        let inv_var_full = 1.0 / (self.noise * self.noise * self.step);
        let mut t = start;
        let mut e = 0.0;
        while t < stop {
            let (h, sd, inv_var) = if t + self.step <= stop {
                (self.step, full_sd, inv_var_full)
            } else {
                let h = stop - t;
                (
                    h,
                    self.noise * h.sqrt(),
                    1.0 / (self.noise * self.noise * h),
                )
            };
            let xi: f64 = rng.sample(StandardNormal);
            let next = e + self.area * self.path.integral(t, t + h) + sd * xi;
            let to_go = self.threshold - e;
            if next >= self.threshold {
                let frac = to_go / (next - e);
                return Some(after(t, t + frac * h));
            }
            let exponent = 2.0 * to_go * (self.threshold - next) * inv_var;
            if exponent < BRIDGE_CUTOFF && rng.random::<f64>() < (-exponent).exp() {
                return Some(after(t, t + 0.5 * h));
            }
            t += h;
            e = next;
        }
        None
    }

    fn event_train(&self, dead_time: f64, horizon: f64, rng: &mut ChaCha8Rng) -> EventTrain {
        let mut timestamps = Vec::new();
        let mut start = 0.0;
        while start < horizon {
            match self.first_crossing(start, horizon, rng) {
                Some(t) => {
                    timestamps.push(t);
                    start = t + dead_time;
                }
                None => break,
            }
        }
        EventTrain {
            timestamps,
            horizon,
        }
    }
}

// A crossing strictly after `t`, even when the offset is below rounding.
#[inline]
fn after(t: f64, candidate: f64) -> f64 {
    if candidate > t {
        candidate
    } else {
        t.next_up()
    }
}

/// `n` independent first-passage times of `law`, each from its own stream.
///
/// Trajectories that have not crossed by `cfg.horizon` are reported as
/// `f64::INFINITY`. The output depends only on `(seed, n, step, horizon)`,
/// not on the number of worker threads.
pub fn sample_fpt(law: &FptLaw, cfg: &RunConfig, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("n", "at least one sample is required"));
    }
    let drift = Drift(law.drift());
    let acc = Accumulator {
        path: &drift,
        area: 1.0,
        threshold: law.threshold(),
        noise: law.noise_scale(),
        step: cfg.step,
    };
    Ok((0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(cfg.seed, Purpose::FirstPassage, i);
            acc.first_crossing(0.0, cfg.horizon, &mut rng)
                .unwrap_or(f64::INFINITY)
        })
        .collect())
}

/// Event train of one detector watching `path`, with noise from detector
/// stream `noise_stream`.
pub fn simulate_detector_on<P: IntensityPath + ?Sized>(
    path: &P,
    params: &DetectorParams,
    cfg: &RunConfig,
    noise_stream: u64,
) -> EventTrain {
    let acc = Accumulator {
        path,
        area: params.area(),
        threshold: params.threshold_energy(),
        noise: params.area() * params.noise_scale(),
        step: cfg.step,
    };
    let mut rng = stream(cfg.seed, Purpose::DetectorNoise, noise_stream);
    acc.event_train(params.dead_time(), cfg.horizon, &mut rng)
}

/// Event train of a detector exposed to `model` over `[0, cfg.horizon]`.
///
/// A modulated pair is realized from `cfg.seed` and its first beam is used.
pub fn simulate_detector(
    model: &SignalModel,
    params: &DetectorParams,
    cfg: &RunConfig,
) -> Result<EventTrain> {
    Ok(match model {
        SignalModel::Constant(c) => simulate_detector_on(c, params, cfg, 0),
        SignalModel::Piecewise(p) => simulate_detector_on(p, params, cfg, 0),
        SignalModel::ModulatedPair(m) => {
            let paths = PairPath::realize(m, cfg.seed, cfg.horizon)?;
            simulate_detector_on(&paths.channel(Channel::First), params, cfg, 0)
        }
    })
}

/// Whether the two detectors of a coincidence run get their own vacuum noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseStreams {
    #[default]
    Independent,
    Shared,
}

/// Output of [`simulate_coincidence`].
#[derive(Debug, Clone)]
pub struct CoincidenceRun {
    pub first: EventTrain,
    pub second: EventTrain,
    /// The shared intensity realization both detectors saw.
    pub paths: PairPath,
    /// Set when the signal's relaxation time is shorter than a typical
    /// inter-count interval, where counting no longer follows the intensity.
    pub slow_signal_violated: bool,
}

/// Two detectors watching the two beams of one realization of `model`.
pub fn simulate_coincidence(
    model: &SignalModel,
    first: &DetectorParams,
    second: &DetectorParams,
    cfg: &RunConfig,
    noise: NoiseStreams,
) -> Result<CoincidenceRun> {
    let SignalModel::ModulatedPair(pair) = model else {
        return Err(Error::Usage(
            "coincidence runs need a modulated_pair signal".into(),
        ));
    };
    let paths = PairPath::realize(pair, cfg.seed, cfg.horizon)?;
    let second_stream = match noise {
        NoiseStreams::Independent => 1,
        NoiseStreams::Shared => 0,
    };
    let (a, b) = rayon::join(
        || simulate_detector_on(&paths.channel(Channel::First), first, cfg, 0),
        || simulate_detector_on(&paths.channel(Channel::Second), second, cfg, second_stream),
    );
    let slow_signal_violated = !is_slow_signal(pair, first) || !is_slow_signal(pair, second);
    Ok(CoincidenceRun {
        first: a,
        second: b,
        paths,
        slow_signal_violated,
    })
}

/// Whether `pair` varies slowly compared with a typical inter-count interval
/// of `detector`, the regime where counting follows the intensity.
pub fn is_slow_signal(pair: &ModulatedPair, detector: &DetectorParams) -> bool {
    let typical_gap = detector.threshold_energy() / (detector.area() * pair.mean());
    pair.relaxation_time() >= typical_gap
}
