//! Closed forms for the constant-drift absorbing-barrier problem.
//!
//! The accumulated energy is a Wiener process with drift `I_s` and scale `σ`
//! started at 0; a count happens when it first reaches the threshold `E_m`.
//! Its first-passage time is inverse-Gaussian with mean `E_m/I_s` and shape
//! `E_m²/σ²`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{non_negative, positive, Error, Result};
use crate::model::DetectorParams;
use crate::numerics::bisect;
use crate::special::{erfc, erfcx};

/// Parameters of the first-passage problem (unit detector area).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FptLaw {
    threshold: f64,
    drift: f64,
    noise_scale: f64,
}

impl FptLaw {
    pub fn new(threshold: f64, drift: f64, noise_scale: f64) -> Result<Self> {
        Ok(Self {
            threshold: positive("threshold", threshold)?,
            drift: non_negative("drift", drift)?,
            noise_scale: positive("noise_scale", noise_scale)?,
        })
    }

    /// The law seen by `detector` under a constant signal `intensity`; the
    /// entrance area scales both the drift and the noise.
    pub fn for_detector(detector: &DetectorParams, intensity: f64) -> Result<Self> {
        let a = detector.area();
        Self::new(
            detector.threshold_energy(),
            a * intensity,
            a * detector.noise_scale(),
        )
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn noise_scale(&self) -> f64 {
        self.noise_scale
    }

    /// Density over energy of the not-yet-absorbed process at time `t`.
    ///
    /// Method of images: the free Gaussian minus its image reflected through
    /// the barrier, weighted by `exp(2E_m I_s/σ²)`. Written as
    /// `φ(E)·(1 - exp(-2E_m(E_m-E)/(σ²t)))`, which is algebraically the same
    /// and vanishes exactly at the barrier.
    pub fn transition_density(&self, energy: f64, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("time must be > 0, got {t}")));
        }
        if !(energy <= self.threshold) {
            return Err(Error::Domain(format!(
                "energy {energy} lies beyond the absorbing barrier {}",
                self.threshold
            )));
        }
        let var = self.noise_scale * self.noise_scale * t;
        let dev = energy - self.drift * t;
        let free = (-dev * dev / (2.0 * var)).exp() / (2.0 * PI * var).sqrt();
        let image_ratio = -2.0 * self.threshold * (self.threshold - energy) / var;
        Ok(-free * image_ratio.exp_m1())
    }

    /// Probability that the barrier has been reached by time `t`.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("time must be >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        if t.is_infinite() {
            return Ok(1.0);
        }
        let scale = self.noise_scale * (2.0 * t).sqrt();
        let a = (self.threshold - self.drift * t) / scale;
        if self.drift == 0.0 {
            return Ok(erfc(a));
        }
        let b = (self.threshold + self.drift * t) / scale;
        // exp(2E_m I_s/σ²)·erfc(b) = exp(-a²)·erfcx(b), since 2E_m I_s/σ² - b² = -a²
        let p = 0.5 * erfc(a) + 0.5 * (-a * a).exp() * erfcx(b);
        Ok(p.min(1.0))
    }

    /// First-passage density `E_m/(σ√(2πt³))·exp(-(E_m - I_s t)²/(2σ²t))`.
    pub fn pdf(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("time must be > 0, got {t}")));
        }
        if t.is_infinite() {
            return Ok(0.0);
        }
        let s2 = self.noise_scale * self.noise_scale;
        let dev = self.threshold - self.drift * t;
        Ok(self.threshold / (2.0 * PI * s2 * t * t * t).sqrt()
            * (-dev * dev / (2.0 * s2 * t)).exp())
    }

    /// Mean first-passage time `E_m/I_s`, independent of the noise.
    pub fn mean_fpt(&self) -> Result<f64> {
        if self.drift == 0.0 {
            return Err(Error::InfiniteMean);
        }
        Ok(self.threshold / self.drift)
    }

    /// Variance `E_m σ²/I_s³` of the first-passage time.
    pub fn variance_fpt(&self) -> Result<f64> {
        if self.drift == 0.0 {
            return Err(Error::InfiniteMean);
        }
        Ok(self.threshold * self.noise_scale * self.noise_scale / self.drift.powi(3))
    }

    /// Long-run counting rate `I_s/E_m`; zero without a signal.
    pub fn rate(&self) -> f64 {
        self.drift / self.threshold
    }

    /// Median first-passage time, by bisection on the CDF.
    pub fn median_fpt(&self) -> f64 {
        let excess = |t: f64| self.cdf(t).expect("t > 0") - 0.5;
        // The median never exceeds E_m/I_s, and for zero drift it is
        // E_m²/(2σ²·erfcinv(1/2)²) ≈ 1.0991 E_m²/σ².
        let ballistic = if self.drift > 0.0 {
            self.threshold / self.drift
        } else {
            f64::INFINITY
        };
        let diffusive = 1.1 * (self.threshold / self.noise_scale).powi(2);
        let mut hi = ballistic.min(diffusive);
        while excess(hi) < 0.0 {
            hi *= 2.0;
        }
        let mut lo = 0.5 * hi;
        while excess(lo) >= 0.0 {
            lo *= 0.5;
        }
        bisect(excess, lo, hi, 1e-12).expect("median is bracketed")
    }
}
