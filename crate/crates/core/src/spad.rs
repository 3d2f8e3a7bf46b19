//! Passively-quenched SPAD array detection model.
//!
//! A pixel illuminated at photon rate `lambda` produces sub-Poisson counts
//! with mean `lambda T_s exp(-lambda T_d)`; the array output is the sum over
//! pixels, treated as Gaussian. [`dead_time_oracle`] is an independent
//! event-level simulation of the same paralyzable counter, used to validate
//! the closed-form moments rather than to drive the main BER path.

use crate::error::{Error, Result};
use crate::linkmodel::SpadArrayParams;
use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

/// Dead-time regime parameter `theta = 1 - ((1 - T_d/T_s)^+)^2`, the
/// coefficient of the quadratic term in the photocount variance law
/// `sigma^2 = mu - theta mu^2` (single pixel). Equals 1 whenever the symbol
/// fits inside one dead time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeadTimeRegime {
    pub theta: f64,
}

impl DeadTimeRegime {
    pub fn new(symbol_duration: f64, dead_time: f64) -> Self {
        let r = (1.0 - dead_time / symbol_duration).max(0.0);
        Self { theta: 1.0 - r * r }
    }
}

/// Gaussian moments of the array photocount (or of a transformed receive
/// signal; the sub-Poisson constraint applies only to the photocount domain,
/// so this container enforces just `variance >= 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMoments {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianMoments {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !variance.is_finite() || variance < 0.0 {
            return Err(Error::InvalidParam {
                what: "variance must be finite and non-negative",
                value: variance,
            });
        }
        if !mean.is_finite() {
            return Err(Error::InvalidParam {
                what: "mean must be finite",
                value: mean,
            });
        }
        Ok(Self { mean, variance })
    }

    /// Photocount-domain moments from a target array mean. Valid means lie in
    /// `[0, N/theta)`; anything else is a model-domain error rather than a
    /// value to clamp, so invalid operating points surface instead of hiding.
    pub fn photocount(mean: f64, spad: &SpadArrayParams, regime: DeadTimeRegime) -> Result<Self> {
        let n = spad.n();
        if !(mean >= 0.0 && mean < n / regime.theta) {
            return Err(Error::InvalidParam {
                what: "photocount mean must lie in [0, N/theta)",
                value: mean,
            });
        }
        Ok(Self {
            mean,
            variance: mean - regime.theta / n * mean * mean,
        })
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Mean photocount of one pixel over a symbol: `lambda T_s exp(-lambda T_d)`.
pub fn single_pixel_mean(lambda: f64, ts: f64, td: f64) -> f64 {
    lambda * ts * (-lambda * td).exp()
}

/// Photocount variance of one pixel, `mu - theta mu^2`; reduces to
/// `mu - mu^2` when `T_s <= T_d` (at most one count fits in the symbol).
pub fn single_pixel_variance(lambda: f64, ts: f64, td: f64) -> f64 {
    let mu = single_pixel_mean(lambda, ts, td);
    let theta = DeadTimeRegime::new(ts, td).theta;
    mu - theta * mu * mu
}

/// Gaussian moments of the summed array output at per-pixel rate `lambda`.
pub fn array_moments(lambda: f64, spad: &SpadArrayParams, ts: f64) -> GaussianMoments {
    let n = spad.n();
    GaussianMoments {
        mean: n * single_pixel_mean(lambda, ts, spad.dead_time),
        variance: n * single_pixel_variance(lambda, ts, spad.dead_time),
    }
}

/// One Gaussian draw of the array output. Real-valued by construction; no
/// truncation or rounding happens here (truncation belongs to the receive
/// transform).
pub fn sample_output<R: Rng + ?Sized>(moments: &GaussianMoments, rng: &mut R) -> f64 {
    if moments.variance == 0.0 {
        return moments.mean;
    }
    let z: f64 = StandardNormal.sample(rng);
    moments.mean + moments.std_dev() * z
}

/// Event-level paralyzable dead-time simulation: homogeneous Poisson
/// arrivals, a photon is detected iff no arrival occurred within the
/// preceding `td`, and the dead-time state carries across window boundaries.
/// The first window is a warm-up and is discarded, so the returned per-window
/// count statistics are steady state. Returns `(mean, sample variance)` of
/// the detected counts over `windows` windows of length `ts`.
pub fn dead_time_oracle<R: Rng + ?Sized>(
    lambda: f64,
    ts: f64,
    td: f64,
    windows: usize,
    rng: &mut R,
) -> (f64, f64) {
    assert!(windows >= 1, "need at least one window");
    if lambda <= 0.0 {
        return (0.0, 0.0);
    }
    let exp = Exp::new(lambda).expect("positive rate");
    let mut counts = vec![0u32; windows];
    let horizon = (windows as f64 + 1.0) * ts;
    let mut t: f64 = exp.sample(rng);
    let mut prev = f64::NEG_INFINITY;
    while t < horizon {
        if t - prev >= td {
            let w = (t / ts) as usize;
            if w >= 1 && w <= windows {
                counts[w - 1] += 1;
            }
        }
        prev = t;
        t += exp.sample(rng);
    }
    let n = windows as f64;
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / n;
    let var = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / (n - 1.0).max(1.0);
    (mean, var)
}
