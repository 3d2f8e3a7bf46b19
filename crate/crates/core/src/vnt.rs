//! Variance-normalizing transform and its inverse.
//!
//! The SPAD array photocount has variance `mu - (theta/N) mu^2`. Integrating
//! the reciprocal noise standard deviation gives the arcsine map below, which
//! turns that signal-dependent noise into (approximately) unit-variance
//! signal-independent noise at the receiver.

use crate::error::{Error, Result};
use crate::linkmodel::SpadArrayParams;
use crate::spad::DeadTimeRegime;
use std::f64::consts::FRAC_PI_2;

/// Parameters of the transform pair. `scale` caches `sqrt(N/theta)`; the
/// transform domain is `[0, N/theta]` and its range is
/// `[-scale*pi/2, +scale*pi/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VntParams {
    pub n_pixels: f64,
    pub theta: f64,
    pub scale: f64,
}

impl VntParams {
    pub fn new(n_pixels: u32, theta: f64) -> Result<Self> {
        if n_pixels < 1 {
            return Err(Error::InvalidParam {
                what: "VNT needs at least one pixel",
                value: n_pixels as f64,
            });
        }
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::InvalidParam {
                what: "dead-time regime parameter must lie in (0, 1]",
                value: theta,
            });
        }
        let n = n_pixels as f64;
        Ok(Self {
            n_pixels: n,
            theta,
            scale: (n / theta).sqrt(),
        })
    }

    pub fn for_link(spad: &SpadArrayParams, symbol_duration: f64) -> Self {
        let regime = DeadTimeRegime::new(symbol_duration, spad.dead_time);
        Self::new(spad.n_pixels, regime.theta).expect("valid by construction")
    }

    /// Upper end of the transform domain, `N/theta`.
    pub fn domain_max(&self) -> f64 {
        self.n_pixels / self.theta
    }

    /// Half-width of the transform range, `sqrt(N/theta) * pi/2`.
    pub fn range_half_width(&self) -> f64 {
        self.scale * FRAC_PI_2
    }
}

/// Forward transform. The photocount is truncated to `[0, N/theta]` first
/// (Gaussian-model samples can stray outside the arcsine domain), then mapped
/// through `-sqrt(N/theta) * asin(1 - 2 theta r / N)`.
pub fn vnt_forward(r: f64, p: &VntParams) -> f64 {
    let r = r.clamp(0.0, p.domain_max());
    let arg = 1.0 - 2.0 * p.theta / p.n_pixels * r;
    -p.scale * arg.asin()
}

/// Inverse transform on the principal range:
/// `-N/(2 theta) * (sin(-y/sqrt(N/theta)) - 1)`.
pub fn vnt_inverse(y: f64, p: &VntParams) -> Result<f64> {
    let half = p.range_half_width();
    // tiny relative slack absorbs round-off from values computed at the
    // range endpoints
    if y.abs() > half * (1.0 + 1e-12) {
        return Err(Error::Domain {
            what: "VNT inverse argument outside the principal range",
            value: y,
        });
    }
    let y = y.clamp(-half, half);
    Ok(-p.n_pixels / (2.0 * p.theta) * ((-y / p.scale).sin() - 1.0))
}
