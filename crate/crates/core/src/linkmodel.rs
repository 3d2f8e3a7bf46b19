//! Link-level parameters and the power/photon-rate bookkeeping.
//!
//! One canonical unit system throughout: powers in watts, photon rates in
//! photons/second, durations in seconds. The photon energy is derived once
//! per [`LinkBudget`] from CODATA constants, so nanowatt/microwatt inputs
//! cannot silently pick up factor-of-1000 errors.

use crate::error::{Error, Result};

/// Planck constant, J s (CODATA 2018, exact).
pub const PLANCK: f64 = 6.62607015e-34;
/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 2.99792458e8;

/// Passively-quenched SPAD array receiver parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpadArrayParams {
    /// Number of pixels in the array.
    pub n_pixels: u32,
    /// Dead time of a single pixel, seconds.
    pub dead_time: f64,
    /// Photon detection efficiency, in (0, 1].
    pub pde: f64,
}

impl SpadArrayParams {
    pub fn new(n_pixels: u32, dead_time: f64, pde: f64) -> Result<Self> {
        if n_pixels < 1 {
            return Err(Error::InvalidParam {
                what: "SPAD array needs at least one pixel",
                value: n_pixels as f64,
            });
        }
        if !(dead_time > 0.0) {
            return Err(Error::InvalidParam {
                what: "dead time must be positive",
                value: dead_time,
            });
        }
        if !(pde > 0.0 && pde <= 1.0) {
            return Err(Error::InvalidParam {
                what: "photon detection efficiency must lie in (0, 1]",
                value: pde,
            });
        }
        Ok(Self {
            n_pixels,
            dead_time,
            pde,
        })
    }

    /// Pixel count as a float, for rate arithmetic.
    pub fn n(&self) -> f64 {
        self.n_pixels as f64
    }
}

/// Static link budget: channel loss, background light, transmitter average
/// power limit, and operating wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Linear channel loss, in (0, 1].
    pub loss: f64,
    /// Total background power arriving at the detector plane, watts.
    pub background_power: f64,
    /// Average transmit optical power limit, watts.
    pub avg_power_limit: f64,
    /// Operating wavelength, metres.
    pub wavelength: f64,
}

impl LinkBudget {
    pub fn new(
        loss: f64,
        background_power: f64,
        avg_power_limit: f64,
        wavelength: f64,
    ) -> Result<Self> {
        if !(loss > 0.0 && loss <= 1.0) {
            return Err(Error::InvalidParam {
                what: "channel loss must lie in (0, 1]",
                value: loss,
            });
        }
        if !(background_power >= 0.0) {
            return Err(Error::InvalidParam {
                what: "background power must be non-negative",
                value: background_power,
            });
        }
        if !(avg_power_limit > 0.0) {
            return Err(Error::InvalidParam {
                what: "average power limit must be positive",
                value: avg_power_limit,
            });
        }
        if !(wavelength > 0.0) {
            return Err(Error::InvalidParam {
                what: "wavelength must be positive",
                value: wavelength,
            });
        }
        Ok(Self {
            loss,
            background_power,
            avg_power_limit,
            wavelength,
        })
    }

    /// Photon energy at the operating wavelength, joules.
    pub fn photon_energy(&self) -> f64 {
        PLANCK * SPEED_OF_LIGHT / self.wavelength
    }

    /// Total background photon rate over the whole array, photons/s.
    pub fn background_rate(&self) -> f64 {
        self.background_power / self.photon_energy()
    }

    /// Copy of the budget with a different linear loss (used per fading
    /// realization).
    pub fn with_loss(&self, loss: f64) -> Result<Self> {
        Self::new(
            loss,
            self.background_power,
            self.avg_power_limit,
            self.wavelength,
        )
    }
}

/// PAM modulation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationConfig {
    /// Constellation order M; a power of two, at least 2.
    pub order: u32,
    /// Symbol duration, seconds.
    pub symbol_duration: f64,
}

impl ModulationConfig {
    pub fn new(order: u32, symbol_duration: f64) -> Result<Self> {
        if order < 2 || !order.is_power_of_two() {
            return Err(Error::InvalidParam {
                what: "PAM order must be a power of two, at least 2",
                value: order as f64,
            });
        }
        if !(symbol_duration > 0.0) {
            return Err(Error::InvalidParam {
                what: "symbol duration must be positive",
                value: symbol_duration,
            });
        }
        Ok(Self {
            order,
            symbol_duration,
        })
    }

    /// Bits carried per symbol, `log2(M)`.
    pub fn bits_per_symbol(&self) -> u32 {
        self.order.trailing_zeros()
    }
}

/// Average transmitted optical power of a photon-rate constellation:
/// `(h nu / M) * sum I(m)`.
pub fn avg_transmit_power(rates: &[f64], photon_energy: f64) -> Result<f64> {
    for &r in rates {
        if r < 0.0 {
            return Err(Error::InvalidParam {
                what: "transmit photon rates must be non-negative",
                value: r,
            });
        }
    }
    Ok(photon_energy * rates.iter().sum::<f64>() / rates.len() as f64)
}

/// Received photon rate seen by each pixel of the array when the transmit
/// rate is `rate_tx`: `pde * (loss * rate_tx + background) / N`.
pub fn per_pixel_rate(rate_tx: f64, link: &LinkBudget, spad: &SpadArrayParams) -> f64 {
    spad.pde * (link.loss * rate_tx + link.background_rate()) / spad.n()
}

/// Largest transmit photon rate that keeps every pixel below the saturation
/// point `lambda = 1/T_d`. Errors when the background alone saturates the
/// array.
pub fn peak_rate_bound(link: &LinkBudget, spad: &SpadArrayParams) -> Result<f64> {
    let bound =
        spad.n() / (link.loss * spad.dead_time * spad.pde) - link.background_rate() / link.loss;
    if bound <= 0.0 {
        return Err(Error::InfeasibleLink {
            peak_rate_bound: bound,
        });
    }
    Ok(bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn table_link() -> LinkBudget {
        // 785 nm, -30 dB loss, 10 nW background, 60 uW average power limit
        LinkBudget::new(1e-3, 10e-9, 60e-6, 785e-9).unwrap()
    }

    fn table_spad() -> SpadArrayParams {
        SpadArrayParams::new(2048, 10e-9, 0.18).unwrap()
    }

    #[test]
    fn photon_energy_785nm() {
        let hv = table_link().photon_energy();
        let want = 6.62607015e-34 * 2.99792458e8 / 785e-9;
        assert_eq!(hv, want);
        assert!((hv - 2.53e-19).abs() < 0.01e-19);
    }

    #[test]
    fn avg_power_zero_vector() {
        assert_eq!(avg_transmit_power(&[0.0; 4], 2.5e-19).unwrap(), 0.0);
    }

    #[test]
    fn avg_power_arithmetic_series() {
        // [0, d, 2d, 3d] averages to (3/2) d, so power = hv * 1.5 d
        let hv = table_link().photon_energy();
        let d = 1e14;
        let got = avg_transmit_power(&[0.0, d, 2.0 * d, 3.0 * d], hv).unwrap();
        let want = hv * 1.5 * d;
        assert!((got - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn avg_power_hits_limit_exactly() {
        // rates summing to 4 P_ave / hv give exactly P_ave back
        let link = table_link();
        let hv = link.photon_energy();
        let total = 4.0 * link.avg_power_limit / hv;
        let rates = [0.1 * total, 0.2 * total, 0.3 * total, 0.4 * total];
        let got = avg_transmit_power(&rates, hv).unwrap();
        assert!((got - link.avg_power_limit).abs() <= 1e-12 * link.avg_power_limit);
    }

    #[test]
    fn avg_power_rejects_negative_rate() {
        assert!(avg_transmit_power(&[0.0, -1.0], 2.5e-19).is_err());
    }

    #[test]
    fn per_pixel_rate_dark_lossless() {
        let link = LinkBudget::new(1e-3, 1e-30, 1e-6, 785e-9).unwrap();
        let spad = table_spad();
        let r = per_pixel_rate(0.0, &link, &spad);
        assert!(r < 1e-15);
    }

    #[test]
    fn per_pixel_rate_background_only() {
        let link = table_link();
        let spad = table_spad();
        let want = spad.pde * link.background_rate() / spad.n();
        assert_eq!(per_pixel_rate(0.0, &link, &spad), want);
    }

    #[test]
    fn per_pixel_rate_affine_in_tx() {
        let link = table_link();
        let spad = table_spad();
        let slope = spad.pde * link.loss / spad.n();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let mut prev = per_pixel_rate(0.0, &link, &spad);
        let mut at = 0.0;
        for _ in 0..100 {
            let step: f64 = rng.random_range(1e10..1e13);
            let next = per_pixel_rate(at + step, &link, &spad);
            let gained = next - prev;
            assert!(gained > 0.0);
            assert!((gained - slope * step).abs() <= 1e-9 * gained.abs().max(1.0));
            at += step;
            prev = next;
        }
    }

    #[test]
    fn peak_bound_no_background() {
        let link = LinkBudget::new(1e-3, 0.0, 60e-6, 785e-9).unwrap();
        let spad = table_spad();
        let want = spad.n() / (link.loss * spad.dead_time * spad.pde);
        assert_eq!(peak_rate_bound(&link, &spad).unwrap(), want);
    }

    #[test]
    fn peak_bound_table_values() {
        // independent arithmetic: 2048 / (1e-3 * 1e-8 * 0.18) minus background
        let link = table_link();
        let spad = table_spad();
        let want = 2048.0 / (1e-3 * 1e-8 * 0.18) - link.background_rate() / 1e-3;
        let got = peak_rate_bound(&link, &spad).unwrap();
        assert!((got - want).abs() <= 1e-9 * want);
        assert!(got > 1e15 && got < 1.2e15);
    }

    #[test]
    fn peak_bound_saturated_background() {
        // background rate equal to N/(pde T_d) leaves no headroom
        let spad = table_spad();
        let hv = PLANCK * SPEED_OF_LIGHT / 785e-9;
        let pb = spad.n() / (spad.pde * spad.dead_time) * hv;
        let link = LinkBudget::new(1e-3, pb, 60e-6, 785e-9).unwrap();
        match peak_rate_bound(&link, &spad) {
            Err(Error::InfeasibleLink { .. }) => {}
            other => panic!("expected infeasible link, got {other:?}"),
        }
    }

    #[test]
    fn saturating_tx_rate_reaches_dead_time_rate() {
        // a transmit rate equal to the peak bound puts each pixel exactly at
        // lambda = 1/T_d
        let link = table_link();
        let spad = table_spad();
        let bound = peak_rate_bound(&link, &spad).unwrap();
        let lam = per_pixel_rate(bound, &link, &spad);
        let want = 1.0 / spad.dead_time;
        assert!((lam - want).abs() <= 1e-9 * want);
    }

    #[test]
    fn constructor_invariants() {
        assert!(SpadArrayParams::new(0, 1e-8, 0.18).is_err());
        assert!(SpadArrayParams::new(8, 0.0, 0.18).is_err());
        assert!(SpadArrayParams::new(8, 1e-8, 1.5).is_err());
        assert!(LinkBudget::new(0.0, 1e-9, 1e-6, 785e-9).is_err());
        assert!(LinkBudget::new(2.0, 1e-9, 1e-6, 785e-9).is_err());
        assert!(ModulationConfig::new(3, 1e-9).is_err());
        assert!(ModulationConfig::new(1, 1e-9).is_err());
        assert!(ModulationConfig::new(4, 0.0).is_err());
        assert_eq!(
            ModulationConfig::new(16, 1e-9).unwrap().bits_per_symbol(),
            4
        );
    }
}
