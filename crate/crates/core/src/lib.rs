//! Link-level modelling of optical wireless systems built on single-photon
//! avalanche diode (SPAD) array receivers.
//!
//! Passively-quenched SPAD pixels paralyse during their dead time, which
//! bends the photon transfer curve and makes the shot noise signal-dependent
//! and sub-Poisson. This crate models that receiver, designs PAM
//! constellations against it under average- and peak-power constraints, and
//! measures the resulting link quality both analytically and by Monte Carlo:
//!
//! * [`linkmodel`] — link budgets, photon-rate bookkeeping, power constraints
//! * [`spad`] — dead-time photocount moments, Gaussian array output, and an
//!   event-level paralyzable-counter oracle
//! * [`vnt`] — the arcsine variance-normalizing transform pair
//! * [`constellation`] — uniform, square-root, pre-distortion and joint
//!   (pre-distortion + noise normalization) designs
//! * [`decoder`] — unequal-variance ML thresholds, Gray mapping, analytical
//!   BER expressions
//! * [`channel`] — geometric loss, Gamma-Gamma turbulence fading, VLC LOS loss
//! * [`sim`] — seeded, shardable Monte Carlo BER and achievable-rate search
//! * [`mathfn`] — Lambert W, Gaussian tail, log-scale Bessel K, bisection
//!
//! # Example
//!
//! ```
//! use spad_owc::constellation::{design, Scheme};
//! use spad_owc::decoder::{ber_analytical, DecoderSpec};
//! use spad_owc::sim::run_ber_mc;
//! use spad_owc::{LinkBudget, ModulationConfig, SpadArrayParams};
//!
//! // -30 dB loss, 10 nW background, 100 uW average power, 785 nm
//! let link = LinkBudget::new(1e-3, 10e-9, 100e-6, 785e-9)?;
//! let spad = SpadArrayParams::new(2048, 10e-9, 0.18)?;
//! let modc = ModulationConfig::new(4, 5e-9)?; // 4-PAM, 5 ns symbols
//!
//! let d = design(Scheme::Joint, &link, &spad, &modc)?;
//! let spec = DecoderSpec::default_for(Scheme::Joint);
//! let analytic = ber_analytical(&d, &spec)?;
//! let mc = run_ber_mc(&d, &spec, &spad, &modc, 100_000, 42)?;
//! assert!(analytic < 1e-5 && mc.bits_simulated == 200_000);
//! # Ok::<(), spad_owc::Error>(())
//! ```

pub mod channel;
pub mod constellation;
pub mod decoder;
pub mod error;
pub mod linkmodel;
pub mod mathfn;
pub mod sim;
pub mod spad;
pub mod vnt;

pub use channel::TurbulenceParams;
pub use constellation::{ConstellationDesign, Scheme};
pub use decoder::{DecoderSpec, ThresholdDomain, ThresholdSet};
pub use error::{Error, Result};
pub use linkmodel::{LinkBudget, ModulationConfig, SpadArrayParams};
pub use sim::{BerResult, RateSearchResult};
pub use spad::{DeadTimeRegime, GaussianMoments};
pub use vnt::VntParams;
