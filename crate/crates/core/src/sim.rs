//! Monte Carlo BER engine, fading-averaged BER, and achievable-rate search.
//!
//! Every unit of work owns an independent ChaCha stream derived from
//! `(master seed, unit index)`, so results are bit-reproducible regardless of
//! thread scheduling: shards aggregate integer error counts, which is
//! order-independent. Stream 0 of a seed is reserved for the documented
//! single-stream reference mode, shards use streams 1 and up.

use crate::channel::{fso_geometric_loss, gg_sample, TurbulenceParams};
use crate::constellation::{design, ConstellationDesign, Scheme};
use crate::decoder::{
    ber_analytical, decode, gray_bit_errors, receive_transform, thresholds_for, DecoderSpec,
    ThresholdSet,
};
use crate::error::{Error, Result};
use crate::linkmodel::{LinkBudget, ModulationConfig, SpadArrayParams};
use crate::spad::{sample_output, GaussianMoments};
use crate::vnt::VntParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

/// Symbols handled per parallel shard.
const SHARD_SYMBOLS: u64 = 1 << 16;

/// Per-realization sample count for square-root-domain variance estimation
/// inside fading runs, where the estimate is rebuilt for every channel draw.
pub const FADING_SQRT_SAMPLES: u64 = 10_000;

/// Seeded stream `idx` of `seed`. Streams with distinct indices are
/// statistically independent.
pub fn substream(seed: u64, idx: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(idx);
    rng
}

/// SplitMix finalizer for deriving child seeds from a master seed.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Outcome of a BER measurement.
///
/// For Monte Carlo runs `ber = bit_errors / bits_simulated` exactly and the
/// half-width comes from the binomial normal approximation. For the
/// fading-averaged path `ber` is the mean of per-realization analytical
/// values, `bit_errors` is the rounded expected count over the attributed
/// bits, and the half-width reflects the realization-to-realization spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerResult {
    pub ber: f64,
    pub bit_errors: u64,
    pub bits_simulated: u64,
    pub half_width_95: f64,
}

impl BerResult {
    fn from_counts(bit_errors: u64, bits_simulated: u64) -> Self {
        let p = bit_errors as f64 / bits_simulated as f64;
        let half = 1.96 * (p * (1.0 - p) / bits_simulated as f64).sqrt();
        Self {
            ber: p,
            bit_errors,
            bits_simulated,
            half_width_95: half,
        }
    }
}

/// Result of an achievable-rate search. `met_target` is false when no grid
/// rate satisfied the target; `rate_bps` is zero in that case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSearchResult {
    pub rate_bps: f64,
    pub symbol_duration: f64,
    pub scheme: Scheme,
    pub met_target: bool,
}

// ---------------------------------------------------------------------------
// Fixed-loss Monte Carlo
// ---------------------------------------------------------------------------

fn shard_errors<R: Rng>(
    design: &ConstellationDesign,
    tset: &ThresholdSet,
    transform: &(impl Fn(f64) -> f64 + Sync),
    symbols: u64,
    rng: &mut R,
) -> u64 {
    let order = design.order();
    let mut errors = 0u64;
    for _ in 0..symbols {
        let sym = rng.random_range(0..order);
        let r = sample_output(&design.rx_moments[sym], rng);
        let dec = decode(transform(r), tset);
        errors += gray_bit_errors(sym, dec) as u64;
    }
    errors
}

/// Monte Carlo bit-error rate of a design under the given decoder, with
/// symbols drawn uniformly and Gray-mapped bit errors counted. Shards run in
/// parallel on independent streams; identical `(inputs, seed)` give a
/// bitwise-identical result.
pub fn run_ber_mc(
    design: &ConstellationDesign,
    spec: &DecoderSpec,
    spad: &SpadArrayParams,
    modc: &ModulationConfig,
    n_symbols: u64,
    seed: u64,
) -> Result<BerResult> {
    if n_symbols < 10_000 {
        return Err(Error::InvalidParam {
            what: "Monte Carlo runs need at least 1e4 symbols",
            value: n_symbols as f64,
        });
    }
    let tset = thresholds_for(design, spec)?;
    let vnt = VntParams::for_link(spad, modc.symbol_duration);
    let transform = receive_transform(spec, &vnt);
    let n_shards = n_symbols.div_ceil(SHARD_SYMBOLS);
    let errors: u64 = (0..n_shards)
        .into_par_iter()
        .map(|s| {
            let symbols = SHARD_SYMBOLS.min(n_symbols - s * SHARD_SYMBOLS);
            let mut rng = substream(seed, s + 1);
            shard_errors(design, &tset, &transform, symbols, &mut rng)
        })
        .sum();
    Ok(BerResult::from_counts(
        errors,
        n_symbols * modc.bits_per_symbol() as u64,
    ))
}

/// Single-stream reference mode of [`run_ber_mc`]: all symbols consumed from
/// stream 0 sequentially. Statistically equivalent to the sharded mode, not
/// bitwise equal to it.
pub fn run_ber_mc_serial(
    design: &ConstellationDesign,
    spec: &DecoderSpec,
    spad: &SpadArrayParams,
    modc: &ModulationConfig,
    n_symbols: u64,
    seed: u64,
) -> Result<BerResult> {
    if n_symbols < 10_000 {
        return Err(Error::InvalidParam {
            what: "Monte Carlo runs need at least 1e4 symbols",
            value: n_symbols as f64,
        });
    }
    let tset = thresholds_for(design, spec)?;
    let vnt = VntParams::for_link(spad, modc.symbol_duration);
    let transform = receive_transform(spec, &vnt);
    let mut rng = substream(seed, 0);
    let errors = shard_errors(design, &tset, &transform, n_symbols, &mut rng);
    Ok(BerResult::from_counts(
        errors,
        n_symbols * modc.bits_per_symbol() as u64,
    ))
}

/// Empirical mean and variance of a transformed Gaussian observable,
/// `samples` draws from the given stream.
pub fn transformed_moments_mc<R: Rng>(
    moments: &GaussianMoments,
    transform: impl Fn(f64) -> f64,
    samples: u64,
    rng: &mut R,
) -> (f64, f64) {
    let mut acc = 0.0;
    let mut acc2 = 0.0;
    for _ in 0..samples {
        let y = transform(sample_output(moments, rng));
        acc += y;
        acc2 += y * y;
    }
    let n = samples as f64;
    let mean = acc / n;
    let var = ((acc2 - n * mean * mean) / (n - 1.0)).max(0.0);
    (mean, var)
}

// ---------------------------------------------------------------------------
// Fading-averaged BER
// ---------------------------------------------------------------------------

/// Average BER over Gamma-Gamma fading realizations. The transmitter is
/// assumed to know the instantaneous channel state, so the constellation is
/// redesigned for every draw and the per-realization BER is analytical
/// (AWGN-approximation decoding for the joint scheme, likelihood thresholds
/// otherwise). Realizations whose background saturates the array contribute
/// BER 1/2.
pub fn run_ber_fading(
    scheme: Scheme,
    turb: &TurbulenceParams,
    base_link: &LinkBudget,
    spad: &SpadArrayParams,
    modc: &ModulationConfig,
    n_realizations: u64,
    n_symbols_per: u64,
    seed: u64,
) -> Result<BerResult> {
    if n_realizations < 100 {
        return Err(Error::InvalidParam {
            what: "fading averages need at least 100 realizations",
            value: n_realizations as f64,
        });
    }
    let hg = fso_geometric_loss(turb.aperture, turb.divergence, turb.distance);
    let bers: Vec<f64> = (0..n_realizations)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = substream(seed, i + 1);
            // losses above unity are unphysical; the fading tail makes them
            // astronomically unlikely but not impossible
            let alpha = (gg_sample(turb.zeta, turb.beta, &mut rng)? * hg).min(1.0);
            let link = base_link.with_loss(alpha)?;
            match design(scheme, &link, spad, modc) {
                Err(Error::InfeasibleLink { .. }) => Ok(0.5),
                Err(e) => Err(e),
                Ok(d) => {
                    let spec = match scheme {
                        Scheme::Sqrt => DecoderSpec::SqrtMl {
                            samples_per_level: FADING_SQRT_SAMPLES,
                            seed: mix_seed(seed, i + 1),
                        },
                        s => DecoderSpec::default_for(s),
                    };
                    ber_analytical(&d, &spec)
                }
            }
        })
        .collect::<Result<_>>()?;
    let n = n_realizations as f64;
    let mean = bers.iter().sum::<f64>() / n;
    let var = bers.iter().map(|b| (b - mean) * (b - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    let bits = n_realizations * n_symbols_per * modc.bits_per_symbol() as u64;
    Ok(BerResult {
        ber: mean,
        bit_errors: (mean * bits as f64).round() as u64,
        bits_simulated: bits,
        half_width_95: 1.96 * (var / n).sqrt(),
    })
}

// ---------------------------------------------------------------------------
// Achievable-rate search
// ---------------------------------------------------------------------------

/// Default rate grid: geometric with 2% steps from 10 Mbps to 2.5 Gbps.
pub fn default_rate_grid() -> Vec<f64> {
    let mut grid = Vec::new();
    let mut r = 10e6;
    while r <= 2.5e9 {
        grid.push(r);
        r *= 1.02;
    }
    grid
}

/// Largest grid rate whose analytical BER meets the target. The square-root
/// scheme estimates its transformed variances by simulation with the given
/// seed; every other scheme is purely analytical.
pub fn search_max_rate(
    scheme: Scheme,
    link: &LinkBudget,
    spad: &SpadArrayParams,
    order: u32,
    ber_target: f64,
    rate_grid: &[f64],
    seed: u64,
) -> Result<RateSearchResult> {
    if rate_grid.is_empty() {
        return Err(Error::InvalidParam {
            what: "rate grid must be non-empty",
            value: 0.0,
        });
    }
    for w in rate_grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidParam {
                what: "rate grid must be strictly increasing",
                value: w[1],
            });
        }
    }
    let bits = ModulationConfig::new(order, 1e-9)?.bits_per_symbol() as f64;
    let mut best: Option<(f64, f64)> = None;
    for &rate in rate_grid {
        let ts = bits / rate;
        let modc = ModulationConfig::new(order, ts)?;
        let d = design(scheme, link, spad, &modc)?;
        let spec = match scheme {
            Scheme::Sqrt => DecoderSpec::SqrtMl {
                samples_per_level: crate::decoder::SQRT_VARIANCE_SAMPLES,
                seed,
            },
            s => DecoderSpec::default_for(s),
        };
        let ber = ber_analytical(&d, &spec)?;
        if ber <= ber_target {
            best = Some((rate, ts));
        }
    }
    Ok(match best {
        Some((rate, ts)) => RateSearchResult {
            rate_bps: rate,
            symbol_duration: ts,
            scheme,
            met_target: true,
        },
        None => RateSearchResult {
            rate_bps: 0.0,
            symbol_duration: f64::INFINITY,
            scheme,
            met_target: false,
        },
    })
}
