//! Threshold detection and analytical bit-error rates.
//!
//! Decision thresholds between adjacent Gaussian levels with unequal
//! variances come from the closed-form likelihood-equality root; the
//! per-bit error rates assume Gray labelling, where adjacent-level symbol
//! errors flip exactly one bit.

use crate::constellation::{ConstellationDesign, Scheme};
use crate::error::{Error, Result};
use crate::spad::{sample_output, GaussianMoments};
use crate::vnt::VntParams;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Receive-signal domain a threshold set lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdDomain {
    Photocount,
    Vnt,
    Sqrt,
}

/// Strictly increasing decision thresholds; level `m` is decided when the
/// observation falls between thresholds `m-1` and `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSet {
    pub thresholds: Vec<f64>,
    pub domain: ThresholdDomain,
}

/// How the receiver slices a given design in Monte Carlo runs and when
/// computing the matching analytical BER.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecoderSpec {
    /// Likelihood-equality thresholds on the raw photocount.
    PhotocountMl,
    /// Square-root transform, then likelihood-equality thresholds; the
    /// transformed variances are estimated by simulation with a dedicated
    /// seeded stream per level.
    SqrtMl { samples_per_level: u64, seed: u64 },
    /// Variance-normalizing transform, then midpoint thresholds (the AWGN
    /// approximation for the joint scheme).
    VntMidpoint,
}

/// Sample count used for square-root-domain variance estimation.
pub const SQRT_VARIANCE_SAMPLES: u64 = 100_000;
/// Dedicated seed for square-root-domain variance estimation.
pub const SQRT_VARIANCE_SEED: u64 = 0x5351_5254;

impl DecoderSpec {
    /// The decoding path each scheme uses by default (the joint scheme's
    /// photocount-ML alternative is selected explicitly where needed).
    pub fn default_for(scheme: Scheme) -> Self {
        match scheme {
            Scheme::Uniform | Scheme::PreDistortion => DecoderSpec::PhotocountMl,
            Scheme::Sqrt => DecoderSpec::SqrtMl {
                samples_per_level: SQRT_VARIANCE_SAMPLES,
                seed: SQRT_VARIANCE_SEED,
            },
            Scheme::Joint => DecoderSpec::VntMidpoint,
        }
    }
}

fn validate_moments(moments: &[GaussianMoments]) -> Result<()> {
    if moments.len() < 2 {
        return Err(Error::UnorderedMoments);
    }
    for pair in moments.windows(2) {
        if !(pair[1].mean > pair[0].mean) {
            return Err(Error::UnorderedMoments);
        }
    }
    for m in moments {
        if !(m.variance > 0.0) {
            return Err(Error::InvalidParam {
                what: "threshold computation needs positive variances",
                value: m.variance,
            });
        }
    }
    Ok(())
}

/// Relative variance difference below which the likelihood-equality root
/// degenerates to the equal-variance midpoint.
const EQUAL_VARIANCE_TOL: f64 = 1e-12;

/// Maximum-likelihood thresholds between adjacent unequal-variance Gaussian
/// levels: the root of the likelihood-equality quadratic that lies strictly
/// between the two means. Cases where no root falls inside the gap are
/// reported as numerical errors, never silently accepted.
pub fn ml_thresholds(moments: &[GaussianMoments], domain: ThresholdDomain) -> Result<ThresholdSet> {
    validate_moments(moments)?;
    let mut thresholds = Vec::with_capacity(moments.len() - 1);
    for pair in moments.windows(2) {
        thresholds.push(ml_threshold_pair(&pair[0], &pair[1])?);
    }
    Ok(ThresholdSet { thresholds, domain })
}

fn ml_threshold_pair(a: &GaussianMoments, b: &GaussianMoments) -> Result<f64> {
    let (ma, mb) = (a.mean, b.mean);
    let (va, vb) = (a.variance, b.variance);
    if (va - vb).abs() <= EQUAL_VARIANCE_TOL * va.max(vb) {
        return Ok(0.5 * (ma + mb));
    }
    // equal-likelihood condition as a quadratic in the threshold
    let ca = 1.0 / va - 1.0 / vb;
    let cb = ma / va - mb / vb;
    let cc = ma * ma / va - mb * mb / vb + (va / vb).ln();
    let mut disc = cb * cb - ca * cc;
    if disc < 0.0 {
        if disc > -1e-12 * (cb * cb).max(1e-300) {
            disc = 0.0;
        } else {
            return Err(Error::Numeric {
                what: "likelihood-equality discriminant is negative",
            });
        }
    }
    let sq = disc.sqrt();
    let plus = (cb + sq) / ca;
    let minus = (cb - sq) / ca;
    let inside = |t: f64| t > ma && t < mb;
    match (inside(plus), inside(minus)) {
        (true, _) => Ok(plus),
        (false, true) => Ok(minus),
        (false, false) => Err(Error::Numeric {
            what: "no likelihood-equality root between adjacent means",
        }),
    }
}

/// Standard-deviation-weighted threshold approximation
/// `(mu_{m+1} sigma_m + mu_m sigma_{m+1}) / (sigma_m + sigma_{m+1})`.
pub fn approx_thresholds(
    moments: &[GaussianMoments],
    domain: ThresholdDomain,
) -> Result<ThresholdSet> {
    validate_moments(moments)?;
    let thresholds = moments
        .windows(2)
        .map(|p| {
            let (sa, sb) = (p[0].std_dev(), p[1].std_dev());
            (p[1].mean * sa + p[0].mean * sb) / (sa + sb)
        })
        .collect();
    Ok(ThresholdSet { thresholds, domain })
}

/// Slice an observation. Returns the number of thresholds at or below `r`,
/// so an observation exactly on a threshold resolves to the upper symbol.
pub fn decode(r: f64, t: &ThresholdSet) -> usize {
    t.thresholds.partition_point(|&th| th <= r)
}

/// Gray label of a symbol index.
pub fn gray_code(m: u32) -> u32 {
    m ^ (m >> 1)
}

/// Number of bit positions differing between the Gray labels of two symbols.
pub fn gray_bit_errors(a: usize, b: usize) -> u32 {
    (gray_code(a as u32) ^ gray_code(b as u32)).count_ones()
}

/// Analytical per-bit error rate under signal-dependent Gaussian noise:
/// adjacent-level tail probabilities at the given thresholds, normalized by
/// `M log2 M`.
pub fn ber_analytical_sdn(moments: &[GaussianMoments], t: &ThresholdSet) -> Result<f64> {
    validate_moments(moments)?;
    let m_ord = moments.len();
    if t.thresholds.len() != m_ord - 1 {
        return Err(Error::Numeric {
            what: "threshold count must be M - 1",
        });
    }
    let bits = (m_ord as f64).log2();
    let mut acc = 0.0;
    for m in 0..m_ord - 1 {
        let up = &moments[m + 1];
        let lo = &moments[m];
        let th = t.thresholds[m];
        acc += crate::mathfn::q_function((th - lo.mean) / lo.std_dev());
        acc += crate::mathfn::q_function((up.mean - th) / up.std_dev());
    }
    Ok(acc / (m_ord as f64 * bits))
}

/// Per-bit error rate of equidistant PAM in unit-variance AWGN:
/// `(2M-2)/(M log2 M) * Q(d/2)`.
pub fn ber_analytical_awgn(d: f64, order: u32) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::InvalidParam {
            what: "level separation must be positive",
            value: d,
        });
    }
    let m = order as f64;
    Ok((2.0 * m - 2.0) / (m * m.log2()) * crate::mathfn::q_function(d / 2.0))
}

/// Closed-form BER with the weighted-threshold approximation:
/// `2/(M log2 M) * sum Q((mu_{m+1} - mu_m)/(sigma_{m+1} + sigma_m))`.
pub fn ber_analytical_appendix(moments: &[GaussianMoments]) -> Result<f64> {
    validate_moments(moments)?;
    let m_ord = moments.len() as f64;
    let mut acc = 0.0;
    for p in moments.windows(2) {
        acc +=
            crate::mathfn::q_function((p[1].mean - p[0].mean) / (p[1].std_dev() + p[0].std_dev()));
    }
    Ok(2.0 * acc / (m_ord * m_ord.log2()))
}

// ---------------------------------------------------------------------------
// Per-scheme threshold construction
// ---------------------------------------------------------------------------

/// Receive-domain moments a decoder spec operates on: raw photocount moments,
/// square-root-domain moments (means analytic, variances simulated), or
/// VNT-domain moments (unit variance by design).
pub fn receive_domain_moments(
    design: &ConstellationDesign,
    spec: &DecoderSpec,
) -> Result<Vec<GaussianMoments>> {
    match spec {
        DecoderSpec::PhotocountMl => Ok(design.rx_moments.clone()),
        DecoderSpec::SqrtMl {
            samples_per_level,
            seed,
        } => design
            .rx_moments
            .iter()
            .enumerate()
            .map(|(level, m)| {
                let mean = m.mean.sqrt();
                let var = sqrt_domain_variance_mc(m, *samples_per_level, *seed, level as u64);
                GaussianMoments::new(mean, var)
            })
            .collect(),
        DecoderSpec::VntMidpoint => {
            if design.scheme != Scheme::Joint {
                return Err(Error::Numeric {
                    what: "VNT-domain decoding applies to the joint scheme only",
                });
            }
            (0..design.order())
                .map(|m| GaussianMoments::new(m as f64 * design.separation + design.offset, 1.0))
                .collect()
        }
    }
}

/// Monte Carlo estimate of the square-root-transformed variance of one
/// level. Deterministic: each level owns stream `level` of the given seed.
fn sqrt_domain_variance_mc(moments: &GaussianMoments, samples: u64, seed: u64, level: u64) -> f64 {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(level);
    let mut acc = 0.0;
    let mut acc2 = 0.0;
    for _ in 0..samples {
        let y = sample_output(moments, &mut rng).max(0.0).sqrt();
        acc += y;
        acc2 += y * y;
    }
    let n = samples as f64;
    let mean = acc / n;
    ((acc2 - n * mean * mean) / (n - 1.0)).max(0.0)
}

/// Decision thresholds for a design under the given decoder spec.
pub fn thresholds_for(design: &ConstellationDesign, spec: &DecoderSpec) -> Result<ThresholdSet> {
    match spec {
        DecoderSpec::PhotocountMl => ml_thresholds(&design.rx_moments, ThresholdDomain::Photocount),
        DecoderSpec::SqrtMl { .. } => {
            let moments = receive_domain_moments(design, spec)?;
            ml_thresholds(&moments, ThresholdDomain::Sqrt)
        }
        DecoderSpec::VntMidpoint => {
            if design.scheme != Scheme::Joint {
                return Err(Error::Numeric {
                    what: "VNT-domain decoding applies to the joint scheme only",
                });
            }
            let thresholds = (0..design.order() - 1)
                .map(|m| (m as f64 + 0.5) * design.separation + design.offset)
                .collect();
            Ok(ThresholdSet {
                thresholds,
                domain: ThresholdDomain::Vnt,
            })
        }
    }
}

/// Analytical BER of a design under the given decoder spec: the
/// signal-dependent-noise expression for likelihood-based slicing, the AWGN
/// expression for VNT midpoint slicing.
pub fn ber_analytical(design: &ConstellationDesign, spec: &DecoderSpec) -> Result<f64> {
    match spec {
        DecoderSpec::VntMidpoint => ber_analytical_awgn(design.separation, design.order() as u32),
        DecoderSpec::PhotocountMl => {
            let t = ml_thresholds(&design.rx_moments, ThresholdDomain::Photocount)?;
            ber_analytical_sdn(&design.rx_moments, &t)
        }
        DecoderSpec::SqrtMl { .. } => {
            // estimate the transformed moments once; thresholds derive from
            // the same estimates
            let moments = receive_domain_moments(design, spec)?;
            let t = ml_thresholds(&moments, ThresholdDomain::Sqrt)?;
            ber_analytical_sdn(&moments, &t)
        }
    }
}

/// Receive transform a decoder spec applies to the raw array output before
/// slicing.
pub fn receive_transform(spec: &DecoderSpec, vnt: &VntParams) -> impl Fn(f64) -> f64 + Send + Sync {
    let vnt = *vnt;
    let kind = *spec;
    move |r: f64| match kind {
        DecoderSpec::PhotocountMl => r,
        DecoderSpec::SqrtMl { .. } => r.max(0.0).sqrt(),
        DecoderSpec::VntMidpoint => crate::vnt::vnt_forward(r, &vnt),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn gm(mean: f64, variance: f64) -> GaussianMoments {
        GaussianMoments::new(mean, variance).unwrap()
    }

    fn log_pdf(x: f64, m: &GaussianMoments) -> f64 {
        let d = x - m.mean;
        -0.5 * d * d / m.variance - 0.5 * (2.0 * std::f64::consts::PI * m.variance).ln()
    }

    #[test]
    fn ml_equal_variance_midpoint() {
        let t = ml_thresholds(&[gm(0.0, 4.0), gm(10.0, 4.0)], ThresholdDomain::Photocount).unwrap();
        assert_eq!(t.thresholds, vec![5.0]);
    }

    #[test]
    fn ml_threshold_equalizes_densities() {
        let moments = [gm(34.0, 34.0), gm(149.0, 180.0), gm(294.0, 252.0)];
        let t = ml_thresholds(&moments, ThresholdDomain::Photocount).unwrap();
        for (i, &th) in t.thresholds.iter().enumerate() {
            let la = log_pdf(th, &moments[i]);
            let lb = log_pdf(th, &moments[i + 1]);
            assert!(
                (la - lb).abs() <= 1e-9 * la.abs().max(1.0),
                "densities differ at threshold {i}: {la} vs {lb}"
            );
        }
    }

    #[test]
    fn ml_threshold_between_means_randomized() {
        // adjacent moment pairs of randomly parameterized designs; arbitrary
        // unrelated Gaussians can legitimately have no root inside the gap,
        // designed constellations cannot
        use crate::constellation::{design, Scheme};
        use crate::linkmodel::{LinkBudget, ModulationConfig, SpadArrayParams};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(31);
        let mut checked = 0;
        for _ in 0..400 {
            let spad = SpadArrayParams::new(rng.random_range(256u32..8192), 10e-9, 0.18).unwrap();
            let ts = [2e-9, 5e-9, 20e-9, 50e-9][rng.random_range(0..4)];
            let order = [2u32, 4, 8, 16][rng.random_range(0..4)];
            let modc = ModulationConfig::new(order, ts).unwrap();
            let link = LinkBudget::new(
                10f64.powf(rng.random_range(-4.0..-2.0)),
                10f64.powf(rng.random_range(-9.0..-7.5)),
                10f64.powf(rng.random_range(-5.5..-3.0)),
                785e-9,
            )
            .unwrap();
            for scheme in Scheme::ALL {
                let d = design(scheme, &link, &spad, &modc).unwrap();
                for pair in d.rx_moments.windows(2) {
                    let (a, b) = (&pair[0], &pair[1]);
                    match ml_threshold_pair(a, b) {
                        Ok(th) => {
                            assert!(
                                th > a.mean && th < b.mean,
                                "{scheme}: threshold {th} outside ({}, {})",
                                a.mean,
                                b.mean
                            );
                            checked += 1;
                        }
                        // levels buried inside each other's noise can place
                        // the likelihood crossing outside the gap; that must
                        // be flagged, and only then
                        Err(_) => {
                            let gap = b.mean - a.mean;
                            assert!(
                                gap < 0.5 * (a.std_dev() + b.std_dev()),
                                "{scheme}: resolvable pair rejected (gap {gap})"
                            );
                        }
                    }
                }
            }
        }
        assert!(checked >= 1000, "only {checked} thresholds exercised");
    }

    #[test]
    fn ml_scale_equivariant() {
        let a = gm(20.0, 16.0);
        let b = gm(60.0, 81.0);
        let base = ml_threshold_pair(&a, &b).unwrap();
        for &c in &[0.1, 3.0, 250.0] {
            let sa = gm(a.mean * c, a.variance * c * c);
            let sb = gm(b.mean * c, b.variance * c * c);
            let scaled = ml_threshold_pair(&sa, &sb).unwrap();
            assert!(
                (scaled - base * c).abs() <= 1e-9 * (base * c).abs(),
                "c={c}: {scaled} vs {}",
                base * c
            );
        }
    }

    #[test]
    fn ml_rejects_unordered_or_degenerate() {
        assert!(ml_thresholds(&[gm(5.0, 1.0), gm(5.0, 2.0)], ThresholdDomain::Photocount).is_err());
        assert!(ml_thresholds(&[gm(5.0, 1.0)], ThresholdDomain::Photocount).is_err());
        assert!(ml_thresholds(&[gm(1.0, 0.0), gm(5.0, 2.0)], ThresholdDomain::Photocount).is_err());
    }

    #[test]
    fn approx_threshold_limits() {
        let t =
            approx_thresholds(&[gm(0.0, 4.0), gm(10.0, 4.0)], ThresholdDomain::Photocount).unwrap();
        assert_eq!(t.thresholds, vec![5.0]);
        // vanishing upper deviation pulls the threshold to the upper mean
        let t = approx_thresholds(
            &[gm(0.0, 4.0), gm(10.0, 1e-28)],
            ThresholdDomain::Photocount,
        )
        .unwrap();
        assert!((t.thresholds[0] - 10.0).abs() < 1e-10);
    }

    #[test]
    fn approx_close_to_ml_on_typical_moments() {
        // receiver moments of the kind the uniform design produces
        let moments = [
            gm(34.3, 33.8),
            gm(149.5, 187.0),
            gm(234.2, 240.0),
            gm(294.4, 252.0),
        ];
        let ml = ml_thresholds(&moments, ThresholdDomain::Photocount).unwrap();
        let ap = approx_thresholds(&moments, ThresholdDomain::Photocount).unwrap();
        for i in 0..3 {
            let gap = moments[i + 1].mean - moments[i].mean;
            assert!(
                (ml.thresholds[i] - ap.thresholds[i]).abs() <= 0.02 * gap,
                "pair {i}: ml {} approx {}",
                ml.thresholds[i],
                ap.thresholds[i]
            );
        }
    }

    #[test]
    fn decode_slicing_and_tie_break() {
        let t = ThresholdSet {
            thresholds: vec![10.0, 20.0, 30.0],
            domain: ThresholdDomain::Photocount,
        };
        assert_eq!(decode(-5.0, &t), 0);
        assert_eq!(decode(15.0, &t), 1);
        assert_eq!(decode(35.0, &t), 3);
        // exactly on a threshold: upper symbol
        assert_eq!(decode(10.0, &t), 1);
        assert_eq!(decode(30.0, &t), 3);
    }

    #[test]
    fn gray_adjacent_levels_differ_in_one_bit() {
        for order in [2u32, 4, 8, 16] {
            for m in 0..order - 1 {
                assert_eq!(
                    gray_bit_errors(m as usize, m as usize + 1),
                    1,
                    "order {order}, level {m}"
                );
            }
        }
    }

    #[test]
    fn vnt_decoding_rejected_outside_joint_scheme() {
        use crate::constellation::{design_uniform, Scheme};
        use crate::linkmodel::{LinkBudget, ModulationConfig, SpadArrayParams};
        let link = LinkBudget::new(1e-3, 10e-9, 60e-6, 785e-9).unwrap();
        let spad = SpadArrayParams::new(2048, 10e-9, 0.18).unwrap();
        let modc = ModulationConfig::new(4, 5e-9).unwrap();
        let d = design_uniform(&link, &spad, &modc).unwrap();
        assert_ne!(d.scheme, Scheme::Joint);
        assert!(thresholds_for(&d, &DecoderSpec::VntMidpoint).is_err());
        assert!(receive_domain_moments(&d, &DecoderSpec::VntMidpoint).is_err());
    }

    #[test]
    fn ber_sdn_binary_antipodal() {
        // equal variances, gap d: BER = Q(d / (2 sigma))
        let sigma2 = 9.0;
        let d = 12.0;
        let moments = [gm(0.0, sigma2), gm(d, sigma2)];
        let t = ml_thresholds(&moments, ThresholdDomain::Photocount).unwrap();
        let ber = ber_analytical_sdn(&moments, &t).unwrap();
        let want = crate::mathfn::q_function(d / (2.0 * sigma2.sqrt()));
        assert!((ber - want).abs() <= 1e-15);
    }

    #[test]
    fn ber_sdn_vanishes_for_huge_gaps() {
        let moments = [gm(0.0, 1.0), gm(1e3, 1.0), gm(2e3, 1.0), gm(3e3, 1.0)];
        let t = ml_thresholds(&moments, ThresholdDomain::Photocount).unwrap();
        assert_eq!(ber_analytical_sdn(&moments, &t).unwrap(), 0.0);
    }

    #[test]
    fn ber_awgn_values() {
        // Q(0) = 1/2 limit
        let near_zero = ber_analytical_awgn(1e-300, 4).unwrap();
        assert!((near_zero - 6.0 / 16.0).abs() < 1e-12);
        // M = 4, d = 8.6
        let v = ber_analytical_awgn(8.6, 4).unwrap();
        let want = 0.75 * crate::mathfn::q_function(4.3);
        assert_eq!(v, want);
        assert!(ber_analytical_awgn(0.0, 4).is_err());
    }

    #[test]
    fn appendix_equals_sdn_with_approx_thresholds() {
        let moments = [
            gm(30.0, 30.0),
            gm(120.0, 110.0),
            gm(230.0, 210.0),
            gm(290.0, 250.0),
        ];
        let t = approx_thresholds(&moments, ThresholdDomain::Photocount).unwrap();
        let via_sdn = ber_analytical_sdn(&moments, &t).unwrap();
        let direct = ber_analytical_appendix(&moments).unwrap();
        assert!(
            (via_sdn - direct).abs() <= 1e-12 * direct,
            "{via_sdn} vs {direct}"
        );
    }

    #[test]
    fn appendix_close_to_ml_ber() {
        let moments = [
            gm(34.3, 33.8),
            gm(149.5, 187.0),
            gm(234.2, 240.0),
            gm(294.4, 252.0),
        ];
        let t = ml_thresholds(&moments, ThresholdDomain::Photocount).unwrap();
        let ml = ber_analytical_sdn(&moments, &t).unwrap();
        let ap = ber_analytical_appendix(&moments).unwrap();
        assert!((ml - ap).abs() <= 0.1 * ml, "ml {ml} appendix {ap}");
    }
}
