//! Channel loss models: deterministic geometric loss, Gamma-Gammaturbulence
//! fading for free-space links, and the line-of-sight loss of visible-light
//! links.
//!
//! The turbulence formulas reuse one glyph for two unrelated quantities in
//! the source material; here the aperture term is `vartheta2_turb` and the
//! dead-time regime parameter keeps the name `theta` elsewhere in the crate.

use crate::error::{Error, Result};
use crate::mathfn::{log_bessel_k, sample_gamma};
use rand::Rng;
use std::f64::consts::PI;

/// Atmospheric turbulence and beam geometry of a free-space link, with the
/// derived Gamma-Gamma fading parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurbulenceParams {
    /// Refractive-index structure constant, m^(-2/3).
    pub cn2: f64,
    /// Link distance, metres.
    pub distance: f64,
    /// Receiver aperture diameter, metres.
    pub aperture: f64,
    /// Transmitter beam divergence angle, radians.
    pub divergence: f64,
    /// Operating wavelength, metres.
    pub wavelength: f64,
    /// Optical wavenumber `2 pi / wavelength`.
    pub wavenumber: f64,
    /// Spherical-wave scintillation strength `0.5 Cn^2 k^(7/6) L^(11/6)`.
    pub chi2: f64,
    /// Aperture-averaging term `k aperture^2 / (4 L)`.
    pub vartheta2_turb: f64,
    /// Large-scale Gamma shape parameter.
    pub zeta: f64,
    /// Small-scale Gamma shape parameter.
    pub beta: f64,
}

impl TurbulenceParams {
    pub fn new(
        cn2: f64,
        distance: f64,
        aperture: f64,
        divergence: f64,
        wavelength: f64,
    ) -> Result<Self> {
        for (what, v) in [
            ("turbulence structure constant must be positive", cn2),
            ("link distance must be positive", distance),
            ("aperture diameter must be positive", aperture),
            ("beam divergence must be positive", divergence),
            ("wavelength must be positive", wavelength),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParam { what, value: v });
            }
        }
        let k = 2.0 * PI / wavelength;
        let chi2 = 0.5 * cn2 * k.powf(7.0 / 6.0) * distance.powf(11.0 / 6.0);
        let vt2 = k * aperture * aperture / (4.0 * distance);
        let (zeta, beta) = gg_shape_params(chi2, vt2)?;
        Ok(Self {
            cn2,
            distance,
            aperture,
            divergence,
            wavelength,
            wavenumber: k,
            chi2,
            vartheta2_turb: vt2,
            zeta,
            beta,
        })
    }
}

/// Gamma-Gamma shape parameters `(zeta, beta)` from the scintillation
/// strength and the aperture term.
pub fn gg_params(t: &TurbulenceParams) -> Result<(f64, f64)> {
    gg_shape_params(t.chi2, t.vartheta2_turb)
}

fn gg_shape_params(chi2: f64, vt2: f64) -> Result<(f64, f64)> {
    let chi_125 = chi2.powf(6.0 / 5.0); // chi^(12/5)
    let zeta_exp = 0.49 * chi2 / (1.0 + 0.18 * vt2 + 0.56 * chi_125).powf(7.0 / 6.0);
    let beta_exp = 0.51 * chi2 * (1.0 + 0.69 * chi_125).powf(-5.0 / 6.0)
        / (1.0 + 0.9 * vt2 + 0.62 * vt2 * chi_125).powf(5.0 / 6.0);
    if !(zeta_exp.is_finite() && beta_exp.is_finite()) || zeta_exp > 700.0 || beta_exp > 700.0 {
        return Err(Error::Numeric {
            what: "turbulence strength overflows the fading parameters",
        });
    }
    // exp_m1 keeps the weak-turbulence limit (zeta, beta -> infinity) exact
    let zeta = 1.0 / zeta_exp.exp_m1();
    let beta = 1.0 / beta_exp.exp_m1();
    Ok((zeta, beta))
}

/// Capture fraction of a diverging Gaussian beam at a circular aperture:
/// `erf(sqrt(pi) aperture / (2 sqrt(2) divergence distance))^2`.
pub fn fso_geometric_loss(aperture: f64, divergence: f64, distance: f64) -> f64 {
    let arg = PI.sqrt() * aperture / (2.0 * std::f64::consts::SQRT_2 * divergence * distance);
    let e = libm::erf(arg);
    e * e
}

/// Unit-mean Gamma-Gamma fading density at `x > 0`, evaluated through
/// log-domain Gamma and Bessel terms so extreme shape parameters stay finite.
pub fn gg_pdf(x: f64, zeta: f64, beta: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain {
            what: "fading density argument must be positive",
            value: x,
        });
    }
    if !(zeta > 0.0) || !(beta > 0.0) {
        return Err(Error::InvalidParam {
            what: "fading shape parameters must be positive",
            value: zeta.min(beta),
        });
    }
    let half_sum = 0.5 * (zeta + beta);
    let ln = std::f64::consts::LN_2 + half_sum * (zeta * beta).ln()
        - libm::lgamma(zeta)
        - libm::lgamma(beta)
        + (half_sum - 1.0) * x.ln()
        + log_bessel_k(zeta - beta, 2.0 * (zeta * beta * x).sqrt())?;
    Ok(ln.exp())
}

/// One unit-mean fading draw: the product of two independent unit-mean Gamma
/// variates with shapes `zeta` and `beta`.
pub fn gg_sample<R: Rng + ?Sized>(zeta: f64, beta: f64, rng: &mut R) -> Result<f64> {
    let a = sample_gamma(zeta, 1.0 / zeta, rng)?;
    let b = sample_gamma(beta, 1.0 / beta, rng)?;
    Ok(a * b)
}

/// One draw of the total free-space loss `h_f h_g`.
pub fn fso_loss_draw<R: Rng + ?Sized>(t: &TurbulenceParams, rng: &mut R) -> Result<f64> {
    let hg = fso_geometric_loss(t.aperture, t.divergence, t.distance);
    Ok(gg_sample(t.zeta, t.beta, rng)? * hg)
}

/// Scintillation index of the Gamma-Gamma model,
/// `1/zeta + 1/beta + 1/(zeta beta)`.
pub fn gg_scintillation_index(zeta: f64, beta: f64) -> f64 {
    1.0 / zeta + 1.0 / beta + 1.0 / (zeta * beta)
}

// ---------------------------------------------------------------------------
// Visible-light line-of-sight loss
// ---------------------------------------------------------------------------

/// Geometry of a line-of-sight visible-light link. The radiant intensity and
/// concentrator gain are left as functions of the radiance/incidence angles;
/// [`VlcGeometry::lambertian`] installs the usual Lambertian source with a
/// unit-gain concentrator.
pub struct VlcGeometry {
    /// Physical detector area, m^2.
    pub detector_area: f64,
    /// Link distance, metres.
    pub distance: f64,
    /// Radiance angle at the source, radians.
    pub radiance_angle: f64,
    /// Incidence angle at the receiver, radians; must stay within the
    /// field of view (the forward half-space here; narrower concentrators
    /// encode their cutoff in the gain function).
    pub incidence_angle: f64,
    /// Radiant intensity as a function of the radiance angle.
    pub radiant_intensity: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Concentrator gain as a function of the incidence angle.
    pub concentrator_gain: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl VlcGeometry {
    /// Lambertian source of the given order with a unit-gain concentrator.
    pub fn lambertian(
        detector_area: f64,
        distance: f64,
        radiance_angle: f64,
        incidence_angle: f64,
        order: f64,
    ) -> Self {
        Self {
            detector_area,
            distance,
            radiance_angle,
            incidence_angle,
            radiant_intensity: Box::new(move |psi: f64| {
                (order + 1.0) / (2.0 * PI) * psi.cos().powf(order)
            }),
            concentrator_gain: Box::new(|_| 1.0),
        }
    }
}

/// Line-of-sight loss
/// `A_d / L^2 * R_o(psi_t) * G(psi_r) * cos(psi_r)`.
pub fn vlc_los_loss(g: &VlcGeometry) -> Result<f64> {
    if g.incidence_angle < 0.0 || g.incidence_angle > PI / 2.0 {
        return Err(Error::OutOfFov {
            angle: g.incidence_angle,
        });
    }
    Ok(g.detector_area / (g.distance * g.distance)
        * (g.radiant_intensity)(g.radiance_angle)
        * (g.concentrator_gain)(g.incidence_angle)
        * g.incidence_angle.cos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    /// Table-style free-space geometry: 10 cm aperture, 2 mrad divergence,
    /// 1500 m, 785 nm.
    fn turb(cn2: f64) -> TurbulenceParams {
        TurbulenceParams::new(cn2, 1500.0, 0.10, 2e-3, 785e-9).unwrap()
    }

    /// erf by quadrature of the Gaussian integrand, independent of the
    /// library call inside the implementation.
    fn erf_quadrature(x: f64) -> f64 {
        let n = 200_000;
        let h = x / n as f64;
        let f = |t: f64| (-t * t).exp();
        let mut acc = f(0.0) + f(x);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        2.0 / PI.sqrt() * acc * h / 3.0
    }

    #[test]
    fn geometric_loss_saturates_with_aperture() {
        let v = fso_geometric_loss(1e6, 2e-3, 1500.0);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn geometric_loss_table_geometry() {
        let got = fso_geometric_loss(0.10, 2e-3, 1500.0);
        let arg = PI.sqrt() * 0.10 / (2.0 * std::f64::consts::SQRT_2 * 2e-3 * 1500.0);
        let want = erf_quadrature(arg).powi(2);
        assert!((got - want).abs() <= 1e-9, "{got} vs {want}");
    }

    #[test]
    fn geometric_loss_decreasing_in_distance() {
        let mut prev = f64::INFINITY;
        for i in 1..50 {
            let v = fso_geometric_loss(0.1, 2e-3, 100.0 * i as f64);
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn gg_params_positive_and_ordered_in_cn2() {
        let weak = turb(1e-15);
        let strong = turb(1e-13);
        assert!(weak.zeta > 0.0 && weak.beta > 0.0);
        assert!(strong.zeta > 0.0 && strong.beta > 0.0);
        // stronger turbulence shrinks the smaller shape parameter
        assert!(
            strong.zeta.min(strong.beta) < weak.zeta.min(weak.beta),
            "weak ({}, {}), strong ({}, {})",
            weak.zeta,
            weak.beta,
            strong.zeta,
            strong.beta
        );
    }

    #[test]
    fn gg_params_no_turbulence_limit() {
        let t = turb(1e-22);
        assert!(t.zeta > 1e5 && t.beta > 1e5);
        assert!(gg_scintillation_index(t.zeta, t.beta) < 1e-4);
    }

    #[test]
    fn gg_pdf_normalization_and_mean() {
        // quadrature in log space over the effective support
        let (zeta, beta) = (4.2, 1.9);
        let integrate = |weight: &dyn Fn(f64) -> f64| {
            let (lo, hi) = (1e-9f64.ln(), 60f64.ln());
            let n = 400_000;
            let h = (hi - lo) / n as f64;
            let f = |u: f64| {
                let x = u.exp();
                weight(x) * gg_pdf(x, zeta, beta).unwrap() * x // Jacobian
            };
            let mut acc = f(lo) + f(hi);
            for i in 1..n {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + i as f64 * h);
            }
            acc * h / 3.0
        };
        let total = integrate(&|_| 1.0);
        assert!((total - 1.0).abs() < 1e-4, "pdf integrates to {total}");
        let mean = integrate(&|x| x);
        assert!((mean - 1.0).abs() < 1e-3, "pdf mean {mean}");
    }

    #[test]
    fn gg_pdf_domain() {
        assert!(gg_pdf(0.0, 2.0, 2.0).is_err());
        assert!(gg_pdf(-1.0, 2.0, 2.0).is_err());
        assert!(gg_pdf(1.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn gg_sampler_moments() {
        let (zeta, beta) = (14.2, 9.3);
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let n = 1_000_000;
        let mut acc = 0.0;
        let mut acc2 = 0.0;
        for _ in 0..n {
            let h = gg_sample(zeta, beta, &mut rng).unwrap();
            assert!(h > 0.0);
            acc += h;
            acc2 += h * h;
        }
        let mean = acc / n as f64;
        let si = acc2 / n as f64 / (mean * mean) - 1.0;
        let want_si = gg_scintillation_index(zeta, beta);
        let se_mean = (want_si / n as f64).sqrt();
        assert!((mean - 1.0).abs() <= 3.0 * se_mean, "mean {mean}");
        assert!(
            (si - want_si).abs() <= 0.02 * want_si,
            "SI {si} want {want_si}"
        );
    }

    #[test]
    fn gg_sampler_matches_pdf_distribution() {
        // Kolmogorov-Smirnov distance between sampled values and the CDF
        // obtained by integrating the density
        let (zeta, beta) = (4.2, 1.9);
        let n = 1_000_000usize;
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let mut xs: Vec<f64> = (0..n)
            .map(|_| gg_sample(zeta, beta, &mut rng).unwrap())
            .collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // trapezoid CDF on a fine grid
        let grid_n = 20_000;
        let x_hi = xs[n - 1] * 1.01;
        let mut cdf = vec![0.0f64; grid_n + 1];
        let h = x_hi / grid_n as f64;
        let mut prev_pdf = 0.0; // density -> 0 as x -> 0 for these shapes
        for i in 1..=grid_n {
            let x = i as f64 * h;
            let p = gg_pdf(x, zeta, beta).unwrap();
            cdf[i] = cdf[i - 1] + 0.5 * (p + prev_pdf) * h;
            prev_pdf = p;
        }
        let eval_cdf = |x: f64| {
            let idx = (x / h).min(grid_n as f64) as usize;
            let frac = (x / h - idx as f64).clamp(0.0, 1.0);
            if idx >= grid_n {
                cdf[grid_n]
            } else {
                cdf[idx] * (1.0 - frac) + cdf[idx + 1] * frac
            }
        };
        let mut d: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let c = eval_cdf(x);
            d = d
                .max((c - i as f64 / n as f64).abs())
                .max((c - (i + 1) as f64 / n as f64).abs());
        }
        assert!(d < 0.01, "KS distance {d}");
    }

    #[test]
    fn fso_draw_mean_is_geometric_loss() {
        let t = turb(1e-14);
        let hg = fso_geometric_loss(t.aperture, t.divergence, t.distance);
        let mut rng = ChaCha12Rng::seed_from_u64(29);
        let n = 400_000;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += fso_loss_draw(&t, &mut rng).unwrap();
        }
        let mean = acc / n as f64;
        let si = gg_scintillation_index(t.zeta, t.beta);
        let se = hg * (si / n as f64).sqrt();
        assert!((mean - hg).abs() <= 3.0 * se, "mean {mean} want {hg}");
    }

    #[test]
    fn fso_draw_deterministic_per_seed() {
        let t = turb(1e-14);
        let mut a = ChaCha12Rng::seed_from_u64(5);
        let mut b = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..20 {
            assert_eq!(
                fso_loss_draw(&t, &mut a).unwrap(),
                fso_loss_draw(&t, &mut b).unwrap()
            );
        }
    }

    #[test]
    fn fso_tail_decreases() {
        let t = turb(1e-13);
        let hg = fso_geometric_loss(t.aperture, t.divergence, t.distance);
        let mut rng = ChaCha12Rng::seed_from_u64(37);
        let n = 200_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| fso_loss_draw(&t, &mut rng).unwrap())
            .collect();
        let mut prev = 1.0;
        for &c in &[0.5, 1.0, 1.5, 2.0, 3.0] {
            let frac = draws.iter().filter(|&&x| x > hg * c).count() as f64 / n as f64;
            assert!(frac <= prev);
            prev = frac;
        }
    }

    #[test]
    fn vlc_cosine_null_and_scaling() {
        let g = VlcGeometry::lambertian(1e-4, 2.0, 0.0, PI / 2.0, 1.0);
        assert!(vlc_los_loss(&g).unwrap().abs() < 1e-16);

        let near = VlcGeometry::lambertian(1e-4, 2.0, 0.2, 0.3, 1.0);
        let far = VlcGeometry::lambertian(1e-4, 4.0, 0.2, 0.3, 1.0);
        let ratio = vlc_los_loss(&near).unwrap() / vlc_los_loss(&far).unwrap();
        assert!((ratio - 4.0).abs() < 1e-12);
    }

    #[test]
    fn vlc_normal_incidence_value() {
        // order-1 Lambertian at normal incidence: A/L^2 * (2 / 2 pi)
        let g = VlcGeometry::lambertian(1e-4, 2.0, 0.0, 0.0, 1.0);
        let want = 1e-4 / 4.0 * (2.0 / (2.0 * PI));
        let got = vlc_los_loss(&g).unwrap();
        assert!((got - want).abs() <= 1e-15, "{got} vs {want}");
    }

    #[test]
    fn vlc_out_of_fov() {
        let g = VlcGeometry::lambertian(1e-4, 2.0, 0.0, 1.8, 1.0);
        match vlc_los_loss(&g) {
            Err(Error::OutOfFov { .. }) => {}
            other => panic!("expected out-of-FOV, got {other:?}"),
        }
    }
}
