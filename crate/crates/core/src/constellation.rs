//! Transmit constellation design for the four signalling schemes.
//!
//! Every design satisfies the same three constraints: the lowest level is
//! dark (`I(0) = 0`), the average transmit power stays within the budget, and
//! the top level keeps each SPAD pixel below the saturation point
//! `lambda = 1/T_d`. Uniform and square-root signalling space the *transmit*
//! rates; the pre-distortion schemes invert the dead-time nonlinearity with
//! the Lambert W function so that the *receiver-side* levels are equidistant,
//! either in photocounts or, for the joint scheme, after the
//! variance-normalizing transform.

use crate::error::{Error, Result};
use crate::linkmodel::{
    avg_transmit_power, peak_rate_bound, per_pixel_rate, LinkBudget, ModulationConfig,
    SpadArrayParams,
};
use crate::mathfn::{bisect, lambert_w0, BisectionSpec};
use crate::spad::{array_moments, DeadTimeRegime, GaussianMoments};
use crate::vnt::{vnt_inverse, VntParams};
use std::f64::consts::E;
use std::fmt;
use std::str::FromStr;

/// Signalling scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Uniform,
    Sqrt,
    PreDistortion,
    Joint,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::Uniform,
        Scheme::Sqrt,
        Scheme::PreDistortion,
        Scheme::Joint,
    ];

    pub fn token(&self) -> &'static str {
        match self {
            Scheme::Uniform => "uniform",
            Scheme::Sqrt => "sqrt",
            Scheme::PreDistortion => "pre_distortion",
            Scheme::Joint => "joint",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "uniform" => Ok(Scheme::Uniform),
            "sqrt" => Ok(Scheme::Sqrt),
            "pre_distortion" => Ok(Scheme::PreDistortion),
            "joint" => Ok(Scheme::Joint),
            other => Err(format!(
                "unknown scheme `{other}` (expected uniform, sqrt, pre_distortion or joint)"
            )),
        }
    }
}

/// A designed transmit constellation together with the receiver-side
/// Gaussian moments it induces.
///
/// `separation` is the designed level separation in the scheme's native
/// domain: transmit photon rates for uniform/sqrt, received photocounts for
/// pre-distortion, and the VNT output domain for the joint scheme. `offset`
/// is the constant the lowest received level sits at in that domain (zero for
/// uniform/sqrt).
#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationDesign {
    pub scheme: Scheme,
    pub tx_rates: Vec<f64>,
    pub separation: f64,
    pub offset: f64,
    pub rx_moments: Vec<GaussianMoments>,
}

impl ConstellationDesign {
    pub fn order(&self) -> usize {
        self.tx_rates.len()
    }

    /// Receiver means in the photocount domain.
    pub fn rx_means(&self) -> Vec<f64> {
        self.rx_moments.iter().map(|m| m.mean).collect()
    }

    /// Level means in the scheme's receive-transform domain: square-root of
    /// the photocount mean for the sqrt scheme, VNT output for the joint
    /// scheme, and the raw photocount mean otherwise.
    pub fn domain_means(&self) -> Vec<f64> {
        match self.scheme {
            Scheme::Sqrt => self.rx_moments.iter().map(|m| m.mean.sqrt()).collect(),
            Scheme::Joint => (0..self.order())
                .map(|i| i as f64 * self.separation + self.offset)
                .collect(),
            _ => self.rx_means(),
        }
    }
}

// ---------------------------------------------------------------------------
// Uniform and square-root signalling
// ---------------------------------------------------------------------------

/// Uniformly spaced transmit photon rates `I(m) = m d` with the largest `d`
/// allowed by the average-power and peak-power constraints.
pub fn design_uniform(
    link: &LinkBudget,
    spad: &SpadArrayParams,
    modc: &ModulationConfig,
) -> Result<ConstellationDesign> {
    let peak = peak_rate_bound(link, spad)?;
    let m1 = (modc.order - 1) as f64;
    let d_avg = 2.0 * link.avg_power_limit / (link.photon_energy() * m1);
    let d_peak = peak / m1;
    let d = d_avg.min(d_peak);
    let tx_rates: Vec<f64> = (0..modc.order).map(|m| m as f64 * d).collect();
    finish_tx_domain_design(Scheme::Uniform, tx_rates, d, link, spad, modc)
}

/// Square-root signalling: `I(m) = m^2 d`, the transmit-side inverse of the
/// receiver's square-root transform.
pub fn design_sqrt(
    link: &LinkBudget,
    spad: &SpadArrayParams,
    modc: &ModulationConfig,
) -> Result<ConstellationDesign> {
    let peak = peak_rate_bound(link, spad)?;
    let m = modc.order as f64;
    let m1 = m - 1.0;
    let d_avg = 6.0 * link.avg_power_limit / (link.photon_energy() * m1 * (2.0 * m - 1.0));
    let d_peak = peak / (m1 * m1);
    let d = d_avg.min(d_peak);
    let tx_rates: Vec<f64> = (0..modc.order).map(|i| (i * i) as f64 * d).collect();
    finish_tx_domain_design(Scheme::Sqrt, tx_rates, d, link, spad, modc)
}

fn finish_tx_domain_design(
    scheme: Scheme,
    tx_rates: Vec<f64>,
    d: f64,
    link: &LinkBudget,
    spad: &SpadArrayParams,
    modc: &ModulationConfig,
) -> Result<ConstellationDesign> {
    let rx_moments = tx_rates
        .iter()
        .map(|&rate| array_moments(per_pixel_rate(rate, link, spad), spad, modc.symbol_duration))
        .collect();
    Ok(ConstellationDesign {
        scheme,
        tx_rates,
        separation: d,
        offset: 0.0,
        rx_moments,
    })
}

// ---------------------------------------------------------------------------
// Pre-distortion (equidistant photocount means)
// ---------------------------------------------------------------------------

/// Right-hand side of the average-power feasibility inequality shared by the
/// two pre-distorted designs:
/// `-pde T_d (alpha P_ave + lambda_b h nu) / (N h nu)`.
fn avg_power_rhs(link: &LinkBudget, spad: &SpadArrayParams) -> f64 {
    let hv = link.photon_energy();
    -spad.pde * spad.dead_time * (link.loss * link.avg_power_limit + link.background_rate() * hv)
        / (spad.n() * hv)
}

/// Offset of the pre-distorted photocount constellation, fixed by `I(0) = 0`:
/// `xi = lambda_b pde T_s exp(-lambda_b pde T_d / N)`.
fn xi_pre(link: &LinkBudget, spad: &SpadArrayParams, modc: &ModulationConfig) -> f64 {
    let a = link.background_rate() * spad.pde * spad.dead_time / spad.n();
    link.background_rate() * spad.pde * modc.symbol_duration * (-a).exp()
}

/// Averaged Lambert-W sum whose sign against [`avg_power_rhs`] decides
/// whether the average-power constraint binds for the pre-distortion scheme:
/// `(1/M) sum_m W0(-(m d + xi) T_d / (N T_s))`.
///
/// Strictly decreasing in `d`; equals `-lambda_b pde T_d / N` at `d = 0`.
pub fn lfun_pre(d: f64, xi: f64, spad: &SpadArrayParams, modc: &ModulationConfig) -> Result<f64> {
    let n = spad.n();
    let coeff = spad.dead_time / (n * modc.symbol_duration);
    let mut acc = 0.0;
    for m in 0..modc.order {
        acc += lambert_w0(-(m as f64 * d + xi) * coeff)?;
    }
    Ok(acc / modc.order as f64)
}

/// Pre-distorted constellation: transmit rates warped through the Lambert W
/// function so that the received photocount means are exactly `m d* + xi`.
pub fn design_predistortion(
    link: &LinkBudget,
    spad: &SpadArrayParams,
    modc: &ModulationConfig,
) -> Result<ConstellationDesign> {
    peak_rate_bound(link, spad)?;
    let n = spad.n();
    let ts = modc.symbol_duration;
    let td = spad.dead_time;
    let m1 = (modc.order - 1) as f64;

    let xi = xi_pre(link, spad, modc);
    let d_max = (n * ts / (E * td) - xi) / m1;
    let rhs = avg_power_rhs(link, spad);
    let d_star = if lfun_pre(d_max, xi, spad, modc)? <= rhs {
        // average power binds strictly inside the peak-feasible set; the
        // bracket has a guaranteed sign change because the sum is strictly
        // decreasing from its d = 0 value above `rhs`
        let spec = BisectionSpec::new(0.0, d_max, 1e-12 * d_max, 200)?;
        bisect(
            |d| match lfun_pre(d, xi, spad, modc) {
                Ok(v) => v - rhs,
                Err(_) => f64::NAN,
            },
            &spec,
        )?
    } else {
        d_max
    };

    let regime = DeadTimeRegime::new(ts, td);
    let mut tx_rates = Vec::with_capacity(modc.order as usize);
    let mut rx_moments = Vec::with_capacity(modc.order as usize);
    for m in 0..modc.order {
        let mean = m as f64 * d_star + xi;
        rx_moments.push(GaussianMoments::photocount(mean, spad, regime)?);
        if m == 0 {
            // exact by the constraint that fixes xi
            tx_rates.push(0.0);
        } else {
            tx_rates.push(tx_rate_for_mean(mean, link, spad, modc)?);
        }
    }
    Ok(ConstellationDesign {
        scheme: Scheme::PreDistortion,
        tx_rates,
        separation: d_star,
        offset: xi,
        rx_moments,
    })
}

/// Invert the dead-time transfer curve: the transmit photon rate that makes
/// the array photocount mean equal `mean`, staying on the pre-saturation
/// branch.
fn tx_rate_for_mean(
    mean: f64,
    link: &LinkBudget,
    spad: &SpadArrayParams,
    modc: &ModulationConfig,
) -> Result<f64> {
    let n = spad.n();
    let w = lambert_w0(-mean * spad.dead_time / (n * modc.symbol_duration))?;
    Ok(-n * w / (link.loss * spad.pde * spad.dead_time) - link.background_rate() / link.loss)
}

// ---------------------------------------------------------------------------
// Joint pre-distortion and noise normalization
// ---------------------------------------------------------------------------

/// Offset of the VNT-domain constellation, fixed by `I(0) = 0`.
fn xi_joint(
    link: &LinkBudget,
    spad: &SpadArrayParams,
    modc: &ModulationConfig,
    p: &VntParams,
) -> f64 {
    let a = link.background_rate() * spad.pde * spad.dead_time / spad.n();
    let arg = 1.0
        - 2.0 * p.theta * modc.symbol_duration * link.background_rate() * spad.pde / spad.n()
            * (-a).exp();
    -p.scale * arg.asin()
}

/// Averaged Lambert-W sum for the joint design, the VNT-domain analogue of
/// [`lfun_pre`]: the W argument pre-composes the inverse transform of the
/// target level `m d + xi`.
pub fn lfun_joint(d: f64, xi: f64, spad: &SpadArrayParams, modc: &ModulationConfig) -> Result<f64> {
    let p = VntParams::for_link(spad, modc.symbol_duration);
    let coeff = spad.dead_time / (2.0 * p.theta * modc.symbol_duration);
    let mut acc = 0.0;
    for m in 0..modc.order {
        let level = m as f64 * d + xi;
        acc += lambert_w0(coeff * ((-level / p.scale).sin() - 1.0))?;
    }
    Ok(acc / modc.order as f64)
}

/// Joint design: the transmit side composes the inverse VNT with the
/// Lambert-W pre-distortion so that the receiver's VNT output has equidistant
/// means `m d* + xi` and unit noise variance.
pub fn design_joint(
    link: &LinkBudget,
    spad: &SpadArrayParams,
    modc: &ModulationConfig,
) -> Result<ConstellationDesign> {
    peak_rate_bound(link, spad)?;
    let ts = modc.symbol_duration;
    let td = spad.dead_time;
    let m1 = (modc.order - 1) as f64;
    let p = VntParams::for_link(spad, ts);

    let xi = xi_joint(link, spad, modc, &p);
    // peak-power constraint mapped through the VNT; the arcsine argument is
    // provably inside [-1, 1], asserted here rather than assumed
    let sat_arg = 1.0 - 2.0 * p.theta * ts / (td * E);
    if !(-1.0..=1.0).contains(&sat_arg) {
        return Err(Error::Numeric {
            what: "saturation level left the arcsine domain",
        });
    }
    let d_max = (-p.scale * sat_arg.asin() - xi) / m1;
    let rhs = avg_power_rhs(link, spad);
    let d_star = if lfun_joint(d_max, xi, spad, modc)? <= rhs {
        let spec = BisectionSpec::new(0.0, d_max, 1e-12 * d_max, 200)?;
        bisect(
            |d| match lfun_joint(d, xi, spad, modc) {
                Ok(v) => v - rhs,
                Err(_) => f64::NAN,
            },
            &spec,
        )?
    } else {
        d_max
    };

    let regime = DeadTimeRegime::new(ts, td);
    let mut tx_rates = Vec::with_capacity(modc.order as usize);
    let mut rx_moments = Vec::with_capacity(modc.order as usize);
    for m in 0..modc.order {
        let mean = vnt_inverse(m as f64 * d_star + xi, &p)?;
        rx_moments.push(GaussianMoments::photocount(mean, spad, regime)?);
        if m == 0 {
            tx_rates.push(0.0);
        } else {
            tx_rates.push(tx_rate_for_mean(mean, link, spad, modc)?);
        }
    }
    Ok(ConstellationDesign {
        scheme: Scheme::Joint,
        tx_rates,
        separation: d_star,
        offset: xi,
        rx_moments,
    })
}

/// Design dispatch by scheme.
pub fn design(
    scheme: Scheme,
    link: &LinkBudget,
    spad: &SpadArrayParams,
    modc: &ModulationConfig,
) -> Result<ConstellationDesign> {
    match scheme {
        Scheme::Uniform => design_uniform(link, spad, modc),
        Scheme::Sqrt => design_sqrt(link, spad, modc),
        Scheme::PreDistortion => design_predistortion(link, spad, modc),
        Scheme::Joint => design_joint(link, spad, modc),
    }
}

/// Post-hoc audit that a design satisfies all three constraints, with the
/// binding one tight to `tol` (relative). Returns the achieved average power.
pub fn audit_constraints(
    design: &ConstellationDesign,
    link: &LinkBudget,
    spad: &SpadArrayParams,
    tol: f64,
) -> Result<f64> {
    if design.tx_rates[0] != 0.0 {
        return Err(Error::Numeric {
            what: "lowest constellation level must be dark",
        });
    }
    for w in design.tx_rates.windows(2) {
        if w[1] < w[0] {
            return Err(Error::Numeric {
                what: "transmit rates must be non-decreasing",
            });
        }
    }
    let hv = link.photon_energy();
    let power = avg_transmit_power(&design.tx_rates, hv)?;
    let peak = peak_rate_bound(link, spad)?;
    let top = *design.tx_rates.last().unwrap();
    if power > link.avg_power_limit * (1.0 + tol) {
        return Err(Error::Numeric {
            what: "average power constraint violated",
        });
    }
    if top > peak * (1.0 + tol) {
        return Err(Error::Numeric {
            what: "peak power constraint violated",
        });
    }
    let avg_tight = (power - link.avg_power_limit).abs() <= tol * link.avg_power_limit;
    let peak_tight = (top - peak).abs() <= tol * peak;
    if !avg_tight && !peak_tight {
        return Err(Error::Numeric {
            what: "neither constraint is tight at the design point",
        });
    }
    Ok(power)
}
