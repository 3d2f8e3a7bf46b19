//! Cross-module checks: the Monte Carlo engine against the analytical BER
//! expressions, the two joint-scheme decoding paths against each other, and
//! the rate search against the scheme hierarchy.

use spad_owc::constellation::{design, Scheme};
use spad_owc::decoder::{ber_analytical, DecoderSpec};
use spad_owc::linkmodel::{LinkBudget, ModulationConfig, SpadArrayParams};
use spad_owc::sim::{
    default_rate_grid, run_ber_mc, search_max_rate, substream, transformed_moments_mc,
};
use spad_owc::spad::array_moments;
use spad_owc::vnt::{vnt_forward, VntParams};

fn link(p_ave: f64) -> LinkBudget {
    LinkBudget::new(1e-3, 10e-9, p_ave, 785e-9).unwrap()
}

fn table_spad() -> SpadArrayParams {
    SpadArrayParams::new(2048, 10e-9, 0.18).unwrap()
}

fn pam4_5ns() -> ModulationConfig {
    ModulationConfig::new(4, 5e-9).unwrap()
}

#[test]
fn mc_matches_analytics_for_all_schemes() {
    // one mid-power point per scheme, 1e6 symbols, 3 binomial SE
    let spad = table_spad();
    let modc = pam4_5ns();
    for (scheme, p_ave) in [
        (Scheme::Uniform, 40e-6),
        (Scheme::Sqrt, 30e-6),
        (Scheme::PreDistortion, 30e-6),
        (Scheme::Joint, 20e-6),
    ] {
        let link = link(p_ave);
        let d = design(scheme, &link, &spad, &modc).unwrap();
        // the joint AWGN path is approximate by construction; check it
        // separately below
        let spec = match scheme {
            Scheme::Joint => DecoderSpec::PhotocountMl,
            s => DecoderSpec::default_for(s),
        };
        let analytic = ber_analytical(&d, &spec).unwrap();
        let mc = run_ber_mc(&d, &spec, &spad, &modc, 1_000_000, 0xC0FE).unwrap();
        let se = (analytic * (1.0 - analytic) / mc.bits_simulated as f64).sqrt();
        assert!(
            (mc.ber - analytic).abs() <= 3.0 * se,
            "{scheme}: mc {} vs analytic {analytic} (3 SE = {:.2e})",
            mc.ber,
            3.0 * se
        );
    }
}

#[test]
fn uniform_mc_self_consistency_across_powers() {
    let spad = table_spad();
    let modc = pam4_5ns();
    for &p_ave in &[20e-6, 60e-6, 150e-6] {
        let link = link(p_ave);
        let d = design(Scheme::Uniform, &link, &spad, &modc).unwrap();
        let spec = DecoderSpec::PhotocountMl;
        let analytic = ber_analytical(&d, &spec).unwrap();
        let mc = run_ber_mc(&d, &spec, &spad, &modc, 1_000_000, 0xC0FF).unwrap();
        let se = (analytic * (1.0 - analytic) / mc.bits_simulated as f64).sqrt();
        assert!(
            (mc.ber - analytic).abs() <= 3.0 * se,
            "P_ave {p_ave}: mc {} vs analytic {analytic}",
            mc.ber
        );
    }
}

#[test]
fn joint_awgn_decode_close_to_closed_form() {
    // the VNT output is only approximately Gaussian, so the simulated BER
    // under AWGN-style decoding sits slightly above the closed form but
    // within a factor of two
    let spad = table_spad();
    let modc = pam4_5ns();
    let link = link(25e-6);
    let d = design(Scheme::Joint, &link, &spad, &modc).unwrap();
    let awgn = ber_analytical(&d, &DecoderSpec::VntMidpoint).unwrap();
    let mc = run_ber_mc(
        &d,
        &DecoderSpec::VntMidpoint,
        &spad,
        &modc,
        4_000_000,
        0xC100,
    )
    .unwrap();
    assert!(
        mc.ber <= 2.0 * awgn,
        "simulated {} more than twice the closed form {awgn}",
        mc.ber
    );
    assert!(
        mc.ber >= 0.5 * awgn,
        "simulated {} implausibly below the closed form {awgn}",
        mc.ber
    );
}

#[test]
fn joint_optimal_ml_close_to_awgn_form() {
    // likelihood decoding on the raw photocount is the optimal receiver;
    // it lands near (and slightly below) the AWGN closed form
    let spad = table_spad();
    let modc = pam4_5ns();
    for &p_ave in &[25e-6, 60e-6, 100e-6] {
        let link = link(p_ave);
        let d = design(Scheme::Joint, &link, &spad, &modc).unwrap();
        let awgn = ber_analytical(&d, &DecoderSpec::VntMidpoint).unwrap();
        let ml = ber_analytical(&d, &DecoderSpec::PhotocountMl).unwrap();
        assert!(
            ml <= awgn * 1.2 && ml >= awgn * 0.3,
            "P_ave {p_ave}: optimal {ml} vs closed form {awgn}"
        );
    }
}

#[test]
fn vnt_normalizes_variance_along_the_transfer_sweep() {
    // 20 ns symbols: the transformed variance climbs to 1 and stays within
    // [0.9, 1.1] wherever the array mean clears the gate, remains bounded
    // below it, and the transformed mean tracks T(mu) once the mean is high
    // enough that the curvature bias falls under the sampling error
    let spad = table_spad();
    let ts = 20e-9;
    let p = VntParams::for_link(&spad, ts);
    let samples = 100_000u64;
    for i in 0..=20u64 {
        let lambda = 1e4 * (1e8f64 / 1e4).powf(i as f64 / 20.0);
        let m = array_moments(lambda, &spad, ts);
        let mut rng = substream(0x517, i);
        let (tm, tv) = transformed_moments_mc(&m, |r| vnt_forward(r, &p), samples, &mut rng);
        if m.mean >= 20.0 {
            assert!(
                (0.9..=1.1).contains(&tv),
                "variance {tv} at lambda {lambda:e} (mean {})",
                m.mean
            );
        } else {
            assert!(
                tv > 0.0 && tv <= 1.4,
                "variance {tv} unbounded at lambda {lambda:e}"
            );
        }
        if m.mean >= 1000.0 {
            let se = (tv / samples as f64).sqrt();
            let pred = vnt_forward(m.mean, &p);
            assert!(
                (tm - pred).abs() <= 3.0 * se,
                "transformed mean {tm} vs T(mu) {pred} at lambda {lambda:e}"
            );
        }
    }
}

#[test]
fn rate_search_respects_scheme_hierarchy() {
    let spad = table_spad();
    let link = link(200e-6);
    let grid = default_rate_grid();
    let rates: Vec<f64> = Scheme::ALL
        .iter()
        .map(|&s| {
            let r = search_max_rate(s, &link, &spad, 4, 1e-3, &grid, 0xC101).unwrap();
            assert!(r.met_target, "{s} never meets the target");
            assert!((r.rate_bps - 2.0 / r.symbol_duration).abs() <= 1e-6 * r.rate_bps);
            r.rate_bps
        })
        .collect();
    // uniform < sqrt < pre-distortion < joint
    assert!(rates[0] < rates[1] && rates[1] < rates[2] && rates[2] < rates[3]);
}
