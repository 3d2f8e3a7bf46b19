//! Experiment dispatch: run the configured sweep and write one CSV per
//! scheme (plus single-file formats for the transfer-curve and VNT checks).
//!
//! Every CSV starts with the fully resolved configuration as `#`-prefixed
//! comment lines. Numbers are serialized with 9 significant digits in
//! scientific notation and LF line endings, so reruns diff byte-exactly.

use crate::config::{Experiment, ExperimentConfig};
use spad_owc::constellation::{design, Scheme};
use spad_owc::decoder::{
    ber_analytical, receive_domain_moments, DecoderSpec, SQRT_VARIANCE_SAMPLES, SQRT_VARIANCE_SEED,
};
use spad_owc::sim::{
    default_rate_grid, mix_seed, run_ber_fading, run_ber_mc, search_max_rate, substream,
    transformed_moments_mc,
};
use spad_owc::spad::array_moments;
use spad_owc::vnt::{vnt_forward, VntParams};
use std::fmt;
use std::io::Write;
use std::path::PathBuf;

/// Canonical sweep CSV header.
pub const SWEEP_HEADER: &str =
    "sweep_value,scheme,ber_analytical,ber_mc,ber_mc_ci95,d_star,xi,rate_bps,seed";

#[derive(Debug)]
pub enum RunError {
    Config(crate::config::ConfigError),
    Core(spad_owc::Error),
    Io(std::io::Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Core(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<crate::config::ConfigError> for RunError {
    fn from(e: crate::config::ConfigError) -> Self {
        RunError::Config(e)
    }
}
impl From<spad_owc::Error> for RunError {
    fn from(e: spad_owc::Error) -> Self {
        RunError::Core(e)
    }
}
impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

/// 9 significant digits, scientific notation.
fn num(x: f64) -> String {
    format!("{:.8e}", x)
}

fn write_csv(
    path: &PathBuf,
    cfg: &ExperimentConfig,
    header: &str,
    rows: &[String],
) -> Result<(), RunError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut text = String::new();
    for line in cfg.serialize().lines() {
        text.push_str("# ");
        text.push_str(line);
        text.push('\n');
    }
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(text.as_bytes())?;
    Ok(())
}

fn scheme_file(cfg: &ExperimentConfig, scheme: Scheme) -> PathBuf {
    PathBuf::from(format!("{}_{}.csv", cfg.path, scheme.token()))
}

/// Run the configured experiment; returns the paths of the CSV files written.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, RunError> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::TransferCurve => transfer_curve(cfg),
        Experiment::VntCheck => vnt_check(cfg),
        Experiment::ConstellationPdf => constellation_pdf(cfg),
        Experiment::BerVsPower | Experiment::Custom => ber_sweep(cfg),
        Experiment::RateVsPower => rate_sweep(cfg),
        Experiment::FsoAvgBer => fso_sweep(cfg),
    }
}

/// Dead-time transfer curve: analytic array-output moments per received
/// photon rate.
fn transfer_curve(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, RunError> {
    let spad = cfg.spad_params()?;
    let ts = cfg.symbol_ns * 1e-9;
    let mut rows = Vec::new();
    for lambda in cfg.sweep_values() {
        let m = array_moments(lambda, &spad, ts);
        rows.push(format!(
            "{},{},{}",
            num(lambda),
            num(m.mean),
            num(m.variance)
        ));
        println!(
            "transfer_curve lambda={lambda:.3e}: mean {:.6} variance {:.6}",
            m.mean, m.variance
        );
    }
    let path = PathBuf::from(format!("{}.csv", cfg.path));
    write_csv(&path, cfg, "sweep_value,mean,variance", &rows)?;
    Ok(vec![path])
}

/// Variance-normalizing transform check: analytic raw moments next to
/// simulated moments of the transformed output.
fn vnt_check(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, RunError> {
    let spad = cfg.spad_params()?;
    let ts = cfg.symbol_ns * 1e-9;
    let p = VntParams::for_link(&spad, ts);
    let mut rows = Vec::new();
    for (i, lambda) in cfg.sweep_values().into_iter().enumerate() {
        let m = array_moments(lambda, &spad, ts);
        let mut rng = substream(mix_seed(cfg.seed, i as u64), 0);
        let (tm, tv) = transformed_moments_mc(&m, |r| vnt_forward(r, &p), cfg.symbols, &mut rng);
        rows.push(format!(
            "{},{},{},{},{}",
            num(lambda),
            num(m.mean),
            num(m.variance),
            num(tm),
            num(tv)
        ));
        println!(
            "vnt_check lambda={lambda:.3e}: raw var {:.4} transformed var {tv:.4}",
            m.variance
        );
    }
    let path = PathBuf::from(format!("{}.csv", cfg.path));
    write_csv(
        &path,
        cfg,
        "sweep_value,mean_raw,variance_raw,mean_vnt,variance_vnt",
        &rows,
    )?;
    Ok(vec![path])
}

/// Designed constellations at the configured operating point: transmit
/// rates, receiver moments, and receive-domain moments per level.
fn constellation_pdf(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, RunError> {
    let link = cfg.link_budget()?;
    let spad = cfg.spad_params()?;
    let modc = cfg.modulation()?;
    let p = VntParams::for_link(&spad, modc.symbol_duration);
    let mut files = Vec::new();
    for &scheme in &cfg.schemes {
        let d = design(scheme, &link, &spad, &modc)?;
        let mut rows = Vec::new();
        for (level, moments) in d.rx_moments.iter().enumerate() {
            let (domain_mean, domain_var) = match scheme {
                Scheme::Sqrt => {
                    let spec = DecoderSpec::SqrtMl {
                        samples_per_level: SQRT_VARIANCE_SAMPLES,
                        seed: SQRT_VARIANCE_SEED,
                    };
                    let dm = receive_domain_moments(&d, &spec)?;
                    (num(dm[level].mean), num(dm[level].variance))
                }
                Scheme::Joint => {
                    let mut rng = substream(mix_seed(cfg.seed, level as u64), 1);
                    let (_, tv) = transformed_moments_mc(
                        moments,
                        |r| vnt_forward(r, &p),
                        cfg.symbols.min(200_000),
                        &mut rng,
                    );
                    (num(level as f64 * d.separation + d.offset), num(tv))
                }
                _ => (String::new(), String::new()),
            };
            rows.push(format!(
                "{},{},{},{},{},{},{},{}",
                level,
                num(d.tx_rates[level]),
                num(moments.mean),
                num(moments.variance),
                domain_mean,
                domain_var,
                num(d.separation),
                num(d.offset)
            ));
        }
        println!(
            "constellation_pdf {scheme}: d* = {:.6e}, xi = {:.6e}",
            d.separation, d.offset
        );
        let path = scheme_file(cfg, scheme);
        write_csv(
            &path,
            cfg,
            "level,tx_rate,rx_mean,rx_variance,domain_mean,domain_variance,d_star,xi",
            &rows,
        )?;
        files.push(path);
    }
    Ok(files)
}

/// BER versus the sweep axis: analytical and Monte Carlo values per scheme.
fn ber_sweep(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, RunError> {
    let mut rows: Vec<Vec<String>> = vec![Vec::new(); cfg.schemes.len()];
    for (pi, value) in cfg.sweep_values().into_iter().enumerate() {
        let at = cfg.at_sweep_value(value);
        let link = at.link_budget()?;
        let spad = at.spad_params()?;
        let modc = at.modulation()?;
        let rate = modc.bits_per_symbol() as f64 / modc.symbol_duration;
        let mut summary = format!("{} = {value:.4e}:", cfg.axis.token());
        for (si, &scheme) in cfg.schemes.iter().enumerate() {
            let d = design(scheme, &link, &spad, &modc)?;
            let spec = DecoderSpec::default_for(scheme);
            let analytic = ber_analytical(&d, &spec)?;
            let seed = mix_seed(mix_seed(cfg.seed, pi as u64), si as u64);
            let mc = run_ber_mc(&d, &spec, &spad, &modc, cfg.symbols, seed)?;
            rows[si].push(format!(
                "{},{},{},{},{},{},{},{},{}",
                num(value),
                scheme.token(),
                num(analytic),
                num(mc.ber),
                num(mc.half_width_95),
                num(d.separation),
                num(d.offset),
                num(rate),
                seed
            ));
            summary.push_str(&format!(" {}={analytic:.3e}", scheme.token()));
        }
        println!("{summary}");
    }
    write_scheme_files(cfg, rows)
}

/// Largest data rate meeting the BER target, per scheme and sweep point.
fn rate_sweep(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, RunError> {
    let grid = default_rate_grid();
    let mut rows: Vec<Vec<String>> = vec![Vec::new(); cfg.schemes.len()];
    for value in cfg.sweep_values() {
        let at = cfg.at_sweep_value(value);
        let link = at.link_budget()?;
        let spad = at.spad_params()?;
        let mut summary = format!("{} = {value:.4e}:", cfg.axis.token());
        for (si, &scheme) in cfg.schemes.iter().enumerate() {
            let r = search_max_rate(
                scheme,
                &link,
                &spad,
                cfg.order,
                cfg.ber_target,
                &grid,
                SQRT_VARIANCE_SEED,
            )?;
            let (rate_field, dstar_field, xi_field) = if r.met_target {
                let modc = spad_owc::ModulationConfig::new(cfg.order, r.symbol_duration)?;
                let d = design(scheme, &link, &spad, &modc)?;
                (num(r.rate_bps), num(d.separation), num(d.offset))
            } else {
                (String::new(), String::new(), String::new())
            };
            rows[si].push(format!(
                "{},{},,,,{},{},{},{}",
                num(value),
                scheme.token(),
                dstar_field,
                xi_field,
                rate_field,
                cfg.seed
            ));
            summary.push_str(&format!(
                " {}={}",
                scheme.token(),
                if r.met_target {
                    format!("{:.1}Mbps", r.rate_bps / 1e6)
                } else {
                    "none".to_string()
                }
            ));
        }
        println!("{summary}");
    }
    write_scheme_files(cfg, rows)
}

/// Fading-averaged BER over Gamma-Gamma turbulence, per scheme and sweep
/// point. The analytical column carries the realization average; the
/// confidence column reflects the spread across realizations.
fn fso_sweep(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, RunError> {
    let turb = cfg.turbulence()?;
    let mut rows: Vec<Vec<String>> = vec![Vec::new(); cfg.schemes.len()];
    for (pi, value) in cfg.sweep_values().into_iter().enumerate() {
        let at = cfg.at_sweep_value(value);
        let base = at.link_budget()?;
        let spad = at.spad_params()?;
        let modc = at.modulation()?;
        let rate = modc.bits_per_symbol() as f64 / modc.symbol_duration;
        let mut summary = format!("{} = {value:.4e}:", cfg.axis.token());
        for (si, &scheme) in cfg.schemes.iter().enumerate() {
            let seed = mix_seed(mix_seed(cfg.seed, pi as u64), si as u64);
            let avg = run_ber_fading(
                scheme,
                &turb,
                &base,
                &spad,
                &modc,
                cfg.realizations,
                1,
                seed,
            )?;
            rows[si].push(format!(
                "{},{},{},,{},,,{},{}",
                num(value),
                scheme.token(),
                num(avg.ber),
                num(avg.half_width_95),
                num(rate),
                seed
            ));
            summary.push_str(&format!(" {}={:.3e}", scheme.token(), avg.ber));
        }
        println!("{summary}");
    }
    write_scheme_files(cfg, rows)
}

fn write_scheme_files(
    cfg: &ExperimentConfig,
    rows: Vec<Vec<String>>,
) -> Result<Vec<PathBuf>, RunError> {
    let mut files = Vec::new();
    for (si, &scheme) in cfg.schemes.iter().enumerate() {
        let path = scheme_file(cfg, scheme);
        write_csv(&path, cfg, SWEEP_HEADER, &rows[si])?;
        files.push(path);
    }
    Ok(files)
}
