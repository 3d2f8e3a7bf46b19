//! Experiment configuration: a small sectioned `key = value` format with
//! full-line `#` comments, strict key checking and line-numbered errors.
//!
//! Omitted keys fall back to the default parameter set (785 nm, PDE 0.18,
//! 2048 pixels, 10 ns dead time, the 1500 m / 10 cm / 2 mrad free-space
//! geometry, 20 nW background). `serialize` emits the fully resolved
//! configuration; parsing that text reproduces the same config.

use spad_owc::constellation::Scheme;
use spad_owc::{LinkBudget, ModulationConfig, SpadArrayParams, TurbulenceParams};
use std::fmt;
use std::str::FromStr;

/// Named experiment presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    TransferCurve,
    VntCheck,
    ConstellationPdf,
    BerVsPower,
    RateVsPower,
    FsoAvgBer,
    Custom,
}

impl Experiment {
    pub fn token(&self) -> &'static str {
        match self {
            Experiment::TransferCurve => "transfer_curve",
            Experiment::VntCheck => "vnt_check",
            Experiment::ConstellationPdf => "constellation_pdf",
            Experiment::BerVsPower => "ber_vs_power",
            Experiment::RateVsPower => "rate_vs_power",
            Experiment::FsoAvgBer => "fso_avg_ber",
            Experiment::Custom => "custom",
        }
    }
}

impl FromStr for Experiment {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "transfer_curve" => Experiment::TransferCurve,
            "vnt_check" => Experiment::VntCheck,
            "constellation_pdf" => Experiment::ConstellationPdf,
            "ber_vs_power" => Experiment::BerVsPower,
            "rate_vs_power" => Experiment::RateVsPower,
            "fso_avg_ber" => Experiment::FsoAvgBer,
            "custom" => Experiment::Custom,
            other => return Err(format!("unknown experiment `{other}`")),
        })
    }
}

/// Quantity a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    AvgPowerLimitUw,
    BackgroundNw,
    SymbolNs,
    LossDb,
    /// Per-pixel received photon rate, used by the transfer-curve and
    /// VNT-check presets.
    LambdaPerPixel,
}

impl SweepAxis {
    pub fn token(&self) -> &'static str {
        match self {
            SweepAxis::AvgPowerLimitUw => "avg_power_limit_uw",
            SweepAxis::BackgroundNw => "background_nw",
            SweepAxis::SymbolNs => "symbol_ns",
            SweepAxis::LossDb => "loss_db",
            SweepAxis::LambdaPerPixel => "lambda_per_pixel",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "avg_power_limit_uw" => SweepAxis::AvgPowerLimitUw,
            "background_nw" => SweepAxis::BackgroundNw,
            "symbol_ns" => SweepAxis::SymbolNs,
            "loss_db" => SweepAxis::LossDb,
            "lambda_per_pixel" => SweepAxis::LambdaPerPixel,
            other => return Err(format!("unknown sweep axis `{other}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepScale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub schemes: Vec<Scheme>,
    // [link]
    pub wavelength_nm: f64,
    pub loss_db: f64,
    pub background_nw: f64,
    pub avg_power_limit_uw: f64,
    // [spad]
    pub pixels: u32,
    pub dead_time_ns: f64,
    pub pde: f64,
    // [modulation]
    pub order: u32,
    pub symbol_ns: f64,
    // [channel]
    pub cn2: f64,
    pub distance_m: f64,
    pub aperture_cm: f64,
    pub divergence_mrad: f64,
    // [mc]
    pub symbols: u64,
    pub realizations: u64,
    pub seed: u64,
    pub ber_target: f64,
    // [sweep]
    pub axis: SweepAxis,
    pub sweep_min: f64,
    pub sweep_max: f64,
    pub points: u32,
    pub scale: SweepScale,
    // [output]
    pub path: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::BerVsPower,
            schemes: Scheme::ALL.to_vec(),
            wavelength_nm: 785.0,
            loss_db: -30.0,
            background_nw: 20.0,
            avg_power_limit_uw: 100.0,
            pixels: 2048,
            dead_time_ns: 10.0,
            pde: 0.18,
            order: 4,
            symbol_ns: 5.0,
            cn2: 1e-15,
            distance_m: 1500.0,
            aperture_cm: 10.0,
            divergence_mrad: 2.0,
            symbols: 1_000_000,
            realizations: 10_000,
            seed: 1,
            ber_target: 1e-3,
            axis: SweepAxis::AvgPowerLimitUw,
            sweep_min: 1.0,
            sweep_max: 5000.0,
            points: 25,
            scale: SweepScale::Log,
            path: "results".to_string(),
        }
    }
}

/// Configuration error with the 1-based line it came from (0 for errors
/// raised by command-line overrides or cross-key validation).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "config line {}: {}", self.line, self.message)
        } else {
            write!(f, "config: {}", self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// Parse the sectioned text format. Unknown sections or keys, malformed
    /// values, and out-of-range values are reported with their line number.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        let mut section = String::new();
        let mut sweep_touched = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err(line_no, "unterminated section header"))?
                    .trim();
                match name {
                    "link" | "spad" | "modulation" | "channel" | "mc" | "sweep" | "output" => {
                        section = name.to_string();
                    }
                    other => return Err(err(line_no, format!("unknown section `[{other}]`"))),
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(line_no, "expected `key = value`"))?;
            let key = key.trim();
            let value = value.trim();
            if section == "sweep" {
                sweep_touched = true;
            }
            cfg.assign(&section, key, value, line_no)?;
        }
        if !sweep_touched {
            cfg.apply_preset_sweep();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Apply one `section.key=value` override (top-level keys carry no
    /// section prefix). Overrides win over the file.
    pub fn apply_set(&mut self, spec: &str) -> Result<(), ConfigError> {
        let (path, value) = spec.split_once('=').ok_or_else(|| {
            err(
                0,
                format!("override `{spec}` must look like section.key=value"),
            )
        })?;
        let (section, key) = match path.trim().split_once('.') {
            Some((s, k)) => (s.trim(), k.trim()),
            None => ("", path.trim()),
        };
        self.assign(section, key, value.trim(), 0)
    }

    fn assign(
        &mut self,
        section: &str,
        key: &str,
        value: &str,
        line: usize,
    ) -> Result<(), ConfigError> {
        let f = |v: &str| -> Result<f64, ConfigError> {
            v.parse::<f64>()
                .map_err(|_| err(line, format!("key `{key}`: `{v}` is not a number")))
        };
        let u = |v: &str| -> Result<u64, ConfigError> {
            v.parse::<u64>().map_err(|_| {
                err(
                    line,
                    format!("key `{key}`: `{v}` is not a non-negative integer"),
                )
            })
        };
        let positive = |v: f64| -> Result<f64, ConfigError> {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(err(line, format!("key `{key}` must be positive (got {v})")))
            }
        };
        match (section, key) {
            ("", "experiment") => {
                self.experiment = value.parse().map_err(|e| err(line, e))?;
                self.apply_preset_sweep();
            }
            ("", "schemes") => {
                let mut out = Vec::new();
                for token in value.split(',') {
                    let token = token.trim();
                    if token.is_empty() {
                        continue;
                    }
                    let s: Scheme = token.parse().map_err(|e| err(line, e))?;
                    if !out.contains(&s) {
                        out.push(s);
                    }
                }
                if out.is_empty() {
                    return Err(err(line, "key `schemes` needs at least one scheme"));
                }
                self.schemes = out;
            }
            ("link", "wavelength_nm") => self.wavelength_nm = positive(f(value)?)?,
            ("link", "loss_db") => {
                let v = f(value)?;
                if !(v <= 0.0) {
                    return Err(err(
                        line,
                        format!("key `loss_db` must be <= 0 dB (a loss), got {v}"),
                    ));
                }
                self.loss_db = v;
            }
            ("link", "background_nw") => {
                let v = f(value)?;
                if !(v >= 0.0) {
                    return Err(err(
                        line,
                        format!("key `background_nw` must be >= 0, got {v}"),
                    ));
                }
                self.background_nw = v;
            }
            ("link", "avg_power_limit_uw") => self.avg_power_limit_uw = positive(f(value)?)?,
            ("spad", "pixels") => {
                let v = u(value)?;
                if v < 1 || v > u32::MAX as u64 {
                    return Err(err(line, format!("key `pixels` out of range: {v}")));
                }
                self.pixels = v as u32;
            }
            ("spad", "dead_time_ns") => self.dead_time_ns = positive(f(value)?)?,
            ("spad", "pde") => {
                let v = f(value)?;
                if !(v > 0.0 && v <= 1.0) {
                    return Err(err(line, format!("key `pde` must lie in (0, 1], got {v}")));
                }
                self.pde = v;
            }
            ("modulation", "order") => {
                let v = u(value)?;
                if v < 2 || v > 65_536 || !v.is_power_of_two() {
                    return Err(err(
                        line,
                        format!("key `order` must be a power of two in [2, 65536], got {v}"),
                    ));
                }
                self.order = v as u32;
            }
            ("modulation", "symbol_ns") => self.symbol_ns = positive(f(value)?)?,
            ("channel", "cn2") => self.cn2 = positive(f(value)?)?,
            ("channel", "distance_m") => self.distance_m = positive(f(value)?)?,
            ("channel", "aperture_cm") => self.aperture_cm = positive(f(value)?)?,
            ("channel", "divergence_mrad") => self.divergence_mrad = positive(f(value)?)?,
            ("mc", "symbols") => {
                let v = u(value)?;
                if v < 10_000 {
                    return Err(err(
                        line,
                        format!("key `symbols` must be at least 1e4, got {v}"),
                    ));
                }
                self.symbols = v;
            }
            ("mc", "realizations") => {
                let v = u(value)?;
                if v < 100 {
                    return Err(err(
                        line,
                        format!("key `realizations` must be at least 100, got {v}"),
                    ));
                }
                self.realizations = v;
            }
            ("mc", "seed") => self.seed = u(value)?,
            ("mc", "ber_target") => {
                let v = f(value)?;
                if !(v > 0.0 && v <= 0.5) {
                    return Err(err(
                        line,
                        format!("key `ber_target` must lie in (0, 0.5], got {v}"),
                    ));
                }
                self.ber_target = v;
            }
            ("sweep", "axis") => self.axis = value.parse().map_err(|e| err(line, e))?,
            ("sweep", "min") => {
                let v = f(value)?;
                if !v.is_finite() {
                    return Err(err(line, "key `min` must be finite"));
                }
                self.sweep_min = v;
            }
            ("sweep", "max") => {
                let v = f(value)?;
                if !v.is_finite() {
                    return Err(err(line, "key `max` must be finite"));
                }
                self.sweep_max = v;
            }
            ("sweep", "points") => {
                let v = u(value)?;
                if v < 1 || v > 1_000_000 {
                    return Err(err(line, format!("key `points` out of range: {v}")));
                }
                self.points = v as u32;
            }
            ("sweep", "scale") => {
                self.scale = match value {
                    "linear" => SweepScale::Linear,
                    "log" => SweepScale::Log,
                    other => {
                        return Err(err(
                            line,
                            format!("key `scale` must be `linear` or `log`, got `{other}`"),
                        ))
                    }
                };
            }
            ("output", "path") => {
                if value.is_empty() {
                    return Err(err(line, "key `path` must not be empty"));
                }
                self.path = value.to_string();
            }
            _ => {
                let place = if section.is_empty() {
                    "top level".to_string()
                } else {
                    format!("section `[{section}]`")
                };
                return Err(err(line, format!("unknown key `{key}` in {place}")));
            }
        }
        Ok(())
    }

    /// Swap in the sweep the preset naturally varies when the file left the
    /// `[sweep]` section untouched.
    fn apply_preset_sweep(&mut self) {
        match self.experiment {
            Experiment::TransferCurve | Experiment::VntCheck => {
                self.axis = SweepAxis::LambdaPerPixel;
                self.sweep_min = 1e4;
                self.sweep_max = 1e9;
                self.points = 41;
                self.scale = SweepScale::Log;
            }
            _ => {
                let d = ExperimentConfig::default();
                self.axis = d.axis;
                self.sweep_min = d.sweep_min;
                self.sweep_max = d.sweep_max;
                self.points = d.points;
                self.scale = d.scale;
            }
        }
    }

    /// Cross-key validation (sweep bounds and scale compatibility).
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.points > 1 && !(self.sweep_min < self.sweep_max) {
            return Err(err(0, "sweep needs min < max when points > 1"));
        }
        if self.scale == SweepScale::Log && !(self.sweep_min > 0.0) {
            return Err(err(0, "log-scale sweeps need min > 0"));
        }
        if self.axis == SweepAxis::LossDb && self.sweep_max > 0.0 {
            return Err(err(0, "loss_db sweeps must stay <= 0 dB"));
        }
        if self.axis == SweepAxis::LambdaPerPixel
            && !matches!(
                self.experiment,
                Experiment::TransferCurve | Experiment::VntCheck
            )
        {
            return Err(err(
                0,
                "axis `lambda_per_pixel` applies only to transfer_curve and vnt_check",
            ));
        }
        Ok(())
    }

    /// Fully resolved canonical text; parsing it yields an equal config.
    pub fn serialize(&self) -> String {
        let schemes = self
            .schemes
            .iter()
            .map(|s| s.token())
            .collect::<Vec<_>>()
            .join(", ");
        format!(
            "experiment = {}\nschemes = {}\n\n\
             [link]\nwavelength_nm = {}\nloss_db = {}\nbackground_nw = {}\navg_power_limit_uw = {}\n\n\
             [spad]\npixels = {}\ndead_time_ns = {}\npde = {}\n\n\
             [modulation]\norder = {}\nsymbol_ns = {}\n\n\
             [channel]\ncn2 = {}\ndistance_m = {}\naperture_cm = {}\ndivergence_mrad = {}\n\n\
             [mc]\nsymbols = {}\nrealizations = {}\nseed = {}\nber_target = {}\n\n\
             [sweep]\naxis = {}\nmin = {}\nmax = {}\npoints = {}\nscale = {}\n\n\
             [output]\npath = {}\n",
            self.experiment.token(),
            schemes,
            self.wavelength_nm,
            self.loss_db,
            self.background_nw,
            self.avg_power_limit_uw,
            self.pixels,
            self.dead_time_ns,
            self.pde,
            self.order,
            self.symbol_ns,
            self.cn2,
            self.distance_m,
            self.aperture_cm,
            self.divergence_mrad,
            self.symbols,
            self.realizations,
            self.seed,
            self.ber_target,
            self.axis.token(),
            self.sweep_min,
            self.sweep_max,
            self.points,
            match self.scale {
                SweepScale::Linear => "linear",
                SweepScale::Log => "log",
            },
            self.path,
        )
    }

    // -- unit conversions into the core types --------------------------------

    pub fn link_budget(&self) -> spad_owc::Result<LinkBudget> {
        LinkBudget::new(
            10f64.powf(self.loss_db / 10.0),
            self.background_nw * 1e-9,
            self.avg_power_limit_uw * 1e-6,
            self.wavelength_nm * 1e-9,
        )
    }

    pub fn spad_params(&self) -> spad_owc::Result<SpadArrayParams> {
        SpadArrayParams::new(self.pixels, self.dead_time_ns * 1e-9, self.pde)
    }

    pub fn modulation(&self) -> spad_owc::Result<ModulationConfig> {
        ModulationConfig::new(self.order, self.symbol_ns * 1e-9)
    }

    pub fn turbulence(&self) -> spad_owc::Result<TurbulenceParams> {
        TurbulenceParams::new(
            self.cn2,
            self.distance_m,
            self.aperture_cm * 1e-2,
            self.divergence_mrad * 1e-3,
            self.wavelength_nm * 1e-9,
        )
    }

    /// Sweep values, `points` of them, linear or geometric.
    pub fn sweep_values(&self) -> Vec<f64> {
        let n = self.points as usize;
        if n == 1 {
            return vec![self.sweep_min];
        }
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                match self.scale {
                    SweepScale::Linear => self.sweep_min + t * (self.sweep_max - self.sweep_min),
                    SweepScale::Log => self.sweep_min * (self.sweep_max / self.sweep_min).powf(t),
                }
            })
            .collect()
    }

    /// Copy of the config with the sweep axis set to `value`.
    pub fn at_sweep_value(&self, value: f64) -> Self {
        let mut c = self.clone();
        match self.axis {
            SweepAxis::AvgPowerLimitUw => c.avg_power_limit_uw = value,
            SweepAxis::BackgroundNw => c.background_nw = value,
            SweepAxis::SymbolNs => c.symbol_ns = value,
            SweepAxis::LossDb => c.loss_db = value,
            SweepAxis::LambdaPerPixel => {} // consumed directly by the presets
        }
        c
    }
}
