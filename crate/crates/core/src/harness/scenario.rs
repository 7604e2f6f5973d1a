//! Scenario description: every module setting of one link simulation plus
//! optional sweeps, read from and written to a sectioned `key = value` text
//! format.
//!
//! ```text
//! # comment
//! [section]
//! key = value
//! ```
//!
//! Sections mirror the simulator modules (`scenario`, `modulation`, `laser`,
//! `pilot`, `channel`, `receiver`, `adc`, `dsp`, `estimation`, `security`,
//! `postproc`, `noise`). Every key can also be addressed as
//! `section.key`, which is the parameter path accepted by sweeps. A
//! `[sweep]` section may appear any number of times; each holds `param`,
//! `values` (a comma list or `START:STOP:STEPS`), optional `log = true` and
//! optional `set = path=value; path=value` overrides for that sweep.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::channel::{ChannelMode, ChannelSpec, RamanReference};
use crate::dsp::FilterSpec;
use crate::estimation::MIN_RECORDS;
use crate::error::{Error, Result};
use crate::postproc::multidim::DIMENSIONS;
use crate::rx::{AdcSpec, Detection, FullScale, ReceiverSpec, ShotModel};
use crate::security::{SecurityDetection, SecurityParams};
use crate::signal::{photon_energy, DEFAULT_CARRIER_HZ};
use crate::tx::{LaserSpec, ModulationSpec, PilotSpec, PulseShape};

/// Name of the code shipped with the crate, usable as `postproc.code`.
pub const BUILTIN_CODE: &str = "builtin:rate0.1_n10000";

/// Per-source noise switches. Shot noise is always present.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Toggles {
    pub rin: bool,
    pub phase_noise: bool,
    pub raman: bool,
    pub thermal: bool,
    pub adc: bool,
    pub excess: bool,
}

impl Toggles {
    pub fn all(on: bool) -> Self {
        Self {
            rin: on,
            phase_noise: on,
            raman: on,
            thermal: on,
            adc: on,
            excess: on,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    Fixed,
    Fibre,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSettings {
    pub kind: ChannelKind,
    pub transmittance: f64,
    pub length_km: f64,
    pub attenuation_db_per_km: f64,
    pub raman_psd: f64,
    pub raman_reference: RamanReference,
    /// Gaussian noise added to Alice's quadratures at the channel input, SNU.
    pub excess_noise: f64,
}

impl ChannelSettings {
    pub fn spec(&self, raman_on: bool) -> ChannelSpec {
        let mode = match self.kind {
            ChannelKind::Fixed => ChannelMode::Fixed {
                transmittance: self.transmittance,
            },
            ChannelKind::Fibre => ChannelMode::Fibre {
                length_km: self.length_km,
                attenuation_db_per_km: self.attenuation_db_per_km,
            },
        };
        ChannelSpec {
            mode,
            raman_psd: if raman_on { self.raman_psd } else { 0.0 },
            raman_reference: self.raman_reference,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DspSettings {
    pub filter: bool,
    /// Gaussian low-pass 3-dB bandwidth relative to the symbol rate.
    pub relative_bandwidth: f64,
    /// Fixed sampling offset; `None` searches on the training block.
    pub timing_offset: Option<usize>,
    pub calibration_symbols: usize,
    pub phase_recovery: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostprocSettings {
    pub enabled: bool,
    /// Path of an alist file, or [`BUILTIN_CODE`].
    pub code: String,
    pub dimension: usize,
    pub max_iters: usize,
    pub write_key: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: String,
    pub values: Vec<f64>,
    /// Overrides applied before the sweep, as `(path, value)`.
    pub set: Vec<(String, String)>,
}

impl SweepSpec {
    /// Label of the sweep, including its overrides.
    pub fn label(&self) -> String {
        if self.set.is_empty() {
            String::new()
        } else {
            let parts: Vec<String> = self.set.iter().map(|(k, v)| format!("{k}={v}")).collect();
            format!("[{}]", parts.join(";"))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub n_symbols: usize,
    pub seed: u64,
    pub carrier_frequency: f64,
    pub modulation: ModulationSpec,
    pub laser: LaserSpec,
    /// Static phase of Alice's laser relative to Bob's LO, rad.
    pub phase_offset: f64,
    pub pilot: PilotSpec,
    pub channel: ChannelSettings,
    pub receiver: ReceiverSpec,
    pub adc: AdcSpec,
    pub dsp: DspSettings,
    /// Treat calibrated electronic noise as trusted (subtracted from ξ).
    pub trusted_v_el: bool,
    pub beta: f64,
    pub nu_pe: f64,
    /// Detection assumed by the security model; `None` follows the receiver.
    pub security_detection: Option<SecurityDetection>,
    pub postproc: PostprocSettings,
    pub toggles: Toggles,
    pub sweeps: Vec<SweepSpec>,
    /// Directory against which relative paths (codes) are resolved.
    pub base_dir: Option<PathBuf>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            n_symbols: 1 << 20,
            seed: 1,
            carrier_frequency: DEFAULT_CARRIER_HZ,
            modulation: ModulationSpec::single_sample(5.0, 1e9),
            laser: LaserSpec::default(),
            phase_offset: 0.0,
            pilot: PilotSpec::default(),
            channel: ChannelSettings {
                kind: ChannelKind::Fixed,
                transmittance: 0.3,
                length_km: 0.0,
                attenuation_db_per_km: 0.2,
                raman_psd: 0.0,
                raman_reference: RamanReference::Output,
                excess_noise: 0.0,
            },
            receiver: ReceiverSpec::new(Detection::HomodyneQ, 0.7, 0.0, 10e-3),
            adc: AdcSpec::auto(8),
            dsp: DspSettings {
                filter: false,
                relative_bandwidth: 0.9,
                timing_offset: None,
                calibration_symbols: 1 << 22,
                phase_recovery: false,
            },
            trusted_v_el: false,
            beta: 0.95,
            nu_pe: 0.0,
            security_detection: None,
            postproc: PostprocSettings {
                enabled: false,
                code: BUILTIN_CODE.into(),
                dimension: 8,
                max_iters: crate::postproc::ldpc::DEFAULT_MAX_ITERS,
                write_key: true,
            },
            toggles: Toggles::all(true),
            sweeps: Vec::new(),
            base_dir: None,
        }
    }
}

fn parse_f64(path: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| Error::InvalidArgument(format!("{path}: `{v}` is not a number")))
}

fn parse_usize(path: &str, v: &str) -> Result<usize> {
    if let Ok(n) = v.parse::<usize>() {
        return Ok(n);
    }
    // integral values written as floats, e.g. 1e5 or 1048576.0
    match v.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(53) => Ok(x as usize),
        _ => Err(Error::InvalidArgument(format!("{path}: `{v}` is not a non-negative integer"))),
    }
}

fn parse_bool(path: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(Error::InvalidArgument(format!("{path}: `{v}` is not a boolean"))),
    }
}

fn bad_choice(path: &str, v: &str, choices: &str) -> Error {
    Error::InvalidArgument(format!("{path}: `{v}` is not one of {choices}"))
}

fn detection_name(d: Detection) -> &'static str {
    match d {
        Detection::HomodyneQ => "homodyne_q",
        Detection::HomodyneP => "homodyne_p",
        Detection::Heterodyne => "heterodyne",
    }
}

/// Parses a value list: `a, b, c` or `START:STOP:STEPS` (linear, or
/// logarithmic when `log`).
pub fn parse_values(spec: &str, log: bool) -> Result<Vec<f64>> {
    let spec = spec.trim();
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let start = parse_f64("values", parts[0].trim())?;
        let stop = parse_f64("values", parts[1].trim())?;
        let steps = parse_usize("values", parts[2].trim())?;
        if steps == 0 {
            return Err(Error::InvalidArgument("values: STEPS must be >= 1".into()));
        }
        if log && !(start > 0.0 && stop > 0.0) {
            return Err(Error::InvalidArgument("values: logarithmic ranges need positive bounds".into()));
        }
        return Ok((0..steps)
            .map(|i| {
                let w = if steps == 1 { 0.0 } else { i as f64 / (steps - 1) as f64 };
                if log {
                    (start.ln() + w * (stop.ln() - start.ln())).exp()
                } else {
                    start + w * (stop - start)
                }
            })
            .collect());
    }
    if spec.is_empty() {
        return Err(Error::InvalidArgument("values: empty list".into()));
    }
    spec.split(',').map(|t| parse_f64("values", t.trim())).collect()
}

impl Scenario {
    /// Every settable parameter path, in echo order.
    pub const PATHS: &'static [&'static str] = &[
        "scenario.name",
        "scenario.n_symbols",
        "scenario.seed",
        "scenario.carrier_frequency",
        "modulation.v_mod",
        "modulation.symbol_rate",
        "modulation.samples_per_symbol",
        "modulation.pulse_shape",
        "laser.power",
        "laser.linewidth",
        "laser.rin_psd",
        "laser.phase_offset",
        "pilot.enabled",
        "pilot.every",
        "pilot.amplitude",
        "channel.mode",
        "channel.transmittance",
        "channel.length_km",
        "channel.attenuation_db_per_km",
        "channel.raman_psd",
        "channel.raman_reference",
        "channel.excess_noise",
        "receiver.detection",
        "receiver.eta",
        "receiver.nep",
        "receiver.lo_power",
        "receiver.shot_model",
        "adc.bits",
        "adc.full_scale",
        "dsp.filter",
        "dsp.relative_bandwidth",
        "dsp.timing_offset",
        "dsp.calibration_symbols",
        "dsp.phase_recovery",
        "estimation.trusted_v_el",
        "security.beta",
        "security.nu_pe",
        "security.detection",
        "postproc.enabled",
        "postproc.code",
        "postproc.dimension",
        "postproc.max_iters",
        "postproc.write_key",
        "noise.rin",
        "noise.phase_noise",
        "noise.raman",
        "noise.thermal",
        "noise.adc",
        "noise.excess",
    ];

    /// Sets one parameter from its text form.
    pub fn set(&mut self, path: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let p = path;
        match p {
            "scenario.name" => self.name = v.to_string(),
            "scenario.n_symbols" => self.n_symbols = parse_usize(p, v)?,
            "scenario.seed" => {
                self.seed = v
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("{p}: `{v}` is not a 64-bit seed")))?
            }
            "scenario.carrier_frequency" => self.carrier_frequency = parse_f64(p, v)?,
            "modulation.v_mod" => self.modulation.v_mod = parse_f64(p, v)?,
            "modulation.symbol_rate" => self.modulation.symbol_rate = parse_f64(p, v)?,
            "modulation.samples_per_symbol" => self.modulation.samples_per_symbol = parse_usize(p, v)?,
            "modulation.pulse_shape" => {
                self.modulation.pulse_shape = match v {
                    "single_sample" => PulseShape::SingleSample,
                    "sin4" => PulseShape::Sin4,
                    _ => return Err(bad_choice(p, v, "single_sample, sin4")),
                }
            }
            "laser.power" => self.laser.power = parse_f64(p, v)?,
            "laser.linewidth" => self.laser.linewidth = parse_f64(p, v)?,
            "laser.rin_psd" => self.laser.rin_psd = parse_f64(p, v)?,
            "laser.phase_offset" => self.phase_offset = parse_f64(p, v)?,
            "pilot.enabled" => self.pilot.enabled = parse_bool(p, v)?,
            "pilot.every" => self.pilot.pilot_every = parse_usize(p, v)?,
            "pilot.amplitude" => self.pilot.pilot_amplitude = parse_f64(p, v)?,
            "channel.mode" => {
                self.channel.kind = match v {
                    "fixed" => ChannelKind::Fixed,
                    "fibre" | "fiber" => ChannelKind::Fibre,
                    _ => return Err(bad_choice(p, v, "fixed, fibre")),
                }
            }
            "channel.transmittance" => self.channel.transmittance = parse_f64(p, v)?,
            "channel.length_km" => self.channel.length_km = parse_f64(p, v)?,
            "channel.attenuation_db_per_km" => self.channel.attenuation_db_per_km = parse_f64(p, v)?,
            "channel.raman_psd" => self.channel.raman_psd = parse_f64(p, v)?,
            "channel.raman_reference" => {
                self.channel.raman_reference = match v {
                    "output" => RamanReference::Output,
                    "input" => RamanReference::Input,
                    _ => return Err(bad_choice(p, v, "output, input")),
                }
            }
            "channel.excess_noise" => self.channel.excess_noise = parse_f64(p, v)?,
            "receiver.detection" => {
                self.receiver.detection = match v {
                    "homodyne_q" | "homodyne" => Detection::HomodyneQ,
                    "homodyne_p" => Detection::HomodyneP,
                    "heterodyne" => Detection::Heterodyne,
                    _ => return Err(bad_choice(p, v, "homodyne_q, homodyne_p, heterodyne")),
                }
            }
            "receiver.eta" => self.receiver.eta = parse_f64(p, v)?,
            "receiver.nep" => self.receiver.nep = parse_f64(p, v)?,
            "receiver.lo_power" => self.receiver.lo_power = parse_f64(p, v)?,
            "receiver.shot_model" => {
                self.receiver.shot_model = match v {
                    "auto" => ShotModel::Auto,
                    "poisson" => ShotModel::Poisson,
                    "gaussian" => ShotModel::Gaussian,
                    _ => return Err(bad_choice(p, v, "auto, poisson, gaussian")),
                }
            }
            "adc.bits" => {
                self.adc.bits = u32::try_from(parse_usize(p, v)?)
                    .map_err(|_| Error::InvalidArgument(format!("{p}: `{v}` is too large")))?
            }
            "adc.full_scale" => {
                self.adc.full_scale = if let Some(k) = v.strip_prefix("sigma:") {
                    FullScale::Auto {
                        sigmas: parse_f64(p, k)?,
                    }
                } else if v == "auto" {
                    FullScale::Auto { sigmas: 5.0 }
                } else {
                    FullScale::Fixed {
                        amplitude: parse_f64(p, v)?,
                    }
                }
            }
            "dsp.filter" => self.dsp.filter = parse_bool(p, v)?,
            "dsp.relative_bandwidth" => self.dsp.relative_bandwidth = parse_f64(p, v)?,
            "dsp.timing_offset" => {
                self.dsp.timing_offset = if v == "auto" { None } else { Some(parse_usize(p, v)?) }
            }
            "dsp.calibration_symbols" => self.dsp.calibration_symbols = parse_usize(p, v)?,
            "dsp.phase_recovery" => self.dsp.phase_recovery = parse_bool(p, v)?,
            "estimation.trusted_v_el" => self.trusted_v_el = parse_bool(p, v)?,
            "security.beta" => self.beta = parse_f64(p, v)?,
            "security.nu_pe" => self.nu_pe = parse_f64(p, v)?,
            "security.detection" => {
                self.security_detection = match v {
                    "receiver" => None,
                    "homodyne" => Some(SecurityDetection::Homodyne),
                    "heterodyne" => Some(SecurityDetection::Heterodyne),
                    _ => return Err(bad_choice(p, v, "receiver, homodyne, heterodyne")),
                }
            }
            "postproc.enabled" => self.postproc.enabled = parse_bool(p, v)?,
            "postproc.code" => self.postproc.code = v.to_string(),
            "postproc.dimension" => self.postproc.dimension = parse_usize(p, v)?,
            "postproc.max_iters" => self.postproc.max_iters = parse_usize(p, v)?,
            "postproc.write_key" => self.postproc.write_key = parse_bool(p, v)?,
            "noise.rin" => self.toggles.rin = parse_bool(p, v)?,
            "noise.phase_noise" => self.toggles.phase_noise = parse_bool(p, v)?,
            "noise.raman" => self.toggles.raman = parse_bool(p, v)?,
            "noise.thermal" => self.toggles.thermal = parse_bool(p, v)?,
            "noise.adc" => self.toggles.adc = parse_bool(p, v)?,
            "noise.excess" => self.toggles.excess = parse_bool(p, v)?,
            _ => return Err(Error::UnknownParameter(path.to_string())),
        }
        Ok(())
    }

    /// Sets a numeric parameter; the path must address a numeric field.
    pub fn set_numeric(&mut self, path: &str, value: f64) -> Result<()> {
        const TEXT: &[&str] = &[
            "scenario.name",
            "modulation.pulse_shape",
            "channel.mode",
            "channel.raman_reference",
            "receiver.detection",
            "receiver.shot_model",
            "postproc.code",
            "security.detection",
        ];
        if TEXT.contains(&path) {
            return Err(Error::InvalidArgument(format!("{path} is not a numeric parameter")));
        }
        if !Self::PATHS.contains(&path) {
            return Err(Error::UnknownParameter(path.to_string()));
        }
        self.set(path, &format!("{value:?}"))
    }

    /// Current value of a parameter in the text form accepted by [`set`](Self::set).
    pub fn get(&self, path: &str) -> Result<String> {
        let b = |x: bool| x.to_string();
        let f = |x: f64| format!("{x:?}");
        Ok(match path {
            "scenario.name" => self.name.clone(),
            "scenario.n_symbols" => self.n_symbols.to_string(),
            "scenario.seed" => self.seed.to_string(),
            "scenario.carrier_frequency" => f(self.carrier_frequency),
            "modulation.v_mod" => f(self.modulation.v_mod),
            "modulation.symbol_rate" => f(self.modulation.symbol_rate),
            "modulation.samples_per_symbol" => self.modulation.samples_per_symbol.to_string(),
            "modulation.pulse_shape" => match self.modulation.pulse_shape {
                PulseShape::SingleSample => "single_sample".into(),
                PulseShape::Sin4 => "sin4".into(),
            },
            "laser.power" => f(self.laser.power),
            "laser.linewidth" => f(self.laser.linewidth),
            "laser.rin_psd" => f(self.laser.rin_psd),
            "laser.phase_offset" => f(self.phase_offset),
            "pilot.enabled" => b(self.pilot.enabled),
            "pilot.every" => self.pilot.pilot_every.to_string(),
            "pilot.amplitude" => f(self.pilot.pilot_amplitude),
            "channel.mode" => match self.channel.kind {
                ChannelKind::Fixed => "fixed".into(),
                ChannelKind::Fibre => "fibre".into(),
            },
            "channel.transmittance" => f(self.channel.transmittance),
            "channel.length_km" => f(self.channel.length_km),
            "channel.attenuation_db_per_km" => f(self.channel.attenuation_db_per_km),
            "channel.raman_psd" => f(self.channel.raman_psd),
            "channel.raman_reference" => match self.channel.raman_reference {
                RamanReference::Output => "output".into(),
                RamanReference::Input => "input".into(),
            },
            "channel.excess_noise" => f(self.channel.excess_noise),
            "receiver.detection" => detection_name(self.receiver.detection).into(),
            "receiver.eta" => f(self.receiver.eta),
            "receiver.nep" => f(self.receiver.nep),
            "receiver.lo_power" => f(self.receiver.lo_power),
            "receiver.shot_model" => match self.receiver.shot_model {
                ShotModel::Auto => "auto".into(),
                ShotModel::Poisson => "poisson".into(),
                ShotModel::Gaussian => "gaussian".into(),
            },
            "adc.bits" => self.adc.bits.to_string(),
            "adc.full_scale" => match self.adc.full_scale {
                FullScale::Auto { sigmas } => format!("sigma:{sigmas:?}"),
                FullScale::Fixed { amplitude } => f(amplitude),
            },
            "dsp.filter" => b(self.dsp.filter),
            "dsp.relative_bandwidth" => f(self.dsp.relative_bandwidth),
            "dsp.timing_offset" => self.dsp.timing_offset.map_or_else(|| "auto".into(), |o| o.to_string()),
            "dsp.calibration_symbols" => self.dsp.calibration_symbols.to_string(),
            "dsp.phase_recovery" => b(self.dsp.phase_recovery),
            "estimation.trusted_v_el" => b(self.trusted_v_el),
            "security.beta" => f(self.beta),
            "security.nu_pe" => f(self.nu_pe),
            "security.detection" => match self.security_detection {
                None => "receiver".into(),
                Some(SecurityDetection::Homodyne) => "homodyne".into(),
                Some(SecurityDetection::Heterodyne) => "heterodyne".into(),
            },
            "postproc.enabled" => b(self.postproc.enabled),
            "postproc.code" => self.postproc.code.clone(),
            "postproc.dimension" => self.postproc.dimension.to_string(),
            "postproc.max_iters" => self.postproc.max_iters.to_string(),
            "postproc.write_key" => b(self.postproc.write_key),
            "noise.rin" => b(self.toggles.rin),
            "noise.phase_noise" => b(self.toggles.phase_noise),
            "noise.raman" => b(self.toggles.raman),
            "noise.thermal" => b(self.toggles.thermal),
            "noise.adc" => b(self.toggles.adc),
            "noise.excess" => b(self.toggles.excess),
            _ => return Err(Error::UnknownParameter(path.to_string())),
        })
    }

    /// Parses scenario text; unspecified keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Scenario::default();
        let mut section: Option<String> = None;
        let mut sweep: Option<(usize, Option<String>, Option<String>, bool, Vec<(String, String)>)> = None;

        fn finish(
            s: &mut Scenario,
            sweep: Option<(usize, Option<String>, Option<String>, bool, Vec<(String, String)>)>,
        ) -> Result<()> {
            if let Some((line, param, values, log, set)) = sweep {
                let param = param.ok_or(Error::Parse {
                    line,
                    msg: "[sweep] needs `param`".into(),
                })?;
                let values = values.ok_or(Error::Parse {
                    line,
                    msg: "[sweep] needs `values`".into(),
                })?;
                let values = parse_values(&values, log).map_err(|e| Error::Parse {
                    line,
                    msg: e.to_string(),
                })?;
                s.sweeps.push(SweepSpec { param, values, set });
            }
            Ok(())
        }

        for (no, raw) in text.lines().enumerate() {
            let line_no = no + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or(Error::Parse {
                    line: line_no,
                    msg: format!("malformed section header `{line}`"),
                })?;
                finish(&mut s, sweep.take())?;
                let name = name.trim().to_string();
                if name == "sweep" {
                    sweep = Some((line_no, None, None, false, Vec::new()));
                }
                section = Some(name);
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(Error::Parse {
                line: line_no,
                msg: format!("expected `key = value`, found `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let Some(sec) = section.as_deref() else {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "key outside of a section".into(),
                });
            };
            if let Some(sw) = sweep.as_mut() {
                match key {
                    "param" => sw.1 = Some(value.to_string()),
                    "values" => sw.2 = Some(value.to_string()),
                    "log" => {
                        sw.3 = parse_bool("sweep.log", value).map_err(|e| Error::Parse {
                            line: line_no,
                            msg: e.to_string(),
                        })?
                    }
                    "set" => {
                        for item in value.split(';').map(str::trim).filter(|t| !t.is_empty()) {
                            let (k, v) = item.split_once('=').ok_or(Error::Parse {
                                line: line_no,
                                msg: format!("override `{item}` is not `path=value`"),
                            })?;
                            sw.4.push((k.trim().to_string(), v.trim().to_string()));
                        }
                    }
                    _ => {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: format!("unknown sweep key `{key}`"),
                        })
                    }
                }
                continue;
            }
            let path = format!("{sec}.{key}");
            s.set(&path, value).map_err(|e| Error::Parse {
                line: line_no,
                msg: e.to_string(),
            })?;
        }
        finish(&mut s, sweep)?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut s = Self::parse(&std::fs::read_to_string(path)?)?;
        s.base_dir = path.parent().map(|p| p.to_path_buf());
        Ok(s)
    }

    /// Full resolved configuration in the scenario format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut current = "";
        for path in Self::PATHS {
            let (sec, key) = path.split_once('.').expect("sectioned path");
            if sec != current {
                if !current.is_empty() {
                    out.push('\n');
                }
                let _ = writeln!(out, "[{sec}]");
                current = sec;
            }
            let _ = writeln!(out, "{key} = {}", self.get(path).expect("known path"));
        }
        for sw in &self.sweeps {
            let values: Vec<String> = sw.values.iter().map(|v| format!("{v:?}")).collect();
            let _ = write!(out, "\n[sweep]\nparam = {}\nvalues = {}\n", sw.param, values.join(", "));
            if !sw.set.is_empty() {
                let items: Vec<String> = sw.set.iter().map(|(k, v)| format!("{k}={v}")).collect();
                let _ = writeln!(out, "set = {}", items.join("; "));
            }
        }
        out
    }

    pub fn sample_rate(&self) -> f64 {
        self.modulation.sample_rate()
    }

    pub fn transmittance(&self) -> f64 {
        self.channel.spec(false).transmittance()
    }

    /// Receiver with the noise toggles applied.
    pub fn effective_receiver(&self) -> ReceiverSpec {
        let mut r = self.receiver.clone();
        if !self.toggles.thermal {
            r.nep = 0.0;
        }
        r.adc = if self.toggles.adc { Some(self.adc.clone()) } else { None };
        r
    }

    pub fn filter(&self) -> Option<FilterSpec> {
        self.dsp
            .filter
            .then(|| FilterSpec::relative(self.dsp.relative_bandwidth, self.modulation.symbol_rate))
    }

    pub fn security_detection(&self) -> SecurityDetection {
        self.security_detection
            .unwrap_or_else(|| SecurityDetection::from(self.receiver.detection))
    }

    /// Injected channel-input excess noise, SNU.
    pub fn injected_excess(&self) -> f64 {
        if self.toggles.excess {
            self.channel.excess_noise
        } else {
            0.0
        }
    }

    /// Closed-form electronic noise of the effective receiver, SNU.
    pub fn model_v_el(&self) -> f64 {
        self.effective_receiver().electronic_noise_snu(self.carrier_frequency)
    }

    /// Security parameters of the configured link (no estimation involved).
    ///
    /// Untrusted electronic noise is referred to the channel input as excess noise.
    pub fn model_params(&self) -> SecurityParams<f64> {
        let t = self.transmittance();
        let eta = self.receiver.eta;
        let v_el = self.model_v_el();
        let (xi, trusted) = if self.trusted_v_el {
            (self.injected_excess(), v_el)
        } else {
            (self.injected_excess() + v_el / (eta * t), 0.0)
        };
        let mut p = SecurityParams::new(self.modulation.v_mod, t, xi, eta, trusted, self.security_detection());
        p.beta = self.beta;
        p.nu_pe = self.nu_pe;
        p
    }

    /// Quantum symbols plus pilot slots.
    pub fn transmitted_slots(&self) -> usize {
        if self.pilot.enabled && self.pilot.pilot_every >= 2 {
            let k = self.pilot.pilot_every;
            self.n_symbols + self.n_symbols.div_ceil(k - 1)
        } else {
            self.n_symbols
        }
    }

    /// Every violated constraint, across modules and between them.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.n_symbols < MIN_RECORDS {
            v.push(format!(
                "scenario.n_symbols must be >= {MIN_RECORDS}, got {}",
                self.n_symbols
            ));
        }
        if !(self.carrier_frequency > 0.0) {
            v.push(format!(
                "scenario.carrier_frequency must be > 0, got {}",
                self.carrier_frequency
            ));
        }
        v.extend(self.modulation.violations());
        v.extend(self.laser.violations());
        if !self.phase_offset.is_finite() {
            v.push("laser.phase_offset must be finite".into());
        }
        v.extend(self.pilot.violations());
        v.extend(self.channel.spec(true).violations());
        if !(self.channel.excess_noise >= 0.0) {
            v.push(format!(
                "channel.excess_noise must be >= 0, got {}",
                self.channel.excess_noise
            ));
        }
        v.extend(self.receiver.violations());
        v.extend(self.adc.violations());
        if let Some(f) = self.filter() {
            v.extend(f.violations());
        }
        let fs = self.sample_rate();
        if self.toggles.rin && self.laser.rin_psd * fs / 2.0 >= 0.5 {
            v.push(format!(
                "laser.rin_psd {} gives relative power variance {} over the band, limit 0.5",
                self.laser.rin_psd,
                self.laser.rin_psd * fs / 2.0
            ));
        }
        if let Some(o) = self.dsp.timing_offset {
            if o >= self.modulation.samples_per_symbol.max(1) {
                v.push(format!(
                    "dsp.timing_offset {o} must be < samples_per_symbol {}",
                    self.modulation.samples_per_symbol
                ));
            }
        }
        if self.dsp.calibration_symbols == 0 {
            v.push("dsp.calibration_symbols must be >= 1".into());
        }
        let het = self.receiver.detection.is_heterodyne();
        if self.pilot.enabled && !het {
            v.push("pilot.enabled requires receiver.detection = heterodyne".into());
        }
        if self.dsp.phase_recovery && !self.pilot.enabled {
            v.push("dsp.phase_recovery requires pilot.enabled = true".into());
        }
        if self.pilot.enabled && self.pilot.pilot_every >= 2 && self.toggles.phase_noise && self.laser.linewidth > 0.0 {
            let k = self.pilot.pilot_every as f64;
            let var = 2.0 * std::f64::consts::PI * self.laser.linewidth * k / self.modulation.symbol_rate;
            if 3.0 * var.sqrt() >= std::f64::consts::FRAC_PI_2 {
                v.push(format!(
                    "pilot spacing {k} is too wide for linewidth {} Hz: 3 sigma of the phase step between pilots is {:.3} rad, limit pi/2",
                    self.laser.linewidth,
                    3.0 * var.sqrt()
                ));
            }
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            v.push(format!("security.beta must be in (0, 1], got {}", self.beta));
        }
        if !(self.nu_pe >= 0.0 && self.nu_pe < 1.0) {
            v.push(format!("security.nu_pe must be in [0, 1), got {}", self.nu_pe));
        }
        if self.postproc.enabled {
            if !DIMENSIONS.contains(&self.postproc.dimension) {
                v.push(format!(
                    "postproc.dimension must be one of 1, 2, 4, 8, got {}",
                    self.postproc.dimension
                ));
            }
            if self.postproc.max_iters == 0 {
                v.push("postproc.max_iters must be >= 1".into());
            }
            if !(self.nu_pe > 0.0) {
                v.push("postproc.enabled requires security.nu_pe > 0 for parameter estimation".into());
            }
            if self.postproc.code != BUILTIN_CODE && !self.code_path().is_file() {
                v.push(format!("postproc.code `{}` is not a readable file", self.postproc.code));
            }
        }
        for sw in &self.sweeps {
            let mut probe = self.clone();
            probe.sweeps.clear();
            for (k, val) in &sw.set {
                if let Err(e) = probe.set(k, val) {
                    v.push(format!("sweep override: {e}"));
                }
            }
            if let Some(&x) = sw.values.first() {
                if let Err(e) = probe.set_numeric(&sw.param, x) {
                    v.push(format!("sweep: {e}"));
                }
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    /// Resolved location of a file-based code.
    pub fn code_path(&self) -> PathBuf {
        let p = PathBuf::from(&self.postproc.code);
        match (&self.base_dir, p.is_relative()) {
            (Some(base), true) => base.join(p),
            _ => p,
        }
    }

    /// Photon energy at the carrier, J.
    pub fn photon_energy(&self) -> f64 {
        photon_energy(self.carrier_frequency)
    }
}
