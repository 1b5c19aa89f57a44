// SPDX-License-Identifier: Apache-2.0

//! Flat `key = value` configuration with dotted keys.
//!
//! ```text
//! # comments start with '#'
//! seed = 7
//! half_period_ns = 1.0
//! crc.poly = 07
//! detector.sensitivities = 0.05,0.10,0.20
//! ```
//!
//! Every key has a default, so an empty file (or one holding only `seed`) is
//! a complete configuration. Unknown keys are rejected.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::bist::{BistSetup, ClockConfig};
use crate::crc::CrcConfig;
use crate::csvio;
use crate::detector::{DetectorMode, DEFAULT_SENSITIVITIES, DEFAULT_SENSITIVITY};
use crate::error::{Error, Result};
use crate::mtj::MtjDelayModel;
use crate::trace::{TraceParams, DEFAULT_N_PATTERNS};
use crate::trojan::{self, Payload, TrojanSpec, TrojanTarget};

/// Ordered key/value list; order is kept so rendered files are stable.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyValues {
    entries: Vec<(String, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KeyValues::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::config(format!(
                    "line {}: expected key = value, got {raw:?}",
                    lineno + 1
                )));
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(Error::config(format!("line {}: empty key", lineno + 1)));
            }
            if kv.get(k).is_some() {
                return Err(Error::config(format!(
                    "line {}: duplicate key {k}",
                    lineno + 1
                )));
            }
            kv.entries.push((k.to_owned(), v.to_owned()));
        }
        Ok(kv)
    }

    pub fn push(&mut self, key: &str, value: impl Display) {
        self.entries.push((key.to_owned(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::config(format!("missing key {key}")))
    }

    pub fn require_parsed<T: FromStr>(&self, key: &str) -> Result<T> {
        let v = self.require(key)?;
        v.parse()
            .map_err(|_| Error::config(format!("bad value for {key}: {v:?}")))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub clock: ClockConfig,
    pub crc: CrcConfig,
    pub mtj: MtjDelayModel,
    pub trace: TraceParams,
    pub n_patterns: usize,
    pub sensitivities: Vec<f64>,
    pub default_sensitivity: f64,
    pub normalized: bool,
    /// Hex reference stimulus; the circuit's alternating pattern if unset.
    pub reference_pattern: Option<String>,
    pub trojan_target: TrojanTarget,
    pub trojan_key_bits: Vec<usize>,
    pub trojan_pt_bits: Vec<usize>,
    /// Payload of the configured target; the target's default if unset.
    pub trojan_payload: Option<Payload>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let katan = TrojanSpec::katan_default();
        ExperimentConfig {
            seed: 1,
            out: PathBuf::from("out"),
            clock: ClockConfig::default(),
            crc: CrcConfig::default(),
            mtj: MtjDelayModel::default(),
            trace: TraceParams::default(),
            n_patterns: DEFAULT_N_PATTERNS,
            sensitivities: DEFAULT_SENSITIVITIES.to_vec(),
            default_sensitivity: DEFAULT_SENSITIVITY,
            normalized: false,
            reference_pattern: None,
            trojan_target: TrojanTarget::Katan32,
            trojan_key_bits: katan.trigger_key_bits,
            trojan_pt_bits: katan.trigger_pt_bits,
            trojan_payload: None,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::config(format!("bad value for {key}: {v:?}")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| parse_value(key, s.trim())).collect()
}

fn join<T: Display>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        let mut c = ExperimentConfig::default();
        let mut poly: Option<String> = None;
        let mut crc_width: Option<usize> = None;
        let mut data_width = c.crc.data_width();
        for (key, v) in &kv.entries {
            let key = key.as_str();
            match key {
                "seed" => c.seed = parse_value(key, v)?,
                "out" => c.out = PathBuf::from(v),
                "half_period_ns" => c.clock.half_period_ns = parse_value(key, v)?,
                "launch_offset_cycles" => c.clock.launch_offset_cycles = parse_value(key, v)?,
                "sample_edge" => c.clock.sample_edge = parse_value(key, v)?,
                "crc.poly" => poly = Some(v.clone()),
                "crc.width" => crc_width = Some(parse_value(key, v)?),
                "crc.data_width" => data_width = parse_value(key, v)?,
                "mtj.tolerance" => c.mtj.tm_tolerance = parse_value(key, v)?,
                "mtj.tm_min" => c.mtj.tm_min = parse_value(key, v)?,
                "mtj.tm_max" => c.mtj.tm_max = parse_value(key, v)?,
                "mtj.delay01_max" => c.mtj.delay01_max = parse_value(key, v)?,
                "mtj.delay10_max" => c.mtj.delay10_max = parse_value(key, v)?,
                "trace.dt_ns" => c.trace.dt_ns = parse_value(key, v)?,
                "trace.length" => c.trace.length = parse_value(key, v)?,
                "trace.i_unit_ua" => c.trace.i_unit_ua = parse_value(key, v)?,
                "trace.baseline_ua" => c.trace.baseline_ua = parse_value(key, v)?,
                "trace.noise_sigma_ua" => c.trace.noise_sigma_ua = parse_value(key, v)?,
                "trace.k_pv" => c.trace.k_pv = parse_value(key, v)?,
                "trace.k_temp" => c.trace.k_temp_per_c = parse_value(key, v)?,
                "trace.spike_gain" => c.trace.spike_gain = parse_value(key, v)?,
                "trace.trojan_logic_toggles" => c.trace.trojan_logic_toggles = parse_value(key, v)?,
                "trace.n_patterns" => c.n_patterns = parse_value(key, v)?,
                "detector.sensitivities" => c.sensitivities = parse_list(key, v)?,
                "detector.default_sensitivity" => c.default_sensitivity = parse_value(key, v)?,
                "detector.normalized" => c.normalized = parse_value(key, v)?,
                "detector.reference_pattern" => c.reference_pattern = Some(v.clone()),
                "trojan.target" => c.trojan_target = parse_value(key, v)?,
                "trojan.key_bits" => c.trojan_key_bits = trojan::parse_index_set(v)?,
                "trojan.pt_bits" => c.trojan_pt_bits = trojan::parse_index_set(v)?,
                "trojan.payload" => c.trojan_payload = Some(parse_value(key, v)?),
                _ => return Err(Error::config(format!("unknown key {key}"))),
            }
        }
        c.crc = match poly {
            Some(p) => CrcConfig::from_hex(&p, crc_width, data_width)?,
            None => CrcConfig::new(c.crc.poly(), crc_width.unwrap_or(c.crc.width()), data_width)?,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        ExperimentConfig::parse(&csvio::read_text(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.clock.validate()?;
        self.mtj.validate()?;
        self.trace.validate()?;
        if self.n_patterns == 0 {
            return Err(Error::config("trace.n_patterns must be at least 1"));
        }
        if self.sensitivities.is_empty() {
            return Err(Error::Empty("detector.sensitivities"));
        }
        if self
            .sensitivities
            .iter()
            .chain([&self.default_sensitivity])
            .any(|s| !(*s > 0.0 && s.is_finite()))
        {
            return Err(Error::config("sensitivities must be positive and finite"));
        }
        self.trojan_spec()?;
        self.katan_trojan()?;
        Ok(())
    }

    pub fn bist_setup(&self) -> BistSetup {
        BistSetup {
            clock: self.clock,
            crc: self.crc.clone(),
            model: self.mtj,
        }
    }

    pub fn detector_mode(&self) -> DetectorMode {
        DetectorMode::from_flag(self.normalized)
    }

    /// Trojan for the configured target.
    pub fn trojan_spec(&self) -> Result<TrojanSpec> {
        let mut spec = match self.trojan_target {
            TrojanTarget::CrcDecoder => TrojanSpec::crc_default(),
            TrojanTarget::Katan32 => TrojanSpec {
                trigger_key_bits: self.trojan_key_bits.clone(),
                trigger_pt_bits: self.trojan_pt_bits.clone(),
                ..TrojanSpec::katan_default()
            },
        };
        if let Some(p) = self.trojan_payload {
            spec.payload = p;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// KATAN Trojan with the configured trigger bits, whatever the target.
    pub fn katan_trojan(&self) -> Result<TrojanSpec> {
        match self.trojan_target {
            TrojanTarget::Katan32 => self.trojan_spec(),
            TrojanTarget::CrcDecoder => {
                let spec = TrojanSpec {
                    trigger_key_bits: self.trojan_key_bits.clone(),
                    trigger_pt_bits: self.trojan_pt_bits.clone(),
                    ..TrojanSpec::katan_default()
                };
                spec.validate()?;
                Ok(spec)
            }
        }
    }

    /// CRC decoder payload, used by the BIST Trojan variant.
    pub fn crc_payload(&self) -> Payload {
        match (self.trojan_target, self.trojan_payload) {
            (TrojanTarget::CrcDecoder, Some(p)) => p,
            _ => Payload::ErrorSignalInvert,
        }
    }

    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::default();
        kv.push("seed", self.seed);
        kv.push("out", self.out.display());
        kv.push("half_period_ns", self.clock.half_period_ns);
        kv.push("launch_offset_cycles", self.clock.launch_offset_cycles);
        kv.push("sample_edge", self.clock.sample_edge);
        kv.push("crc.poly", self.crc.poly_hex());
        kv.push("crc.width", self.crc.width());
        kv.push("crc.data_width", self.crc.data_width());
        kv.push("mtj.tolerance", self.mtj.tm_tolerance);
        kv.push("mtj.tm_min", self.mtj.tm_min);
        kv.push("mtj.tm_max", self.mtj.tm_max);
        kv.push("mtj.delay01_max", self.mtj.delay01_max);
        kv.push("mtj.delay10_max", self.mtj.delay10_max);
        kv.push("trace.dt_ns", self.trace.dt_ns);
        kv.push("trace.length", self.trace.length);
        kv.push("trace.i_unit_ua", self.trace.i_unit_ua);
        kv.push("trace.baseline_ua", self.trace.baseline_ua);
        kv.push("trace.noise_sigma_ua", self.trace.noise_sigma_ua);
        kv.push("trace.k_pv", self.trace.k_pv);
        kv.push("trace.k_temp", self.trace.k_temp_per_c);
        kv.push("trace.spike_gain", self.trace.spike_gain);
        kv.push(
            "trace.trojan_logic_toggles",
            self.trace.trojan_logic_toggles,
        );
        kv.push("trace.n_patterns", self.n_patterns);
        kv.push("detector.sensitivities", join(&self.sensitivities));
        kv.push("detector.default_sensitivity", self.default_sensitivity);
        kv.push("detector.normalized", self.normalized);
        if let Some(p) = &self.reference_pattern {
            kv.push("detector.reference_pattern", p);
        }
        kv.push("trojan.target", self.trojan_target);
        kv.push("trojan.key_bits", join(&self.trojan_key_bits));
        kv.push("trojan.pt_bits", join(&self.trojan_pt_bits));
        if let Some(p) = self.trojan_payload {
            kv.push("trojan.payload", p);
        }
        kv
    }

    pub fn to_config_string(&self) -> String {
        self.to_key_values().render()
    }
}
