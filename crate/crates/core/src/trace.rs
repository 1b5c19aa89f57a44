// SPDX-License-Identifier: Apache-2.0

//! Synthetic supply-current traces for the circuits under test.
//!
//! A circuit is stepped at bit level (one shift or round per step) and the
//! number of register bits that flip in each step drives the current:
//!
//! ```text
//! i[t] = i_unit * scale(condition) * toggles[step(t)] + baseline + noise
//! ```
//!
//! `scale` is 1 for the normal condition, `1 + k_pv * dL/L` under process
//! variation and `1 + k_temp * (T - 20 C)` under temperature variation. The
//! baseline (static plus clock-network current) does not depend on the
//! condition. Under the Trojan condition the trigger logic is evaluated every
//! step on the live registers; it adds a constant `trojan_logic_toggles`
//! and, on each step where it fires, a one-sample payload spike of
//! `spike_gain * i_unit`.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::bits;
use crate::config::KeyValues;
use crate::crc::CrcConfig;
use crate::csvio;
use crate::error::{Error, Result};
use crate::katan::{self, KatanState, Key80};
use crate::trojan::{self, TrojanSpec};

pub const PV_RANGE: (f64, f64) = (-0.20, 0.20);
pub const TEMPERATURE_RANGE_C: (f64, f64) = (20.0, 120.0);
pub const MIN_TRACE_LEN: usize = 100;
pub const DEFAULT_N_PATTERNS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConditionKind {
    Normal,
    ProcessVariation,
    Temperature,
    Trojan,
}

impl ConditionKind {
    pub const ALL: [ConditionKind; 4] = [
        ConditionKind::Normal,
        ConditionKind::ProcessVariation,
        ConditionKind::Temperature,
        ConditionKind::Trojan,
    ];

    /// Whether traces under this condition come from the original circuit.
    pub fn is_original(self) -> bool {
        !matches!(self, ConditionKind::Trojan)
    }

    /// Condition of trace `i` out of `n`: PV and temperature sweep their
    /// range evenly from the low end to the high end.
    pub fn sweep(self, i: usize, n: usize) -> Condition {
        let frac = if n <= 1 {
            0.0
        } else {
            i as f64 / (n - 1) as f64
        };
        let lerp = |(lo, hi): (f64, f64)| lo + frac * (hi - lo);
        match self {
            ConditionKind::Normal => Condition::Normal,
            ConditionKind::ProcessVariation => Condition::ProcessVariation {
                length_fraction: lerp(PV_RANGE),
            },
            ConditionKind::Temperature => Condition::Temperature {
                celsius: lerp(TEMPERATURE_RANGE_C),
            },
            ConditionKind::Trojan => Condition::Trojan,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ConditionKind::Normal => "normal",
            ConditionKind::ProcessVariation => "process",
            ConditionKind::Temperature => "temperature",
            ConditionKind::Trojan => "trojan",
        }
    }
}

impl fmt::Display for ConditionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConditionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" => Ok(ConditionKind::Normal),
            "process" | "pv" | "process_variation" => Ok(ConditionKind::ProcessVariation),
            "temperature" | "temp" => Ok(ConditionKind::Temperature),
            "trojan" | "malicious" => Ok(ConditionKind::Trojan),
            _ => Err(Error::parse("condition (normal|pv|temperature|trojan)", s)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Condition {
    Normal,
    /// Relative transistor-length change.
    ProcessVariation {
        length_fraction: f64,
    },
    Temperature {
        celsius: f64,
    },
    Trojan,
}

impl Condition {
    pub fn kind(&self) -> ConditionKind {
        match self {
            Condition::Normal => ConditionKind::Normal,
            Condition::ProcessVariation { .. } => ConditionKind::ProcessVariation,
            Condition::Temperature { .. } => ConditionKind::Temperature,
            Condition::Trojan => ConditionKind::Trojan,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let in_range = |v: f64, (lo, hi): (f64, f64)| v.is_finite() && v >= lo && v <= hi;
        match *self {
            Condition::ProcessVariation { length_fraction }
                if !in_range(length_fraction, PV_RANGE) =>
            {
                Err(Error::config(format!(
                    "process-variation length fraction {length_fraction} outside [-0.2, 0.2]"
                )))
            }
            Condition::Temperature { celsius } if !in_range(celsius, TEMPERATURE_RANGE_C) => Err(
                Error::config(format!("temperature {celsius} C outside [20, 120]")),
            ),
            _ => Ok(()),
        }
    }

    /// The condition's numeric parameter, if it has one.
    pub fn parameter(&self) -> Option<f64> {
        match *self {
            Condition::ProcessVariation { length_fraction } => Some(length_fraction),
            Condition::Temperature { celsius } => Some(celsius),
            _ => None,
        }
    }

    pub fn with_parameter(kind: ConditionKind, parameter: Option<f64>) -> Result<Self> {
        let need = |p: Option<f64>| {
            p.ok_or_else(|| Error::config(format!("{kind} condition needs a parameter")))
        };
        let c = match kind {
            ConditionKind::Normal => Condition::Normal,
            ConditionKind::Trojan => Condition::Trojan,
            ConditionKind::ProcessVariation => Condition::ProcessVariation {
                length_fraction: need(parameter)?,
            },
            ConditionKind::Temperature => Condition::Temperature {
                celsius: need(parameter)?,
            },
        };
        c.validate()?;
        Ok(c)
    }
}

/// Current-model calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceParams {
    pub dt_ns: f64,
    pub length: usize,
    pub i_unit_ua: f64,
    pub baseline_ua: f64,
    pub noise_sigma_ua: f64,
    pub k_pv: f64,
    pub k_temp_per_c: f64,
    pub spike_gain: f64,
    pub trojan_logic_toggles: f64,
}

impl Default for TraceParams {
    fn default() -> Self {
        TraceParams {
            dt_ns: 0.1,
            length: 256,
            i_unit_ua: 1.0,
            baseline_ua: 100.0,
            noise_sigma_ua: 0.05,
            k_pv: 0.5,
            k_temp_per_c: 0.002,
            spike_gain: 4.0e4,
            trojan_logic_toggles: 0.0,
        }
    }
}

impl TraceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_ns > 0.0 && self.dt_ns.is_finite()) {
            return Err(Error::config("trace.dt_ns must be positive"));
        }
        if self.length < MIN_TRACE_LEN {
            return Err(Error::config(format!(
                "trace.length must be at least {MIN_TRACE_LEN}"
            )));
        }
        let finite = [
            self.i_unit_ua,
            self.baseline_ua,
            self.noise_sigma_ua,
            self.k_pv,
            self.k_temp_per_c,
            self.spike_gain,
            self.trojan_logic_toggles,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("trace parameters must be finite"));
        }
        if self.noise_sigma_ua < 0.0 {
            return Err(Error::config("trace.noise_sigma_ua must be non-negative"));
        }
        Ok(())
    }

    /// Multiplicative amplitude factor applied to the dynamic current.
    pub fn scale(&self, condition: &Condition) -> f64 {
        match *condition {
            Condition::Normal | Condition::Trojan => 1.0,
            Condition::ProcessVariation { length_fraction } => 1.0 + self.k_pv * length_fraction,
            Condition::Temperature { celsius } => {
                1.0 + self.k_temp_per_c * (celsius - TEMPERATURE_RANGE_C.0)
            }
        }
    }
}

/// Per-step activity of one circuit run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitRun {
    pub toggles: Vec<u32>,
    /// Whether the Trojan trigger fires at each step.
    pub trojan_active: Vec<bool>,
}

/// A bit-level circuit that can be stepped to produce switching activity.
pub trait Circuit: Send + Sync {
    fn name(&self) -> &'static str;

    fn input_width(&self) -> usize;

    fn run(&self, pattern: &[bool]) -> Result<CircuitRun>;

    fn toggle_profile(&self, pattern: &[bool]) -> Result<Vec<u32>> {
        Ok(self.run(pattern)?.toggles)
    }

    /// Stimulus used for the reference signal: alternating ones and zeros.
    fn reference_pattern(&self) -> Vec<bool> {
        (0..self.input_width()).map(|i| i % 2 == 0).collect()
    }

    fn check_width(&self, pattern: &[bool]) -> Result<()> {
        if pattern.len() != self.input_width() {
            return Err(Error::WidthMismatch {
                what: "circuit input pattern",
                expected: self.input_width(),
                actual: pattern.len(),
            });
        }
        Ok(())
    }
}

/// The CRC receiver: a shift register capturing the incoming message and the
/// remainder register. Reset presets the capture register to all ones and the
/// remainder register to the receiver init value. The input pattern is the
/// d-bit test pattern; the message is its encoding.
///
/// The Trojan trigger taps both registers: parity of the captured input AND
/// parity of the generated check value.
#[derive(Debug, Clone, PartialEq)]
pub struct CrcDecoderCircuit {
    crc: CrcConfig,
}

impl CrcDecoderCircuit {
    pub fn new(crc: CrcConfig) -> Self {
        CrcDecoderCircuit { crc }
    }

    pub fn crc(&self) -> &CrcConfig {
        &self.crc
    }

    /// Steps the receiver over raw message bits, valid or not.
    pub fn run_message(&self, message: &[bool]) -> Result<CircuitRun> {
        let n = self.crc.message_width();
        if message.len() != n {
            return Err(Error::WidthMismatch {
                what: "decoder message",
                expected: n,
                actual: message.len(),
            });
        }
        let shift_mask = if n >= 64 { u64::MAX } else { (1u64 << n) - 1 };
        let mut captured = shift_mask;
        let mut rem = self.crc.receiver_init();
        let mut toggles = Vec::with_capacity(n);
        let mut active = Vec::with_capacity(n);
        for &b in message {
            let next_captured = ((captured << 1) | b as u64) & shift_mask;
            let next_rem = self.crc.step(rem, b);
            toggles.push((captured ^ next_captured).count_ones() + (rem ^ next_rem).count_ones());
            captured = next_captured;
            rem = next_rem;
            active.push(captured.count_ones() % 2 == 1 && rem.count_ones() % 2 == 1);
        }
        Ok(CircuitRun {
            toggles,
            trojan_active: active,
        })
    }
}

impl Circuit for CrcDecoderCircuit {
    fn name(&self) -> &'static str {
        "crc"
    }

    fn input_width(&self) -> usize {
        self.crc.data_width()
    }

    fn run(&self, pattern: &[bool]) -> Result<CircuitRun> {
        self.check_width(pattern)?;
        let message = self.crc.encode(pattern)?;
        self.run_message(&message.to_bits())
    }
}

/// KATAN-32 encryption core. Input is plaintext (32 bits) followed by the
/// key (80 bits), both most significant bit first. One step per round; the
/// Trojan trigger is evaluated on the live state and key registers before
/// each round, so at round 0 it sees the plaintext and the key.
#[derive(Debug, Clone, PartialEq)]
pub struct KatanCircuit {
    trojan: TrojanSpec,
}

impl KatanCircuit {
    pub fn new(trojan: TrojanSpec) -> Result<Self> {
        trojan.validate()?;
        Ok(KatanCircuit { trojan })
    }

    pub fn trojan(&self) -> &TrojanSpec {
        &self.trojan
    }

    pub fn split_pattern(pattern: &[bool]) -> (u32, Key80) {
        let pt = bits::to_u64(&pattern[..katan::BLOCK_BITS]) as u32;
        let key = Key80::truncating(bits::to_u128(&pattern[katan::BLOCK_BITS..]));
        (pt, key)
    }

    pub fn join_pattern(plaintext: u32, key: Key80) -> Vec<bool> {
        let mut p = bits::from_u64(plaintext as u64, katan::BLOCK_BITS);
        p.extend(bits::from_u128(key.value(), katan::KEY_BITS));
        p
    }
}

impl Default for KatanCircuit {
    fn default() -> Self {
        KatanCircuit::new(TrojanSpec::katan_default()).expect("default spec is valid")
    }
}

impl Circuit for KatanCircuit {
    fn name(&self) -> &'static str {
        "katan"
    }

    fn input_width(&self) -> usize {
        katan::BLOCK_BITS + katan::KEY_BITS
    }

    fn run(&self, pattern: &[bool]) -> Result<CircuitRun> {
        self.check_width(pattern)?;
        let (pt, key) = KatanCircuit::split_pattern(pattern);
        let mut state = KatanState::new(pt, key);
        let mut toggles = Vec::with_capacity(katan::ROUNDS);
        let mut active = Vec::with_capacity(katan::ROUNDS);
        while !state.is_done() {
            active.push(trojan::katan_trigger_on(
                state.block(),
                state.key_window(),
                &self.trojan,
            ));
            toggles.push(state.step_toggles());
        }
        Ok(CircuitRun {
            toggles,
            trojan_active: active,
        })
    }
}

/// Uniformly sampled supply current.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentTrace {
    pub dt_ns: f64,
    pub samples: Vec<f64>,
    pub pattern_id: String,
}

impl CurrentTrace {
    pub fn new(dt_ns: f64, samples: Vec<f64>, pattern_id: impl Into<String>) -> Result<Self> {
        let t = CurrentTrace {
            dt_ns,
            samples,
            pattern_id: pattern_id.into(),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_ns > 0.0 && self.dt_ns.is_finite()) {
            return Err(Error::Trace(format!(
                "dt must be positive, got {}",
                self.dt_ns
            )));
        }
        if self.samples.len() < MIN_TRACE_LEN {
            return Err(Error::Trace(format!(
                "{} samples, need at least {MIN_TRACE_LEN}",
                self.samples.len()
            )));
        }
        if let Some(i) = self.samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Trace(format!("sample {i} is not finite")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let rows = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, v)| [format!("{:.6}", i as f64 * self.dt_ns), v.to_string()]);
        csvio::write_rows(path, &["time_ns", "current_uA"], rows)
    }

    pub fn load_csv(path: &Path, pattern_id: impl Into<String>) -> Result<Self> {
        let (header, rows) = csvio::read_table(path)?;
        if header != ["time_ns", "current_uA"] {
            return Err(Error::Trace(format!(
                "{}: expected header time_ns,current_uA",
                path.display()
            )));
        }
        let mut times = Vec::with_capacity(rows.len());
        let mut samples = Vec::with_capacity(rows.len());
        for row in &rows {
            let [t, v] = row.as_slice() else {
                return Err(Error::parse("trace row", row.join(",")));
            };
            times.push(csvio::parse_f64("time_ns", t)?);
            samples.push(csvio::parse_f64("current_uA", v)?);
        }
        let dt = match times.as_slice() {
            [a, b, ..] => b - a,
            _ => 0.0,
        };
        // Times are written rounded; recover dt from the whole span.
        let dt = if times.len() > 1 {
            (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64
        } else {
            dt
        };
        CurrentTrace::new(dt, samples, pattern_id)
    }
}

/// Builds the trace of one stimulus under one condition. `seed` drives only
/// the measurement noise.
pub fn simulate_trace(
    circuit: &dyn Circuit,
    pattern: &[bool],
    condition: &Condition,
    params: &TraceParams,
    seed: u64,
) -> Result<CurrentTrace> {
    condition.validate()?;
    params.validate()?;
    let run = circuit.run(pattern)?;
    Ok(render(&run, bits::to_hex(pattern), condition, params, seed))
}

fn render(
    run: &CircuitRun,
    pattern_id: String,
    condition: &Condition,
    params: &TraceParams,
    seed: u64,
) -> CurrentTrace {
    let steps = run.toggles.len().max(1);
    let len = params.length.max(steps);
    let per_step = len / steps;
    let scale = params.scale(condition);
    let trojan = matches!(condition, Condition::Trojan);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, params.noise_sigma_ua).expect("sigma validated");

    let samples = (0..len)
        .map(|t| {
            let step = t / per_step;
            let toggles = run.toggles.get(step).copied().unwrap_or(0);
            let mut i = params.i_unit_ua * scale * f64::from(toggles) + params.baseline_ua;
            if trojan {
                i += params.i_unit_ua * params.trojan_logic_toggles;
                let fires = run.trojan_active.get(step).copied().unwrap_or(false);
                if fires && t % per_step == 0 {
                    i += params.spike_gain * params.i_unit_ua;
                }
            }
            if params.noise_sigma_ua > 0.0 {
                i += noise.sample(&mut rng);
            }
            i
        })
        .collect();
    CurrentTrace {
        dt_ns: params.dt_ns,
        samples,
        pattern_id,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub kind: ConditionKind,
    pub circuit: String,
    pub seed: u64,
    pub patterns: Vec<Vec<bool>>,
    pub conditions: Vec<Condition>,
    pub traces: Vec<CurrentTrace>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    /// Writes `manifest` plus `trace_NNN.csv` per trace into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        csvio::create_dir(dir)?;
        let mut kv = KeyValues::default();
        kv.push("circuit", &self.circuit);
        kv.push("condition", self.kind.name());
        kv.push("seed", self.seed);
        kv.push("n", self.traces.len());
        if let Some(t) = self.traces.first() {
            kv.push("dt_ns", t.dt_ns);
            kv.push("length", t.len());
        }
        for (i, ((trace, pattern), cond)) in self
            .traces
            .iter()
            .zip(&self.patterns)
            .zip(&self.conditions)
            .enumerate()
        {
            let file = format!("trace_{i:03}.csv");
            trace.save_csv(&dir.join(&file))?;
            kv.push(&format!("trace.{i}.file"), &file);
            kv.push(&format!("trace.{i}.pattern"), bits::to_hex(pattern));
            if let Some(p) = cond.parameter() {
                kv.push(&format!("trace.{i}.parameter"), p);
            }
        }
        csvio::write_text(&dir.join("manifest"), &kv.render())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let kv = KeyValues::parse(&csvio::read_text(&dir.join("manifest"))?)?;
        let kind: ConditionKind = kv.require("condition")?.parse()?;
        let circuit = kv.require("circuit")?.to_owned();
        let seed: u64 = kv.require_parsed("seed")?;
        let n: usize = kv.require_parsed("n")?;
        let width = match circuit.as_str() {
            "katan" => katan::BLOCK_BITS + katan::KEY_BITS,
            _ => 0,
        };
        let mut patterns = Vec::with_capacity(n);
        let mut conditions = Vec::with_capacity(n);
        let mut traces = Vec::with_capacity(n);
        for i in 0..n {
            let file = kv.require(&format!("trace.{i}.file"))?;
            let hex = kv.require(&format!("trace.{i}.pattern"))?;
            let w = if width > 0 { width } else { hex.len() * 4 };
            patterns.push(bits::from_hex(hex, w)?);
            let param = kv
                .get(&format!("trace.{i}.parameter"))
                .map(|s| csvio::parse_f64("condition parameter", s))
                .transpose()?;
            conditions.push(Condition::with_parameter(kind, param)?);
            traces.push(CurrentTrace::load_csv(&dir.join(file), hex)?);
        }
        let ds = Dataset {
            kind,
            circuit,
            seed,
            patterns,
            conditions,
            traces,
        };
        ds.check_uniform()?;
        Ok(ds)
    }

    fn check_uniform(&self) -> Result<()> {
        if let Some(first) = self.traces.first() {
            for t in &self.traces {
                if t.len() != first.len() || (t.dt_ns - first.dt_ns).abs() > 1e-9 {
                    return Err(Error::Trace(
                        "traces in a dataset must share dt and length".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Draws `n_patterns` stimuli (distinct while the input space allows) and
/// simulates each under `kind`. Trace `i` uses noise seed `seed ^ i`.
pub fn build_dataset(
    circuit: &dyn Circuit,
    kind: ConditionKind,
    n_patterns: usize,
    params: &TraceParams,
    seed: u64,
) -> Result<Dataset> {
    if n_patterns == 0 {
        return Err(Error::config("n_patterns must be at least 1"));
    }
    params.validate()?;
    let patterns = draw_patterns(circuit.input_width(), n_patterns, seed);
    let mut conditions = Vec::with_capacity(n_patterns);
    let mut traces = Vec::with_capacity(n_patterns);
    for (i, p) in patterns.iter().enumerate() {
        let cond = kind.sweep(i, n_patterns);
        traces.push(simulate_trace(circuit, p, &cond, params, seed ^ i as u64)?);
        conditions.push(cond);
    }
    Ok(Dataset {
        kind,
        circuit: circuit.name().to_owned(),
        seed,
        patterns,
        conditions,
        traces,
    })
}

pub(crate) fn draw_patterns(width: usize, n: usize, seed: u64) -> Vec<Vec<bool>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = if width < 64 {
        Some(1u64 << width)
    } else {
        None
    };
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p: Vec<bool> = (0..width).map(|_| rng.random::<bool>()).collect();
        let exhausted = space.is_some_and(|s| seen.len() as u64 >= s);
        if seen.insert(p.clone()) || exhausted {
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Circuit whose state never changes.
    struct Idle;

    impl Circuit for Idle {
        fn name(&self) -> &'static str {
            "idle"
        }
        fn input_width(&self) -> usize {
            4
        }
        fn run(&self, pattern: &[bool]) -> Result<CircuitRun> {
            self.check_width(pattern)?;
            Ok(CircuitRun {
                toggles: vec![0; 10],
                trojan_active: vec![false; 10],
            })
        }
    }

    fn quiet() -> TraceParams {
        TraceParams {
            noise_sigma_ua: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn idle_circuit_gives_flat_baseline() {
        let p = quiet();
        assert_eq!(Idle.toggle_profile(&[false; 4]).unwrap(), vec![0; 10]);
        let t = simulate_trace(&Idle, &[true; 4], &Condition::Normal, &p, 1).unwrap();
        assert_eq!(t.len(), 256);
        assert!(t.samples.iter().all(|&v| v == p.baseline_ua));
    }

    #[test]
    fn decoder_profile_from_all_ones_register() {
        // x^3 + x + 1, d = 2: message 11111 shifted into a 5-bit capture
        // register and a 3-bit remainder register, both preset to ones.
        let c = CrcConfig::new(0b011, 3, 2).unwrap();
        let run = CrcDecoderCircuit::new(c).run_message(&[true; 5]).unwrap();
        // capture stays 11111 (no flips)
        // remainder, top = msb ^ 1:
        //   111 -> top 0 -> 110           (1 flip)
        //   110 -> top 0 -> 100           (1 flip)
        //   100 -> top 0 -> 000           (1 flip)
        //   000 -> top 1 -> 000 ^ 011 = 011 (2 flips)
        //   011 -> top 1 -> 110 ^ 011 = 101 (2 flips)
        assert_eq!(run.toggles, vec![1, 1, 1, 2, 2]);
        // capture parity is odd throughout; remainder parity after each step:
        // 0 1 0 0 0
        assert_eq!(run.trojan_active, vec![false, true, false, false, false]);
    }

    #[test]
    fn first_bit_difference_shows_in_first_step() {
        let circuit = CrcDecoderCircuit::new(CrcConfig::default());
        // From all ones: a leading 1 flips only the remainder's low bit; a
        // leading 0 flips the capture register's low bit and XORs in the
        // polynomial, so 1 vs 1 + popcount(0x07 ^ 1) toggles.
        for p in 0..128u64 {
            let a = circuit
                .toggle_profile(&bits::from_u64(p | 0x80, 8))
                .unwrap();
            let b = circuit.toggle_profile(&bits::from_u64(p, 8)).unwrap();
            assert_eq!((a[0], b[0]), (1, 3));
        }
        assert!(circuit.toggle_profile(&[true; 3]).is_err());
    }

    #[test]
    fn katan_circuit_profile_matches_cipher_toggles() {
        let c = KatanCircuit::default();
        let (pt, key) = (0x1234_5678, Key80::truncating(0xdead_beef_0011_2233_4455));
        let pattern = KatanCircuit::join_pattern(pt, key);
        assert_eq!(KatanCircuit::split_pattern(&pattern), (pt, key));
        let run = c.run(&pattern).unwrap();
        assert_eq!(run.toggles, katan::round_toggle_trace(pt, key));
        assert_eq!(
            run.trojan_active[0],
            trojan::katan_trigger(pt, key, c.trojan())
        );
    }

    #[test]
    fn zero_key_keeps_katan_trojan_dormant() {
        let c = KatanCircuit::default();
        let run = c
            .run(&KatanCircuit::join_pattern(0xffff_ffff, Key80::ZERO))
            .unwrap();
        assert!(run.trojan_active.iter().all(|&a| !a));
    }

    #[test]
    fn trojan_spike_magnitude() {
        let p = TraceParams {
            baseline_ua: 0.0,
            ..quiet()
        };
        let run = CircuitRun {
            toggles: vec![1; 4],
            trojan_active: vec![false, true, false, false],
        };
        let normal = render(&run, "x".into(), &Condition::Normal, &p, 0);
        let infected = render(&run, "x".into(), &Condition::Trojan, &p, 0);
        let spike = 64; // first sample of step 1
        assert_eq!(infected.samples[spike] - normal.samples[spike], 4.0e4);
        assert!(infected.samples[spike] / normal.samples[spike] >= 4.0e4);
        for t in (0..256).filter(|&t| t != spike) {
            assert_eq!(infected.samples[t], normal.samples[t]);
        }
    }

    #[test]
    fn traces_are_deterministic_per_seed() {
        let c = CrcDecoderCircuit::new(CrcConfig::default());
        let p = TraceParams::default();
        let pat = bits::from_u64(0x3c, 8);
        let a = simulate_trace(&c, &pat, &Condition::Normal, &p, 42).unwrap();
        let b = simulate_trace(&c, &pat, &Condition::Normal, &p, 42).unwrap();
        let other = simulate_trace(&c, &pat, &Condition::Normal, &p, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, other);
    }

    #[test]
    fn scaling_is_recoverable_from_the_trace() {
        let c = CrcDecoderCircuit::new(CrcConfig::default());
        let p = quiet();
        let pat = bits::from_u64(0xa7, 8);
        let profile = c.toggle_profile(&pat).unwrap();
        let step = profile.iter().position(|&t| t > 0).unwrap();
        for cond in [
            Condition::ProcessVariation {
                length_fraction: -0.2,
            },
            Condition::ProcessVariation {
                length_fraction: 0.15,
            },
            Condition::Temperature { celsius: 120.0 },
            Condition::Temperature { celsius: 55.0 },
        ] {
            let t = simulate_trace(&c, &pat, &cond, &p, 0).unwrap();
            let sample = t.samples[step * 16];
            let recovered = (sample - p.baseline_ua) / (p.i_unit_ua * f64::from(profile[step]));
            assert!((recovered - p.scale(&cond)).abs() < 1e-12);
        }
        assert!((p.scale(&Condition::Temperature { celsius: 120.0 }) - 1.2).abs() < 1e-12);
        assert!(
            (p.scale(&Condition::ProcessVariation {
                length_fraction: 0.2
            }) - 1.1)
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn condition_validation() {
        assert!(Condition::ProcessVariation {
            length_fraction: 0.25
        }
        .validate()
        .is_err());
        assert!(Condition::Temperature { celsius: 10.0 }.validate().is_err());
        assert!(Condition::with_parameter(ConditionKind::Temperature, None).is_err());
        assert_eq!(
            ConditionKind::Temperature.sweep(19, 20),
            Condition::Temperature { celsius: 120.0 }
        );
        assert_eq!(
            ConditionKind::ProcessVariation.sweep(0, 20),
            Condition::ProcessVariation {
                length_fraction: -0.2
            }
        );
        assert_eq!(
            ConditionKind::Temperature.sweep(0, 1),
            Condition::Temperature { celsius: 20.0 }
        );
        for k in ConditionKind::ALL {
            assert_eq!(k.name().parse::<ConditionKind>().unwrap(), k);
        }
    }

    #[test]
    fn datasets_have_requested_size_and_distinct_patterns() {
        let c = CrcDecoderCircuit::new(CrcConfig::default());
        let p = TraceParams::default();
        let ds = build_dataset(&c, ConditionKind::Normal, 20, &p, 7).unwrap();
        assert_eq!(ds.len(), 20);
        assert!(ds.traces.iter().all(|t| t.len() == ds.traces[0].len()));
        let distinct: HashSet<_> = ds.patterns.iter().collect();
        assert_eq!(distinct.len(), 20);
        assert_eq!(
            build_dataset(&c, ConditionKind::Normal, 1, &p, 7)
                .unwrap()
                .len(),
            1
        );
        assert!(build_dataset(&c, ConditionKind::Normal, 0, &p, 7).is_err());
        let other = build_dataset(&c, ConditionKind::Normal, 20, &p, 8).unwrap();
        assert_ne!(ds.patterns, other.patterns);
    }

    #[test]
    fn small_input_space_allows_repeats_once_exhausted() {
        let pats = draw_patterns(2, 6, 1);
        assert_eq!(pats.len(), 6);
        let first4: HashSet<_> = pats[..4].iter().collect();
        assert_eq!(first4.len(), 4);
    }

    #[test]
    fn trace_validation() {
        assert!(CurrentTrace::new(0.1, vec![0.0; 99], "x").is_err());
        assert!(CurrentTrace::new(0.0, vec![0.0; 100], "x").is_err());
        let mut v = vec![0.0; 100];
        v[5] = f64::NAN;
        assert!(CurrentTrace::new(0.1, v, "x").is_err());
    }

    #[test]
    fn dataset_round_trips_through_a_directory() {
        let dir = tempfile::tempdir().unwrap();
        let c = CrcDecoderCircuit::new(CrcConfig::default());
        let ds = build_dataset(
            &c,
            ConditionKind::Temperature,
            5,
            &TraceParams::default(),
            3,
        )
        .unwrap();
        ds.save(dir.path()).unwrap();
        let back = Dataset::load(dir.path()).unwrap();
        assert_eq!(back.kind, ds.kind);
        assert_eq!(back.patterns, ds.patterns);
        assert_eq!(back.conditions, ds.conditions);
        for (a, b) in back.traces.iter().zip(&ds.traces) {
            assert_eq!(a.samples, b.samples);
            assert!((a.dt_ns - b.dt_ns).abs() < 1e-9);
        }

        let kc = KatanCircuit::default();
        let kds = build_dataset(&kc, ConditionKind::Trojan, 2, &TraceParams::default(), 3).unwrap();
        let kdir = dir.path().join("katan");
        kds.save(&kdir).unwrap();
        assert_eq!(Dataset::load(&kdir).unwrap().patterns, kds.patterns);
    }
}
