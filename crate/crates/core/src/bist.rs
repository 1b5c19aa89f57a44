// SPDX-License-Identifier: Apache-2.0

//! One BIST-RS round: encode a test pattern, launch every message bit into
//! its MTJ cell, sense the array at the decoder clock edge and check the CRC.
//!
//! Timeline (default half period 3 ns): rising edges at 0, 6, 12 ns; the
//! encoder launches the message 1.25 periods in (7.5 ns); the decoder
//! samples at the third rising edge (12 ns). Until then the receiver
//! register is held at its preset and the error signal reads high.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits;
use crate::crc::{CrcConfig, Message};
use crate::error::{Error, Result};
use crate::mtj::{MtjCell, MtjDelayModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockConfig {
    pub half_period_ns: f64,
    /// Launch time in full clock periods from t = 0.
    pub launch_offset_cycles: f64,
    /// 1-based rising edge at which the decoder samples.
    pub sample_edge: u32,
}

impl Default for ClockConfig {
    fn default() -> Self {
        ClockConfig {
            half_period_ns: 3.0,
            launch_offset_cycles: 1.25,
            sample_edge: 3,
        }
    }
}

impl ClockConfig {
    pub fn with_half_period(self, half_period_ns: f64) -> Self {
        ClockConfig {
            half_period_ns,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_period_ns > 0.0 && self.half_period_ns.is_finite()) {
            return Err(Error::config(format!(
                "half_period_ns must be positive, got {}",
                self.half_period_ns
            )));
        }
        if !(self.launch_offset_cycles >= 0.0 && self.launch_offset_cycles.is_finite()) {
            return Err(Error::config("launch_offset_cycles must be non-negative"));
        }
        if self.sample_edge == 0 {
            return Err(Error::config("sample_edge is 1-based"));
        }
        if self.sample_time() < self.launch_time() {
            return Err(Error::config(format!(
                "sample edge at {} ns precedes launch at {} ns",
                self.sample_time(),
                self.launch_time()
            )));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        2.0 * self.half_period_ns
    }

    /// Time of the `n`-th rising edge, 1-based.
    pub fn rising_edge(&self, n: u32) -> f64 {
        f64::from(n.saturating_sub(1)) * self.period()
    }

    pub fn launch_time(&self) -> f64 {
        self.launch_offset_cycles * self.period()
    }

    pub fn sample_time(&self) -> f64 {
        self.rising_edge(self.sample_edge)
    }

    /// Time available for the MTJ cells to settle.
    pub fn settle_window(&self) -> f64 {
        self.sample_time() - self.launch_time()
    }

    /// Half period at which the settle window equals `window` ns, keeping the
    /// launch offset and sample edge.
    pub fn half_period_for_window(&self, window: f64) -> f64 {
        let cycles = f64::from(self.sample_edge.saturating_sub(1)) - self.launch_offset_cycles;
        window / (2.0 * cycles)
    }
}

/// Everything a BIST round needs besides the pattern and the array.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BistSetup {
    pub clock: ClockConfig,
    pub crc: CrcConfig,
    pub model: MtjDelayModel,
}

impl BistSetup {
    pub fn validate(&self) -> Result<()> {
        self.clock.validate()?;
        self.model.validate()
    }

    pub fn array_len(&self) -> usize {
        self.crc.message_width()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BistResult {
    /// Decoder error signal after the sample edge; `true` = corrupted.
    pub error_flag: bool,
    pub launched_bits: Vec<bool>,
    pub sensed_bits: Vec<bool>,
    /// Cells whose sensed bit differs from the launched bit.
    pub faulted_positions: Vec<usize>,
    pub launch_time: f64,
    pub sample_time: f64,
}

impl BistResult {
    /// Level of the decoder error output at time `t`. During reset the
    /// receiver register is all ones and the error output is high; it
    /// resolves at the sample edge.
    pub fn error_signal_at(&self, t: f64) -> bool {
        if t < self.sample_time {
            true
        } else {
            self.error_flag
        }
    }

    pub fn sensed_data(&self, crc: &CrcConfig) -> &[bool] {
        &self.sensed_bits[..crc.data_width()]
    }
}

/// Runs one round on a copy of `array`; the caller's cells are untouched.
pub fn run_bist(pattern: &[bool], array: &[MtjCell], setup: &BistSetup) -> Result<BistResult> {
    setup.validate()?;
    if array.len() != setup.array_len() {
        return Err(Error::WidthMismatch {
            what: "MTJ array (data + check cells)",
            expected: setup.array_len(),
            actual: array.len(),
        });
    }
    let message = setup.crc.encode(pattern)?;
    let launched = message.to_bits();
    let launch_time = setup.clock.launch_time();
    let sample_time = setup.clock.sample_time();

    let mut cells = array.to_vec();
    for (i, (cell, &bit)) in cells.iter_mut().zip(&launched).enumerate() {
        cell.apply_bit(bit, launch_time, &setup.model)
            .map_err(|e| match e {
                Error::PendingTransition { .. } => Error::PendingTransition { cell: Some(i) },
                other => other,
            })?;
    }
    let sensed: Vec<bool> = cells.iter_mut().map(|c| c.sense(sample_time)).collect();
    let faulted_positions = launched
        .iter()
        .zip(&sensed)
        .enumerate()
        .filter_map(|(i, (a, b))| (a != b).then_some(i))
        .collect();
    let received = Message::from_bits(&sensed, &setup.crc)?;
    Ok(BistResult {
        error_flag: setup.crc.verify(&received),
        launched_bits: launched,
        sensed_bits: sensed,
        faulted_positions,
        launch_time,
        sample_time,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackSpec {
    /// `(cell index, thickness multiplier)` pairs.
    pub targets: Vec<(usize, f64)>,
    pub rng_seed: u64,
}

impl AttackSpec {
    pub fn none() -> Self {
        AttackSpec {
            targets: Vec::new(),
            rng_seed: 0,
        }
    }

    pub fn single(index: usize, multiplier: f64) -> Self {
        AttackSpec {
            targets: vec![(index, multiplier)],
            rng_seed: 0,
        }
    }

    /// `count` distinct cells out of `array_len`, each with a multiplier drawn
    /// uniformly from `multipliers`.
    pub fn random(
        count: usize,
        array_len: usize,
        multipliers: std::ops::RangeInclusive<f64>,
        rng_seed: u64,
    ) -> Result<Self> {
        if count > array_len {
            return Err(Error::IndexOutOfRange {
                index: count,
                len: array_len,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let picks = rand::seq::index::sample(&mut rng, array_len, count).into_vec();
        let mut targets: Vec<(usize, f64)> = picks
            .into_iter()
            .map(|i| (i, rng.random_range(multipliers.clone())))
            .collect();
        targets.sort_by_key(|t| t.0);
        Ok(AttackSpec { targets, rng_seed })
    }

    pub fn validate(&self, array_len: usize) -> Result<()> {
        for &(index, m) in &self.targets {
            if index >= array_len {
                return Err(Error::IndexOutOfRange {
                    index,
                    len: array_len,
                });
            }
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::config(format!(
                    "thickness multiplier for cell {index} must be positive, got {m}"
                )));
            }
        }
        Ok(())
    }
}

/// Scales `tm_actual` of every target. Validates the whole spec first, so a
/// bad spec leaves the array untouched.
pub fn inject_attack(array: &mut [MtjCell], spec: &AttackSpec) -> Result<()> {
    spec.validate(array.len())?;
    for &(index, m) in &spec.targets {
        array[index].tm_actual *= m;
    }
    Ok(())
}

/// Indices of cells outside the tolerance band.
pub fn infected_cells(array: &[MtjCell], model: &MtjDelayModel) -> Vec<usize> {
    array
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.is_malicious(model).then_some(i))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub half_period_ns: f64,
    pub pattern_index: usize,
    pub pattern: Vec<bool>,
    pub error_flag: bool,
    pub faulted: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// Ordered by half period (as given), then pattern index.
    pub rows: Vec<SweepRow>,
    /// Per pattern, the largest half period that raised the error.
    pub max_failing_half_period: Vec<Option<f64>>,
}

impl SweepReport {
    pub fn any_error(&self) -> bool {
        self.rows.iter().any(|r| r.error_flag)
    }
}

/// Runs every (half period, pattern) pair on a fresh copy of `array`.
pub fn frequency_sweep(
    array: &[MtjCell],
    patterns: &[Vec<bool>],
    half_periods: &[f64],
    setup: &BistSetup,
) -> Result<SweepReport> {
    if patterns.is_empty() {
        return Err(Error::Empty("pattern list"));
    }
    if half_periods.is_empty() {
        return Err(Error::Empty("half-period list"));
    }
    let mut rows = Vec::with_capacity(patterns.len() * half_periods.len());
    let mut max_fail: Vec<Option<f64>> = vec![None; patterns.len()];
    for &h in half_periods {
        let point = BistSetup {
            clock: setup.clock.with_half_period(h),
            ..setup.clone()
        };
        for (pi, p) in patterns.iter().enumerate() {
            let r = run_bist(p, array, &point)?;
            if r.error_flag {
                let slot = &mut max_fail[pi];
                *slot = Some(slot.map_or(h, |m: f64| m.max(h)));
            }
            rows.push(SweepRow {
                half_period_ns: h,
                pattern_index: pi,
                pattern: p.clone(),
                error_flag: r.error_flag,
                faulted: r.faulted_positions,
            });
        }
    }
    Ok(SweepReport {
        rows,
        max_failing_half_period: max_fail,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub infected: Vec<usize>,
    /// Infected cells seen faulted in at least one run that raised the error.
    pub flagged: Vec<usize>,
    pub runs: usize,
    pub runs_with_error: usize,
    /// Error runs in which no infected cell was faulted.
    pub false_alarms: usize,
    /// `|flagged| / |infected|`; `None` when nothing is infected.
    pub coverage: Option<f64>,
}

impl CoverageReport {
    /// Clean array and no error raised.
    pub fn is_true_negative(&self) -> bool {
        self.infected.is_empty() && self.runs_with_error == 0
    }
}

/// Coverage over `n_patterns` uniformly drawn patterns (with replacement).
pub fn detection_coverage(
    array: &[MtjCell],
    setup: &BistSetup,
    rng_seed: u64,
    n_patterns: usize,
) -> Result<CoverageReport> {
    if n_patterns == 0 {
        return Err(Error::config("n_patterns must be at least 1"));
    }
    let patterns = random_patterns(setup.crc.data_width(), n_patterns, rng_seed);
    coverage_for_patterns(array, setup, &patterns)
}

pub fn coverage_for_patterns(
    array: &[MtjCell],
    setup: &BistSetup,
    patterns: &[Vec<bool>],
) -> Result<CoverageReport> {
    let infected = infected_cells(array, &setup.model);
    let infected_set: BTreeSet<usize> = infected.iter().copied().collect();
    let mut flagged = BTreeSet::new();
    let (mut runs_with_error, mut false_alarms) = (0, 0);
    for p in patterns {
        let r = run_bist(p, array, setup)?;
        if !r.error_flag {
            continue;
        }
        runs_with_error += 1;
        let hits: Vec<usize> = r
            .faulted_positions
            .iter()
            .copied()
            .filter(|i| infected_set.contains(i))
            .collect();
        if hits.is_empty() {
            false_alarms += 1;
        }
        flagged.extend(hits);
    }
    let coverage = (!infected.is_empty()).then(|| flagged.len() as f64 / infected.len() as f64);
    Ok(CoverageReport {
        infected,
        flagged: flagged.into_iter().collect(),
        runs: patterns.len(),
        runs_with_error,
        false_alarms,
        coverage,
    })
}

/// `n` uniformly drawn patterns of `width` bits (with replacement).
pub fn random_patterns(width: usize, n: usize, rng_seed: u64) -> Vec<Vec<bool>> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    (0..n)
        .map(|_| (0..width).map(|_| rng.random::<bool>()).collect())
        .collect()
}

/// All `2^d` patterns of width `d` (d <= 20), in counting order.
pub fn exhaustive_patterns(d: usize) -> Vec<Vec<bool>> {
    assert!(d <= 20, "exhaustive pattern set too large");
    (0..1u64 << d).map(|v| bits::from_u64(v, d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mtj::nominal_array;
    use proptest::prelude::*;

    fn setup() -> BistSetup {
        BistSetup::default()
    }

    #[test]
    fn default_timeline_landmarks() {
        let c = ClockConfig::default();
        assert_eq!(c.rising_edge(1), 0.0);
        assert_eq!(c.rising_edge(2), 6.0);
        assert_eq!(c.launch_time(), 7.5);
        assert_eq!(c.sample_time(), 12.0);
        assert_eq!(c.settle_window(), 4.5);
        assert!((c.half_period_for_window(4.5) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn clock_validation() {
        assert!(ClockConfig::default()
            .with_half_period(0.0)
            .validate()
            .is_err());
        let early = ClockConfig {
            sample_edge: 2,
            ..Default::default()
        };
        assert!(early.validate().is_err());
        let zero = ClockConfig {
            sample_edge: 0,
            ..Default::default()
        };
        assert!(zero.validate().is_err());
    }

    #[test]
    fn healthy_array_never_errors_at_default_clock() {
        let s = setup();
        let array = nominal_array(s.array_len());
        for p in exhaustive_patterns(8) {
            let r = run_bist(&p, &array, &s).unwrap();
            assert!(!r.error_flag);
            assert!(r.faulted_positions.is_empty());
            assert_eq!(r.sensed_bits, r.launched_bits);
        }
    }

    #[test]
    fn no_transitions_never_error_at_any_clock() {
        let s = setup();
        let pattern = bits::from_u64(0x5c, 8);
        let msg = s.crc.encode(&pattern).unwrap().to_bits();
        let array: Vec<MtjCell> = msg
            .iter()
            .map(|&b| MtjCell::with_thickness(1.3).unwrap().with_state(b))
            .collect();
        for h in [3.0, 1.0, 0.1, 0.001] {
            let point = BistSetup {
                clock: s.clock.with_half_period(h),
                ..s.clone()
            };
            assert!(!run_bist(&pattern, &array, &point).unwrap().error_flag);
        }
    }

    #[test]
    fn slow_cell_at_fast_clock_faults() {
        let s = setup();
        let m = s.model;
        let mut array = nominal_array(s.array_len());
        array[0].tm_actual = m.tm_max;
        // window of 2.0 ns < 2.26 ns
        let h = s.clock.half_period_for_window(2.0);
        let point = BistSetup {
            clock: s.clock.with_half_period(h),
            ..s.clone()
        };
        let pattern = bits::from_u64(0x80, 8);
        let r = run_bist(&pattern, &array, &point).unwrap();
        assert!(r.error_flag);
        assert_eq!(r.faulted_positions, vec![0]);
        assert!(!r.sensed_bits[0]);
        assert!(r.error_signal_at(r.sample_time - 0.01));
        assert!(r.error_signal_at(r.sample_time));
    }

    #[test]
    fn error_signal_resolves_low_for_clean_round() {
        let s = setup();
        let r = run_bist(&bits::from_u64(0x3c, 8), &nominal_array(16), &s).unwrap();
        assert!(r.error_signal_at(0.0));
        assert!(r.error_signal_at(11.99));
        assert!(!r.error_signal_at(12.0));
    }

    #[test]
    fn array_length_must_cover_the_message() {
        let s = setup();
        assert!(matches!(
            run_bist(&[false; 8], &nominal_array(8), &s),
            Err(Error::WidthMismatch { .. })
        ));
    }

    #[test]
    fn pending_cell_reports_its_index() {
        let s = setup();
        let mut array = nominal_array(16);
        array[3].apply_bit(true, 0.0, &s.model).unwrap();
        array[3].pending.as_mut().unwrap().completes_at = 100.0;
        let err = run_bist(&bits::from_u64(0x10, 8), &array, &s).unwrap_err();
        assert!(matches!(err, Error::PendingTransition { cell: Some(3) }));
    }

    #[test]
    fn attack_injection() {
        let m = MtjDelayModel::default();
        let mut array = nominal_array(16);
        inject_attack(&mut array, &AttackSpec::none()).unwrap();
        assert_eq!(array, nominal_array(16));

        inject_attack(&mut array, &AttackSpec::single(4, 1.0)).unwrap();
        assert_eq!(array, nominal_array(16));
        assert!(infected_cells(&array, &m).is_empty());

        inject_attack(&mut array, &AttackSpec::single(4, 1.3)).unwrap();
        assert_eq!(infected_cells(&array, &m), vec![4]);

        let before = array.clone();
        let bad = AttackSpec {
            targets: vec![(1, 1.2), (16, 1.2)],
            rng_seed: 0,
        };
        assert!(matches!(
            inject_attack(&mut array, &bad),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert_eq!(array, before);
        assert!(inject_attack(&mut array, &AttackSpec::single(1, 0.0)).is_err());
    }

    #[test]
    fn random_attack_is_seeded() {
        let a = AttackSpec::random(3, 16, 1.2..=1.3, 9).unwrap();
        let b = AttackSpec::random(3, 16, 1.2..=1.3, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.targets.len(), 3);
        assert!(a.targets.windows(2).all(|w| w[0].0 < w[1].0));
        assert!(AttackSpec::random(17, 16, 1.2..=1.3, 9).is_err());
    }

    #[test]
    fn sweep_on_healthy_array_is_clean_when_window_covers_max_delay() {
        let s = setup();
        let array = nominal_array(16);
        let h_safe = s.clock.half_period_for_window(2.26);
        let hs: Vec<f64> = (0..8).map(|i| h_safe + 0.25 * i as f64).collect();
        let report = frequency_sweep(&array, &exhaustive_patterns(8), &hs, &s).unwrap();
        assert!(!report.any_error());
        assert!(report.max_failing_half_period.iter().all(Option::is_none));
        assert_eq!(report.rows.len(), 8 * 256);
    }

    #[test]
    fn sweep_threshold_matches_delay_law() {
        let s = setup();
        let mut array = nominal_array(16);
        inject_attack(&mut array, &AttackSpec::single(2, 1.25)).unwrap();
        let delta = s.model.switching_delay(
            1.25,
            crate::mtj::MtjLogicState::Parallel,
            crate::mtj::MtjLogicState::AntiParallel,
        );
        let toggling = bits::from_u64(0b0010_0000, 8);
        let idle = bits::from_u64(0b0000_0001, 8);
        // Keep the window above the nominal 0->1 delay so only cell 2 is slow.
        let healthy = s.model.switching_delay(
            1.0,
            crate::mtj::MtjLogicState::Parallel,
            crate::mtj::MtjLogicState::AntiParallel,
        );
        let h_min = s.clock.half_period_for_window(healthy);
        let hs: Vec<f64> = (1..=30)
            .map(|i| 0.1 * i as f64)
            .filter(|&h| h > h_min)
            .collect();
        let report = frequency_sweep(&array, &[toggling, idle], &hs, &s).unwrap();
        for row in &report.rows {
            let window = s.clock.with_half_period(row.half_period_ns).settle_window();
            if row.pattern_index == 0 {
                assert_eq!(row.error_flag, window < delta, "h={}", row.half_period_ns);
            } else {
                assert!(!row.faulted.contains(&2));
            }
        }
        let hmax = report.max_failing_half_period[0].unwrap();
        assert!(s.clock.with_half_period(hmax).settle_window() < delta);
    }

    #[test]
    fn all_stale_cells_read_back_a_valid_codeword() {
        // With a window shorter than every switching delay the sensed word is
        // the array's reset content, all zeros, which the decoder accepts.
        let s = setup();
        let mut array = nominal_array(16);
        inject_attack(&mut array, &AttackSpec::single(2, 1.25)).unwrap();
        let fast = BistSetup {
            clock: s.clock.with_half_period(0.05),
            ..s
        };
        let r = run_bist(&bits::from_u64(0b0010_0000, 8), &array, &fast).unwrap();
        assert!(r.sensed_bits.iter().all(|&b| !b));
        assert!(r.faulted_positions.contains(&2));
        assert!(!r.error_flag);
    }

    #[test]
    fn empty_sweep_inputs_are_rejected() {
        let s = setup();
        assert!(frequency_sweep(&nominal_array(16), &[], &[3.0], &s).is_err());
        assert!(frequency_sweep(&nominal_array(16), &[vec![false; 8]], &[], &s).is_err());
    }

    #[test]
    fn coverage_on_clean_array_has_no_false_alarms() {
        let s = BistSetup {
            clock: ClockConfig::default().with_half_period(1.0),
            ..setup()
        };
        let r = detection_coverage(&nominal_array(16), &s, 4, 64).unwrap();
        assert!(r.is_true_negative());
        assert_eq!(r.coverage, None);
        assert_eq!(r.false_alarms, 0);
        assert!(detection_coverage(&nominal_array(16), &s, 4, 0).is_err());
    }

    proptest! {
        #[test]
        fn error_flag_implies_fault(p: u8, idx in 0usize..16, mult in 0.8f64..1.4, h in 0.2f64..4.0) {
            let s = setup();
            let mut array = nominal_array(16);
            inject_attack(&mut array, &AttackSpec::single(idx, mult)).unwrap();
            let point = BistSetup { clock: s.clock.with_half_period(h), ..s };
            let r = run_bist(&bits::from_u64(p as u64, 8), &array, &point).unwrap();
            if r.error_flag {
                prop_assert!(!r.faulted_positions.is_empty());
            }
            prop_assert_eq!(r.clone(), run_bist(&bits::from_u64(p as u64, 8), &array, &point).unwrap());
        }
    }
}
