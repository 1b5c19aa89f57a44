// SPDX-License-Identifier: Apache-2.0

//! Behavioral model of a perpendicular-anisotropy MTJ cell.
//!
//! A cell stores one logic level and switches to a new level after a delay
//! that depends on its free-layer thickness. Thickness is expressed in
//! nominal units (nominal = 1.0); only ratios are meaningful.
//!
//! The delay law is affine in thickness over the modeled range, so the
//! completion window for a write launched at `t_write` is
//! `[t_write + delay_min, t_write + delay_max]` for each transition
//! direction. With the default calibration and a write at 7.5 ns, zero-to-one
//! completes in 7.5..=9.76 ns and one-to-zero in 7.5..=8.85 ns.
//!
//! Sensing before a pending transition completes returns the old level: a
//! transition-delay fault, not a metastable read.

use std::path::Path;

use crate::error::{Error, Result};

pub const DEFAULT_TM_NOMINAL: f64 = 1.0;

const BAND_EPS: f64 = 1e-12;

/// Stored logic level. 0 is the parallel (low-resistance) configuration, 1
/// the anti-parallel (high-resistance) one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum MtjLogicState {
    #[default]
    Parallel,
    AntiParallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resistance {
    Low,
    High,
}

impl MtjLogicState {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            MtjLogicState::AntiParallel
        } else {
            MtjLogicState::Parallel
        }
    }

    pub fn bit(self) -> bool {
        matches!(self, MtjLogicState::AntiParallel)
    }

    pub fn resistance(self) -> Resistance {
        match self {
            MtjLogicState::Parallel => Resistance::Low,
            MtjLogicState::AntiParallel => Resistance::High,
        }
    }
}

/// Thickness-to-delay calibration plus the acceptable variation band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MtjDelayModel {
    pub tm_min: f64,
    pub tm_max: f64,
    /// Zero-to-one delay window (ns after write start) at `tm_min` / `tm_max`.
    pub delay01_min: f64,
    pub delay01_max: f64,
    /// One-to-zero delay window.
    pub delay10_min: f64,
    pub delay10_max: f64,
    /// Accepted relative deviation `|tm_actual - tm_nominal| / tm_nominal`.
    pub tm_tolerance: f64,
}

impl Default for MtjDelayModel {
    fn default() -> Self {
        MtjDelayModel {
            tm_min: 0.8,
            tm_max: 1.3,
            delay01_min: 0.0,
            delay01_max: 2.26,
            delay10_min: 0.0,
            delay10_max: 1.35,
            tm_tolerance: 0.10,
        }
    }
}

impl MtjDelayModel {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.tm_min,
            self.tm_max,
            self.delay01_min,
            self.delay01_max,
            self.delay10_min,
            self.delay10_max,
            self.tm_tolerance,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("MTJ delay model values must be finite"));
        }
        if !(self.tm_min > 0.0 && self.tm_min < self.tm_max) {
            return Err(Error::config(format!(
                "MTJ thickness range must satisfy 0 < tm_min < tm_max, got [{}, {}]",
                self.tm_min, self.tm_max
            )));
        }
        if self.delay01_min < 0.0
            || self.delay10_min < 0.0
            || self.delay01_min > self.delay01_max
            || self.delay10_min > self.delay10_max
        {
            return Err(Error::config(
                "MTJ delay windows must be non-negative and ordered",
            ));
        }
        if self.tm_tolerance < 0.0 {
            return Err(Error::config("mtj.tolerance must be non-negative"));
        }
        Ok(())
    }

    /// Switching delay in ns for `from -> to` at thickness `tm`. Thickness is
    /// clamped to the modeled range; an identity transition takes no time.
    pub fn switching_delay(&self, tm: f64, from: MtjLogicState, to: MtjLogicState) -> f64 {
        let (lo, hi) = match (from, to) {
            (MtjLogicState::Parallel, MtjLogicState::AntiParallel) => {
                (self.delay01_min, self.delay01_max)
            }
            (MtjLogicState::AntiParallel, MtjLogicState::Parallel) => {
                (self.delay10_min, self.delay10_max)
            }
            _ => return 0.0,
        };
        let tm = tm.clamp(self.tm_min, self.tm_max);
        let frac = (tm - self.tm_min) / (self.tm_max - self.tm_min);
        lo + frac * (hi - lo)
    }

    /// Smallest thickness whose `from -> to` delay reaches `delay`, if any
    /// thickness in range does. Inverse of the affine law.
    pub fn thickness_for_delay(
        &self,
        delay: f64,
        from: MtjLogicState,
        to: MtjLogicState,
    ) -> Option<f64> {
        let (lo, hi) = match (from, to) {
            (MtjLogicState::Parallel, MtjLogicState::AntiParallel) => {
                (self.delay01_min, self.delay01_max)
            }
            (MtjLogicState::AntiParallel, MtjLogicState::Parallel) => {
                (self.delay10_min, self.delay10_max)
            }
            _ => return None,
        };
        if delay < lo || delay > hi {
            return None;
        }
        if hi == lo {
            return Some(self.tm_min);
        }
        Some(self.tm_min + (delay - lo) / (hi - lo) * (self.tm_max - self.tm_min))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendingTransition {
    pub target: MtjLogicState,
    pub started_at: f64,
    pub completes_at: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MtjCell {
    pub tm_nominal: f64,
    pub tm_actual: f64,
    pub state: MtjLogicState,
    pub pending: Option<PendingTransition>,
}

impl Default for MtjCell {
    fn default() -> Self {
        MtjCell::nominal()
    }
}

impl MtjCell {
    /// A healthy cell at nominal thickness holding logic 0.
    pub fn nominal() -> Self {
        MtjCell {
            tm_nominal: DEFAULT_TM_NOMINAL,
            tm_actual: DEFAULT_TM_NOMINAL,
            state: MtjLogicState::Parallel,
            pending: None,
        }
    }

    pub fn with_thickness(tm_actual: f64) -> Result<Self> {
        let cell = MtjCell {
            tm_actual,
            ..MtjCell::nominal()
        };
        cell.validate()?;
        Ok(cell)
    }

    pub fn with_state(mut self, bit: bool) -> Self {
        self.state = MtjLogicState::from_bit(bit);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tm_nominal > 0.0 && self.tm_nominal.is_finite()) {
            return Err(Error::config(format!(
                "tm_nominal must be positive, got {}",
                self.tm_nominal
            )));
        }
        if !(self.tm_actual > 0.0 && self.tm_actual.is_finite()) {
            return Err(Error::config(format!(
                "tm_actual must be positive, got {}",
                self.tm_actual
            )));
        }
        Ok(())
    }

    /// Starts a write of `bit` at `t_write`. Writing the stored level is a
    /// no-op. Fails if a previous transition is still pending.
    pub fn apply_bit(&mut self, bit: bool, t_write: f64, model: &MtjDelayModel) -> Result<()> {
        if self.pending.is_some() {
            return Err(Error::PendingTransition { cell: None });
        }
        let target = MtjLogicState::from_bit(bit);
        if target == self.state {
            return Ok(());
        }
        let delay = model.switching_delay(self.tm_actual, self.state, target);
        self.pending = Some(PendingTransition {
            target,
            started_at: t_write,
            completes_at: t_write + delay,
        });
        Ok(())
    }

    /// Reads the cell at `t_sample`, committing a transition that has
    /// completed by then. An incomplete transition reads as the old level and
    /// stays pending.
    pub fn sense(&mut self, t_sample: f64) -> bool {
        if let Some(p) = self.pending {
            if p.completes_at <= t_sample {
                self.state = p.target;
                self.pending = None;
            }
        }
        self.state.bit()
    }

    pub fn relative_deviation(&self) -> f64 {
        (self.tm_actual - self.tm_nominal).abs() / self.tm_nominal
    }

    /// Outside the acceptable variation band. The band edge itself is
    /// accepted, up to float rounding of the ratio.
    pub fn is_malicious(&self, model: &MtjDelayModel) -> bool {
        self.relative_deviation() > model.tm_tolerance + BAND_EPS
    }
}

/// A nominal array of `len` cells, all holding logic 0.
pub fn nominal_array(len: usize) -> Vec<MtjCell> {
    vec![MtjCell::nominal(); len]
}

/// Parses an array table with rows `index, tm_actual`. A header row is
/// optional; blank lines and `#` comments are ignored. Every index in
/// `0..rows` must appear exactly once.
pub fn parse_array_table(text: &str) -> Result<Vec<MtjCell>> {
    let mut rows: Vec<(usize, f64)> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let (Some(idx), Some(tm), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(Error::parse("array row (index, tm_actual)", line));
        };
        if rows.is_empty() && idx.eq_ignore_ascii_case("index") {
            continue;
        }
        let idx: usize = idx.parse().map_err(|_| Error::parse("cell index", idx))?;
        let tm: f64 = tm.parse().map_err(|_| Error::parse("tm_actual", tm))?;
        rows.push((idx, tm));
    }
    let mut cells: Vec<Option<MtjCell>> = vec![None; rows.len()];
    for (idx, tm) in rows {
        let len = cells.len();
        let slot = cells
            .get_mut(idx)
            .ok_or(Error::IndexOutOfRange { index: idx, len })?;
        if slot.is_some() {
            return Err(Error::config(format!("duplicate cell index {idx}")));
        }
        *slot = Some(MtjCell::with_thickness(tm)?);
    }
    Ok(cells
        .into_iter()
        .map(|c| c.expect("all indices filled"))
        .collect())
}

pub fn format_array_table(cells: &[MtjCell]) -> String {
    let mut out = String::from("index,tm_actual\n");
    for (i, c) in cells.iter().enumerate() {
        out.push_str(&format!("{i},{}\n", c.tm_actual));
    }
    out
}

pub fn load_array(path: &Path) -> Result<Vec<MtjCell>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_array_table(&text)
}

pub fn save_array(path: &Path, cells: &[MtjCell]) -> Result<()> {
    std::fs::write(path, format_array_table(cells)).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}
