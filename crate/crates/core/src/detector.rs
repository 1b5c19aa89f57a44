// SPDX-License-Identifier: Apache-2.0

//! Relational detector: maximum absolute cross-correlation against a
//! reference trace, a mean-based threshold and a relative acceptance band.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::trace::{Circuit, Condition, ConditionKind, CurrentTrace, Dataset, TraceParams};

pub const DEFAULT_SENSITIVITIES: [f64; 3] = [0.05, 0.10, 0.20];
pub const DEFAULT_SENSITIVITY: f64 = 0.10;

/// Full linear cross-correlation over lags `-(N - 1)..=(N - 1)`:
/// `out[k] = sum_n a[n + k - (N - 1)] * b[n]`, zero outside the bounds.
/// Same ordering as `numpy.correlate(a, b, "full")`.
pub fn cross_correlation(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    check_lengths(a, b)?;
    let n = a.len();
    let out = (0..2 * n - 1)
        .map(|k| {
            // i + k - (N - 1) in [0, N)
            let lo = (n - 1).saturating_sub(k);
            let hi = (2 * n - 1 - k).min(n);
            (lo..hi).map(|i| a[i + k + 1 - n] * b[i]).sum()
        })
        .collect();
    Ok(out)
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() {
        return Err(Error::Empty("trace"));
    }
    if a.len() != b.len() {
        return Err(Error::WidthMismatch {
            what: "trace length",
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(())
}

/// `max_k |xcorr(a, b)[k]|`.
pub fn relational_detector(a: &[f64], b: &[f64]) -> Result<f64> {
    Ok(cross_correlation(a, b)?
        .into_iter()
        .fold(0.0, |m, v: f64| m.max(v.abs())))
}

/// Relational detector divided by `sqrt(E_a * E_b)`; zero if either trace
/// has no energy.
pub fn normalized_detector(a: &[f64], b: &[f64]) -> Result<f64> {
    let raw = relational_detector(a, b)?;
    let energy = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
    let denom = (energy(a) * energy(b)).sqrt();
    Ok(if denom > 0.0 { raw / denom } else { 0.0 })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum DetectorMode {
    #[default]
    Raw,
    Normalized,
}

impl DetectorMode {
    pub fn from_flag(normalized: bool) -> Self {
        if normalized {
            DetectorMode::Normalized
        } else {
            DetectorMode::Raw
        }
    }

    pub fn apply(self, a: &[f64], b: &[f64]) -> Result<f64> {
        match self {
            DetectorMode::Raw => relational_detector(a, b),
            DetectorMode::Normalized => normalized_detector(a, b),
        }
    }
}

/// Trace of the designated reference pattern under the normal condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSignal {
    trace: CurrentTrace,
}

impl ReferenceSignal {
    pub fn from_trace(trace: CurrentTrace) -> Result<Self> {
        trace.validate()?;
        Ok(ReferenceSignal { trace })
    }

    pub fn simulate(
        circuit: &dyn Circuit,
        pattern: Option<&[bool]>,
        params: &TraceParams,
        seed: u64,
    ) -> Result<Self> {
        let default = circuit.reference_pattern();
        let pattern = pattern.unwrap_or(&default);
        let trace =
            crate::trace::simulate_trace(circuit, pattern, &Condition::Normal, params, seed)?;
        Ok(ReferenceSignal { trace })
    }

    pub fn trace(&self) -> &CurrentTrace {
        &self.trace
    }

    pub fn samples(&self) -> &[f64] {
        &self.trace.samples
    }
}

/// One detector value per test trace, in dataset order.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSignal {
    pub values: Vec<f64>,
}

impl EvaluationSignal {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn evaluation_signal(
    reference: &ReferenceSignal,
    traces: &[CurrentTrace],
    mode: DetectorMode,
) -> Result<EvaluationSignal> {
    let values = traces
        .iter()
        .map(|t| mode.apply(reference.samples(), &t.samples))
        .collect::<Result<_>>()?;
    Ok(EvaluationSignal { values })
}

pub fn evaluate_dataset(
    reference: &ReferenceSignal,
    dataset: &Dataset,
    mode: DetectorMode,
) -> Result<EvaluationSignal> {
    evaluation_signal(reference, &dataset.traces, mode)
}

/// Mean of a reference evaluation signal.
pub fn threshold_from_reference(reference_eval: &EvaluationSignal) -> Result<f64> {
    if reference_eval.is_empty() {
        return Err(Error::Empty("reference evaluation signal"));
    }
    Ok(reference_eval.values.iter().sum::<f64>() / reference_eval.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    threshold: f64,
    sensitivity: f64,
}

impl DetectorConfig {
    pub fn new(threshold: f64, sensitivity: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold.is_finite()) {
            return Err(Error::config(format!(
                "threshold must be positive, got {threshold}"
            )));
        }
        if sensitivity.is_nan() || sensitivity <= 0.0 {
            return Err(Error::config(format!(
                "sensitivity must be positive, got {sensitivity}"
            )));
        }
        Ok(DetectorConfig {
            threshold,
            sensitivity,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity
    }

    pub fn decide(&self, value: f64) -> Decision {
        if (value - self.threshold).abs() <= self.sensitivity * self.threshold {
            Decision::Accept
        } else {
            Decision::Reject
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Accept,
    Reject,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Accept => "accept",
            Decision::Reject => "reject",
        })
    }
}

impl FromStr for Decision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "accept" => Ok(Decision::Accept),
            "reject" => Ok(Decision::Reject),
            _ => Err(Error::parse("decision", s)),
        }
    }
}

pub fn classify(eval: &EvaluationSignal, config: &DetectorConfig) -> Vec<Decision> {
    eval.values.iter().map(|&v| config.decide(v)).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Fraction of traces accepted.
    pub fn acceptance_rate(&self) -> Option<f64> {
        let n = self.total();
        (n > 0).then(|| (self.tn + self.fn_) as f64 / n as f64)
    }
}

/// Positive means rejected; ground truth comes from the condition.
pub fn score(decisions: &[Decision], kind: ConditionKind) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for d in decisions {
        match (d, kind.is_original()) {
            (Decision::Reject, false) => c.tp += 1,
            (Decision::Reject, true) => c.fp += 1,
            (Decision::Accept, true) => c.tn += 1,
            (Decision::Accept, false) => c.fn_ += 1,
        }
    }
    c
}
