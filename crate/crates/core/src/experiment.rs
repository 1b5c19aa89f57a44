// SPDX-License-Identifier: Apache-2.0

//! Dataset experiments: build a reference, freeze a threshold on a held-out
//! normal dataset, then classify and score one dataset per condition.
//!
//! Output directory layout:
//!
//! ```text
//! config.txt              effective configuration
//! reference.csv           reference trace
//! threshold.csv           threshold,mode,n_reference
//! evaluation.csv          dataset,index,pattern_hex,parameter,value,decision
//! confusion.csv           dataset,sensitivity,tp,fp,tn,fn
//! confusion_<name>.csv    sensitivity,tp,fp,tn,fn
//! datasets/<name>/        manifest + one CSV per trace
//! ```

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits;
use crate::config::ExperimentConfig;
use crate::csvio;
use crate::detector::{
    self, ConfusionCounts, Decision, DetectorConfig, DetectorMode, EvaluationSignal,
    ReferenceSignal,
};
use crate::error::Result;
use crate::trace::{self, Circuit, ConditionKind, CrcDecoderCircuit, Dataset, KatanCircuit};

pub const EXP1_CONDITIONS: [ConditionKind; 4] = ConditionKind::ALL;
pub const EXP2_CONDITIONS: [ConditionKind; 2] = [ConditionKind::Normal, ConditionKind::Trojan];

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetResult {
    pub dataset: Dataset,
    pub evaluation: EvaluationSignal,
    /// `(sensitivity, decisions, counts)` per configured level.
    pub levels: Vec<(f64, Vec<Decision>, ConfusionCounts)>,
}

impl DatasetResult {
    pub fn kind(&self) -> ConditionKind {
        self.dataset.kind
    }

    pub fn counts_at(&self, sensitivity: f64) -> Option<ConfusionCounts> {
        self.levels
            .iter()
            .find(|(s, _, _)| (s - sensitivity).abs() < 1e-12)
            .map(|(_, _, c)| *c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub circuit: String,
    pub threshold: f64,
    pub mode: DetectorMode,
    pub default_sensitivity: f64,
    pub reference: ReferenceSignal,
    pub reference_evaluation: EvaluationSignal,
    pub results: Vec<DatasetResult>,
}

impl ExperimentSummary {
    pub fn result(&self, kind: ConditionKind) -> Option<&DatasetResult> {
        self.results.iter().find(|r| r.kind() == kind)
    }
}

/// Seeds for the reference trace, the held-out set and each condition, drawn
/// from one generator so every stream depends only on the global seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DerivedSeeds {
    pub reference: u64,
    pub held_out: u64,
    pub conditions: [u64; 4],
}

impl DerivedSeeds {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DerivedSeeds {
            reference: rng.random(),
            held_out: rng.random(),
            conditions: rng.random(),
        }
    }

    pub fn for_condition(&self, kind: ConditionKind) -> u64 {
        let i = ConditionKind::ALL
            .iter()
            .position(|&k| k == kind)
            .expect("kind listed in ALL");
        self.conditions[i]
    }
}

/// CRC decoder: normal, process, temperature and Trojan datasets.
pub fn run_exp1(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let circuit = CrcDecoderCircuit::new(cfg.crc.clone());
    run_pipeline(&circuit, &EXP1_CONDITIONS, cfg, out)
}

/// KATAN-32: normal and Trojan datasets.
pub fn run_exp2(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let circuit = KatanCircuit::new(cfg.katan_trojan()?)?;
    run_pipeline(&circuit, &EXP2_CONDITIONS, cfg, out)
}

fn reference_pattern(circuit: &dyn Circuit, cfg: &ExperimentConfig) -> Result<Vec<bool>> {
    match &cfg.reference_pattern {
        Some(hex) => bits::from_hex(hex, circuit.input_width()),
        None => Ok(circuit.reference_pattern()),
    }
}

pub fn run_pipeline(
    circuit: &dyn Circuit,
    kinds: &[ConditionKind],
    cfg: &ExperimentConfig,
    out: Option<&Path>,
) -> Result<ExperimentSummary> {
    let seeds = DerivedSeeds::new(cfg.seed);
    let mode = cfg.detector_mode();
    let pattern = reference_pattern(circuit, cfg)?;
    let reference =
        ReferenceSignal::simulate(circuit, Some(&pattern), &cfg.trace, seeds.reference)?;

    let held_out = trace::build_dataset(
        circuit,
        ConditionKind::Normal,
        cfg.n_patterns,
        &cfg.trace,
        seeds.held_out,
    )?;
    let reference_evaluation = detector::evaluate_dataset(&reference, &held_out, mode)?;
    let threshold = detector::threshold_from_reference(&reference_evaluation)?;

    let mut results = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let dataset = trace::build_dataset(
            circuit,
            kind,
            cfg.n_patterns,
            &cfg.trace,
            seeds.for_condition(kind),
        )?;
        let evaluation = detector::evaluate_dataset(&reference, &dataset, mode)?;
        let levels = cfg
            .sensitivities
            .iter()
            .map(|&s| {
                let dc = DetectorConfig::new(threshold, s)?;
                let decisions = detector::classify(&evaluation, &dc);
                let counts = detector::score(&decisions, kind);
                Ok((s, decisions, counts))
            })
            .collect::<Result<_>>()?;
        results.push(DatasetResult {
            dataset,
            evaluation,
            levels,
        });
    }

    let summary = ExperimentSummary {
        circuit: circuit.name().to_owned(),
        threshold,
        mode,
        default_sensitivity: cfg.default_sensitivity,
        reference,
        reference_evaluation,
        results,
    };
    if let Some(dir) = out {
        write_outputs(&summary, &held_out, cfg, dir)?;
    }
    Ok(summary)
}

fn write_outputs(
    s: &ExperimentSummary,
    held_out: &Dataset,
    cfg: &ExperimentConfig,
    dir: &Path,
) -> Result<()> {
    csvio::create_dir(dir)?;
    csvio::write_text(&dir.join("config.txt"), &cfg.to_config_string())?;
    s.reference.trace().save_csv(&dir.join("reference.csv"))?;
    let mode = match s.mode {
        DetectorMode::Raw => "raw",
        DetectorMode::Normalized => "normalized",
    };
    csvio::write_rows(
        &dir.join("threshold.csv"),
        &["threshold", "mode", "n_reference"],
        [[
            s.threshold.to_string(),
            mode.to_owned(),
            s.reference_evaluation.len().to_string(),
        ]],
    )?;

    let datasets = dir.join("datasets");
    held_out.save(&datasets.join("reference_normal"))?;
    let default_dc = DetectorConfig::new(s.threshold, s.default_sensitivity)?;
    let mut eval_rows = Vec::new();
    let mut all_rows = Vec::new();
    for r in &s.results {
        let name = r.kind().name();
        r.dataset.save(&datasets.join(name))?;
        for (i, v) in r.evaluation.values.iter().enumerate() {
            let param = r.dataset.conditions[i]
                .parameter()
                .map(|p| p.to_string())
                .unwrap_or_default();
            eval_rows.push([
                name.to_owned(),
                i.to_string(),
                bits::to_hex(&r.dataset.patterns[i]),
                param,
                v.to_string(),
                default_dc.decide(*v).to_string(),
            ]);
        }
        let rows: Vec<[String; 5]> = r
            .levels
            .iter()
            .map(|(sens, _, c)| confusion_row(*sens, c))
            .collect();
        for row in &rows {
            let mut full = vec![name.to_owned()];
            full.extend(row.iter().cloned());
            all_rows.push(full);
        }
        csvio::write_rows(
            &dir.join(format!("confusion_{name}.csv")),
            &CONFUSION_HEADER,
            rows,
        )?;
    }
    csvio::write_rows(
        &dir.join("evaluation.csv"),
        &[
            "dataset",
            "index",
            "pattern_hex",
            "parameter",
            "value",
            "decision",
        ],
        eval_rows,
    )?;
    csvio::write_rows(
        &dir.join("confusion.csv"),
        &["dataset", "sensitivity", "tp", "fp", "tn", "fn"],
        all_rows,
    )
}

pub const CONFUSION_HEADER: [&str; 5] = ["sensitivity", "tp", "fp", "tn", "fn"];

pub fn confusion_row(sensitivity: f64, c: &ConfusionCounts) -> [String; 5] {
    [
        sensitivity.to_string(),
        c.tp.to_string(),
        c.fp.to_string(),
        c.tn.to_string(),
        c.fn_.to_string(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            n_patterns: 4,
            ..Default::default()
        }
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        let a = DerivedSeeds::new(1);
        assert_eq!(a, DerivedSeeds::new(1));
        assert_ne!(a, DerivedSeeds::new(2));
        let mut all = vec![a.reference, a.held_out];
        all.extend(a.conditions);
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 6);
    }

    #[test]
    fn exp1_shapes() {
        let s = run_exp1(&small(), None).unwrap();
        assert_eq!(s.results.len(), 4);
        for r in &s.results {
            assert_eq!(r.evaluation.len(), 4);
            assert_eq!(r.levels.len(), 3);
            for (_, d, c) in &r.levels {
                assert_eq!(d.len(), 4);
                assert_eq!(c.total(), 4);
            }
        }
        assert!(s.threshold > 0.0);
    }

    #[test]
    fn exp2_writes_two_sections() {
        let dir = tempfile::tempdir().unwrap();
        let s = run_exp2(&small(), Some(dir.path())).unwrap();
        assert_eq!(s.results.len(), 2);
        let (header, rows) = csvio::read_table(&dir.path().join("confusion.csv")).unwrap();
        assert_eq!(header, ["dataset", "sensitivity", "tp", "fp", "tn", "fn"]);
        assert_eq!(rows.len(), 2 * 3);
        for name in ["normal", "trojan"] {
            assert!(dir.path().join(format!("confusion_{name}.csv")).is_file());
            assert!(dir
                .path()
                .join("datasets")
                .join(name)
                .join("manifest")
                .is_file());
        }
    }
}
