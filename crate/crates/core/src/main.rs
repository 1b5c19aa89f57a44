// SPDX-License-Identifier: Apache-2.0

//! Command-line front end. Exit codes: 0 clean, 2 timing fault detected by
//! `bist`, 1 for any error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mtj_bist::bist::{self, AttackSpec};
use mtj_bist::config::ExperimentConfig;
use mtj_bist::detector::{self, Decision, DetectorConfig, EvaluationSignal, ReferenceSignal};
use mtj_bist::experiment::{self, ExperimentSummary};
use mtj_bist::katan::{self, Key80};
use mtj_bist::mtj::{self, MtjCell};
use mtj_bist::trace::{
    self, Circuit, Condition, ConditionKind, CrcDecoderCircuit, CurrentTrace, Dataset, KatanCircuit,
};
use mtj_bist::{bits, csvio, trojan, Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "mtj-bist",
    version,
    about = "MTJ timing-attack BIST and Trojan trace detection"
)]
struct Cli {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides `out` from the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Encode/write/sense/decode rounds against an MTJ array.
    #[command(subcommand)]
    Bist(BistCommand),
    /// Perturb cell thicknesses of an array.
    #[command(subcommand)]
    Attack(AttackCommand),
    /// Generate current traces.
    #[command(subcommand)]
    Trace(TraceCommand),
    /// Evaluate and score traces with the relational detector.
    #[command(subcommand)]
    Detect(DetectCommand),
    /// KATAN-32 encryption and decryption.
    #[command(subcommand)]
    Katan(KatanCommand),
    /// CRC decoder experiment: normal, process, temperature and Trojan datasets.
    Exp1,
    /// KATAN experiment: normal and Trojan datasets.
    Exp2,
    /// Re-parse output files or directories and print a summary.
    Report {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct PatternArgs {
    /// Test pattern in hex.
    #[arg(long, conflicts_with_all = ["random", "exhaustive"])]
    pattern: Option<String>,
    /// Number of seeded random patterns.
    #[arg(long, conflicts_with = "exhaustive")]
    random: Option<usize>,
    /// Every pattern of the configured data width.
    #[arg(long)]
    exhaustive: bool,
    /// Array table (`index,tm_actual`); nominal array if omitted.
    #[arg(long)]
    array: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum BistCommand {
    /// Runs at the configured clock.
    Run {
        #[command(flatten)]
        input: PatternArgs,
        /// Overrides the configured half period (ns).
        #[arg(long)]
        half_period: Option<f64>,
    },
    /// Runs over a grid of half periods.
    Sweep {
        #[command(flatten)]
        input: PatternArgs,
        /// Comma-separated half periods (ns).
        #[arg(long, value_delimiter = ',', conflicts_with_all = ["from", "to", "steps"])]
        half_periods: Option<Vec<f64>>,
        #[arg(long, requires_all = ["to", "steps"])]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
}

#[derive(Subcommand, Debug)]
enum AttackCommand {
    /// Scales the thickness of chosen cells and writes `array.csv`.
    Inject {
        /// Input array; nominal array sized to the configured message if omitted.
        #[arg(long)]
        array: Option<PathBuf>,
        /// `index:multiplier`, repeatable.
        #[arg(long = "cell", value_parser = parse_target)]
        cells: Vec<(usize, f64)>,
        /// Number of random cells to perturb instead.
        #[arg(long, conflicts_with = "cells")]
        random: Option<usize>,
        #[arg(long, default_value_t = 1.15)]
        min: f64,
        #[arg(long, default_value_t = 1.3)]
        max: f64,
    },
}

#[derive(Subcommand, Debug)]
enum TraceCommand {
    /// One trace (`--pattern`) or a dataset directory.
    Gen {
        #[arg(long, default_value = "crc")]
        circuit: String,
        #[arg(long, default_value = "normal")]
        condition: ConditionKind,
        /// PV length fraction or temperature in C.
        #[arg(long)]
        param: Option<f64>,
        #[arg(long)]
        pattern: Option<String>,
        /// Dataset size; configured `trace.n_patterns` if omitted.
        #[arg(long)]
        n: Option<usize>,
        /// Also write the reference trace of the circuit.
        #[arg(long)]
        reference: bool,
    },
}

#[derive(Subcommand, Debug)]
enum DetectCommand {
    /// Detector value and decision per trace of a dataset.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        /// Reference trace CSV.
        #[arg(long)]
        reference: PathBuf,
        /// Threshold; computed from `--reference-dataset` if omitted.
        #[arg(long, required_unless_present = "reference_dataset")]
        threshold: Option<f64>,
        #[arg(long)]
        reference_dataset: Option<PathBuf>,
        /// Configured default sensitivity if omitted.
        #[arg(long)]
        sensitivity: Option<f64>,
    },
    /// Confusion counts at each configured sensitivity.
    Score {
        /// `evaluation.csv` written by `detect eval`.
        #[arg(long)]
        evaluation: PathBuf,
        #[arg(long)]
        threshold: f64,
        /// Ground-truth condition of the evaluated dataset.
        #[arg(long)]
        condition: ConditionKind,
    },
}

#[derive(Subcommand, Debug)]
enum KatanCommand {
    Enc {
        /// 80-bit key, 20 hex digits.
        #[arg(long)]
        key: String,
        /// 32-bit plaintext, 8 hex digits.
        #[arg(long)]
        pt: String,
        /// Encrypt with the configured Trojan variant.
        #[arg(long)]
        trojan: bool,
    },
    Dec {
        #[arg(long)]
        key: String,
        #[arg(long)]
        ct: String,
    },
}

fn parse_target(s: &str) -> std::result::Result<(usize, f64), String> {
    let (i, m) = s
        .split_once(':')
        .ok_or_else(|| format!("expected index:multiplier, got {s:?}"))?;
    let i = i
        .trim()
        .parse()
        .map_err(|_| format!("bad cell index {i:?}"))?;
    let m = m
        .trim()
        .parse()
        .map_err(|_| format!("bad multiplier {m:?}"))?;
    Ok((i, m))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<u8> {
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Bist(cmd) => cmd_bist(&cfg, cmd),
        Command::Attack(AttackCommand::Inject {
            array,
            cells,
            random,
            min,
            max,
        }) => cmd_attack(&cfg, array.as_deref(), cells, random, min..=max),
        Command::Trace(TraceCommand::Gen {
            circuit,
            condition,
            param,
            pattern,
            n,
            reference,
        }) => cmd_trace(
            &cfg,
            &circuit,
            condition,
            param,
            pattern.as_deref(),
            n,
            reference,
        ),
        Command::Detect(cmd) => cmd_detect(&cfg, cmd),
        Command::Katan(cmd) => cmd_katan(&cfg, cmd),
        Command::Exp1 => {
            let s = experiment::run_exp1(&cfg, Some(&cfg.out))?;
            print_summary(&s);
            Ok(0)
        }
        Command::Exp2 => {
            let s = experiment::run_exp2(&cfg, Some(&cfg.out))?;
            print_summary(&s);
            Ok(0)
        }
        Command::Report { paths } => {
            for p in &paths {
                report(p)?;
            }
            Ok(0)
        }
    }
}

fn load_or_nominal(path: Option<&Path>, len: usize) -> Result<Vec<MtjCell>> {
    match path {
        Some(p) => mtj::load_array(p),
        None => Ok(mtj::nominal_array(len)),
    }
}

fn patterns(cfg: &ExperimentConfig, input: &PatternArgs) -> Result<Vec<Vec<bool>>> {
    let d = cfg.crc.data_width();
    if let Some(hex) = &input.pattern {
        Ok(vec![bits::from_hex(hex, d)?])
    } else if let Some(n) = input.random {
        if n == 0 {
            return Err(Error::Empty("--random pattern set"));
        }
        Ok(bist::random_patterns(d, n, cfg.seed))
    } else if input.exhaustive {
        if d > 20 {
            return Err(Error::Config(format!(
                "--exhaustive needs data width <= 20, got {d}"
            )));
        }
        Ok(bist::exhaustive_patterns(d))
    } else {
        Err(Error::Config(
            "give --pattern, --random N or --exhaustive".into(),
        ))
    }
}

fn join_indices(ix: &[usize]) -> String {
    ix.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

fn cmd_bist(cfg: &ExperimentConfig, cmd: BistCommand) -> Result<u8> {
    let mut setup = cfg.bist_setup();
    let (input, half_periods) = match cmd {
        BistCommand::Run { input, half_period } => {
            if let Some(h) = half_period {
                setup.clock = setup.clock.with_half_period(h);
            }
            (input, vec![setup.clock.half_period_ns])
        }
        BistCommand::Sweep {
            input,
            half_periods,
            from,
            to,
            steps,
        } => {
            let hs = match (half_periods, from, to, steps) {
                (Some(hs), ..) => hs,
                (None, Some(a), Some(b), Some(n)) if n >= 1 => (0..n)
                    .map(|i| {
                        if n == 1 {
                            a
                        } else {
                            a + (b - a) * i as f64 / (n - 1) as f64
                        }
                    })
                    .collect(),
                _ => {
                    return Err(Error::Config(
                        "give --half-periods or --from/--to/--steps".into(),
                    ))
                }
            };
            (input, hs)
        }
    };
    setup.validate()?;
    let array = load_or_nominal(input.array.as_deref(), setup.array_len())?;
    let pats = patterns(cfg, &input)?;
    let report = bist::frequency_sweep(&array, &pats, &half_periods, &setup)?;

    csvio::create_dir(&cfg.out)?;
    let path = cfg.out.join("bist_results.csv");
    csvio::write_rows(
        &path,
        &[
            "half_period_ns",
            "pattern_hex",
            "error_flag",
            "faulted_indices",
        ],
        report.rows.iter().map(|r| {
            [
                r.half_period_ns.to_string(),
                bits::to_hex(&r.pattern),
                u8::from(r.error_flag).to_string(),
                join_indices(&r.faulted),
            ]
        }),
    )?;
    let errors = report.rows.iter().filter(|r| r.error_flag).count();
    let infected = bist::infected_cells(&array, &setup.model);
    println!(
        "{} runs, {} with error flag; infected cells: [{}]; wrote {}",
        report.rows.len(),
        errors,
        join_indices(&infected),
        path.display()
    );
    Ok(if report.any_error() { 2 } else { 0 })
}

fn cmd_attack(
    cfg: &ExperimentConfig,
    array: Option<&Path>,
    cells: Vec<(usize, f64)>,
    random: Option<usize>,
    range: std::ops::RangeInclusive<f64>,
) -> Result<u8> {
    let mut cells_out = load_or_nominal(array, cfg.crc.message_width())?;
    let spec = match random {
        Some(n) => AttackSpec::random(n, cells_out.len(), range, cfg.seed)?,
        None if !cells.is_empty() => AttackSpec {
            targets: cells,
            rng_seed: cfg.seed,
        },
        None => {
            return Err(Error::Config(
                "give --cell index:multiplier or --random N".into(),
            ))
        }
    };
    bist::inject_attack(&mut cells_out, &spec)?;
    csvio::create_dir(&cfg.out)?;
    let path = cfg.out.join("array.csv");
    mtj::save_array(&path, &cells_out)?;
    let infected = bist::infected_cells(&cells_out, &cfg.mtj);
    println!(
        "infected cells: [{}]; wrote {}",
        join_indices(&infected),
        path.display()
    );
    Ok(0)
}

fn circuit_for(cfg: &ExperimentConfig, name: &str) -> Result<Box<dyn Circuit>> {
    match name {
        "crc" => Ok(Box::new(CrcDecoderCircuit::new(cfg.crc.clone()))),
        "katan" => Ok(Box::new(KatanCircuit::new(cfg.katan_trojan()?)?)),
        _ => Err(Error::Config(format!(
            "unknown circuit {name:?} (crc|katan)"
        ))),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_trace(
    cfg: &ExperimentConfig,
    circuit: &str,
    kind: ConditionKind,
    param: Option<f64>,
    pattern: Option<&str>,
    n: Option<usize>,
    with_reference: bool,
) -> Result<u8> {
    let circuit = circuit_for(cfg, circuit)?;
    csvio::create_dir(&cfg.out)?;
    if with_reference {
        let r = ReferenceSignal::simulate(circuit.as_ref(), None, &cfg.trace, cfg.seed)?;
        let path = cfg.out.join("reference.csv");
        r.trace().save_csv(&path)?;
        println!("wrote {}", path.display());
    }
    match pattern {
        Some(hex) => {
            let p = bits::from_hex(hex, circuit.input_width())?;
            let default_param = match kind {
                ConditionKind::ProcessVariation => Some(0.0),
                ConditionKind::Temperature => Some(20.0),
                _ => None,
            };
            let cond = Condition::with_parameter(kind, param.or(default_param))?;
            let t = trace::simulate_trace(circuit.as_ref(), &p, &cond, &cfg.trace, cfg.seed)?;
            let path = cfg.out.join("trace.csv");
            t.save_csv(&path)?;
            println!("wrote {}", path.display());
        }
        None => {
            let n = n.unwrap_or(cfg.n_patterns);
            let ds = trace::build_dataset(circuit.as_ref(), kind, n, &cfg.trace, cfg.seed)?;
            let dir = cfg.out.join("dataset");
            ds.save(&dir)?;
            println!("{} traces; wrote {}", ds.len(), dir.display());
        }
    }
    Ok(0)
}

fn read_evaluation(path: &Path) -> Result<EvaluationSignal> {
    let (header, rows) = csvio::read_table(path)?;
    let col = header
        .iter()
        .position(|h| h == "value")
        .ok_or_else(|| Error::Config(format!("{}: no value column", path.display())))?;
    let values = rows
        .iter()
        .map(|r| csvio::parse_f64("detector value", r.get(col).map_or("", String::as_str)))
        .collect::<Result<_>>()?;
    Ok(EvaluationSignal { values })
}

fn cmd_detect(cfg: &ExperimentConfig, cmd: DetectCommand) -> Result<u8> {
    let mode = cfg.detector_mode();
    csvio::create_dir(&cfg.out)?;
    match cmd {
        DetectCommand::Eval {
            dataset,
            reference,
            threshold,
            reference_dataset,
            sensitivity,
        } => {
            let r = ReferenceSignal::from_trace(CurrentTrace::load_csv(&reference, "reference")?)?;
            let ds = Dataset::load(&dataset)?;
            let eval = detector::evaluate_dataset(&r, &ds, mode)?;
            let threshold = match (threshold, reference_dataset) {
                (Some(t), _) => t,
                (None, Some(dir)) => {
                    let held = Dataset::load(&dir)?;
                    detector::threshold_from_reference(&detector::evaluate_dataset(
                        &r, &held, mode,
                    )?)?
                }
                (None, None) => unreachable!("clap requires one of them"),
            };
            let dc =
                DetectorConfig::new(threshold, sensitivity.unwrap_or(cfg.default_sensitivity))?;
            let decisions = detector::classify(&eval, &dc);
            let path = cfg.out.join("evaluation.csv");
            csvio::write_rows(
                &path,
                &["index", "value", "decision"],
                eval.values
                    .iter()
                    .zip(&decisions)
                    .enumerate()
                    .map(|(i, (v, d))| [i.to_string(), v.to_string(), d.to_string()]),
            )?;
            let rejected = decisions.iter().filter(|d| **d == Decision::Reject).count();
            println!(
                "threshold {threshold}; {rejected}/{} rejected; wrote {}",
                decisions.len(),
                path.display()
            );
        }
        DetectCommand::Score {
            evaluation,
            threshold,
            condition,
        } => {
            let eval = read_evaluation(&evaluation)?;
            let rows = cfg
                .sensitivities
                .iter()
                .map(|&s| {
                    let dc = DetectorConfig::new(threshold, s)?;
                    let c = detector::score(&detector::classify(&eval, &dc), condition);
                    Ok(experiment::confusion_row(s, &c))
                })
                .collect::<Result<Vec<_>>>()?;
            let path = cfg.out.join("confusion.csv");
            for r in &rows {
                println!("{}", r.join(","));
            }
            csvio::write_rows(&path, &experiment::CONFUSION_HEADER, rows)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(0)
}

fn cmd_katan(cfg: &ExperimentConfig, cmd: KatanCommand) -> Result<u8> {
    match cmd {
        KatanCommand::Enc { key, pt, trojan } => {
            let (key, pt) = (Key80::from_hex(&key)?, katan::block_from_hex(&pt)?);
            let ct = if trojan {
                trojan::encrypt32_trojan(pt, key, &cfg.katan_trojan()?)
            } else {
                katan::encrypt32(pt, key)
            };
            println!("{}", katan::block_to_hex(ct));
        }
        KatanCommand::Dec { key, ct } => {
            let (key, ct) = (Key80::from_hex(&key)?, katan::block_from_hex(&ct)?);
            println!("{}", katan::block_to_hex(katan::decrypt32(ct, key)));
        }
    }
    Ok(0)
}

fn print_summary(s: &ExperimentSummary) {
    println!("circuit {}; threshold {}", s.circuit, s.threshold);
    println!("dataset,sensitivity,tp,fp,tn,fn");
    for r in &s.results {
        for (sens, _, c) in &r.levels {
            println!("{},{},{},{},{},{}", r.kind(), sens, c.tp, c.fp, c.tn, c.fn_);
        }
    }
}

/// Parses every recognised output under `path` and prints one line each.
fn report(path: &Path) -> Result<()> {
    if path.is_dir() {
        if path.join("manifest").is_file() {
            let ds = Dataset::load(path)?;
            println!(
                "{}: dataset circuit={} condition={} n={} seed={}",
                path.display(),
                ds.circuit,
                ds.kind,
                ds.len(),
                ds.seed
            );
            return Ok(());
        }
        let mut entries: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|source| Error::Io {
                path: path.to_owned(),
                source,
            })?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()
            .map_err(|source| Error::Io {
                path: path.to_owned(),
                source,
            })?;
        entries.sort();
        for e in entries {
            let is_csv = e.extension().is_some_and(|x| x == "csv");
            let is_txt = e.file_name().is_some_and(|n| n == "config.txt");
            if e.is_dir() || is_csv || is_txt {
                report(&e)?;
            }
        }
        return Ok(());
    }
    if path.file_name().is_some_and(|n| n == "config.txt") {
        ExperimentConfig::load(path)?;
        println!("{}: config ok", path.display());
        return Ok(());
    }
    let (header, rows) = csvio::read_table(path)?;
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    let count = |col: &str, want: &str| {
        let i = h.iter().position(|c| *c == col);
        rows.iter()
            .filter(|r| i.and_then(|i| r.get(i)).is_some_and(|v| v == want))
            .count()
    };
    let numeric = |cols: &[usize]| -> Result<()> {
        for r in &rows {
            for &c in cols {
                csvio::parse_f64("numeric column", r.get(c).map_or("", String::as_str))?;
            }
        }
        Ok(())
    };
    let kind = match h.as_slice() {
        ["time_ns", "current_uA"] => {
            let t = CurrentTrace::load_csv(path, "report")?;
            format!("trace of {} samples, dt {} ns", t.len(), t.dt_ns)
        }
        ["half_period_ns", "pattern_hex", "error_flag", "faulted_indices"] => {
            numeric(&[0, 2])?;
            format!(
                "bist results, {} runs, {} with error flag",
                rows.len(),
                count("error_flag", "1")
            )
        }
        ["index", "tm_actual"] => format!("array of {} cells", mtj::load_array(path)?.len()),
        ["index", "value", "decision"] => {
            numeric(&[0, 1])?;
            for r in &rows {
                r[2].parse::<Decision>()?;
            }
            format!(
                "evaluation of {} traces, {} rejected",
                rows.len(),
                count("decision", "reject")
            )
        }
        ["dataset", "index", "pattern_hex", "parameter", "value", "decision"] => {
            numeric(&[1, 4])?;
            format!(
                "evaluation of {} traces, {} rejected",
                rows.len(),
                count("decision", "reject")
            )
        }
        ["sensitivity", "tp", "fp", "tn", "fn"] => {
            numeric(&[0, 1, 2, 3, 4])?;
            format!("confusion table, {} sensitivity levels", rows.len())
        }
        ["dataset", "sensitivity", "tp", "fp", "tn", "fn"] => {
            numeric(&[1, 2, 3, 4, 5])?;
            format!("confusion table, {} rows", rows.len())
        }
        ["threshold", "mode", "n_reference"] => {
            numeric(&[0, 2])?;
            format!("threshold {}", rows.first().map_or("?", |r| r[0].as_str()))
        }
        _ => {
            return Err(Error::Config(format!(
                "{}: unrecognised header {}",
                path.display(),
                header.join(",")
            )))
        }
    };
    println!("{}: {kind}", path.display());
    Ok(())
}
