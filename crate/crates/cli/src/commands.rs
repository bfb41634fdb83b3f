//! Subcommands. Each one rebuilds the data split from the config, loads what
//! earlier stages cached in the run directory and writes its own artifacts.

use std::path::{Path, PathBuf};

use cfx_core::boundary::{CriticalSet, ForgeStats};
use cfx_core::classifier::{ClassifierModel, TrainLog};
use cfx_core::evaluation::{write_case_csv, ReportDocument};
use cfx_core::intervention::InterventionResult;
use cfx_core::neural::{EpochLog, Network};
use cfx_core::par::Exec;
use cfx_core::simulator::SimulatorModel;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{self, read, write, write_manifest};
use crate::pipeline::{self, CaseSelector, Prepared};
use crate::CliError;

fn run_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.run_dir();
    std::fs::create_dir_all(&dir).map_err(|e| output::io_err(&dir, e))?;
    Ok(dir)
}

fn load_classifier(dir: &Path) -> Result<ClassifierModel, CliError> {
    let text = read(dir, output::CLASSIFIER, "train")?;
    Ok(ClassifierModel::new(Network::from_text(&text)?)?)
}

fn load_simulator(dir: &Path, name: &str) -> Result<SimulatorModel, CliError> {
    read(dir, name, "train")?;
    Ok(SimulatorModel::load(dir.join(name))?)
}

fn load_set(dir: &Path, width: usize) -> Result<CriticalSet, CliError> {
    read(dir, output::CRITICAL_SET, "boundary")?;
    Ok(CriticalSet::load(dir.join(output::CRITICAL_SET), width)?)
}

fn to_toml<T: Serialize>(v: &T) -> Result<String, CliError> {
    toml::to_string(v).map_err(|e| CliError::Runtime(e.to_string()))
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub dir: PathBuf,
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
    pub simulator_test_accuracy: Option<f64>,
}

#[derive(Serialize)]
struct TrainLogFile<'a> {
    classifier: &'a TrainLog,
    simulator: SimSummary,
    simulator_alt: SimSummary,
}

#[derive(Serialize)]
struct SimSummary {
    kind: &'static str,
    train_accuracy: f64,
    test_accuracy: Option<f64>,
}

impl From<&SimulatorModel> for SimSummary {
    fn from(s: &SimulatorModel) -> Self {
        SimSummary {
            kind: s.kind.name(),
            train_accuracy: s.train_accuracy,
            test_accuracy: s.holdout_accuracy,
        }
    }
}

pub fn cmd_train(cfg: &RunConfig) -> Result<TrainSummary, CliError> {
    let p = pipeline::prepare(cfg)?;
    let t = pipeline::train_models(cfg, &p)?;
    let dir = run_dir(cfg)?;
    write(&dir, output::CLASSIFIER, t.classifier.network.to_text())?;
    write(&dir, output::SIMULATOR, t.simulator.to_text())?;
    write(&dir, output::SIMULATOR_ALT, t.alternate.to_text())?;
    let log = TrainLogFile {
        classifier: &t.log,
        simulator: (&t.simulator).into(),
        simulator_alt: (&t.alternate).into(),
    };
    write(&dir, output::TRAIN_LOG, to_toml(&log)?)?;
    write_manifest(cfg, &dir, "train")?;
    Ok(TrainSummary {
        dir,
        train_accuracy: t.log.train_accuracy,
        test_accuracy: t.log.test_accuracy,
        simulator_test_accuracy: t.simulator.holdout_accuracy,
    })
}

#[derive(Serialize)]
struct BoundaryStatsFile<'a> {
    stats: &'a ForgeStats,
    gap_bin_width: f64,
    /// Counts of `|f_n - f_a|` in bins of `gap_bin_width` from zero; the last
    /// bin also takes everything above.
    gap_histogram: Vec<usize>,
    ae_from_normal: &'a [EpochLog],
    ae_from_abnormal: &'a [EpochLog],
}

/// Ten equal bins over `[0, beta]`.
pub fn gap_histogram(set: &CriticalSet, beta: f64) -> (f64, Vec<usize>) {
    let bins = 10;
    let width = beta / bins as f64;
    let mut counts = vec![0; bins];
    for c in &set.instances {
        let b = ((c.gap() / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    (width, counts)
}

pub fn cmd_boundary(cfg: &RunConfig, exec: Exec) -> Result<ForgeStats, CliError> {
    let dir = run_dir(cfg)?;
    let classifier = load_classifier(&dir)?;
    let p = pipeline::prepare(cfg)?;
    let forge = pipeline::forge(cfg, &p, &classifier, exec)?;
    forge.set.save(dir.join(output::CRITICAL_SET), &p.encoder)?;
    write(&dir, output::AE_FROM_NORMAL, forge.autoencoders[0].to_text())?;
    write(&dir, output::AE_FROM_ABNORMAL, forge.autoencoders[1].to_text())?;
    let (gap_bin_width, gap_histogram) = gap_histogram(&forge.set, cfg.bisection.beta);
    let stats = BoundaryStatsFile {
        stats: &forge.stats,
        gap_bin_width,
        gap_histogram,
        ae_from_normal: &forge.logs[0],
        ae_from_abnormal: &forge.logs[1],
    };
    write(&dir, output::BOUNDARY_STATS, to_toml(&stats)?)?;
    write_manifest(cfg, &dir, "boundary")?;
    Ok(forge.stats)
}

pub struct ExplainSummary {
    pub results: Vec<InterventionResult>,
    pub notices: Vec<String>,
    pub table: String,
}

pub fn cmd_explain(cfg: &RunConfig, selector: &CaseSelector, exec: Exec) -> Result<ExplainSummary, CliError> {
    let dir = run_dir(cfg)?;
    let classifier = load_classifier(&dir)?;
    let p = pipeline::prepare(cfg)?;
    let set = load_set(&dir, p.encoder.layout.width())?;
    let batch = pipeline::select_cases(&p, &classifier, selector)?;
    let results = pipeline::explain_cases(cfg, &p, &classifier, &set, &batch.cases, exec)?;
    let table = output::explanations_table(&results, &p.schema);
    write(&dir, output::EXPLANATIONS, output::explanations_csv(&results, &p.schema)?)?;
    write(&dir, output::EXPLANATIONS_TABLE, &table)?;
    let json = serde_json::to_string_pretty(&results).map_err(|e| CliError::Runtime(e.to_string()))?;
    write(&dir, output::EXPLANATIONS_JSON, json)?;
    write_manifest(cfg, &dir, "explain")?;
    Ok(ExplainSummary {
        results,
        notices: batch.notices,
        table,
    })
}

fn load_results(dir: &Path) -> Result<Vec<InterventionResult>, CliError> {
    let text = read(dir, output::EXPLANATIONS_JSON, "explain")?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", output::EXPLANATIONS_JSON)))
}

pub fn cmd_evaluate(cfg: &RunConfig) -> Result<(ReportDocument, String), CliError> {
    let dir = run_dir(cfg)?;
    let p: Prepared = pipeline::prepare(cfg)?;
    let results = load_results(&dir)?;
    let simulator = load_simulator(&dir, output::SIMULATOR)?;
    let alternate = load_simulator(&dir, output::SIMULATOR_ALT)?;
    let set = load_set(&dir, p.encoder.layout.width())?;
    let blocks = pipeline::metrics(cfg, &p, &results, &simulator, &alternate)?;
    let echo = pipeline::run_echo(cfg, set.len(), &simulator);
    let (doc, text) = pipeline::report(blocks, echo)?;
    write(&dir, output::REPORT, &text)?;
    let mut cases = Vec::new();
    write_case_csv(&mut cases, &results, &simulator, &p.encoder)?;
    write(&dir, output::CASES, cases)?;
    write_manifest(cfg, &dir, "evaluate")?;
    Ok((doc, text))
}

pub struct RunSummary {
    pub train: TrainSummary,
    pub boundary: ForgeStats,
    pub explain: ExplainSummary,
    pub report: ReportDocument,
    pub report_text: String,
}

pub fn cmd_run(cfg: &RunConfig, selector: &CaseSelector, exec: Exec) -> Result<RunSummary, CliError> {
    let train = cmd_train(cfg)?;
    let boundary = cmd_boundary(cfg, exec)?;
    let explain = cmd_explain(cfg, selector, exec)?;
    let (report, report_text) = cmd_evaluate(cfg)?;
    Ok(RunSummary {
        train,
        boundary,
        explain,
        report,
        report_text,
    })
}
