//! The stages behind each subcommand, free of file-system layout concerns.

use std::path::PathBuf;
use std::sync::Arc;

use cfx_core::boundary::{build_critical_set, CriticalSet, Forge};
use cfx_core::classifier::{train_classifier, ClassifierModel, TrainLog};
use cfx_core::data::{
    balance_upsample, load_case_rows, load_csv, split, Dataset, EncodedDataset, Encoder, FeatureSchema,
};
use cfx_core::evaluation::{assemble_report, compute_metrics, MetricsReport, ReportDocument};
use cfx_core::intervention::{explain_batch, Context, FactualCase, InterventionResult, Mode};
use cfx_core::par::Exec;
use cfx_core::simulator::{train_simulator, SimulatorModel};
use cfx_core::{Error, NORMAL};

use crate::config::RunConfig;
use crate::CliError;

/// Loaded, split and encoded data. Rebuilt identically by every command from
/// the data seed.
pub struct Prepared {
    pub schema: Arc<FeatureSchema>,
    /// Training split, upsampled when configured.
    pub train: Dataset,
    pub test: Dataset,
    pub encoder: Encoder,
    pub train_enc: EncodedDataset,
    pub test_enc: EncodedDataset,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared, CliError> {
    let schema = Arc::new(FeatureSchema::load(&cfg.schema).map_err(CliError::validation)?);
    let full = load_csv(&cfg.data, schema.clone()).map_err(CliError::validation)?;
    let (mut train, test) = split(&full, cfg.split, cfg.seeds.data)?;
    if cfg.upsample {
        train = balance_upsample(&train, cfg.seeds.data)?;
    }
    let encoder = Encoder::fit(&train)?;
    let train_enc = encoder.encode(&train)?;
    let test_enc = encoder.encode(&test)?;
    Ok(Prepared {
        schema,
        train,
        test,
        encoder,
        train_enc,
        test_enc,
    })
}

pub struct Trained {
    pub classifier: ClassifierModel,
    pub log: TrainLog,
    pub simulator: SimulatorModel,
    /// The other simulator family, reported alongside.
    pub alternate: SimulatorModel,
}

pub fn train_models(cfg: &RunConfig, p: &Prepared) -> Result<Trained, CliError> {
    let (classifier, log) = train_classifier(&p.train_enc, &cfg.classifier, Some(&p.test_enc))?;
    let seed = cfg.seeds.simulator;
    let simulator = train_simulator(&p.train_enc, cfg.simulator, seed, Some(&p.test_enc))?;
    let alternate = train_simulator(&p.train_enc, cfg.simulator.alternate(), seed, Some(&p.test_enc))?;
    Ok(Trained {
        classifier,
        log,
        simulator,
        alternate,
    })
}

pub fn forge(cfg: &RunConfig, p: &Prepared, classifier: &ClassifierModel, exec: Exec) -> Result<Forge, CliError> {
    Ok(build_critical_set(
        classifier,
        &p.train_enc,
        &p.encoder.layout,
        &cfg.boundary,
        &cfg.bisection,
        exec,
    )?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CaseSelector {
    /// Every test row the classifier predicts abnormal.
    AllAbnormal,
    /// Test-split row positions.
    Indices(Vec<usize>),
    /// Raw rows from a CSV with the schema's columns.
    File(PathBuf),
}

impl std::str::FromStr for CaseSelector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "all-abnormal" {
            return Ok(CaseSelector::AllAbnormal);
        }
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(CaseSelector::File(PathBuf::from(path)));
        }
        s.split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| format!("bad case index {t:?}")))
            .collect::<Result<Vec<_>, _>>()
            .map(CaseSelector::Indices)
    }
}

pub struct CaseBatch {
    pub cases: Vec<FactualCase>,
    /// Human-readable notes on skipped rows.
    pub notices: Vec<String>,
}

pub fn select_cases(p: &Prepared, classifier: &ClassifierModel, selector: &CaseSelector) -> Result<CaseBatch, CliError> {
    let (rows, indices, all): (Vec<Vec<f64>>, Vec<usize>, bool) = match selector {
        CaseSelector::AllAbnormal => (p.test.rows.clone(), (0..p.test.len()).collect(), true),
        CaseSelector::Indices(idx) => {
            if let Some(&bad) = idx.iter().find(|&&i| i >= p.test.len()) {
                return Err(CliError::Validation(format!(
                    "case index {bad} out of range for a test split of {} rows",
                    p.test.len()
                )));
            }
            (idx.iter().map(|&i| p.test.rows[i].clone()).collect(), idx.clone(), false)
        }
        CaseSelector::File(path) => {
            let rows = load_case_rows(path, &p.schema).map_err(CliError::validation)?;
            let n = rows.len();
            (rows, (0..n).collect(), false)
        }
    };
    let mut cases = Vec::new();
    let mut notices = Vec::new();
    for (row, index) in rows.into_iter().zip(indices) {
        match FactualCase::new(index, row, &p.encoder, classifier) {
            Ok(c) => cases.push(c),
            Err(Error::NotAbnormal(i)) => {
                if !all {
                    notices.push(format!("case {i} is already predicted normal; skipped"));
                }
            }
            Err(e) => return Err(e.into()),
        }
    }
    if cases.is_empty() {
        return Err(CliError::Validation("the case selector matched no abnormal case".into()));
    }
    Ok(CaseBatch { cases, notices })
}

/// Results for every case and mode, ordered by case then mode.
pub fn explain_cases(
    cfg: &RunConfig,
    p: &Prepared,
    classifier: &ClassifierModel,
    set: &CriticalSet,
    cases: &[FactualCase],
    exec: Exec,
) -> Result<Vec<InterventionResult>, CliError> {
    let normal_rows = p.train_enc.of_class(NORMAL);
    let ctx = Context {
        classifier,
        set,
        encoder: &p.encoder,
        normal_rows: &normal_rows,
        config: &cfg.explain.search,
    };
    let mut by_mode = Vec::new();
    for mode in cfg.explain.mode.modes() {
        by_mode.push(explain_batch(&ctx, cases, mode, exec)?);
    }
    let mut out: Vec<InterventionResult> = by_mode.into_iter().flatten().collect();
    out.sort_by_key(|r| (r.case, r.mode == Mode::Constrained));
    Ok(out)
}

pub fn metrics(
    cfg: &RunConfig,
    p: &Prepared,
    results: &[InterventionResult],
    simulator: &SimulatorModel,
    alternate: &SimulatorModel,
) -> Result<Vec<MetricsReport>, CliError> {
    let mut blocks = Vec::new();
    for mode in [Mode::Minimal, Mode::Constrained] {
        let batch: Vec<InterventionResult> = results.iter().filter(|r| r.mode == mode).cloned().collect();
        if batch.is_empty() {
            continue;
        }
        blocks.push(compute_metrics(
            &cfg.name,
            mode,
            cfg.explain.search.norm,
            &batch,
            simulator,
            &[alternate],
            &p.encoder,
        )?);
    }
    if blocks.is_empty() {
        return Err(Error::EmptyBatch("no explanation records to evaluate").into());
    }
    Ok(blocks)
}

/// Settings echoed at the top of the report.
pub fn run_echo(cfg: &RunConfig, set_size: usize, simulator: &SimulatorModel) -> toml::Table {
    let mut t = toml::Table::new();
    let mut put = |k: &str, v: toml::Value| {
        t.insert(k.to_string(), v);
    };
    put("dataset", cfg.name.clone().into());
    put("seed_data", toml::Value::Integer(cfg.seeds.data as i64));
    put("seed_classifier", toml::Value::Integer(cfg.seeds.classifier as i64));
    put("seed_boundary", toml::Value::Integer(cfg.seeds.boundary as i64));
    put("seed_simulator", toml::Value::Integer(cfg.seeds.simulator as i64));
    put("split", cfg.split.into());
    put("beta", cfg.bisection.beta.into());
    put("max_iters", toml::Value::Integer(cfg.bisection.max_iters as i64));
    put("alpha", cfg.boundary.alpha.into());
    put("replicas", toml::Value::Integer(cfg.boundary.replicas as i64));
    put("norm", cfg.explain.search.norm.as_str().into());
    put("simulator", simulator.kind.name().into());
    if let Some(acc) = simulator.holdout_accuracy {
        put("simulator_test_accuracy", acc.into());
    }
    put("critical_set_size", toml::Value::Integer(set_size as i64));
    t
}

pub fn report(blocks: Vec<MetricsReport>, echo: toml::Table) -> Result<(ReportDocument, String), CliError> {
    Ok(assemble_report(blocks, echo)?)
}
