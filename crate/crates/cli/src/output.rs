//! Artifact files: names, hashing, the manifest and explanation renderings.

use std::collections::BTreeMap;
use std::path::Path;

use cfx_core::data::{Dataset, FeatureSchema};
use cfx_core::intervention::InterventionResult;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

pub const MANIFEST: &str = "manifest";
pub const CLASSIFIER: &str = "classifier.model";
pub const SIMULATOR: &str = "simulator.model";
pub const SIMULATOR_ALT: &str = "simulator_alt.model";
pub const TRAIN_LOG: &str = "train_log.toml";
pub const AE_FROM_NORMAL: &str = "ae_from_normal.model";
pub const AE_FROM_ABNORMAL: &str = "ae_from_abnormal.model";
pub const CRITICAL_SET: &str = "critical_set.csv";
pub const BOUNDARY_STATS: &str = "boundary_stats.toml";
pub const EXPLANATIONS: &str = "explanations.csv";
pub const EXPLANATIONS_TABLE: &str = "explanations.txt";
pub const EXPLANATIONS_JSON: &str = "explanations.json";
pub const REPORT: &str = "report";
pub const CASES: &str = "cases.csv";

pub fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

pub fn write(dir: &Path, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| io_err(&path, e))
}

/// Reads an artifact written by an earlier command.
pub fn read(dir: &Path, name: &str, producer: &str) -> Result<String, CliError> {
    let path = dir.join(name);
    std::fs::read_to_string(&path).map_err(|_| {
        CliError::Validation(format!(
            "{} is missing; run `cfx {producer}` first",
            path.display()
        ))
    })
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Serialize)]
struct InputHash {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    run_id: &'a str,
    seeds: crate::config::Seeds,
    inputs: BTreeMap<&'static str, InputHash>,
    artifacts: BTreeMap<String, String>,
    config: &'a RunConfig,
}

/// Rewrites the manifest: config echo with defaults filled in, seeds, input
/// hashes and the hash of every artifact currently in the run directory.
pub fn write_manifest(cfg: &RunConfig, dir: &Path, command: &str) -> Result<(), CliError> {
    let mut inputs = BTreeMap::new();
    for (k, p) in [("data", &cfg.data), ("schema", &cfg.schema)] {
        inputs.insert(
            k,
            InputHash {
                path: p.display().to_string(),
                sha256: sha256_file(p)?,
            },
        );
    }
    let mut artifacts = BTreeMap::new();
    let entries = std::fs::read_dir(dir).map_err(|e| io_err(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| io_err(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name != MANIFEST && entry.path().is_file() {
            artifacts.insert(name, sha256_file(&entry.path())?);
        }
    }
    let m = Manifest {
        command,
        run_id: cfg.run_id(),
        seeds: cfg.seeds,
        inputs,
        artifacts,
        config: cfg,
    };
    let text = toml::to_string(&m).map_err(|e| CliError::Runtime(e.to_string()))?;
    write(dir, MANIFEST, text)
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Machine-readable records: one row per case and mode.
pub fn explanations_csv(results: &[InterventionResult], schema: &FeatureSchema) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = [
        "case",
        "mode",
        "flipped",
        "fallback",
        "violated",
        "critical_index",
        "lambda",
        "f_n",
        "f_a",
        "changed",
    ]
    .map(String::from)
    .to_vec();
    for f in &schema.features {
        header.push(f.name.clone());
        header.push(format!("{}_cf", f.name));
        header.push(format!("{}_delta", f.name));
    }
    header.extend(["ce_term", "proximity_term", "realism_term", "preference_term"].map(String::from));
    let csv_err = |e: csv::Error| CliError::Runtime(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for r in results {
        let mut rec = vec![
            r.case.to_string(),
            r.mode.as_str().to_string(),
            r.flipped.to_string(),
            r.fallback.to_string(),
            r.violated.to_string(),
            r.critical_index.to_string(),
            r.lambda.map(num).unwrap_or_default(),
            num(r.f_n),
            num(r.f_a),
            r.changed_names(schema).join(";"),
        ];
        for j in 0..schema.len() {
            rec.push(Dataset::format_value(schema, j, r.raw_t[j]));
            rec.push(Dataset::format_value(schema, j, r.raw_star[j]));
            rec.push(r.delta[j].map(num).unwrap_or_default());
        }
        let o = &r.objective;
        rec.extend([o.ce_term, o.proximity_term, o.realism_term, o.preference_term].map(num));
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Runtime(e.to_string()))
}

fn short(schema: &FeatureSchema, j: usize, v: f64) -> String {
    if schema.features[j].is_categorical() {
        Dataset::format_value(schema, j, v)
    } else {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Aligned human-readable table: what changed, from what to what.
pub fn explanations_table(results: &[InterventionResult], schema: &FeatureSchema) -> String {
    let header = ["case", "mode", "flip", "p(normal)", "changes"].map(String::from);
    let mut rows = vec![header.to_vec()];
    for r in results {
        let changes: Vec<String> = r
            .changed
            .iter()
            .map(|&j| {
                let name = &schema.features[j].name;
                let (from, to) = (short(schema, j, r.raw_t[j]), short(schema, j, r.raw_star[j]));
                match r.delta[j] {
                    Some(d) => format!("{name} {from} -> {to} ({d:+.2})"),
                    None => format!("{name} {from} -> {to}"),
                }
            })
            .collect();
        let mut flip = if r.flipped { "yes" } else { "no" }.to_string();
        if r.fallback {
            flip.push('*');
        }
        rows.push(vec![
            r.case.to_string(),
            r.mode.as_str().to_string(),
            flip,
            format!("{:.3}", r.f_n),
            if changes.is_empty() { "-".into() } else { changes.join("; ") },
        ]);
    }
    let widths: Vec<usize> = (0..4).map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in &rows {
        for c in 0..4 {
            out.push_str(&format!("{:<w$}  ", r[c], w = widths[c]));
        }
        out.push_str(&r[4]);
        out.push('\n');
    }
    if results.iter().any(|r| r.fallback) {
        out.push_str("\n* constrained search fell back to the nearest critical instance over all modifiable features\n");
    }
    out
}
