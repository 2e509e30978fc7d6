//! Report envelope shared by all suites and the summary table.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

/// Header fields every `<suite>.json` starts with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub suite: String,
    pub seed: u64,
    pub cases: usize,
    /// `null` when a margin is not finite.
    pub worst_margin: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub config: BTreeMap<String, String>,
}

impl Envelope {
    pub fn new(
        suite: &str,
        seed: u64,
        cases: usize,
        worst_margin: f64,
        tolerance: f64,
        config: BTreeMap<String, String>,
    ) -> Self {
        Self {
            suite: suite.to_string(),
            seed,
            cases,
            worst_margin: worst_margin.is_finite().then_some(worst_margin),
            tolerance,
            pass: worst_margin >= -tolerance,
            config,
        }
    }
}

/// Envelope followed by suite-specific details, pretty-printed with a
/// trailing newline.
pub fn to_json<D: Serialize>(envelope: &Envelope, details: &D) -> String {
    let mut v = serde_json::to_value(envelope).expect("envelope serializes");
    let d = serde_json::to_value(details).expect("details serialize");
    v.as_object_mut().expect("envelope is an object").insert("details".into(), d);
    let mut s = serde_json::to_string_pretty(&v).expect("report serializes");
    s.push('\n');
    s
}

/// One row of the summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub suite: String,
    pub seed: u64,
    pub cases: usize,
    pub worst_margin: Option<f64>,
    pub pass: bool,
}

/// Reads every `*.json` report in `dir` carrying an envelope, sorted by
/// suite name. An empty result is a config error.
pub fn summarize(dir: &Path) -> Result<Vec<SummaryRow>, CliError> {
    let mut rows = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let Ok(v) = serde_json::from_str::<Value>(&fs::read_to_string(&path)?) else {
            continue;
        };
        if let Ok(e) = serde_json::from_value::<Envelope>(v) {
            rows.push(SummaryRow {
                suite: e.suite,
                seed: e.seed,
                cases: e.cases,
                worst_margin: e.worst_margin,
                pass: e.pass,
            });
        }
    }
    if rows.is_empty() {
        return Err(CliError::Config(format!("no suite reports in {}", dir.display())));
    }
    rows.sort_by(|a, b| a.suite.cmp(&b.suite).then(a.seed.cmp(&b.seed)));
    Ok(rows)
}

pub fn format_summary(rows: &[SummaryRow]) -> String {
    let mut out = format!("{:<10} {:>20} {:>8} {:>14} {}\n", "suite", "seed", "cases", "worst_margin", "pass");
    for r in rows {
        let margin = r.worst_margin.map_or_else(|| "-inf".to_string(), |m| format!("{m:.6e}"));
        out.push_str(&format!(
            "{:<10} {:>20} {:>8} {:>14} {}\n",
            r.suite,
            r.seed,
            r.cases,
            margin,
            if r.pass { "PASS" } else { "FAIL" }
        ));
    }
    out
}
