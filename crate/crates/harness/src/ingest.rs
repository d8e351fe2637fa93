//! JSONL episode loading. Every malformed or invalid record is reported with
//! its line number; nothing is dropped silently.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use mindstate_core::{Episode, GraphConfig, Split};
use serde::Serialize;

use crate::error::{HarnessError, RecordProblem};

/// Episodes with their 1-based source lines.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub episodes: Vec<Episode>,
    pub lines: Vec<usize>,
}

impl Dataset {
    pub fn split(&self, split: Split) -> Vec<Episode> {
        self.episodes.iter().filter(|e| e.split == split).cloned().collect()
    }

    pub fn report(&self) -> IngestReport {
        let mut counts: BTreeMap<Split, usize> = Split::ALL.into_iter().map(|s| (s, 0)).collect();
        for ep in &self.episodes {
            *counts.entry(ep.split).or_default() += 1;
        }
        IngestReport {
            total: self.episodes.len(),
            counts,
        }
    }
}

/// Episode counts per split; every split is present, possibly with zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub total: usize,
    pub counts: BTreeMap<Split, usize>,
}

impl IngestReport {
    pub fn count(&self, split: Split) -> usize {
        self.counts.get(&split).copied().unwrap_or(0)
    }

    pub fn table(&self) -> String {
        let mut out = String::from("split         episodes\n");
        for (s, n) in &self.counts {
            out.push_str(&format!("{:<13} {n:>8}\n", s.as_str()));
        }
        out.push_str(&format!("{:<13} {:>8}\n", "total", self.total));
        out
    }
}

/// Parses JSONL without validating episodes. Blank lines are skipped.
pub fn parse_episodes(raw: &str) -> Result<Dataset, HarnessError> {
    let mut episodes = Vec::new();
    let mut lines = Vec::new();
    let mut problems = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Episode>(line) {
            Ok(ep) => {
                episodes.push(ep);
                lines.push(i + 1);
            }
            Err(e) => problems.push(RecordProblem {
                line: i + 1,
                episode: episode_id(line),
                message: format!("schema: {e}"),
            }),
        }
    }
    if problems.is_empty() {
        Ok(Dataset { episodes, lines })
    } else {
        Err(HarnessError::Schema(problems))
    }
}

/// Best-effort id of a record that failed to parse.
fn episode_id(line: &str) -> Option<String> {
    let v: serde_json::Value = serde_json::from_str(line).ok()?;
    v.get("id")?.as_str().map(str::to_string)
}

/// Structural validation plus id uniqueness.
pub fn validate(dataset: &Dataset, config: GraphConfig) -> Result<(), HarnessError> {
    let mut problems = Vec::new();
    let mut seen = BTreeSet::new();
    for (ep, &line) in dataset.episodes.iter().zip(&dataset.lines) {
        let problem = |message: String| RecordProblem {
            line,
            episode: Some(ep.id.clone()),
            message,
        };
        if !seen.insert(ep.id.clone()) {
            problems.push(problem("duplicate episode id".into()));
        }
        if let Err(e) = ep.validate(config) {
            problems.push(problem(e.message));
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(HarnessError::Schema(problems))
    }
}

pub fn read_episodes(path: &Path) -> Result<Dataset, HarnessError> {
    let raw = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_episodes(&raw)
}

/// Reads and validates a JSONL file.
pub fn ingest(path: &Path, config: GraphConfig) -> Result<Dataset, HarnessError> {
    let dataset = read_episodes(path)?;
    validate(&dataset, config)?;
    Ok(dataset)
}
