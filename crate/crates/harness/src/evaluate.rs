//! Recall@1 per task under mask, utility and graph-mode switches.

use std::collections::BTreeMap;

use mindstate_core::{mask_candidates, ActionMask, ApplyMode, Episode, MaskMode, TurnKind};
use mindstate_nn::{select, GraphMode, Metrics, Model, NnError, RunOptions};
use mindstate_utility::{rephrase_context, rerank_top3, RephraseConfig, UtilityScorer};
use serde::Serialize;

use crate::error::HarnessError;

/// Utility stage: off, or a named scorer.
pub enum UtilityChoice<'a> {
    Off,
    On {
        name: String,
        scorer: &'a dyn UtilityScorer,
    },
}

impl UtilityChoice<'_> {
    pub fn name(&self) -> &str {
        match self {
            UtilityChoice::Off => "off",
            UtilityChoice::On { name, .. } => name,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalFlags {
    pub mask: bool,
    pub graph: GraphMode,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalRow {
    pub mask: bool,
    pub utility: String,
    pub graph: GraphMode,
    pub task: TurnKind,
    pub recall_at_1: f64,
    pub n: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    /// Target turns whose candidates were all masked; they were ranked unmasked.
    pub all_masked: usize,
    /// Utility calls that fell back to the ranker's best.
    pub utility_fallbacks: usize,
}

impl EvalReport {
    pub fn recall(&self, mask: bool, utility: &str, graph: GraphMode, task: TurnKind) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.mask == mask && r.utility == utility && r.graph == graph && r.task == task)
            .map(|r| r.recall_at_1)
    }

    pub fn merge(&mut self, other: EvalReport) {
        self.rows.extend(other.rows);
        self.all_masked += other.all_masked;
        self.utility_fallbacks += other.utility_fallbacks;
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<5} {:<10} {:<10} {:<10} {:>9} {:>7}\n",
            "mask", "utility", "graph", "task", "recall@1", "n"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<5} {:<10} {:<10} {:<10} {:>9.4} {:>7}\n",
                if r.mask { "on" } else { "off" },
                r.utility,
                r.graph.as_str(),
                r.task.as_str(),
                r.recall_at_1,
                r.n
            ));
        }
        out
    }

    pub fn json_lines(&self) -> String {
        self.rows
            .iter()
            .map(|r| serde_json::to_string(r).expect("rows serialize") + "\n")
            .collect()
    }
}

pub struct EvalSettings<'a> {
    pub k: usize,
    pub mask_mode: MaskMode,
    pub rephrase: &'a RephraseConfig,
}

/// Scores every gold-labelled turn of `episodes` under one flag combination.
pub fn evaluate(
    model: &Model,
    episodes: &[Episode],
    flags: EvalFlags,
    utility: &UtilityChoice,
    settings: &EvalSettings,
) -> Result<EvalReport, HarnessError> {
    let options = RunOptions {
        mode: flags.graph,
        apply: ApplyMode::Lenient,
    };
    let mut metrics = Metrics::default();
    let mut report = EvalReport::default();
    for ep in episodes {
        for p in model.predict(ep, options)? {
            let Some(gold) = p.gold else { continue };
            let mask = if flags.mask {
                mask_candidates(&p.candidates, p.actor, &p.graph, settings.mask_mode)
            } else {
                ActionMask::all_open(p.candidates.len())
            };
            let ranked = match select(&p.probs, mask, settings.k) {
                Err(NnError::AllMasked) => {
                    report.all_masked += 1;
                    select(&p.probs, ActionMask::all_open(p.candidates.len()), settings.k)?
                }
                other => other?,
            };
            let chosen = match utility {
                UtilityChoice::Off => ranked.chosen,
                UtilityChoice::On { scorer, .. } => {
                    let texts: Vec<String> = p.candidates.iter().map(|c| c.text.clone()).collect();
                    let context = rephrase_context(&ep.setting, &ep.turns[..p.turn], settings.rephrase);
                    let r = rerank_top3(&ranked, &texts, &context, *scorer);
                    if r.fallback_reason.is_some() {
                        report.utility_fallbacks += 1;
                    }
                    r.chosen
                }
            };
            metrics.record(p.kind, chosen == gold);
        }
    }
    let mut tasks: BTreeMap<TurnKind, (usize, usize)> = BTreeMap::new();
    for task in TurnKind::ALL {
        let n = metrics.n(task);
        if n > 0 {
            tasks.insert(task, (metrics.hits.get(&task).copied().unwrap_or(0), n));
        }
    }
    report.rows = tasks
        .into_iter()
        .map(|(task, (hits, n))| EvalRow {
            mask: flags.mask,
            utility: utility.name().to_string(),
            graph: flags.graph,
            task,
            recall_at_1: hits as f64 / n as f64,
            n,
        })
        .collect();
    Ok(report)
}
