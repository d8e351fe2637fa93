//! End-to-end training on gold-candidate cross-entropy.

use std::collections::BTreeMap;

use mindstate_core::{Episode, TurnKind};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::NnError;
use crate::model::{Model, RunOptions};
use crate::params::{Adam, AdamConfig, Gradients};
use crate::ranker::top_k;
use crate::tape::Tape;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Episodes per optimizer step.
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Stop after the first epoch whose validation action recall@1 reaches this.
    pub target_action_recall: Option<f64>,
    /// Learning rate at the last step as a fraction of `adam.lr`, reached by
    /// linear decay. `1.0` keeps it constant.
    #[serde(default = "one")]
    pub final_lr_fraction: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 8,
            adam: AdamConfig {
                lr: 2e-3,
                ..AdamConfig::default()
            },
            seed: 0,
            target_action_recall: None,
            final_lr_fraction: 1.0,
        }
    }
}

/// Recall@1 counts per task.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub hits: BTreeMap<TurnKind, usize>,
    pub totals: BTreeMap<TurnKind, usize>,
}

impl Metrics {
    pub fn record(&mut self, task: TurnKind, hit: bool) {
        *self.totals.entry(task).or_default() += 1;
        *self.hits.entry(task).or_default() += usize::from(hit);
    }

    pub fn n(&self, task: TurnKind) -> usize {
        self.totals.get(&task).copied().unwrap_or(0)
    }

    /// `None` when the task has no instances.
    pub fn recall_at_1(&self, task: TurnKind) -> Option<f64> {
        let n = self.n(task);
        (n > 0).then(|| self.hits.get(&task).copied().unwrap_or(0) as f64 / n as f64)
    }

    pub fn lines(&self, split: &str) -> Vec<MetricLine> {
        self.totals
            .keys()
            .map(|&task| MetricLine {
                split: split.to_string(),
                task: task.as_str().to_string(),
                recall_at_1: self.recall_at_1(task).unwrap_or(0.0),
                n: self.n(task),
            })
            .collect()
    }
}

/// One JSON metrics record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricLine {
    pub split: String,
    pub task: String,
    pub recall_at_1: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub mean_loss: f64,
    pub valid: Metrics,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochReport>,
}

impl TrainReport {
    pub fn last(&self) -> Option<&EpochReport> {
        self.epochs.last()
    }
}

/// Unmasked argmax recall@1 over every gold-labelled target turn.
pub fn raw_recall(model: &Model, episodes: &[Episode], options: RunOptions) -> Result<Metrics, NnError> {
    let mut m = Metrics::default();
    for ep in episodes {
        for p in model.predict(ep, options)? {
            if let Some(g) = p.gold {
                let best = top_k(&p.probs, &vec![true; p.probs.len()], 1)[0];
                m.record(p.kind, best == g);
            }
        }
    }
    Ok(m)
}

pub fn train(
    model: &mut Model,
    train_set: &[Episode],
    valid_set: &[Episode],
    options: RunOptions,
    config: TrainConfig,
) -> Result<TrainReport, NnError> {
    let mut adam = Adam::new(&model.store, config.adam);
    let mut grads = Gradients::zeros_like(&model.store);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut report = TrainReport::default();
    let batch = config.batch_size.max(1);
    let total_steps = (config.epochs * train_set.len().div_ceil(batch)).max(1);
    let mut step = 0usize;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut loss_n) = (0.0, 0usize);
        for chunk in order.chunks(batch) {
            grads.zero();
            let mut contributing = 0usize;
            for &i in chunk {
                let mut tape = Tape::new(&model.store);
                let Some(loss) = model.episode_loss_on(&mut tape, &train_set[i], options)? else {
                    continue;
                };
                let l = tape.value(loss).get(0, 0);
                if !l.is_finite() {
                    return Err(NnError::DivergedLoss { epoch, episode: i });
                }
                tape.backward(loss, &mut grads);
                loss_sum += l;
                loss_n += 1;
                contributing += 1;
            }
            if contributing == 0 {
                continue;
            }
            grads.scale(1.0 / contributing as f64);
            if !grads.is_finite() {
                return Err(NnError::DivergedLoss {
                    epoch,
                    episode: chunk[0],
                });
            }
            let progress = step as f64 / total_steps as f64;
            adam.set_lr(config.adam.lr * (1.0 - (1.0 - config.final_lr_fraction) * progress));
            adam.step(&mut model.store, &grads);
            step += 1;
        }
        let valid = raw_recall(model, valid_set, options)?;
        let done = config
            .target_action_recall
            .zip(valid.recall_at_1(TurnKind::Action))
            .is_some_and(|(want, got)| got >= want);
        report.epochs.push(EpochReport {
            epoch,
            mean_loss: if loss_n > 0 { loss_sum / loss_n as f64 } else { 0.0 },
            valid,
        });
        if done {
            break;
        }
    }
    Ok(report)
}
