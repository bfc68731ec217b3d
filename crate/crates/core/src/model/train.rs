//! The training loop: seeded shuffling, mini-batches through the batched
//! loss, AdaDelta updates, and a per-epoch hook for checkpointing.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::SentencePair;
use crate::error::{Error, Result};
use crate::util::seeded_rng;

use super::adadelta::{adadelta_step, AdaDeltaConfig, AdaDeltaState};
use super::loss::forward_loss;
use super::params::{ModelConfig, ModelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    /// Optional global gradient-norm clip.
    #[serde(default)]
    pub clip_norm: Option<f64>,
    #[serde(default = "default_shuffle")]
    pub shuffle: bool,
    #[serde(default)]
    pub adadelta: AdaDeltaConfig,
}

fn default_batch_size() -> usize {
    8
}
fn default_shuffle() -> bool {
    true
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: default_batch_size(),
            seed: 0,
            clip_norm: None,
            shuffle: true,
            adadelta: AdaDeltaConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 1 {
            return Err(Error::config("batch_size must be >= 1"));
        }
        self.adadelta.validate()
    }
}

/// Everything training needs besides configuration: the encoded pairs, the
/// two keyword ids per theme, and whether targets were stored reversed.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub pairs: Vec<SentencePair>,
    pub theme_keywords: Vec<[u32; 2]>,
    pub target_reversed: bool,
}

impl Dataset {
    pub fn validate(&self) -> Result<()> {
        if self.pairs.is_empty() {
            return Err(Error::data("dataset has no pairs"));
        }
        if self.theme_keywords.is_empty() {
            return Err(Error::data("dataset has no theme keywords"));
        }
        for (i, p) in self.pairs.iter().enumerate() {
            if p.theme >= self.theme_keywords.len() {
                return Err(Error::data(format!(
                    "pair {i} has theme {} but only {} themes are known",
                    p.theme,
                    self.theme_keywords.len()
                )));
            }
            if p.trg_reversed != self.target_reversed {
                return Err(Error::data(format!(
                    "pair {i} reversal flag disagrees with the dataset flag"
                )));
            }
        }
        Ok(())
    }
}

/// Snapshot handed to the per-epoch hook.
pub struct EpochReport<'a> {
    pub epoch: usize,
    pub mean_loss: f64,
    pub params: &'a ModelParams,
    pub opt_state: &'a AdaDeltaState,
    pub history: &'a [f64],
}

pub struct TrainOutcome {
    pub params: ModelParams,
    pub opt_state: AdaDeltaState,
    pub loss_history: Vec<f64>,
}

/// Train from the given starting parameters (freshly initialized or with
/// pretrained embeddings already loaded). `on_epoch` runs after every epoch;
/// returning an error from it aborts training.
pub fn train_with<F>(
    mut params: ModelParams,
    dataset: &Dataset,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    mut on_epoch: F,
) -> Result<TrainOutcome>
where
    F: FnMut(&EpochReport<'_>) -> Result<()>,
{
    dataset.validate()?;
    train_cfg.validate()?;
    model_cfg.validate()?;

    let mut opt_state = AdaDeltaState::new(&params, train_cfg.adadelta)?;
    let mut rng = seeded_rng(train_cfg.seed);
    let mut order: Vec<usize> = (0..dataset.pairs.len()).collect();
    let mut history = Vec::with_capacity(train_cfg.epochs);

    for epoch in 0..train_cfg.epochs {
        if train_cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let mut epoch_loss_sum = 0.0;
        let mut epoch_tokens = 0usize;
        for chunk in order.chunks(train_cfg.batch_size) {
            let batch: Vec<SentencePair> =
                chunk.iter().map(|&i| dataset.pairs[i].clone()).collect();
            let batch_tokens: usize = batch.iter().map(|p| p.trg.len() + 1).sum();
            let (loss, mut grads) =
                forward_loss(&batch, &dataset.theme_keywords, &params, model_cfg)?;
            if let Some(max_norm) = train_cfg.clip_norm {
                let norm = grads.sq_norm().sqrt();
                if norm > max_norm {
                    grads.scale(max_norm / norm);
                }
            }
            adadelta_step(&mut params, &grads, &mut opt_state)?;
            epoch_loss_sum += loss * batch_tokens as f64;
            epoch_tokens += batch_tokens;
        }
        let mean_loss = epoch_loss_sum / epoch_tokens as f64;
        if !mean_loss.is_finite() {
            return Err(Error::Numeric(format!(
                "epoch {epoch} loss is not finite: {mean_loss}"
            )));
        }
        history.push(mean_loss);
        on_epoch(&EpochReport {
            epoch,
            mean_loss,
            params: &params,
            opt_state: &opt_state,
            history: &history,
        })?;
    }

    Ok(TrainOutcome {
        params,
        opt_state,
        loss_history: history,
    })
}

/// Initialize parameters from the model seed and train.
pub fn train(
    dataset: &Dataset,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    let params = super::params::init_params(model_cfg, train_cfg.seed)?;
    train_with(params, dataset, model_cfg, train_cfg, |_| Ok(()))
}
