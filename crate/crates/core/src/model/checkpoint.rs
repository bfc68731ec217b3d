//! Checkpoint serialization. The on-disk form is JSON with the model and
//! train configs, training progress, a flat name→tensor parameter map, and
//! (optionally) the optimizer accumulators. Tensors round-trip bit-exactly.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::adadelta::AdaDeltaState;
use super::params::{ModelConfig, ModelParams};
use super::train::TrainConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizerState {
    pub accum_grad: BTreeMap<String, Tensor>,
    pub accum_update: BTreeMap<String, Tensor>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub model_config: ModelConfig,
    pub train_config: TrainConfig,
    pub epoch: usize,
    pub loss_history: Vec<f64>,
    /// Whether the training targets were stored reversed; generation must
    /// undo the reversal exactly when this is set.
    pub target_reversed: bool,
    /// Two keyword token ids per theme, resolved at train time.
    pub theme_keywords: Vec<[u32; 2]>,
    /// Fingerprint of the vocabulary the ids refer to.
    pub vocab_fingerprint: u64,
    pub params: BTreeMap<String, Tensor>,
    pub optimizer_state: Option<OptimizerState>,
}

impl Checkpoint {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        model_config: ModelConfig,
        train_config: TrainConfig,
        epoch: usize,
        loss_history: Vec<f64>,
        target_reversed: bool,
        theme_keywords: Vec<[u32; 2]>,
        vocab_fingerprint: u64,
        params: &ModelParams,
        opt_state: Option<&AdaDeltaState>,
    ) -> Self {
        Checkpoint {
            model_config,
            train_config,
            epoch,
            loss_history,
            target_reversed,
            theme_keywords,
            vocab_fingerprint,
            params: params.to_map(),
            optimizer_state: opt_state.map(|s| OptimizerState {
                accum_grad: s.accum_grad.to_map(),
                accum_update: s.accum_update.to_map(),
            }),
        }
    }

    /// Materialize the parameter struct, validating every shape against the
    /// declared model config.
    pub fn to_params(&self) -> Result<ModelParams> {
        ModelParams::from_map(&self.model_config, &self.params)
    }

    /// Materialize the optimizer state if it was saved.
    pub fn to_opt_state(&self) -> Result<Option<AdaDeltaState>> {
        match &self.optimizer_state {
            None => Ok(None),
            Some(os) => {
                let accum_grad = ModelParams::from_map(&self.model_config, &os.accum_grad)?;
                let accum_update = ModelParams::from_map(&self.model_config, &os.accum_update)?;
                Ok(Some(AdaDeltaState {
                    accum_grad,
                    accum_update,
                    cfg: self.train_config.adadelta,
                }))
            }
        }
    }
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    // Write to a sibling temp file first so a crash cannot leave a torn
    // checkpoint at the final path.
    let tmp = path.with_extension("tmp");
    let json = serde_json::to_string(ckpt)?;
    std::fs::write(&tmp, json)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path)?;
    let ckpt: Checkpoint = serde_json::from_str(&text)
        .map_err(|e| Error::data(format!("invalid checkpoint {}: {e}", path.display())))?;
    // Surface shape problems at load time, not first use.
    ckpt.to_params()?;
    Ok(ckpt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::adadelta::AdaDeltaConfig;
    use crate::model::params::init_params;

    fn make() -> (ModelConfig, Checkpoint) {
        let cfg = ModelConfig {
            embed_dim: 4,
            hidden_dim: 3,
            ..ModelConfig::new(12)
        };
        let params = init_params(&cfg, 77).unwrap();
        let opt = AdaDeltaState::new(&params, AdaDeltaConfig::default()).unwrap();
        let ckpt = Checkpoint::new(
            cfg.clone(),
            TrainConfig::default(),
            3,
            vec![2.5, 2.1, 1.9],
            true,
            vec![[4, 5], [6, 7]],
            0xabcd,
            &params,
            Some(&opt),
        );
        (cfg, ckpt)
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt.json");
        let (_, ckpt) = make();
        save_checkpoint(&path, &ckpt).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(ckpt.params, back.params);
        assert_eq!(ckpt.loss_history, back.loss_history);
        assert_eq!(ckpt.theme_keywords, back.theme_keywords);
        let p1 = ckpt.to_params().unwrap();
        let p2 = back.to_params().unwrap();
        assert_eq!(p1, p2);
    }

    #[test]
    fn truncated_file_is_an_error_not_a_crash() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt.json");
        let (_, ckpt) = make();
        save_checkpoint(&path, &ckpt).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, &text[..text.len() / 2]).unwrap();
        assert!(load_checkpoint(&path).is_err());
    }

    #[test]
    fn vocab_size_mismatch_names_the_field() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt.json");
        let (_, mut ckpt) = make();
        ckpt.model_config.vocab_size = 99;
        save_checkpoint(&path, &ckpt).unwrap();
        let err = load_checkpoint(&path).unwrap_err().to_string();
        assert!(
            err.contains("embedding") || err.contains("output"),
            "error should point at the mismatched tensor: {err}"
        );
    }
}
