//! The run configuration file: one JSON document holding every stage's
//! settings plus the file paths that connect them. A single global seed
//! deterministically derives each stage's seed.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use lyricgen_core::corpus::CleanConfig;
use lyricgen_core::embed::EmbedConfig;
use lyricgen_core::error::{Error, Result};
use lyricgen_core::generate::DecodeStrategy;
use lyricgen_core::lda::LdaConfig;
use lyricgen_core::model::{AttentionVariant, ModelConfig, TrainConfig};
use lyricgen_core::util::derive_seed;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Paths {
    #[serde(default)]
    pub raw_dir: Option<PathBuf>,
    #[serde(default)]
    pub stopwords: Option<PathBuf>,
    #[serde(default = "default_pairs")]
    pub pairs: PathBuf,
    #[serde(default = "default_vocab")]
    pub vocab: PathBuf,
    #[serde(default = "default_lda_model")]
    pub lda_model: PathBuf,
    #[serde(default = "default_embeddings")]
    pub embeddings: PathBuf,
    #[serde(default = "default_checkpoint")]
    pub checkpoint: PathBuf,
}

fn default_pairs() -> PathBuf {
    "pairs.jsonl".into()
}
fn default_vocab() -> PathBuf {
    "vocab.json".into()
}
fn default_lda_model() -> PathBuf {
    "lda_model.json".into()
}
fn default_embeddings() -> PathBuf {
    "embeddings.json".into()
}
fn default_checkpoint() -> PathBuf {
    "model.ckpt.json".into()
}

/// Model dimensions as configured; `vocab_size` is filled in from the vocab
/// file when the model is actually built.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSettings {
    #[serde(default = "d_embed")]
    pub embed_dim: usize,
    #[serde(default = "d_hidden")]
    pub hidden_dim: usize,
    #[serde(default)]
    pub attention_dim: Option<usize>,
    #[serde(default = "d_variant")]
    pub attention_variant: AttentionVariant,
    #[serde(default)]
    pub proj_dim: Option<usize>,
    #[serde(default = "d_init_range")]
    pub init_range: f64,
    #[serde(default)]
    pub tie_theme_sentence_encoders: bool,
}

fn d_embed() -> usize {
    32
}
fn d_hidden() -> usize {
    64
}
fn d_variant() -> AttentionVariant {
    AttentionVariant::Additive
}
fn d_init_range() -> f64 {
    0.1
}

impl Default for ModelSettings {
    fn default() -> Self {
        ModelSettings {
            embed_dim: d_embed(),
            hidden_dim: d_hidden(),
            attention_dim: None,
            attention_variant: d_variant(),
            proj_dim: None,
            init_range: d_init_range(),
            tie_theme_sentence_encoders: false,
        }
    }
}

impl ModelSettings {
    pub fn to_config(&self, vocab_size: usize) -> ModelConfig {
        ModelConfig {
            vocab_size,
            embed_dim: self.embed_dim,
            hidden_dim: self.hidden_dim,
            attention_dim: self.attention_dim,
            attention_variant: self.attention_variant,
            proj_dim: self.proj_dim,
            init_range: self.init_range,
            tie_theme_sentence_encoders: self.tie_theme_sentence_encoders,
        }
    }
}

/// Options for `prepare` that are not line-cleaning rules.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrepareSettings {
    /// Fixed theme id for every song; when absent, themes come from LDA
    /// inference against `paths.lda_model`.
    #[serde(default)]
    pub theme: Option<usize>,
    #[serde(default = "d_true")]
    pub reverse_target: bool,
    #[serde(default)]
    pub reverse_src: bool,
    #[serde(default = "d_min_count")]
    pub min_count: usize,
    /// Gibbs sweeps per song during theme inference.
    #[serde(default = "d_infer_sweeps")]
    pub infer_sweeps: usize,
}

fn d_true() -> bool {
    true
}
fn d_min_count() -> usize {
    5
}
fn d_infer_sweeps() -> usize {
    50
}

impl Default for PrepareSettings {
    fn default() -> Self {
        PrepareSettings {
            theme: None,
            reverse_target: true,
            reverse_src: false,
            min_count: d_min_count(),
            infer_sweeps: d_infer_sweeps(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerateSettings {
    #[serde(default)]
    pub theme_id: usize,
    #[serde(default)]
    pub seed_line: Option<String>,
    #[serde(default = "d_n_lines")]
    pub n_lines: usize,
    #[serde(default)]
    pub decode: DecodeStrategy,
    #[serde(default = "d_max_len")]
    pub max_len: usize,
}

fn d_n_lines() -> usize {
    4
}
fn d_max_len() -> usize {
    18
}

impl Default for GenerateSettings {
    fn default() -> Self {
        GenerateSettings {
            theme_id: 0,
            seed_line: None,
            n_lines: d_n_lines(),
            decode: DecodeStrategy::Greedy,
            max_len: d_max_len(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub clean: CleanConfig,
    #[serde(default)]
    pub prepare: PrepareSettings,
    #[serde(default)]
    pub lda: LdaConfig,
    #[serde(default)]
    pub embed: EmbedConfig,
    #[serde(default)]
    pub model: ModelSettings,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub generate: GenerateSettings,
    /// Optional fixed theme keywords (one two-character string per theme),
    /// overriding the LDA-derived rank-1 phrases during training.
    #[serde(default)]
    pub theme_keywords: Option<Vec<String>>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("invalid config {}: {e}", path.display())))
    }

    /// Stage seeds all derive from the one global seed.
    pub fn seed_for(&self, stage: &str) -> u64 {
        derive_seed(self.seed, stage)
    }
}
