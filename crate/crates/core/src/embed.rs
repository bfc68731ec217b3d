//! Skip-gram embeddings with negative sampling, trained by plain SGD in a
//! fixed deterministic order. These pretrain the embedding table that the
//! seq2seq model starts from (and keeps fine-tuning).

use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::corpus::Vocab;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::tensor::{axpy, dot, Tensor};
use crate::util::seeded_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedConfig {
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_negatives")]
    pub negatives: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_dim() -> usize {
    32
}
fn default_window() -> usize {
    2
}
fn default_negatives() -> usize {
    5
}
fn default_epochs() -> usize {
    5
}
fn default_learning_rate() -> f64 {
    0.025
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            dim: default_dim(),
            window: default_window(),
            negatives: default_negatives(),
            epochs: default_epochs(),
            learning_rate: default_learning_rate(),
            seed: 0,
        }
    }
}

impl EmbedConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dim", self.dim),
            ("window", self.window),
            ("negatives", self.negatives),
        ] {
            if v < 1 {
                return Err(Error::config(format!("embed {name} must be >= 1")));
            }
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::config("embed learning_rate must be > 0"));
        }
        Ok(())
    }
}

/// Input ("center") and output ("context") vector tables, V×dim each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    pub dim: usize,
    pub vocab_fingerprint: u64,
    pub input_vectors: Tensor,
    pub output_vectors: Tensor,
}

impl EmbeddingTable {
    /// Deterministic random initialization: both tables uniform on
    /// [−0.5/dim, 0.5/dim].
    pub fn init(vocab: &Vocab, cfg: &EmbedConfig) -> Result<Self> {
        cfg.validate()?;
        let v = vocab.len();
        let mut rng = seeded_rng(cfg.seed);
        let r = 0.5 / cfg.dim as f64;
        let mut fill = |t: &mut Tensor| {
            for x in t.data_mut() {
                *x = rng.random_range(-r..r);
            }
        };
        let mut input_vectors = Tensor::zeros(&[v, cfg.dim]);
        let mut output_vectors = Tensor::zeros(&[v, cfg.dim]);
        fill(&mut input_vectors);
        fill(&mut output_vectors);
        Ok(EmbeddingTable {
            dim: cfg.dim,
            vocab_fingerprint: vocab.fingerprint(),
            input_vectors,
            output_vectors,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let table: EmbeddingTable = serde_json::from_str(&text)
            .map_err(|e| Error::data(format!("invalid embedding file {}: {e}", path.display())))?;
        if table.input_vectors.shape() != table.output_vectors.shape()
            || table.input_vectors.cols() != table.dim
        {
            return Err(Error::shape("embedding table shapes are inconsistent"));
        }
        Ok(table)
    }
}

/// Loss and gradients of one skip-gram training triple:
/// loss = −log σ(u_ctx·v_c) − Σ_neg log σ(−u_neg·v_c).
/// Returns (loss, d v_c, d u_ctx, d u_neg per negative).
pub fn pair_loss_grad(
    v_center: &[f64],
    u_context: &[f64],
    u_negatives: &[&[f64]],
) -> (f64, Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let sig = crate::kernels::sigmoid;

    let s_pos = sig(dot(u_context, v_center));
    // ln σ can underflow to -inf only for astronomically negative scores;
    // clamp keeps the loss finite.
    let mut loss = -(s_pos.max(1e-300)).ln();
    let g_pos = s_pos - 1.0;

    let mut d_center: Vec<f64> = u_context.iter().map(|&u| g_pos * u).collect();
    let d_context: Vec<f64> = v_center.iter().map(|&v| g_pos * v).collect();

    let mut d_negs = Vec::with_capacity(u_negatives.len());
    for &u_neg in u_negatives {
        let s_neg = sig(-dot(u_neg, v_center));
        loss -= (s_neg.max(1e-300)).ln();
        let g_neg = 1.0 - s_neg; // σ(u·v)
        axpy(&mut d_center, g_neg, u_neg);
        d_negs.push(v_center.iter().map(|&v| g_neg * v).collect());
    }
    (loss, d_center, d_context, d_negs)
}

/// Cumulative unigram^(3/4) sampling table.
struct NegativeTable {
    cumulative: Vec<f64>,
}

impl NegativeTable {
    fn build(counts: &[u64]) -> Result<Self> {
        let mut cumulative = Vec::with_capacity(counts.len());
        let mut acc = 0.0;
        for &c in counts {
            acc += (c as f64).powf(0.75);
            cumulative.push(acc);
        }
        if acc <= 0.0 {
            return Err(Error::data("sgns: corpus has no tokens to sample from"));
        }
        Ok(NegativeTable { cumulative })
    }

    fn sample(&self, rng: &mut crate::util::Rng) -> u32 {
        let total = *self.cumulative.last().unwrap();
        let u = rng.random::<f64>() * total;
        match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&u).unwrap())
        {
            Ok(i) | Err(i) => (i.min(self.cumulative.len() - 1)) as u32,
        }
    }
}

/// Train skip-gram embeddings over encoded lines. Pairs are visited in
/// deterministic order by a single writer, so the result depends only on the
/// corpus, the config, and the seed.
pub fn sgns_train(corpus: &[Vec<u32>], vocab: &Vocab, cfg: &EmbedConfig) -> Result<EmbeddingTable> {
    cfg.validate()?;
    let total_tokens: usize = corpus.iter().map(Vec::len).sum();
    if total_tokens < cfg.window + 1 {
        return Err(Error::data(format!(
            "sgns: corpus has {total_tokens} tokens, need at least window+1 = {}",
            cfg.window + 1
        )));
    }
    let v = vocab.len();
    for line in corpus {
        if let Some(&id) = line.iter().find(|&&id| id as usize >= v) {
            return Err(Error::data(format!("sgns: token id {id} out of range")));
        }
    }

    let mut table = EmbeddingTable::init(vocab, cfg)?;
    let mut counts = vec![0u64; v];
    for line in corpus {
        for &id in line {
            counts[id as usize] += 1;
        }
    }
    let neg_table = NegativeTable::build(&counts)?;
    let mut rng = seeded_rng(crate::util::derive_seed(cfg.seed, "sgns-negatives"));
    let lr = cfg.learning_rate;

    for _epoch in 0..cfg.epochs {
        for line in corpus {
            for (i, &center) in line.iter().enumerate() {
                let lo = i.saturating_sub(cfg.window);
                let hi = (i + cfg.window).min(line.len() - 1);
                for (j, &context) in line.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    let mut negs = Vec::with_capacity(cfg.negatives);
                    for _ in 0..cfg.negatives {
                        // Resample a few times rather than let the positive
                        // context cancel its own update.
                        let mut neg = neg_table.sample(&mut rng);
                        for _ in 0..10 {
                            if neg != context {
                                break;
                            }
                            neg = neg_table.sample(&mut rng);
                        }
                        if neg != context {
                            negs.push(neg as usize);
                        }
                    }

                    let v_c = table.input_vectors.row(center as usize).to_vec();
                    let u_ctx = table.output_vectors.row(context as usize).to_vec();
                    let neg_rows: Vec<&[f64]> = {
                        // Collect owned copies; negatives may repeat.
                        negs.iter()
                            .map(|&n| table.output_vectors.row(n))
                            .collect()
                    };
                    let (_, d_c, d_ctx, d_negs) = pair_loss_grad(&v_c, &u_ctx, &neg_rows);

                    axpy(table.input_vectors.row_mut(center as usize), -lr, &d_c);
                    axpy(table.output_vectors.row_mut(context as usize), -lr, &d_ctx);
                    for (&n, d_n) in negs.iter().zip(&d_negs) {
                        axpy(table.output_vectors.row_mut(n), -lr, d_n);
                    }
                }
            }
        }
    }
    Ok(table)
}

/// Copy the pretrained input vectors into the model's embedding parameter.
/// Everything else is untouched; the embeddings remain ordinary trainable
/// parameters afterwards.
pub fn load_pretrained(
    table: &EmbeddingTable,
    vocab: &Vocab,
    params: &mut ModelParams,
) -> Result<()> {
    if table.vocab_fingerprint != vocab.fingerprint() {
        return Err(Error::data(
            "pretrained embeddings were built against a different vocabulary",
        ));
    }
    if table.input_vectors.shape() != params.embedding.shape() {
        return Err(Error::shape(format!(
            "pretrained embeddings are {:?}, model embedding is {:?}",
            table.input_vectors.shape(),
            params.embedding.shape()
        )));
    }
    params.embedding = table.input_vectors.clone();
    Ok(())
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot(a, b) / (na * nb)
}
