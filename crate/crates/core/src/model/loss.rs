//! Batched teacher-forced loss. Per-example forward/backward runs in
//! parallel when the `parallel` feature is on; the gradient reduction always
//! folds per-example contributions in example order so the result is
//! bit-identical with and without threads.

use crate::corpus::SentencePair;
use crate::error::{Error, Result};
use crate::util::par_map;

use super::net::example_loss_and_grads;
use super::params::{ModelConfig, ModelParams};

/// Mean per-token cross-entropy of the batch plus the matching gradients.
/// `theme_keywords[theme]` holds the two keyword token ids for each theme.
pub fn forward_loss(
    batch: &[SentencePair],
    theme_keywords: &[[u32; 2]],
    params: &ModelParams,
    cfg: &ModelConfig,
) -> Result<(f64, ModelParams)> {
    let per_example = batch_example_grads(batch, theme_keywords, params, cfg)?;
    reduce_examples(per_example, params)
}

/// Sequential reference path: same arithmetic, no thread pool. Kept callable
/// regardless of features so the two paths can be compared directly.
pub fn forward_loss_serial(
    batch: &[SentencePair],
    theme_keywords: &[[u32; 2]],
    params: &ModelParams,
    cfg: &ModelConfig,
) -> Result<(f64, ModelParams)> {
    validate_batch(batch, theme_keywords, params, cfg)?;
    let per_example = batch
        .iter()
        .map(|pair| example_grads(pair, theme_keywords, params))
        .collect::<Vec<_>>();
    reduce_examples(per_example, params)
}

fn validate_batch(
    batch: &[SentencePair],
    theme_keywords: &[[u32; 2]],
    params: &ModelParams,
    cfg: &ModelConfig,
) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::data("forward_loss: empty batch"));
    }
    if params.embedding.rows() != cfg.vocab_size {
        return Err(Error::shape(format!(
            "params built for vocab {}, config says {}",
            params.embedding.rows(),
            cfg.vocab_size
        )));
    }
    if theme_keywords.is_empty() {
        return Err(Error::data("forward_loss: no theme keywords"));
    }
    Ok(())
}

type ExampleOut = Result<(f64, usize, ModelParams)>;

fn example_grads(
    pair: &SentencePair,
    theme_keywords: &[[u32; 2]],
    params: &ModelParams,
) -> ExampleOut {
    let kw = *theme_keywords.get(pair.theme).ok_or_else(|| {
        Error::data(format!(
            "pair theme {} out of range ({} themes)",
            pair.theme,
            theme_keywords.len()
        ))
    })?;
    let mut grads = params.zeros_like();
    let loss = example_loss_and_grads(pair, kw, params, &mut grads)?;
    Ok((loss.loss_sum, loss.n_tokens, grads))
}

fn batch_example_grads(
    batch: &[SentencePair],
    theme_keywords: &[[u32; 2]],
    params: &ModelParams,
    cfg: &ModelConfig,
) -> Result<Vec<ExampleOut>> {
    validate_batch(batch, theme_keywords, params, cfg)?;
    Ok(par_map(batch, |pair| {
        example_grads(pair, theme_keywords, params)
    }))
}

fn reduce_examples(per_example: Vec<ExampleOut>, params: &ModelParams) -> Result<(f64, ModelParams)> {
    let mut grads = params.zeros_like();
    let mut loss_sum = 0.0;
    let mut tokens = 0usize;
    for out in per_example {
        let (l, n, g) = out?;
        loss_sum += l;
        tokens += n;
        grads.add_scaled(1.0, &g);
    }
    if tokens == 0 {
        return Err(Error::data("forward_loss: batch has no target tokens"));
    }
    let scale = 1.0 / tokens as f64;
    grads.scale(scale);
    let loss = loss_sum * scale;
    if !loss.is_finite() {
        return Err(Error::Numeric(format!("batch loss is not finite: {loss}")));
    }
    Ok((loss, grads))
}
