//! Attention scoring over the joined sentence and theme states, the softmax
//! weighting, and the context vector, with backward passes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{add_assign, axpy, dot, Tensor};

use super::ops::{softmax, tanh_vec};

/// Attention scoring parameters. The additive form scores
/// v·tanh(W·s_prev + U·h_j); the dot-product form scores the bilinear
/// s_prev·(W·h_j), with W rectangular so a decoder of width H can attend
/// over encoder states of width 2H.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AttentionParams {
    Additive { w: Tensor, u: Tensor, v: Tensor },
    Dot { w: Tensor },
}

impl AttentionParams {
    pub fn zeros_additive(attn_dim: usize, dec_dim: usize, enc_dim: usize) -> Self {
        AttentionParams::Additive {
            w: Tensor::zeros(&[attn_dim, dec_dim]),
            u: Tensor::zeros(&[attn_dim, enc_dim]),
            v: Tensor::zeros(&[attn_dim]),
        }
    }

    pub fn zeros_dot(dec_dim: usize, enc_dim: usize) -> Self {
        AttentionParams::Dot {
            w: Tensor::zeros(&[dec_dim, enc_dim]),
        }
    }

    fn check_dims(&self, dec_dim: usize, enc_dim: usize) -> Result<()> {
        let ok = match self {
            AttentionParams::Additive { w, u, v } => {
                w.cols() == dec_dim && u.cols() == enc_dim && w.rows() == v.len() && u.rows() == v.len()
            }
            AttentionParams::Dot { w } => w.rows() == dec_dim && w.cols() == enc_dim,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::shape(format!(
                "attention params do not match query width {dec_dim} / state width {enc_dim}"
            )))
        }
    }
}

/// Encoder output bundle: per-position sentence states h_1..h_L, the two
/// theme states m_1, m_2, and the sentence encoder's final forward/backward
/// concatenation used to initialize the decoder. All states have width 2H.
#[derive(Debug, Clone)]
pub struct EncoderStates {
    pub sentence_states: Vec<Tensor>,
    pub theme_states: [Tensor; 2],
    pub final_state: Tensor,
}

impl EncoderStates {
    /// Number of attention slots: one per source position plus the two
    /// theme slots, in that fixed order.
    pub fn num_slots(&self) -> usize {
        self.sentence_states.len() + 2
    }

    pub fn slot(&self, j: usize) -> &Tensor {
        let n = self.sentence_states.len();
        if j < n {
            &self.sentence_states[j]
        } else {
            &self.theme_states[j - n]
        }
    }

    pub fn state_width(&self) -> usize {
        self.theme_states[0].len()
    }

    /// Zero the theme states in place. Attention may still select the theme
    /// slots but they contribute nothing, which removes every path from the
    /// theme ids to the output.
    pub fn ablate_theme(&mut self) {
        for m in &mut self.theme_states {
            *m = m.zeros_like();
        }
    }
}

/// Gradient accumulator mirroring the slot layout of `EncoderStates`.
#[derive(Debug, Clone)]
pub struct StateGrads {
    pub slots: Vec<Vec<f64>>,
}

impl StateGrads {
    pub fn zeros_for(states: &EncoderStates) -> Self {
        StateGrads {
            slots: vec![vec![0.0; states.state_width()]; states.num_slots()],
        }
    }

    pub fn sentence(&self, states: &EncoderStates) -> &[Vec<f64>] {
        &self.slots[..states.sentence_states.len()]
    }

    pub fn theme(&self, states: &EncoderStates) -> &[Vec<f64>] {
        &self.slots[states.sentence_states.len()..]
    }
}

/// Forward cache for one scoring call.
#[derive(Debug, Clone)]
pub enum AttnCache {
    Additive {
        /// W·s_prev, shared across slots.
        query: Vec<f64>,
        /// tanh(W·s_prev + U·h_j) per slot.
        tanh_pre: Vec<Vec<f64>>,
    },
    Dot {
        /// W·h_j per slot.
        proj: Vec<Vec<f64>>,
    },
}

/// Score every slot against the decoder query s_prev. Returns the raw score
/// vector e (length L_src+2) and the cache for backward.
pub fn attn_scores(
    s_prev: &Tensor,
    states: &EncoderStates,
    p: &AttentionParams,
) -> Result<(Tensor, AttnCache)> {
    p.check_dims(s_prev.len(), states.state_width())?;
    let n = states.num_slots();
    match p {
        AttentionParams::Additive { w, u, v } => {
            let query = w.matvec(s_prev.data());
            let mut scores = Vec::with_capacity(n);
            let mut tanh_pre = Vec::with_capacity(n);
            for j in 0..n {
                let mut pre = u.matvec(states.slot(j).data());
                add_assign(&mut pre, &query);
                let t = tanh_vec(&pre);
                scores.push(dot(v.data(), &t));
                tanh_pre.push(t);
            }
            Ok((Tensor::vector(scores), AttnCache::Additive { query, tanh_pre }))
        }
        AttentionParams::Dot { w } => {
            let mut scores = Vec::with_capacity(n);
            let mut proj = Vec::with_capacity(n);
            for j in 0..n {
                let pj = w.matvec(states.slot(j).data());
                scores.push(dot(s_prev.data(), &pj));
                proj.push(pj);
            }
            Ok((Tensor::vector(scores), AttnCache::Dot { proj }))
        }
    }
}

/// Backward through `attn_scores`: accumulates parameter gradients and
/// per-slot state gradients, returns ds_prev.
pub fn attn_scores_backward(
    de: &[f64],
    s_prev: &Tensor,
    states: &EncoderStates,
    cache: &AttnCache,
    p: &AttentionParams,
    grads: &mut AttentionParams,
    dstates: &mut StateGrads,
) -> Vec<f64> {
    match (p, grads, cache) {
        (
            AttentionParams::Additive { w, u, v },
            AttentionParams::Additive {
                w: dw,
                u: du,
                v: dv,
            },
            AttnCache::Additive { tanh_pre, .. },
        ) => {
            let mut dquery = vec![0.0; v.len()];
            for (j, t) in tanh_pre.iter().enumerate() {
                axpy(dv.data_mut(), de[j], t);
                // dr = de_j · v ⊙ (1 − t²)
                let dr: Vec<f64> = v
                    .data()
                    .iter()
                    .zip(t)
                    .map(|(&vk, &tk)| de[j] * vk * (1.0 - tk * tk))
                    .collect();
                add_assign(&mut dquery, &dr);
                du.add_outer(&dr, states.slot(j).data());
                add_assign(&mut dstates.slots[j], &u.matvec_t(&dr));
            }
            dw.add_outer(&dquery, s_prev.data());
            w.matvec_t(&dquery)
        }
        (
            AttentionParams::Dot { w },
            AttentionParams::Dot { w: dw },
            AttnCache::Dot { proj },
        ) => {
            let mut ds_prev = vec![0.0; s_prev.len()];
            for (j, pj) in proj.iter().enumerate() {
                axpy(&mut ds_prev, de[j], pj);
                // dp_j = de_j · s_prev
                let dp: Vec<f64> = s_prev.data().iter().map(|&s| de[j] * s).collect();
                dw.add_outer(&dp, states.slot(j).data());
                add_assign(&mut dstates.slots[j], &w.matvec_t(&dp));
            }
            ds_prev
        }
        _ => unreachable!("attention variant mismatch between params, grads and cache"),
    }
}

/// Softmax of the scores: the attention weights α, a probability vector over
/// the L_src+2 slots.
pub fn attn_weights(scores: &Tensor) -> Tensor {
    Tensor::vector(softmax(scores.data()))
}

/// Weighted sum of slot states: c = Σ_j α_j · slot_j.
pub fn context_vector(alpha: &Tensor, states: &EncoderStates) -> Result<Tensor> {
    if alpha.len() != states.num_slots() {
        return Err(Error::shape(format!(
            "context_vector: {} weights for {} slots",
            alpha.len(),
            states.num_slots()
        )));
    }
    let mut ctx = vec![0.0; states.state_width()];
    for (j, &a) in alpha.data().iter().enumerate() {
        axpy(&mut ctx, a, states.slot(j).data());
    }
    Ok(Tensor::vector(ctx))
}

/// Backward through `context_vector`: returns dα and accumulates per-slot
/// state gradients.
pub fn context_vector_backward(
    dctx: &[f64],
    alpha: &Tensor,
    states: &EncoderStates,
    dstates: &mut StateGrads,
) -> Vec<f64> {
    let mut dalpha = vec![0.0; alpha.len()];
    for (j, da) in dalpha.iter_mut().enumerate() {
        *da = dot(states.slot(j).data(), dctx);
        axpy(&mut dstates.slots[j], alpha.data()[j], dctx);
    }
    dalpha
}
