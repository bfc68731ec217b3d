//! Forward and backward passes of the multi-channel seq2seq network: a theme
//! Bi-LSTM and a sentence Bi-LSTM feed an attention LSTM decoder.
//!
//! The decoder follows the two-stream wiring: the LSTM input at step t is
//! [embed(y_{t−1}) ; c_{t−1}], the attention query is s_{t−1}, and the
//! next-token logits come from a ReLU projection of [s_t ; c_t].

use crate::corpus::{SentencePair, EOS, PAD, SOS};
use crate::error::{Error, Result};
use crate::kernels::{
    affine_backward, attn_scores, attn_scores_backward, attn_weights, bilstm_backward,
    bilstm_encode, context_vector, context_vector_backward, lstm_step, lstm_step_backward,
    relu, relu_backward, softmax_backward, softmax_xent, tanh_backward, AttnCache, BiLstmCache,
    EncoderStates, LstmCache, StateGrads,
};
use crate::tensor::{add_assign, Tensor};

use super::params::ModelParams;

fn embed_row(params: &ModelParams, id: u32) -> Result<Tensor> {
    let v = params.embedding.rows();
    if (id as usize) >= v {
        return Err(Error::data(format!("token id {id} out of range (vocab {v})")));
    }
    Ok(Tensor::vector(params.embedding.row(id as usize).to_vec()))
}

/// Caches kept by `encode` for the backward pass.
pub struct EncodeCache {
    sent_cache: BiLstmCache,
    theme_cache: BiLstmCache,
}

/// Run both encoder channels. `theme_ids` must hold exactly the two keyword
/// characters; the sentence channel sees the raw source tokens without
/// SOS/EOS framing.
pub fn encode(
    src_ids: &[u32],
    theme_ids: &[u32],
    params: &ModelParams,
) -> Result<(EncoderStates, EncodeCache)> {
    if src_ids.is_empty() {
        return Err(Error::data("encode: empty source line"));
    }
    if theme_ids.len() != 2 {
        return Err(Error::data(format!(
            "encode: expected exactly 2 theme keyword ids, got {}",
            theme_ids.len()
        )));
    }
    let src_emb: Vec<Tensor> = src_ids
        .iter()
        .map(|&id| embed_row(params, id))
        .collect::<Result<_>>()?;
    let theme_emb: Vec<Tensor> = theme_ids
        .iter()
        .map(|&id| embed_row(params, id))
        .collect::<Result<_>>()?;

    let (sentence_states, sent_cache) =
        bilstm_encode(&src_emb, &params.enc_sent_fwd, &params.enc_sent_bwd)?;
    let (theme_states, theme_cache) =
        bilstm_encode(&theme_emb, params.theme_fwd(), params.theme_bwd())?;

    let h = params.enc_sent_fwd.hidden_dim();
    let last = sentence_states.len() - 1;
    let mut final_state = sentence_states[last].data()[..h].to_vec();
    final_state.extend_from_slice(&sentence_states[0].data()[h..2 * h]);

    let states = EncoderStates {
        sentence_states,
        theme_states: [theme_states[0].clone(), theme_states[1].clone()],
        final_state: Tensor::vector(final_state),
    };
    Ok((states, EncodeCache { sent_cache, theme_cache }))
}

/// Decoder recurrence state: hidden state s_t, the LSTM cell, and the last
/// context vector c_t.
#[derive(Debug, Clone)]
pub struct DecoderState {
    pub h: Tensor,
    pub cell: Tensor,
    pub ctx: Tensor,
}

/// s_0 = tanh(affine(final encoder state)); c_0 and the cell start at zero.
pub fn init_decoder(states: &EncoderStates, params: &ModelParams) -> Result<DecoderState> {
    let pre = crate::kernels::affine(&states.final_state, &params.dec_init_w, &params.dec_init_b)?;
    let h = Tensor::vector(pre.data().iter().map(|v| v.tanh()).collect());
    let hidden = params.decoder.hidden_dim();
    Ok(DecoderState {
        h,
        cell: Tensor::zeros(&[hidden]),
        ctx: Tensor::zeros(&[2 * params.enc_sent_fwd.hidden_dim()]),
    })
}

/// Everything one decode step must remember for backward.
pub struct StepCache {
    y_prev: u32,
    s_prev: Tensor,
    lstm: LstmCache,
    attn: AttnCache,
    alpha: Tensor,
    /// [s_t ; c_t], the pre-logit projection input.
    cat: Vec<f64>,
    /// Pre-ReLU activations of the projection.
    pre_act: Vec<f64>,
    /// Post-ReLU activations.
    z: Vec<f64>,
}

/// One decode step. Returns the vocabulary logits, the updated decoder
/// state, the attention weights over the L_src+2 slots, and the backward
/// cache.
pub fn decode_step(
    state: &DecoderState,
    y_prev: u32,
    states: &EncoderStates,
    params: &ModelParams,
) -> Result<(Tensor, DecoderState, Tensor, StepCache)> {
    let emb = embed_row(params, y_prev)?;
    let mut x = emb.data().to_vec();
    x.extend_from_slice(state.ctx.data());
    let x = Tensor::vector(x);

    let (s_t, cell_t, lstm_cache) = lstm_step(&x, &state.h, &state.cell, &params.decoder)?;

    let (scores, attn_cache) = attn_scores(&state.h, states, &params.attention)?;
    let alpha = attn_weights(&scores);
    let ctx_t = context_vector(&alpha, states)?;

    let mut cat = s_t.data().to_vec();
    cat.extend_from_slice(ctx_t.data());
    let pre =
        crate::kernels::affine(&Tensor::vector(cat.clone()), &params.pre_logit_w, &params.pre_logit_b)?;
    let z = relu(pre.data());
    let logits = crate::kernels::affine(&Tensor::vector(z.clone()), &params.output_w, &params.output_b)?;

    let cache = StepCache {
        y_prev,
        s_prev: state.h.clone(),
        lstm: lstm_cache,
        attn: attn_cache,
        alpha: alpha.clone(),
        cat,
        pre_act: pre.data().to_vec(),
        z,
    };
    let next = DecoderState {
        h: s_t,
        cell: cell_t,
        ctx: ctx_t,
    };
    Ok((logits, next, alpha, cache))
}

/// Loss bookkeeping for one pair: the summed token cross-entropies and the
/// number of target positions (L_trg plus the EOS target).
#[derive(Debug, Clone, Copy)]
pub struct ExampleLoss {
    pub loss_sum: f64,
    pub n_tokens: usize,
}

struct ExampleTape {
    states: EncoderStates,
    enc_cache: EncodeCache,
    s0: Tensor,
    steps: Vec<StepCache>,
    /// One entry per step; None where the target was PAD and therefore
    /// masked out of the loss.
    dlogits: Vec<Option<Vec<f64>>>,
}

fn forward_example(
    pair: &SentencePair,
    theme_ids: [u32; 2],
    params: &ModelParams,
) -> Result<(ExampleLoss, ExampleTape)> {
    if pair.trg.is_empty() {
        return Err(Error::data("pair has an empty target"));
    }
    let (states, enc_cache) = encode(&pair.src, &theme_ids, params)?;
    let mut state = init_decoder(&states, params)?;
    let s0 = state.h.clone();

    // Teacher forcing: inputs are SOS followed by the gold target, targets
    // are the gold target followed by EOS.
    let inputs: Vec<u32> = std::iter::once(SOS).chain(pair.trg.iter().copied()).collect();
    let targets: Vec<u32> = pair.trg.iter().copied().chain(std::iter::once(EOS)).collect();

    let mut steps = Vec::with_capacity(inputs.len());
    let mut dlogits = Vec::with_capacity(inputs.len());
    let mut loss_sum = 0.0;
    let mut n_tokens = 0usize;
    for (&y_prev, &target) in inputs.iter().zip(&targets) {
        let (logits, next, _alpha, cache) = decode_step(&state, y_prev, &states, params)?;
        if target == PAD {
            dlogits.push(None);
        } else {
            let (loss, grad) = softmax_xent(logits.data(), target as usize)?;
            loss_sum += loss;
            n_tokens += 1;
            dlogits.push(Some(grad));
        }
        steps.push(cache);
        state = next;
    }

    Ok((
        ExampleLoss { loss_sum, n_tokens },
        ExampleTape {
            states,
            enc_cache,
            s0,
            steps,
            dlogits,
        },
    ))
}

/// Forward pass only: the summed cross-entropy of one pair. This is the
/// scalar that the finite-difference checks differentiate.
pub fn example_loss(
    pair: &SentencePair,
    theme_ids: [u32; 2],
    params: &ModelParams,
) -> Result<ExampleLoss> {
    forward_example(pair, theme_ids, params).map(|(l, _)| l)
}

/// Forward plus full backward for one pair. Gradients of the *summed* token
/// losses accumulate into `grads` (callers normalize per token).
pub fn example_loss_and_grads(
    pair: &SentencePair,
    theme_ids: [u32; 2],
    params: &ModelParams,
    grads: &mut ModelParams,
) -> Result<ExampleLoss> {
    let (loss, tape) = forward_example(pair, theme_ids, params)?;
    backward_example(pair, theme_ids, &tape, params, grads);
    Ok(loss)
}

fn backward_example(
    pair: &SentencePair,
    theme_ids: [u32; 2],
    tape: &ExampleTape,
    params: &ModelParams,
    grads: &mut ModelParams,
) {
    let hidden = params.decoder.hidden_dim();
    let e_dim = params.embedding.cols();
    let enc_width = 2 * params.enc_sent_fwd.hidden_dim();

    let states = &tape.states;
    let mut dstates = StateGrads::zeros_for(states);
    let mut ds_next = vec![0.0; hidden];
    let mut dcell_next = vec![0.0; hidden];
    let mut dctx_next = vec![0.0; enc_width];

    for t in (0..tape.steps.len()).rev() {
        let sc = &tape.steps[t];
        let mut ds_t = ds_next;
        let mut dctx_t = dctx_next;

        if let Some(dlog) = &tape.dlogits[t] {
            let dz = affine_backward(dlog, &sc.z, &params.output_w, &mut grads.output_w, &mut grads.output_b);
            let dpre = relu_backward(&dz, &sc.pre_act);
            let dcat = affine_backward(
                &dpre,
                &sc.cat,
                &params.pre_logit_w,
                &mut grads.pre_logit_w,
                &mut grads.pre_logit_b,
            );
            add_assign(&mut ds_t, &dcat[..hidden]);
            add_assign(&mut dctx_t, &dcat[hidden..]);
        }

        // Context path: c_t = Σ α_j · slot_j with α = softmax(scores(s_{t−1})).
        let dalpha = context_vector_backward(&dctx_t, &sc.alpha, states, &mut dstates);
        let de = softmax_backward(&dalpha, sc.alpha.data());
        let mut ds_prev = attn_scores_backward(
            &de,
            &sc.s_prev,
            states,
            &sc.attn,
            &params.attention,
            &mut grads.attention,
            &mut dstates,
        );

        // Recurrence path through the decoder LSTM.
        let (dx, ds_prev_lstm, dcell_prev) =
            lstm_step_backward(&ds_t, &dcell_next, &sc.lstm, &params.decoder, &mut grads.decoder);
        add_assign(&mut ds_prev, &ds_prev_lstm);

        add_assign(grads.embedding.row_mut(sc.y_prev as usize), &dx[..e_dim]);
        dctx_next = dx[e_dim..].to_vec();
        ds_next = ds_prev;
        dcell_next = dcell_prev;
    }
    // dctx_next and dcell_next now sit on the constant zero initializers.

    // Decoder initialization: s_0 = tanh(W·final + b).
    let dpre0 = tanh_backward(&ds_next, tape.s0.data());
    let dfinal = affine_backward(
        &dpre0,
        states.final_state.data(),
        &params.dec_init_w,
        &mut grads.dec_init_w,
        &mut grads.dec_init_b,
    );
    let h = params.enc_sent_fwd.hidden_dim();
    let last = states.sentence_states.len() - 1;
    add_assign(&mut dstates.slots[last][..h], &dfinal[..h]);
    add_assign(&mut dstates.slots[0][h..2 * h], &dfinal[h..]);

    // Sentence channel.
    let n_sent = states.sentence_states.len();
    let dsent: Vec<Vec<f64>> = dstates.slots[..n_sent].to_vec();
    let dx_sent = bilstm_backward(
        &dsent,
        &tape.enc_cache.sent_cache,
        &params.enc_sent_fwd,
        &params.enc_sent_bwd,
        &mut grads.enc_sent_fwd,
        &mut grads.enc_sent_bwd,
    );
    for (i, dx) in dx_sent.iter().enumerate() {
        add_assign(grads.embedding.row_mut(pair.src[i] as usize), dx);
    }

    // Theme channel; gradients flow to the sentence encoder when tied.
    let dtheme: Vec<Vec<f64>> = dstates.slots[n_sent..].to_vec();
    let dx_theme = if let (Some(gtf), Some(gtb)) =
        (&mut grads.enc_theme_fwd, &mut grads.enc_theme_bwd)
    {
        bilstm_backward(
            &dtheme,
            &tape.enc_cache.theme_cache,
            params.theme_fwd(),
            params.theme_bwd(),
            gtf,
            gtb,
        )
    } else {
        bilstm_backward(
            &dtheme,
            &tape.enc_cache.theme_cache,
            params.theme_fwd(),
            params.theme_bwd(),
            &mut grads.enc_sent_fwd,
            &mut grads.enc_sent_bwd,
        )
    };
    for (i, dx) in dx_theme.iter().enumerate() {
        add_assign(grads.embedding.row_mut(theme_ids[i] as usize), dx);
    }
}
