//! LSTM cell (standard gate equations) and Bi-LSTM sequence encoding, both
//! with exact hand-written backward passes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{add_assign, Tensor};

use super::ops::sigmoid;

/// Parameters of one LSTM cell. The four gates are stacked along the first
/// axis in fixed order input, forget, candidate, output; `w_x` is 4H×In,
/// `w_h` is 4H×H and `b` is 4H.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub w_x: Tensor,
    pub w_h: Tensor,
    pub b: Tensor,
}

impl LstmParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        LstmParams {
            w_x: Tensor::zeros(&[4 * hidden_dim, input_dim]),
            w_h: Tensor::zeros(&[4 * hidden_dim, hidden_dim]),
            b: Tensor::zeros(&[4 * hidden_dim]),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_x.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_h.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.hidden_dim();
        if self.w_x.rows() != 4 * h || self.w_h.rows() != 4 * h || self.b.len() != 4 * h {
            return Err(Error::shape(format!(
                "lstm params inconsistent: w_x {:?}, w_h {:?}, b {:?}",
                self.w_x.shape(),
                self.w_h.shape(),
                self.b.shape()
            )));
        }
        Ok(())
    }
}

/// Post-activation gate values and inputs saved by the forward pass.
#[derive(Debug, Clone)]
pub struct LstmCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    gate_i: Vec<f64>,
    gate_f: Vec<f64>,
    gate_g: Vec<f64>,
    gate_o: Vec<f64>,
    c: Vec<f64>,
}

/// One cell update: i,f,o = σ(·), g = tanh(·), c = f⊙c_prev + i⊙g,
/// h = o⊙tanh(c).
pub fn lstm_step(
    x: &Tensor,
    h_prev: &Tensor,
    c_prev: &Tensor,
    p: &LstmParams,
) -> Result<(Tensor, Tensor, LstmCache)> {
    let h_dim = p.hidden_dim();
    if x.len() != p.input_dim() || h_prev.len() != h_dim || c_prev.len() != h_dim {
        return Err(Error::shape(format!(
            "lstm_step: x {} h {} c {} vs params (in {}, hidden {})",
            x.len(),
            h_prev.len(),
            c_prev.len(),
            p.input_dim(),
            h_dim
        )));
    }

    let mut pre = p.w_x.matvec(x.data());
    add_assign(&mut pre, &p.w_h.matvec(h_prev.data()));
    add_assign(&mut pre, p.b.data());

    let gate_i: Vec<f64> = pre[0..h_dim].iter().map(|&a| sigmoid(a)).collect();
    let gate_f: Vec<f64> = pre[h_dim..2 * h_dim].iter().map(|&a| sigmoid(a)).collect();
    let gate_g: Vec<f64> = pre[2 * h_dim..3 * h_dim].iter().map(|&a| a.tanh()).collect();
    let gate_o: Vec<f64> = pre[3 * h_dim..4 * h_dim].iter().map(|&a| sigmoid(a)).collect();

    let c: Vec<f64> = (0..h_dim)
        .map(|k| gate_f[k] * c_prev.data()[k] + gate_i[k] * gate_g[k])
        .collect();
    let h: Vec<f64> = (0..h_dim).map(|k| gate_o[k] * c[k].tanh()).collect();

    let cache = LstmCache {
        x: x.data().to_vec(),
        h_prev: h_prev.data().to_vec(),
        c_prev: c_prev.data().to_vec(),
        gate_i,
        gate_f,
        gate_g,
        gate_o,
        c: c.clone(),
    };
    Ok((Tensor::vector(h), Tensor::vector(c), cache))
}

/// Backward through one cell update. `dh`/`dc` are the gradients arriving at
/// this step's outputs; parameter gradients accumulate into `grads`; returns
/// (dx, dh_prev, dc_prev).
pub fn lstm_step_backward(
    dh: &[f64],
    dc_in: &[f64],
    cache: &LstmCache,
    p: &LstmParams,
    grads: &mut LstmParams,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let h_dim = p.hidden_dim();
    debug_assert_eq!(dh.len(), h_dim);
    debug_assert_eq!(dc_in.len(), h_dim);

    let mut da = vec![0.0; 4 * h_dim];
    let mut dc_prev = vec![0.0; h_dim];
    for k in 0..h_dim {
        let tc = cache.c[k].tanh();
        let o = cache.gate_o[k];
        let i = cache.gate_i[k];
        let f = cache.gate_f[k];
        let g = cache.gate_g[k];

        let dc = dc_in[k] + dh[k] * o * (1.0 - tc * tc);
        let d_o = dh[k] * tc;
        let d_f = dc * cache.c_prev[k];
        let d_i = dc * g;
        let d_g = dc * i;

        da[k] = d_i * i * (1.0 - i);
        da[h_dim + k] = d_f * f * (1.0 - f);
        da[2 * h_dim + k] = d_g * (1.0 - g * g);
        da[3 * h_dim + k] = d_o * o * (1.0 - o);
        dc_prev[k] = dc * f;
    }

    grads.w_x.add_outer(&da, &cache.x);
    grads.w_h.add_outer(&da, &cache.h_prev);
    add_assign(grads.b.data_mut(), &da);

    let dx = p.w_x.matvec_t(&da);
    let dh_prev = p.w_h.matvec_t(&da);
    (dx, dh_prev, dc_prev)
}

/// Per-position caches of a Bi-LSTM pass, indexed by sequence position.
#[derive(Debug, Clone)]
pub struct BiLstmCache {
    fwd: Vec<LstmCache>,
    bwd: Vec<LstmCache>,
}

/// Encode a sequence with two LSTMs, one running left→right and one
/// right→left, both from zero initial states. The per-position output is the
/// concatenation [h_fwd_t ; h_bwd_t] of width 2H.
pub fn bilstm_encode(
    seq: &[Tensor],
    fwd: &LstmParams,
    bwd: &LstmParams,
) -> Result<(Vec<Tensor>, BiLstmCache)> {
    if seq.is_empty() {
        return Err(Error::data("bilstm_encode: empty sequence"));
    }
    if fwd.hidden_dim() != bwd.hidden_dim() || fwd.input_dim() != bwd.input_dim() {
        return Err(Error::shape(
            "bilstm_encode: forward/backward parameter dims differ",
        ));
    }
    let n = seq.len();
    let h_dim = fwd.hidden_dim();

    let mut h = Tensor::zeros(&[h_dim]);
    let mut c = Tensor::zeros(&[h_dim]);
    let mut fwd_states = Vec::with_capacity(n);
    let mut fwd_caches = Vec::with_capacity(n);
    for x in seq {
        let (nh, nc, cache) = lstm_step(x, &h, &c, fwd)?;
        fwd_states.push(nh.clone());
        fwd_caches.push(cache);
        h = nh;
        c = nc;
    }

    let mut h = Tensor::zeros(&[h_dim]);
    let mut c = Tensor::zeros(&[h_dim]);
    let mut bwd_states: Vec<Option<Tensor>> = vec![None; n];
    let mut bwd_caches: Vec<Option<LstmCache>> = vec![None; n];
    for t in (0..n).rev() {
        let (nh, nc, cache) = lstm_step(&seq[t], &h, &c, bwd)?;
        bwd_states[t] = Some(nh.clone());
        bwd_caches[t] = Some(cache);
        h = nh;
        c = nc;
    }

    let states = (0..n)
        .map(|t| {
            let mut v = fwd_states[t].data().to_vec();
            v.extend_from_slice(bwd_states[t].as_ref().unwrap().data());
            Tensor::vector(v)
        })
        .collect();
    let cache = BiLstmCache {
        fwd: fwd_caches,
        bwd: bwd_caches.into_iter().map(Option::unwrap).collect(),
    };
    Ok((states, cache))
}

/// Backward through `bilstm_encode`. `dstates[t]` is the gradient on the
/// concatenated state at position t; returns per-position input gradients.
pub fn bilstm_backward(
    dstates: &[Vec<f64>],
    cache: &BiLstmCache,
    fwd: &LstmParams,
    bwd: &LstmParams,
    grads_fwd: &mut LstmParams,
    grads_bwd: &mut LstmParams,
) -> Vec<Vec<f64>> {
    let n = dstates.len();
    let h_dim = fwd.hidden_dim();
    debug_assert_eq!(n, cache.fwd.len());
    let mut dx = vec![vec![0.0; fwd.input_dim()]; n];

    // Forward-direction chain: unroll from the last position back.
    let mut dh_carry = vec![0.0; h_dim];
    let mut dc_carry = vec![0.0; h_dim];
    for t in (0..n).rev() {
        let mut dh = dstates[t][0..h_dim].to_vec();
        add_assign(&mut dh, &dh_carry);
        let (dxt, dh_prev, dc_prev) =
            lstm_step_backward(&dh, &dc_carry, &cache.fwd[t], fwd, grads_fwd);
        add_assign(&mut dx[t], &dxt);
        dh_carry = dh_prev;
        dc_carry = dc_prev;
    }

    // Backward-direction chain: it processed positions right→left, so its
    // unroll goes left→right and the carry flows toward higher positions.
    let mut dh_carry = vec![0.0; h_dim];
    let mut dc_carry = vec![0.0; h_dim];
    for (t, dstate) in dstates.iter().enumerate() {
        let mut dh = dstate[h_dim..2 * h_dim].to_vec();
        add_assign(&mut dh, &dh_carry);
        let (dxt, dh_prev, dc_prev) =
            lstm_step_backward(&dh, &dc_carry, &cache.bwd[t], bwd, grads_bwd);
        add_assign(&mut dx[t], &dxt);
        dh_carry = dh_prev;
        dc_carry = dc_prev;
    }

    dx
}
