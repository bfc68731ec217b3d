//! Central finite-difference verification of every analytic gradient, from
//! single kernels up to the full model. The same harness backs the test
//! suite and the `gradcheck` CLI command.

use rand::Rng as _;

use crate::corpus::SentencePair;
use crate::error::Result;
use crate::kernels::{
    attn_scores, attn_scores_backward, bilstm_backward, bilstm_encode, lstm_step,
    lstm_step_backward, softmax_xent, AttentionParams, EncoderStates, LstmParams, StateGrads,
};
use crate::model::{
    example_loss, example_loss_and_grads, AttentionVariant, ModelConfig, ModelParams,
};
use crate::tensor::{dot, Tensor};
use crate::util::seeded_rng;

/// Relative-error tolerance every gradient must meet.
pub const GRADCHECK_TOL: f64 = 1e-4;
/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct GroupReport {
    pub name: String,
    pub max_rel_err: f64,
    pub checked: usize,
}

impl GroupReport {
    pub fn pass(&self) -> bool {
        self.max_rel_err < GRADCHECK_TOL
    }
}

#[derive(Debug, Clone, Default)]
pub struct GradCheckReport {
    pub groups: Vec<GroupReport>,
}

impl GradCheckReport {
    pub fn all_pass(&self) -> bool {
        self.groups.iter().all(GroupReport::pass)
    }

    pub fn worst(&self) -> f64 {
        self.groups
            .iter()
            .map(|g| g.max_rel_err)
            .fold(0.0, f64::max)
    }
}

/// Relative disagreement between an analytic and a finite-difference value.
/// Below 1e-5 in magnitude the comparison switches to the absolute
/// difference: central differences at step 1e-5 carry ~1e-10 of rounding
/// noise, which has no relative meaning against a vanishing gradient.
pub fn rel_err(analytic: f64, fd: f64) -> f64 {
    let denom = analytic.abs().max(fd.abs());
    if denom < 1e-5 {
        (analytic - fd).abs()
    } else {
        (analytic - fd).abs() / denom
    }
}

/// Generic driver: perturb every element of every tensor by ±h, evaluate the
/// loss closure, and compare against the provided analytic gradients.
/// Returns the max relative error per tensor.
pub fn fd_check(
    tensors: &mut [Tensor],
    analytic: &[Tensor],
    loss: &dyn Fn(&[Tensor]) -> f64,
    h: f64,
) -> Vec<f64> {
    assert_eq!(tensors.len(), analytic.len());
    let mut errs = vec![0.0f64; tensors.len()];
    for i in 0..tensors.len() {
        for k in 0..tensors[i].len() {
            let orig = tensors[i].data()[k];
            tensors[i].data_mut()[k] = orig + h;
            let lp = loss(tensors);
            tensors[i].data_mut()[k] = orig - h;
            let lm = loss(tensors);
            tensors[i].data_mut()[k] = orig;
            let fd = (lp - lm) / (2.0 * h);
            errs[i] = errs[i].max(rel_err(analytic[i].data()[k], fd));
        }
    }
    errs
}

fn rand_tensor(shape: &[usize], rng: &mut crate::util::Rng, scale: f64) -> Tensor {
    let mut t = Tensor::zeros(shape);
    for v in t.data_mut() {
        *v = rng.random_range(-scale..scale);
    }
    t
}

/// softmax + cross-entropy against its own returned gradient.
pub fn check_softmax_xent(seed: u64) -> GroupReport {
    let mut rng = seeded_rng(seed);
    let mut logits = vec![rand_tensor(&[9], &mut rng, 2.0)];
    let target = 4usize;
    let analytic = {
        let (_, g) = softmax_xent(logits[0].data(), target).unwrap();
        vec![Tensor::vector(g)]
    };
    let loss = move |ts: &[Tensor]| softmax_xent(ts[0].data(), target).unwrap().0;
    let errs = fd_check(&mut logits, &analytic, &loss, FD_STEP);
    GroupReport {
        name: "softmax_xent/logits".into(),
        max_rel_err: errs[0],
        checked: 9,
    }
}

/// One LSTM step: loss is a fixed random projection of (h, c) so every
/// output coordinate is exercised.
pub fn check_lstm_step(seed: u64) -> Vec<GroupReport> {
    let mut rng = seeded_rng(seed);
    let (e, h) = (3usize, 4usize);
    let wh = rand_tensor(&[h], &mut rng, 1.0);
    let wc = rand_tensor(&[h], &mut rng, 1.0);

    // Order: w_x, w_h, b, x, h_prev, c_prev.
    let mut tensors = vec![
        rand_tensor(&[4 * h, e], &mut rng, 0.5),
        rand_tensor(&[4 * h, h], &mut rng, 0.5),
        rand_tensor(&[4 * h], &mut rng, 0.5),
        rand_tensor(&[e], &mut rng, 0.8),
        rand_tensor(&[h], &mut rng, 0.8),
        rand_tensor(&[h], &mut rng, 0.8),
    ];

    let rebuild = |ts: &[Tensor]| LstmParams {
        w_x: ts[0].clone(),
        w_h: ts[1].clone(),
        b: ts[2].clone(),
    };
    let analytic = {
        let p = rebuild(&tensors);
        let (_, _, cache) = lstm_step(&tensors[3], &tensors[4], &tensors[5], &p).unwrap();
        let mut grads = LstmParams::zeros(e, h);
        let (dx, dh_prev, dc_prev) =
            lstm_step_backward(wh.data(), wc.data(), &cache, &p, &mut grads);
        vec![
            grads.w_x,
            grads.w_h,
            grads.b,
            Tensor::vector(dx),
            Tensor::vector(dh_prev),
            Tensor::vector(dc_prev),
        ]
    };
    let loss = {
        let (wh, wc) = (wh.clone(), wc.clone());
        move |ts: &[Tensor]| {
            let p = rebuild(ts);
            let (hh, cc, _) = lstm_step(&ts[3], &ts[4], &ts[5], &p).unwrap();
            dot(wh.data(), hh.data()) + dot(wc.data(), cc.data())
        }
    };
    let errs = fd_check(&mut tensors, &analytic, &loss, FD_STEP);
    let names = ["w_x", "w_h", "b", "x", "h_prev", "c_prev"];
    names
        .iter()
        .zip(errs)
        .map(|(n, e_)| GroupReport {
            name: format!("lstm_step/{n}"),
            max_rel_err: e_,
            checked: 1,
        })
        .collect()
}

/// Bi-LSTM over a length-3 sequence, projected to a scalar per position.
pub fn check_bilstm(seed: u64) -> Vec<GroupReport> {
    let mut rng = seeded_rng(seed);
    let (e, h, n) = (3usize, 3usize, 3usize);
    let weights: Vec<Tensor> = (0..n).map(|_| rand_tensor(&[2 * h], &mut rng, 1.0)).collect();

    // Order: fwd.{w_x,w_h,b}, bwd.{w_x,w_h,b}, x_0..x_2.
    let mut tensors = vec![
        rand_tensor(&[4 * h, e], &mut rng, 0.5),
        rand_tensor(&[4 * h, h], &mut rng, 0.5),
        rand_tensor(&[4 * h], &mut rng, 0.5),
        rand_tensor(&[4 * h, e], &mut rng, 0.5),
        rand_tensor(&[4 * h, h], &mut rng, 0.5),
        rand_tensor(&[4 * h], &mut rng, 0.5),
    ];
    for _ in 0..n {
        tensors.push(rand_tensor(&[e], &mut rng, 0.8));
    }

    let rebuild = |ts: &[Tensor]| {
        (
            LstmParams {
                w_x: ts[0].clone(),
                w_h: ts[1].clone(),
                b: ts[2].clone(),
            },
            LstmParams {
                w_x: ts[3].clone(),
                w_h: ts[4].clone(),
                b: ts[5].clone(),
            },
            ts[6..6 + 3].to_vec(),
        )
    };
    let analytic = {
        let (fwd, bwd, xs) = rebuild(&tensors);
        let (_, cache) = bilstm_encode(&xs, &fwd, &bwd).unwrap();
        let dstates: Vec<Vec<f64>> = weights.iter().map(|w| w.data().to_vec()).collect();
        let mut gf = LstmParams::zeros(e, h);
        let mut gb = LstmParams::zeros(e, h);
        let dx = bilstm_backward(&dstates, &cache, &fwd, &bwd, &mut gf, &mut gb);
        let mut out = vec![gf.w_x, gf.w_h, gf.b, gb.w_x, gb.w_h, gb.b];
        out.extend(dx.into_iter().map(Tensor::vector));
        out
    };
    let loss = {
        let weights = weights.clone();
        move |ts: &[Tensor]| {
            let (fwd, bwd, xs) = rebuild(ts);
            let (states, _) = bilstm_encode(&xs, &fwd, &bwd).unwrap();
            states
                .iter()
                .zip(&weights)
                .map(|(s, w)| dot(s.data(), w.data()))
                .sum()
        }
    };
    let errs = fd_check(&mut tensors, &analytic, &loss, FD_STEP);
    let names = [
        "fwd.w_x", "fwd.w_h", "fwd.b", "bwd.w_x", "bwd.w_h", "bwd.b", "x0", "x1", "x2",
    ];
    names
        .iter()
        .zip(errs)
        .map(|(n, e_)| GroupReport {
            name: format!("bilstm/{n}"),
            max_rel_err: e_,
            checked: 1,
        })
        .collect()
}

/// Attention scoring, both variants: loss is a random projection of the
/// score vector; gradients flow to params, the query, and every state.
pub fn check_attention(variant: AttentionVariant, seed: u64) -> Vec<GroupReport> {
    let mut rng = seeded_rng(seed);
    let (dec, enc, attn, n_sent) = (3usize, 4usize, 5usize, 3usize);
    let n_slots = n_sent + 2;
    let proj = rand_tensor(&[n_slots], &mut rng, 1.0);

    // Order: [param tensors...], s_prev, slot_0..slot_{n-1}.
    let (mut tensors, n_params) = match variant {
        AttentionVariant::Additive => (
            vec![
                rand_tensor(&[attn, dec], &mut rng, 0.5),
                rand_tensor(&[attn, enc], &mut rng, 0.5),
                rand_tensor(&[attn], &mut rng, 0.5),
            ],
            3,
        ),
        AttentionVariant::Dot => (vec![rand_tensor(&[dec, enc], &mut rng, 0.5)], 1),
    };
    tensors.push(rand_tensor(&[dec], &mut rng, 0.8));
    for _ in 0..n_slots {
        tensors.push(rand_tensor(&[enc], &mut rng, 0.8));
    }

    let rebuild = move |ts: &[Tensor]| {
        let params = match variant {
            AttentionVariant::Additive => AttentionParams::Additive {
                w: ts[0].clone(),
                u: ts[1].clone(),
                v: ts[2].clone(),
            },
            AttentionVariant::Dot => AttentionParams::Dot { w: ts[0].clone() },
        };
        let s_prev = ts[n_params].clone();
        let slots = &ts[n_params + 1..];
        let states = EncoderStates {
            sentence_states: slots[..n_sent].to_vec(),
            theme_states: [slots[n_sent].clone(), slots[n_sent + 1].clone()],
            final_state: Tensor::zeros(&[enc]),
        };
        (params, s_prev, states)
    };

    let analytic = {
        let (params, s_prev, states) = rebuild(&tensors);
        let (_, cache) = attn_scores(&s_prev, &states, &params).unwrap();
        let mut grads = match variant {
            AttentionVariant::Additive => AttentionParams::zeros_additive(attn, dec, enc),
            AttentionVariant::Dot => AttentionParams::zeros_dot(dec, enc),
        };
        let mut dstates = StateGrads::zeros_for(&states);
        let ds_prev = attn_scores_backward(
            proj.data(),
            &s_prev,
            &states,
            &cache,
            &params,
            &mut grads,
            &mut dstates,
        );
        let mut out = match grads {
            AttentionParams::Additive { w, u, v } => vec![w, u, v],
            AttentionParams::Dot { w } => vec![w],
        };
        out.push(Tensor::vector(ds_prev));
        out.extend(dstates.slots.into_iter().map(Tensor::vector));
        out
    };
    let loss = {
        let proj = proj.clone();
        move |ts: &[Tensor]| {
            let (params, s_prev, states) = rebuild(ts);
            let (scores, _) = attn_scores(&s_prev, &states, &params).unwrap();
            dot(proj.data(), scores.data())
        }
    };
    let errs = fd_check(&mut tensors, &analytic, &loss, FD_STEP);
    let tag = match variant {
        AttentionVariant::Additive => "attn_additive",
        AttentionVariant::Dot => "attn_dot",
    };
    let mut names: Vec<String> = match variant {
        AttentionVariant::Additive => vec!["w".into(), "u".into(), "v".into()],
        AttentionVariant::Dot => vec!["w".into()],
    };
    names.push("s_prev".into());
    for j in 0..n_slots {
        names.push(format!("slot{j}"));
    }
    names
        .iter()
        .zip(errs)
        .map(|(n, e_)| GroupReport {
            name: format!("{tag}/{n}"),
            max_rel_err: e_,
            checked: 1,
        })
        .collect()
}

/// The full model at tiny dimensions: teacher-forced loss of a short batch,
/// differentiated against every parameter tensor.
pub fn check_full_model(variant: AttentionVariant, seed: u64) -> Result<Vec<GroupReport>> {
    let cfg = ModelConfig {
        embed_dim: 4,
        hidden_dim: 6,
        attention_dim: Some(5),
        proj_dim: Some(5),
        attention_variant: variant,
        ..ModelConfig::new(12)
    };
    let params = crate::model::init_params(&cfg, seed)?;
    let pairs = vec![
        SentencePair {
            src: vec![4, 5, 6],
            trg: vec![7, 8, 9],
            theme: 0,
            trg_reversed: false,
        },
        SentencePair {
            src: vec![9, 7, 5],
            trg: vec![4, 6],
            theme: 1,
            trg_reversed: false,
        },
    ];
    let themes = [[10u32, 11u32], [11u32, 4u32]];

    let names = params.tensor_names();
    let mut tensors: Vec<Tensor> = Vec::with_capacity(names.len());
    params.for_each_tensor(|_, t| tensors.push(t.clone()));

    let rebuild = {
        let cfg = cfg.clone();
        let names = names.clone();
        move |ts: &[Tensor]| {
            let map: std::collections::BTreeMap<String, Tensor> = names
                .iter()
                .cloned()
                .zip(ts.iter().cloned())
                .collect();
            ModelParams::from_map(&cfg, &map).expect("rebuild from perturbed tensors")
        }
    };

    let analytic = {
        let mut grads = params.zeros_like();
        for pair in &pairs {
            example_loss_and_grads(pair, themes[pair.theme], &params, &mut grads)?;
        }
        let mut out = Vec::new();
        grads.for_each_tensor(|_, t| out.push(t.clone()));
        out
    };
    let loss = {
        let pairs = pairs.clone();
        move |ts: &[Tensor]| {
            let p = rebuild(ts);
            pairs
                .iter()
                .map(|pair| example_loss(pair, themes[pair.theme], &p).unwrap().loss_sum)
                .sum()
        }
    };
    let errs = fd_check(&mut tensors, &analytic, &loss, FD_STEP);
    let tag = match variant {
        AttentionVariant::Additive => "model_additive",
        AttentionVariant::Dot => "model_dot",
    };
    Ok(names
        .iter()
        .zip(&tensors)
        .zip(errs)
        .map(|((n, t), e_)| GroupReport {
            name: format!("{tag}/{n}"),
            max_rel_err: e_,
            checked: t.len(),
        })
        .collect())
}

/// Run the whole verification battery.
pub fn run_all(seed: u64) -> Result<GradCheckReport> {
    let mut groups = Vec::new();
    groups.push(check_softmax_xent(seed));
    groups.extend(check_lstm_step(seed.wrapping_add(1)));
    groups.extend(check_bilstm(seed.wrapping_add(2)));
    groups.extend(check_attention(AttentionVariant::Additive, seed.wrapping_add(3)));
    groups.extend(check_attention(AttentionVariant::Dot, seed.wrapping_add(4)));
    groups.extend(check_full_model(AttentionVariant::Additive, seed.wrapping_add(5))?);
    groups.extend(check_full_model(AttentionVariant::Dot, seed.wrapping_add(6))?);
    Ok(GradCheckReport { groups })
}
