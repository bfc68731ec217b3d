//! Model configuration and the named parameter collection.

use std::collections::BTreeMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{AttentionParams, LstmParams};
use crate::tensor::Tensor;
use crate::util::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttentionVariant {
    Additive,
    Dot,
}

/// Network dimensions. Desk-scale defaults; the large-corpus settings
/// (embed 512, hidden 1024) are plain configuration values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    #[serde(default = "default_embed_dim")]
    pub embed_dim: usize,
    #[serde(default = "default_hidden_dim")]
    pub hidden_dim: usize,
    /// Width of the additive attention space; defaults to `hidden_dim`.
    #[serde(default)]
    pub attention_dim: Option<usize>,
    #[serde(default = "default_variant")]
    pub attention_variant: AttentionVariant,
    /// Width of the ReLU projection feeding the output layer; defaults to
    /// `hidden_dim`.
    #[serde(default)]
    pub proj_dim: Option<usize>,
    #[serde(default = "default_init_range")]
    pub init_range: f64,
    #[serde(default)]
    pub tie_theme_sentence_encoders: bool,
}

fn default_embed_dim() -> usize {
    32
}
fn default_hidden_dim() -> usize {
    64
}
fn default_variant() -> AttentionVariant {
    AttentionVariant::Additive
}
fn default_init_range() -> f64 {
    0.1
}

impl ModelConfig {
    pub fn new(vocab_size: usize) -> Self {
        ModelConfig {
            vocab_size,
            embed_dim: default_embed_dim(),
            hidden_dim: default_hidden_dim(),
            attention_dim: None,
            attention_variant: default_variant(),
            proj_dim: None,
            init_range: default_init_range(),
            tie_theme_sentence_encoders: false,
        }
    }

    pub fn attention_dim(&self) -> usize {
        self.attention_dim.unwrap_or(self.hidden_dim)
    }

    pub fn proj_dim(&self) -> usize {
        self.proj_dim.unwrap_or(self.hidden_dim)
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab_size < 4 {
            return Err(Error::config("vocab_size must cover the specials"));
        }
        for (name, v) in [
            ("embed_dim", self.embed_dim),
            ("hidden_dim", self.hidden_dim),
            ("attention_dim", self.attention_dim()),
            ("proj_dim", self.proj_dim()),
        ] {
            if v < 1 {
                return Err(Error::config(format!("{name} must be >= 1")));
            }
        }
        if self.init_range.is_nan() || self.init_range <= 0.0 {
            return Err(Error::config("init_range must be > 0"));
        }
        Ok(())
    }
}

/// Every trainable tensor of the network. The same structure doubles as the
/// gradient accumulator and as the optimizer's running-average slots.
///
/// Widths: embedding V×E; the three Bi-LSTM pairs are E→H; the decoder LSTM
/// input is the previous-token embedding concatenated with the previous
/// context, E+2H; attention bridges decoder width H and encoder state width
/// 2H; the pre-logit ReLU projection reads [s_t ; c_t] of width 3H.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub embedding: Tensor,
    pub enc_sent_fwd: LstmParams,
    pub enc_sent_bwd: LstmParams,
    /// Absent when the theme encoder is tied to the sentence encoder.
    pub enc_theme_fwd: Option<LstmParams>,
    pub enc_theme_bwd: Option<LstmParams>,
    pub decoder: LstmParams,
    pub dec_init_w: Tensor,
    pub dec_init_b: Tensor,
    pub attention: AttentionParams,
    pub pre_logit_w: Tensor,
    pub pre_logit_b: Tensor,
    pub output_w: Tensor,
    pub output_b: Tensor,
}

impl ModelParams {
    /// Allocate zeroed parameters with the shapes demanded by `cfg`.
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let (v, e, h) = (cfg.vocab_size, cfg.embed_dim, cfg.hidden_dim);
        let enc_width = 2 * h;
        let attention = match cfg.attention_variant {
            AttentionVariant::Additive => {
                AttentionParams::zeros_additive(cfg.attention_dim(), h, enc_width)
            }
            AttentionVariant::Dot => AttentionParams::zeros_dot(h, enc_width),
        };
        let theme = if cfg.tie_theme_sentence_encoders {
            None
        } else {
            Some(LstmParams::zeros(e, h))
        };
        ModelParams {
            embedding: Tensor::zeros(&[v, e]),
            enc_sent_fwd: LstmParams::zeros(e, h),
            enc_sent_bwd: LstmParams::zeros(e, h),
            enc_theme_fwd: theme.clone(),
            enc_theme_bwd: theme,
            decoder: LstmParams::zeros(e + enc_width, h),
            dec_init_w: Tensor::zeros(&[h, enc_width]),
            dec_init_b: Tensor::zeros(&[h]),
            attention,
            pre_logit_w: Tensor::zeros(&[cfg.proj_dim(), h + enc_width]),
            pre_logit_b: Tensor::zeros(&[cfg.proj_dim()]),
            output_w: Tensor::zeros(&[v, cfg.proj_dim()]),
            output_b: Tensor::zeros(&[v]),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.for_each_tensor_mut(|_, t| *t = t.zeros_like());
        z
    }

    /// Theme encoder parameters, falling back to the sentence encoder when
    /// tied.
    pub fn theme_fwd(&self) -> &LstmParams {
        self.enc_theme_fwd.as_ref().unwrap_or(&self.enc_sent_fwd)
    }

    pub fn theme_bwd(&self) -> &LstmParams {
        self.enc_theme_bwd.as_ref().unwrap_or(&self.enc_sent_bwd)
    }

    /// Visit every tensor with its canonical name, in a fixed order.
    pub fn for_each_tensor<'a>(&'a self, mut f: impl FnMut(&str, &'a Tensor)) {
        let lstm = |name: &str, p: &'a LstmParams, f: &mut dyn FnMut(&str, &'a Tensor)| {
            f(&format!("{name}.w_x"), &p.w_x);
            f(&format!("{name}.w_h"), &p.w_h);
            f(&format!("{name}.b"), &p.b);
        };
        f("embedding", &self.embedding);
        lstm("enc_sent_fwd", &self.enc_sent_fwd, &mut f);
        lstm("enc_sent_bwd", &self.enc_sent_bwd, &mut f);
        if let Some(p) = &self.enc_theme_fwd {
            lstm("enc_theme_fwd", p, &mut f);
        }
        if let Some(p) = &self.enc_theme_bwd {
            lstm("enc_theme_bwd", p, &mut f);
        }
        lstm("decoder", &self.decoder, &mut f);
        f("dec_init.w", &self.dec_init_w);
        f("dec_init.b", &self.dec_init_b);
        match &self.attention {
            AttentionParams::Additive { w, u, v } => {
                f("attention.w", w);
                f("attention.u", u);
                f("attention.v", v);
            }
            AttentionParams::Dot { w } => f("attention.w", w),
        }
        f("pre_logit.w", &self.pre_logit_w);
        f("pre_logit.b", &self.pre_logit_b);
        f("output.w", &self.output_w);
        f("output.b", &self.output_b);
    }

    pub fn for_each_tensor_mut(&mut self, mut f: impl FnMut(&str, &mut Tensor)) {
        let lstm = |name: &str, p: &mut LstmParams, f: &mut dyn FnMut(&str, &mut Tensor)| {
            f(&format!("{name}.w_x"), &mut p.w_x);
            f(&format!("{name}.w_h"), &mut p.w_h);
            f(&format!("{name}.b"), &mut p.b);
        };
        f("embedding", &mut self.embedding);
        lstm("enc_sent_fwd", &mut self.enc_sent_fwd, &mut f);
        lstm("enc_sent_bwd", &mut self.enc_sent_bwd, &mut f);
        if let Some(p) = &mut self.enc_theme_fwd {
            lstm("enc_theme_fwd", p, &mut f);
        }
        if let Some(p) = &mut self.enc_theme_bwd {
            lstm("enc_theme_bwd", p, &mut f);
        }
        lstm("decoder", &mut self.decoder, &mut f);
        f("dec_init.w", &mut self.dec_init_w);
        f("dec_init.b", &mut self.dec_init_b);
        match &mut self.attention {
            AttentionParams::Additive { w, u, v } => {
                f("attention.w", w);
                f("attention.u", u);
                f("attention.v", v);
            }
            AttentionParams::Dot { w } => f("attention.w", w),
        }
        f("pre_logit.w", &mut self.pre_logit_w);
        f("pre_logit.b", &mut self.pre_logit_b);
        f("output.w", &mut self.output_w);
        f("output.b", &mut self.output_b);
    }

    pub fn tensor_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        self.for_each_tensor(|n, _| names.push(n.to_string()));
        names
    }

    /// Mutable references to every tensor in canonical order. Unlike the
    /// closure visitors, the references can be held simultaneously, which
    /// the optimizer needs to walk several parameter structures in lockstep.
    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        fn push_lstm<'a>(p: &'a mut LstmParams, out: &mut Vec<&'a mut Tensor>) {
            out.push(&mut p.w_x);
            out.push(&mut p.w_h);
            out.push(&mut p.b);
        }
        let mut out: Vec<&mut Tensor> = Vec::new();
        out.push(&mut self.embedding);
        push_lstm(&mut self.enc_sent_fwd, &mut out);
        push_lstm(&mut self.enc_sent_bwd, &mut out);
        if let Some(p) = &mut self.enc_theme_fwd {
            push_lstm(p, &mut out);
        }
        if let Some(p) = &mut self.enc_theme_bwd {
            push_lstm(p, &mut out);
        }
        push_lstm(&mut self.decoder, &mut out);
        out.push(&mut self.dec_init_w);
        out.push(&mut self.dec_init_b);
        match &mut self.attention {
            AttentionParams::Additive { w, u, v } => {
                out.push(w);
                out.push(u);
                out.push(v);
            }
            AttentionParams::Dot { w } => out.push(w),
        }
        out.push(&mut self.pre_logit_w);
        out.push(&mut self.pre_logit_b);
        out.push(&mut self.output_w);
        out.push(&mut self.output_b);
        out
    }

    pub fn all_finite(&self) -> bool {
        let mut ok = true;
        self.for_each_tensor(|_, t| ok &= t.all_finite());
        ok
    }

    /// self += s · other, tensor by tensor. Structures must match.
    pub fn add_scaled(&mut self, s: f64, other: &ModelParams) {
        let mut others: Vec<&Tensor> = Vec::new();
        other.for_each_tensor(|_, t| others.push(t));
        let mut i = 0;
        self.for_each_tensor_mut(|_, t| {
            t.add_scaled(s, others[i]);
            i += 1;
        });
        debug_assert_eq!(i, others.len());
    }

    pub fn scale(&mut self, s: f64) {
        self.for_each_tensor_mut(|_, t| t.scale(s));
    }

    pub fn sq_norm(&self) -> f64 {
        let mut acc = 0.0;
        self.for_each_tensor(|_, t| acc += t.sq_norm());
        acc
    }

    /// Flat name→tensor map, the on-disk form used by checkpoints.
    pub fn to_map(&self) -> BTreeMap<String, Tensor> {
        let mut map = BTreeMap::new();
        self.for_each_tensor(|n, t| {
            map.insert(n.to_string(), t.clone());
        });
        map
    }

    /// Rebuild from a flat map, validating that every expected tensor is
    /// present with exactly the shape `cfg` demands.
    pub fn from_map(cfg: &ModelConfig, map: &BTreeMap<String, Tensor>) -> Result<Self> {
        let mut params = ModelParams::zeros(cfg);
        let mut missing: Vec<String> = Vec::new();
        let mut bad: Vec<String> = Vec::new();
        params.for_each_tensor_mut(|name, t| match map.get(name) {
            Some(stored) if stored.shape() == t.shape() => *t = stored.clone(),
            Some(stored) => bad.push(format!(
                "{name}: declared {:?}, stored {:?}",
                t.shape(),
                stored.shape()
            )),
            None => missing.push(name.to_string()),
        });
        if !missing.is_empty() {
            return Err(Error::data(format!(
                "checkpoint is missing parameters: {}",
                missing.join(", ")
            )));
        }
        if !bad.is_empty() {
            return Err(Error::shape(format!(
                "checkpoint shape mismatch for {}",
                bad.join("; ")
            )));
        }
        let expected = params.tensor_names().len();
        if map.len() != expected {
            return Err(Error::data(format!(
                "checkpoint has {} parameters, model wants {expected}",
                map.len()
            )));
        }
        Ok(params)
    }
}

/// Draw every weight and bias i.i.d. uniform on [−init_range, init_range].
/// Tensors are filled in canonical order from one seeded stream, so the same
/// seed always reproduces the same parameters bit for bit.
pub fn init_params(cfg: &ModelConfig, seed: u64) -> Result<ModelParams> {
    cfg.validate()?;
    let mut rng = seeded_rng(seed);
    let r = cfg.init_range;
    let mut params = ModelParams::zeros(cfg);
    params.for_each_tensor_mut(|_, t| {
        for v in t.data_mut() {
            *v = rng.random_range(-r..r);
        }
    });
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg() -> ModelConfig {
        ModelConfig {
            embed_dim: 4,
            hidden_dim: 3,
            attention_dim: Some(5),
            proj_dim: Some(4),
            ..ModelConfig::new(12)
        }
    }

    #[test]
    fn init_stays_in_support() {
        let cfg = tiny_cfg();
        let p = init_params(&cfg, 9).unwrap();
        p.for_each_tensor(|name, t| {
            for &v in t.data() {
                assert!((-0.1..=0.1).contains(&v), "{name} has {v} outside the support");
            }
        });
    }

    #[test]
    fn init_is_deterministic() {
        let cfg = tiny_cfg();
        assert_eq!(init_params(&cfg, 7).unwrap(), init_params(&cfg, 7).unwrap());
        assert_ne!(init_params(&cfg, 7).unwrap(), init_params(&cfg, 8).unwrap());
    }

    #[test]
    fn init_mean_is_near_zero() {
        // 10^5 uniform draws on [−0.1, 0.1]: σ of the mean is ~1.8e-4, so
        // 0.005 is a generous bound.
        let cfg = ModelConfig {
            embed_dim: 100,
            hidden_dim: 40,
            ..ModelConfig::new(1000)
        };
        let p = init_params(&cfg, 123).unwrap();
        let (mut sum, mut n) = (0.0, 0usize);
        p.for_each_tensor(|_, t| {
            sum += t.data().iter().sum::<f64>();
            n += t.len();
        });
        assert!(n >= 100_000, "want at least 1e5 samples, got {n}");
        assert!((sum / n as f64).abs() < 0.005);
    }

    #[test]
    fn map_roundtrip_and_mismatch_reporting() {
        let cfg = tiny_cfg();
        let p = init_params(&cfg, 5).unwrap();
        let map = p.to_map();
        let back = ModelParams::from_map(&cfg, &map).unwrap();
        assert_eq!(p, back);

        // A different vocab size must fail and name the offending tensor.
        let mut cfg2 = cfg.clone();
        cfg2.vocab_size = 13;
        let err = ModelParams::from_map(&cfg2, &map).unwrap_err().to_string();
        assert!(err.contains("embedding"), "error should name the field: {err}");
    }

    #[test]
    fn tied_theme_encoder_drops_its_tensors() {
        let mut cfg = tiny_cfg();
        cfg.tie_theme_sentence_encoders = true;
        let p = ModelParams::zeros(&cfg);
        assert!(p.enc_theme_fwd.is_none());
        assert!(!p.tensor_names().iter().any(|n| n.starts_with("enc_theme")));
        assert_eq!(p.theme_fwd(), &p.enc_sent_fwd);
    }
}
