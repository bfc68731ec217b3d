//! AdaDelta: learning-rate-free adaptive updates from running averages of
//! squared gradients and squared parameter deltas.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaDeltaConfig {
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Global step multiplier. Canonical AdaDelta has no learning rate, so
    /// this defaults to 1.0; other values rescale every Δx uniformly.
    #[serde(default = "default_lr_scale")]
    pub lr_scale: f64,
}

fn default_rho() -> f64 {
    0.95
}
fn default_epsilon() -> f64 {
    1e-6
}
fn default_lr_scale() -> f64 {
    1.0
}

impl Default for AdaDeltaConfig {
    fn default() -> Self {
        AdaDeltaConfig {
            rho: default_rho(),
            epsilon: default_epsilon(),
            lr_scale: default_lr_scale(),
        }
    }
}

impl AdaDeltaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rho.is_nan() || !(0.0..1.0).contains(&self.rho) {
            return Err(Error::config("adadelta rho must be in [0, 1)"));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::config("adadelta epsilon must be > 0"));
        }
        Ok(())
    }
}

/// Per-parameter accumulators E[g²] and E[Δx²], shaped exactly like the
/// parameters they track.
#[derive(Debug, Clone)]
pub struct AdaDeltaState {
    pub accum_grad: ModelParams,
    pub accum_update: ModelParams,
    pub cfg: AdaDeltaConfig,
}

impl AdaDeltaState {
    pub fn new(like: &ModelParams, cfg: AdaDeltaConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(AdaDeltaState {
            accum_grad: like.zeros_like(),
            accum_update: like.zeros_like(),
            cfg,
        })
    }
}

/// One scalar update. Returns (new_value, new_accum_grad, new_accum_update).
/// The Δx numerator deliberately uses the accumulator from *before* this
/// step, which is what makes the very first update ε-sized.
pub fn adadelta_update(
    value: f64,
    grad: f64,
    accum_grad: f64,
    accum_update: f64,
    cfg: &AdaDeltaConfig,
) -> (f64, f64, f64) {
    let eg2 = cfg.rho * accum_grad + (1.0 - cfg.rho) * grad * grad;
    let delta = -((accum_update + cfg.epsilon).sqrt() / (eg2 + cfg.epsilon).sqrt()) * grad
        * cfg.lr_scale;
    let ed2 = cfg.rho * accum_update + (1.0 - cfg.rho) * delta * delta;
    (value + delta, eg2, ed2)
}

/// Apply one AdaDelta step over every parameter tensor. Fails fast on
/// non-finite gradients so a numerical fault cannot silently poison the
/// accumulators.
pub fn adadelta_step(
    params: &mut ModelParams,
    grads: &ModelParams,
    state: &mut AdaDeltaState,
) -> Result<()> {
    if !grads.all_finite() {
        return Err(Error::Numeric("NaN/Inf gradient in adadelta_step".into()));
    }
    let cfg = state.cfg;

    let mut grad_tensors = Vec::new();
    grads.for_each_tensor(|_, t| grad_tensors.push(t));
    let mut eg_tensors = state.accum_grad.tensors_mut();
    let mut ed_tensors = state.accum_update.tensors_mut();
    let param_tensors = params.tensors_mut();
    debug_assert_eq!(param_tensors.len(), grad_tensors.len());

    for (i, t) in param_tensors.into_iter().enumerate() {
        let g = grad_tensors[i];
        debug_assert_eq!(t.len(), g.len(), "gradient shape mismatch at tensor {i}");
        let eg = &mut eg_tensors[i];
        let ed = &mut ed_tensors[i];
        for k in 0..t.len() {
            let (v, eg2, ed2) = adadelta_update(
                t.data()[k],
                g.data()[k],
                eg.data()[k],
                ed.data()[k],
                &cfg,
            );
            t.data_mut()[k] = v;
            eg.data_mut()[k] = eg2;
            ed.data_mut()[k] = ed2;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::params::{init_params, ModelConfig};

    #[test]
    fn first_step_matches_hand_derivation() {
        // ρ=0.95, ε=1e-6, g=1, fresh accumulators:
        // E[g²] = 0.05, Δx = −√(1e-6)/√(0.050001) ≈ −4.4721e-3.
        let cfg = AdaDeltaConfig::default();
        let (v, eg, ed) = adadelta_update(0.0, 1.0, 0.0, 0.0, &cfg);
        assert!((v - (-4.4721e-3)).abs() < 1e-7, "delta was {v}");
        assert!((eg - 0.05).abs() < 1e-15);
        // E[Δx²] picks up (1−ρ)·Δx² from zero.
        assert!((ed - 0.05 * v * v).abs() < 1e-18);
    }

    #[test]
    fn update_is_scale_free() {
        // From fresh accumulators, scaling the gradient by 10 changes |Δx|
        // only through ε.
        let cfg = AdaDeltaConfig::default();
        let (v1, _, _) = adadelta_update(0.0, 1.0, 0.0, 0.0, &cfg);
        let (v10, _, _) = adadelta_update(0.0, 10.0, 0.0, 0.0, &cfg);
        let rel = ((v10.abs() - v1.abs()) / v1.abs()).abs();
        assert!(rel < 1e-3, "scale sensitivity {rel}");
    }

    fn toy() -> (ModelParams, AdaDeltaState) {
        let cfg = ModelConfig {
            embed_dim: 3,
            hidden_dim: 2,
            ..ModelConfig::new(6)
        };
        let params = init_params(&cfg, 1).unwrap();
        let state = AdaDeltaState::new(&params, AdaDeltaConfig::default()).unwrap();
        (params, state)
    }

    #[test]
    fn zero_gradient_is_a_no_op_on_params_and_decays_accumulators() {
        let (mut params, mut state) = toy();
        // Seed the accumulators with one real step first.
        let mut grads = params.zeros_like();
        grads.for_each_tensor_mut(|_, t| t.data_mut().iter_mut().for_each(|v| *v = 0.5));
        adadelta_step(&mut params, &grads, &mut state).unwrap();

        let before = params.clone();
        let eg_before = state.accum_grad.clone();
        let zeros = params.zeros_like();
        adadelta_step(&mut params, &zeros, &mut state).unwrap();
        assert_eq!(params, before, "zero gradient must not move parameters");

        let mut decayed = true;
        let mut i = 0;
        let mut eg_prev = Vec::new();
        eg_before.for_each_tensor(|_, t| eg_prev.push(t.clone()));
        state.accum_grad.for_each_tensor(|_, t| {
            for (now, was) in t.data().iter().zip(eg_prev[i].data()) {
                decayed &= (*now - 0.95 * was).abs() < 1e-15;
            }
            i += 1;
        });
        assert!(decayed, "E[g²] must decay by exactly ρ on a zero step");
    }

    #[test]
    fn nan_gradient_fails_fast() {
        let (mut params, mut state) = toy();
        let mut grads = params.zeros_like();
        grads.embedding.data_mut()[0] = f64::NAN;
        assert!(adadelta_step(&mut params, &grads, &mut state).is_err());
    }

    #[test]
    fn shapes_are_preserved() {
        let (mut params, mut state) = toy();
        let shape_before: Vec<Vec<usize>> = {
            let mut v = Vec::new();
            params.for_each_tensor(|_, t| v.push(t.shape().to_vec()));
            v
        };
        let mut grads = params.zeros_like();
        grads.for_each_tensor_mut(|_, t| t.data_mut().iter_mut().for_each(|v| *v = 0.1));
        adadelta_step(&mut params, &grads, &mut state).unwrap();
        let mut i = 0;
        params.for_each_tensor(|_, t| {
            assert_eq!(t.shape(), &shape_before[i][..]);
            i += 1;
        });
    }
}
