//! Elementwise and affine building blocks with hand-written backward passes.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// y = W·x + b.
pub fn affine(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    if w.cols() != x.len() || w.rows() != b.len() {
        return Err(Error::shape(format!(
            "affine: W {:?} vs x {} and b {}",
            w.shape(),
            x.len(),
            b.len()
        )));
    }
    let mut y = w.matvec(x.data());
    for (yi, bi) in y.iter_mut().zip(b.data()) {
        *yi += bi;
    }
    Ok(Tensor::vector(y))
}

/// Accumulates dW and db, returns dx.
pub fn affine_backward(
    dy: &[f64],
    x: &[f64],
    w: &Tensor,
    dw: &mut Tensor,
    db: &mut Tensor,
) -> Vec<f64> {
    dw.add_outer(dy, x);
    crate::tensor::add_assign(db.data_mut(), dy);
    w.matvec_t(dy)
}

pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect()
}

/// dx from dy given the forward input x.
pub fn relu_backward(dy: &[f64], x: &[f64]) -> Vec<f64> {
    dy.iter()
        .zip(x)
        .map(|(&d, &v)| if v > 0.0 { d } else { 0.0 })
        .collect()
}

pub fn tanh_vec(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.tanh()).collect()
}

/// dx from dy given the forward *output* y = tanh(x).
pub fn tanh_backward(dy: &[f64], y: &[f64]) -> Vec<f64> {
    dy.iter().zip(y).map(|(&d, &t)| d * (1.0 - t * t)).collect()
}

pub fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Max-shifted softmax. The shift changes nothing algebraically but keeps
/// exp() in range; the output is a probability vector.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    debug_assert!(!scores.is_empty());
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = scores.iter().map(|&e| (e - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    out
}

/// de from dα given α = softmax(e): de_k = α_k (dα_k − Σ_j dα_j α_j).
pub fn softmax_backward(dalpha: &[f64], alpha: &[f64]) -> Vec<f64> {
    let inner: f64 = dalpha.iter().zip(alpha).map(|(d, a)| d * a).sum();
    dalpha
        .iter()
        .zip(alpha)
        .map(|(d, a)| a * (d - inner))
        .collect()
}

/// Cross-entropy against a one-hot target, fused with softmax:
/// loss = −log softmax(logits)[target], grad = softmax(logits) − onehot(target).
pub fn softmax_xent(logits: &[f64], target: usize) -> Result<(f64, Vec<f64>)> {
    if target >= logits.len() {
        return Err(Error::data(format!(
            "target id {target} out of range for {} logits",
            logits.len()
        )));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut grad: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = grad.iter().sum();
    let loss = sum.ln() + max - logits[target];
    for g in &mut grad {
        *g /= sum;
    }
    grad[target] -= 1.0;
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_uniform_and_ln2() {
        assert_eq!(softmax(&[0.0, 0.0, 0.0]), vec![1.0 / 3.0; 3]);
        let w = softmax(&[2.0f64.ln(), 0.0]);
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((w[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn softmax_shift_invariance_is_exact() {
        // Dyadic inputs and shift keep every addition exact, so the two
        // max-shifted computations are identical bit for bit.
        let e = [1.5, -0.25, 0.5, 4.0];
        let shifted: Vec<f64> = e.iter().map(|v| v + 128.0).collect();
        assert_eq!(softmax(&e), softmax(&shifted));

        // Arbitrary shifts agree to rounding noise.
        let shifted: Vec<f64> = e.iter().map(|v| v + 123.456).collect();
        for (a, b) in softmax(&e).iter().zip(softmax(&shifted)) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn xent_uniform_logits() {
        let (loss, _) = softmax_xent(&[0.0; 4], 2).unwrap();
        assert!((loss - 4.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn xent_peaked_on_target_saturates() {
        let mut logits = vec![0.0; 8];
        logits[5] = 50.0;
        let (loss, _) = softmax_xent(&logits, 5).unwrap();
        assert!(loss < 1e-20);
    }

    #[test]
    fn xent_rejects_out_of_range_target() {
        assert!(softmax_xent(&[0.0; 4], 4).is_err());
    }

    #[test]
    fn xent_grad_matches_finite_differences() {
        let logits = vec![0.3, -1.2, 0.7, 2.1, -0.4];
        let target = 3;
        let (_, grad) = softmax_xent(&logits, target).unwrap();
        let h = 1e-6;
        for i in 0..logits.len() {
            let mut plus = logits.clone();
            plus[i] += h;
            let mut minus = logits.clone();
            minus[i] -= h;
            let fd = (softmax_xent(&plus, target).unwrap().0
                - softmax_xent(&minus, target).unwrap().0)
                / (2.0 * h);
            let denom = fd.abs().max(grad[i].abs()).max(1e-8);
            assert!(
                ((fd - grad[i]) / denom).abs() < 1e-6,
                "logit {i}: fd {fd} vs analytic {}",
                grad[i]
            );
        }
    }

    #[test]
    fn affine_shape_mismatch_errors() {
        let w = Tensor::zeros(&[2, 3]);
        let b = Tensor::zeros(&[2]);
        assert!(affine(&Tensor::vector(vec![0.0; 4]), &w, &b).is_err());
        assert!(affine(&Tensor::vector(vec![0.0; 3]), &w, &b).is_ok());
    }
}
