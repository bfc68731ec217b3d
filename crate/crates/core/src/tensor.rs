//! Minimal dense tensor: a shape plus row-major `f64` storage. This is the
//! only numeric carrier used by the kernels; there is no broadcasting, no
//! views, and no implicit reshaping. Serializes as `{"shape": [...], "data": [...]}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; n],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if data.len() != n {
            return Err(Error::shape(format!(
                "shape {:?} wants {} values, got {}",
                shape,
                n,
                data.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    /// 1-D tensor from a plain vector.
    pub fn vector(data: Vec<f64>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Tensor::zeros(&self.shape)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Row count of a 2-D tensor.
    pub fn rows(&self) -> usize {
        debug_assert_eq!(self.shape.len(), 2);
        self.shape[0]
    }

    /// Column count of a 2-D tensor.
    pub fn cols(&self) -> usize {
        debug_assert_eq!(self.shape.len(), 2);
        self.shape[1]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[r * c..(r + 1) * c]
    }

    /// y = W·x for a 2-D tensor W (rows×cols) and x of length cols.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let c = self.cols();
        debug_assert_eq!(x.len(), c);
        self.data
            .chunks_exact(c)
            .map(|row| row.iter().zip(x).map(|(w, xv)| w * xv).sum())
            .collect()
    }

    /// x = Wᵀ·y for a 2-D tensor W (rows×cols) and y of length rows.
    pub fn matvec_t(&self, y: &[f64]) -> Vec<f64> {
        let c = self.cols();
        debug_assert_eq!(y.len(), self.rows());
        let mut x = vec![0.0; c];
        for (row, &yi) in self.data.chunks_exact(c).zip(y) {
            for (xj, w) in x.iter_mut().zip(row) {
                *xj += yi * w;
            }
        }
        x
    }

    /// W += y ⊗ x (rank-one update), the gradient of matvec w.r.t. W.
    pub fn add_outer(&mut self, y: &[f64], x: &[f64]) {
        let c = self.cols();
        debug_assert_eq!(y.len(), self.rows());
        debug_assert_eq!(x.len(), c);
        for (row, &yi) in self.data.chunks_exact_mut(c).zip(y) {
            for (w, xv) in row.iter_mut().zip(x) {
                *w += yi * xv;
            }
        }
    }

    /// self += s · other (elementwise).
    pub fn add_scaled(&mut self, s: f64, other: &Tensor) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn sq_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Dot product of two equal-length slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// a += b elementwise.
pub fn add_assign(a: &mut [f64], b: &[f64]) {
    debug_assert_eq!(a.len(), b.len());
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

/// a += s·b elementwise.
pub fn axpy(a: &mut [f64], s: f64, b: &[f64]) {
    debug_assert_eq!(a.len(), b.len());
    for (x, y) in a.iter_mut().zip(b) {
        *x += s * y;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_rejects_bad_length() {
        assert!(Tensor::from_vec(&[2, 3], vec![0.0; 5]).is_err());
        assert!(Tensor::from_vec(&[2, 3], vec![0.0; 6]).is_ok());
    }

    #[test]
    fn matvec_and_transpose() {
        let w = Tensor::from_vec(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let y = w.matvec(&[1.0, 0.0, -1.0]);
        assert_eq!(y, vec![-2.0, -2.0]);
        let x = w.matvec_t(&[1.0, 1.0]);
        assert_eq!(x, vec![5.0, 7.0, 9.0]);
    }

    #[test]
    fn outer_accumulates() {
        let mut w = Tensor::zeros(&[2, 2]);
        w.add_outer(&[1.0, 2.0], &[3.0, 4.0]);
        w.add_outer(&[1.0, 2.0], &[3.0, 4.0]);
        assert_eq!(w.data(), &[6.0, 8.0, 12.0, 16.0]);
    }

    #[test]
    fn serde_roundtrip_is_exact() {
        let t = Tensor::from_vec(&[2, 2], vec![0.1, -2.5e-17, 3.0, f64::MIN_POSITIVE]).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        let back: Tensor = serde_json::from_str(&s).unwrap();
        assert_eq!(t, back);
    }
}
