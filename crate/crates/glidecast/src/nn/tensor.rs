//! Shaped 64-bit floating-point arrays and trainable parameters.
//!
//! [`Tensor`] is the carrier for all layer math: a shape vector plus a
//! row-major `Vec<f64>`. [`Parameter`] pairs a value tensor with a
//! same-shaped gradient accumulator that training zeroes between optimizer
//! steps. Both are deliberately minimal — the layers in [`crate::nn::ops`]
//! and [`crate::nn::recurrent`] own all the numerical semantics.

use crate::error::{Error, Result};

/// A shaped array of `f64` values stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// A tensor of zeros with the given shape.
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    /// A tensor with every element equal to `value`.
    pub fn full(shape: &[usize], value: f64) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![value; shape.iter().product()],
        }
    }

    /// Wraps existing row-major data in a shape, checking the element count.
    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "shape {:?} needs {} elements, got {}",
                shape,
                expected,
                data.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    /// The shape vector.
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Total number of elements.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    /// True when the tensor holds no elements.
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Row-major view of the data.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Mutable row-major view of the data.
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Consumes the tensor, returning its row-major data.
    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Element of a rank-1 tensor.
    pub fn at1(&self, i: usize) -> f64 {
        debug_assert_eq!(self.shape.len(), 1);
        self.data[i]
    }

    /// Element `[i, j]` of a rank-2 tensor.
    pub fn at2(&self, i: usize, j: usize) -> f64 {
        debug_assert_eq!(self.shape.len(), 2);
        self.data[i * self.shape[1] + j]
    }

    /// Element `[i, j, k]` of a rank-3 tensor.
    pub fn at3(&self, i: usize, j: usize, k: usize) -> f64 {
        debug_assert_eq!(self.shape.len(), 3);
        self.data[(i * self.shape[1] + j) * self.shape[2] + k]
    }

    /// Sets element `[i, j]` of a rank-2 tensor.
    pub fn set2(&mut self, i: usize, j: usize, value: f64) {
        debug_assert_eq!(self.shape.len(), 2);
        self.data[i * self.shape[1] + j] = value;
    }

    /// Contiguous row `i` of a rank-2 tensor.
    pub fn row(&self, i: usize) -> &[f64] {
        debug_assert_eq!(self.shape.len(), 2);
        let w = self.shape[1];
        &self.data[i * w..(i + 1) * w]
    }

    /// Mutable contiguous row `i` of a rank-2 tensor.
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        debug_assert_eq!(self.shape.len(), 2);
        let w = self.shape[1];
        &mut self.data[i * w..(i + 1) * w]
    }

    /// True when every element is finite.
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Sets every element to zero in place.
    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// A trainable tensor together with its gradient accumulator.
#[derive(Debug, Clone)]
pub struct Parameter {
    /// Current value.
    pub value: Tensor,
    /// Gradient accumulated over a batch; zeroed between optimizer steps.
    pub grad: Tensor,
}

impl Parameter {
    /// Wraps a value tensor with a zeroed gradient of the same shape.
    pub fn new(value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape());
        Parameter { value, grad }
    }

    /// Zeroes the gradient accumulator.
    pub fn zero_grad(&mut self) {
        self.grad.fill_zero();
    }

    /// Number of trainable scalars in this parameter.
    pub fn count(&self) -> usize {
        self.value.len()
    }
}
