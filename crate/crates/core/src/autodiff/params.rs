use serde::{Deserialize, Serialize};

use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::{dim_err, Result};

/// Ordered, named parameter tensors of one network.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct ParamSet {
    names: Vec<String>,
    shapes: Vec<Vec<usize>>,
    values: Vec<Vec<f64>>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append a parameter and return its index.
    pub fn push(&mut self, name: impl Into<String>, t: Tensor) -> usize {
        self.names.push(name.into());
        self.shapes.push(t.shape().to_vec());
        self.values.push(t.into_data());
        self.names.len() - 1
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn shape(&self, i: usize) -> &[usize] {
        &self.shapes[i]
    }

    pub fn values(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn values_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i]
    }

    pub fn tensor(&self, i: usize) -> Tensor {
        Tensor::new(self.shapes[i].clone(), self.values[i].clone()).expect("stored shapes are valid")
    }

    /// Total number of scalar parameters.
    pub fn count(&self) -> usize {
        self.values.iter().map(Vec::len).sum()
    }

    pub fn iter_values_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        self.values.iter_mut()
    }

    /// Put every parameter on the tape as a differentiable leaf.
    pub fn bind(&self, tape: &mut Tape) -> Vec<Var> {
        (0..self.len()).map(|i| tape.variable(self.tensor(i))).collect()
    }

    /// Put every parameter on the tape as a constant.
    pub fn bind_frozen(&self, tape: &mut Tape) -> Vec<Var> {
        (0..self.len()).map(|i| tape.constant(self.tensor(i))).collect()
    }

    /// All values flattened in order.
    pub fn flatten(&self) -> Vec<f64> {
        self.values.concat()
    }

    pub fn check_aligned(&self, grads: &[Vec<f64>]) -> Result<()> {
        if grads.len() != self.len() {
            return dim_err(format!("{} gradient buffers for {} parameters", grads.len(), self.len()));
        }
        for (i, g) in grads.iter().enumerate() {
            if g.len() != self.values[i].len() {
                return dim_err(format!(
                    "gradient for {} has {} values, parameter shape {:?}",
                    self.names[i],
                    g.len(),
                    self.shapes[i]
                ));
            }
        }
        Ok(())
    }
}
