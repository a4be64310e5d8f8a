use ndarray::Array2;

use super::PassivityError;
use crate::graph::ones;

/// Orthogonal projector `P = I − (1/n)·1·1ᵀ` onto the disagreement subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Projector {
    n: usize,
}

impl Projector {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "projector dimension must be positive");
        Self { n }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Dense `P`.
    pub fn matrix(&self) -> Array2<f64> {
        let one = ones(self.n);
        let outer = one
            .view()
            .insert_axis(ndarray::Axis(1))
            .dot(&one.view().insert_axis(ndarray::Axis(0)));
        Array2::eye(self.n) - outer / self.n as f64
    }

    /// `P v`, computed by subtracting the mean.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>, PassivityError> {
        if v.len() != self.n {
            return Err(PassivityError::Dimension {
                expected: self.n,
                got: v.len(),
            });
        }
        let mean = v.iter().sum::<f64>() / self.n as f64;
        Ok(v.iter().map(|x| x - mean).collect())
    }
}

/// `proj_{S⊥}(v) = (I − (1/n)11ᵀ) v`.
pub fn proj_disagreement(p: &Projector, v: &[f64]) -> Result<Vec<f64>, PassivityError> {
    p.apply(v)
}
