use ndarray::{Array1, ArrayView1};
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::params::{ParamId, ParamStore};

/// Affine map `y = W x + b` with `W` shaped `out x in`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dense {
    weight: ParamId,
    bias: ParamId,
    input: usize,
    output: usize,
}

impl Dense {
    pub fn new<S: Real, R: Rng>(
        store: &mut ParamStore<S>,
        prefix: &str,
        input: usize,
        output: usize,
        rng: &mut R,
    ) -> Self {
        let weight = store.add_uniform(format!("{prefix}.weight"), output, input, input, rng);
        let bias = store.add_uniform(format!("{prefix}.bias"), output, 1, input, rng);
        Dense {
            weight,
            bias,
            input,
            output,
        }
    }

    pub fn weight(&self) -> ParamId {
        self.weight
    }

    pub fn bias(&self) -> ParamId {
        self.bias
    }

    pub fn input_dim(&self) -> usize {
        self.input
    }

    pub fn output_dim(&self) -> usize {
        self.output
    }

    pub fn forward<S: Real>(
        &self,
        store: &ParamStore<S>,
        x: ArrayView1<'_, S>,
    ) -> Result<Array1<S>> {
        if x.len() != self.input {
            return Err(Error::Shape(format!(
                "affine layer expects input of length {}, got {}",
                self.input,
                x.len()
            )));
        }
        Ok(store.matrix(self.weight).dot(&x) + store.vector(self.bias))
    }

    /// Accumulates parameter gradients for upstream `dy` and returns `dx`.
    pub fn backward<S: Real>(
        &self,
        store: &mut ParamStore<S>,
        x: ArrayView1<'_, S>,
        dy: ArrayView1<'_, S>,
    ) -> Array1<S> {
        let dx = store.matrix(self.weight).t().dot(&dy);
        {
            let mut gw = store.grad_matrix_mut(self.weight);
            for (mut row, &d) in gw.rows_mut().into_iter().zip(dy.iter()) {
                row.scaled_add(d, &x);
            }
        }
        store.grad_vector_mut(self.bias).scaled_add(S::one(), &dy);
        dx
    }
}
