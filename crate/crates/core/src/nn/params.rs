use ndarray::{ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2};
use rand::Rng;

use crate::scalar::Real;

/// Dense row-major parameter with a same-shape gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct Param<S> {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub value: Vec<S>,
    pub grad: Vec<S>,
}

impl<S: Real> Param<S> {
    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

/// Ordered collection of named parameters. Order is insertion order and is
/// what checkpoints and optimizers iterate over.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore<S> {
    params: Vec<Param<S>>,
    seed: u64,
}

impl<S: Real> ParamStore<S> {
    pub fn new(seed: u64) -> Self {
        ParamStore {
            params: Vec::new(),
            seed,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn add(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        value: Vec<S>,
    ) -> ParamId {
        assert_eq!(value.len(), rows * cols, "parameter value has wrong length");
        let id = ParamId(self.params.len());
        self.params.push(Param {
            name: name.into(),
            rows,
            cols,
            grad: vec![S::zero(); value.len()],
            value,
        });
        id
    }

    /// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    pub fn add_uniform<R: Rng>(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        fan_in: usize,
        rng: &mut R,
    ) -> ParamId {
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        let value = (0..rows * cols)
            .map(|_| S::lit(rng.random_range(-bound..=bound)))
            .collect();
        self.add(name, rows, cols, value)
    }

    pub fn param(&self, id: ParamId) -> &Param<S> {
        &self.params[id.0]
    }

    pub fn param_mut(&mut self, id: ParamId) -> &mut Param<S> {
        &mut self.params[id.0]
    }

    pub fn matrix(&self, id: ParamId) -> ArrayView2<'_, S> {
        let p = &self.params[id.0];
        ArrayView2::from_shape((p.rows, p.cols), &p.value).unwrap()
    }

    pub fn vector(&self, id: ParamId) -> ArrayView1<'_, S> {
        ArrayView1::from(&self.params[id.0].value)
    }

    pub fn grad_matrix_mut(&mut self, id: ParamId) -> ArrayViewMut2<'_, S> {
        let p = &mut self.params[id.0];
        ArrayViewMut2::from_shape((p.rows, p.cols), &mut p.grad).unwrap()
    }

    pub fn grad_vector_mut(&mut self, id: ParamId) -> ArrayViewMut1<'_, S> {
        ArrayViewMut1::from(&mut self.params[id.0].grad)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Param<S>> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> std::slice::IterMut<'_, Param<S>> {
        self.params.iter_mut()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.iter_mut().for_each(|g| *g = S::zero());
        }
    }

    pub fn scalar_count(&self) -> usize {
        self.params.iter().map(Param::len).sum()
    }
}

/// Anything that owns a parameter store.
pub trait Parameterized<S> {
    fn params(&self) -> &ParamStore<S>;
    fn params_mut(&mut self) -> &mut ParamStore<S>;
}

impl<S> Parameterized<S> for ParamStore<S> {
    fn params(&self) -> &ParamStore<S> {
        self
    }

    fn params_mut(&mut self) -> &mut ParamStore<S> {
        self
    }
}
