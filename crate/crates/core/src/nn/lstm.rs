//! Single-layer LSTM with backpropagation through time.
//!
//! Gate layout in the stacked pre-activation `z` (length `4H`) is
//! input, forget, candidate, output.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::activation::sigmoid;
use super::params::{ParamId, ParamStore};

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState<S> {
    pub h: Array1<S>,
    pub c: Array1<S>,
}

impl<S: Real> LstmState<S> {
    pub fn zeros(hidden: usize) -> Self {
        LstmState {
            h: Array1::zeros(hidden),
            c: Array1::zeros(hidden),
        }
    }
}

#[derive(Debug, Clone)]
struct StepRecord<S> {
    x: Array1<S>,
    h_prev: Array1<S>,
    c_prev: Array1<S>,
    /// Post-activation gates `[i, f, g, o]`.
    gates: Array1<S>,
    tanh_c: Array1<S>,
}

/// Forward record for one sequence. `Lstm::backward` takes it by value, so
/// a tape is consumed exactly once.
#[derive(Debug, Clone, Default)]
pub struct LstmTape<S> {
    steps: Vec<StepRecord<S>>,
}

impl<S: Real> LstmTape<S> {
    pub fn new() -> Self {
        LstmTape { steps: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lstm {
    w_x: ParamId,
    w_h: ParamId,
    bias: ParamId,
    input: usize,
    hidden: usize,
}

impl Lstm {
    /// Uniform init scaled by `1/sqrt(H)`, forget-gate bias set to `+1`.
    pub fn new<S: Real, R: Rng>(
        store: &mut ParamStore<S>,
        prefix: &str,
        input: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        let w_x = store.add_uniform(format!("{prefix}.w_x"), 4 * hidden, input, hidden, rng);
        let w_h = store.add_uniform(format!("{prefix}.w_h"), 4 * hidden, hidden, hidden, rng);
        let bias = store.add_uniform(format!("{prefix}.bias"), 4 * hidden, 1, hidden, rng);
        store.param_mut(bias).value[hidden..2 * hidden]
            .iter_mut()
            .for_each(|b| *b = S::one());
        Lstm {
            w_x,
            w_h,
            bias,
            input,
            hidden,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden
    }

    /// One recurrence step. Pass a tape to record it for backpropagation.
    pub fn step<S: Real>(
        &self,
        store: &ParamStore<S>,
        x: ArrayView1<'_, S>,
        state: &LstmState<S>,
        tape: Option<&mut LstmTape<S>>,
    ) -> Result<LstmState<S>> {
        let h = self.hidden;
        if x.len() != self.input || state.h.len() != h || state.c.len() != h {
            return Err(Error::Shape(format!(
                "lstm step expects x[{}], h[{h}], c[{h}]; got x[{}], h[{}], c[{}]",
                self.input,
                x.len(),
                state.h.len(),
                state.c.len()
            )));
        }
        let mut z = store.matrix(self.w_x).dot(&x);
        z += &store.vector(self.bias);
        Ok(self.advance(store, z, x, state, tape))
    }

    /// Finishes a step given `W_x x + b` in `z`.
    fn advance<S: Real>(
        &self,
        store: &ParamStore<S>,
        mut z: Array1<S>,
        x: ArrayView1<'_, S>,
        state: &LstmState<S>,
        tape: Option<&mut LstmTape<S>>,
    ) -> LstmState<S> {
        let h = self.hidden;
        z += &store.matrix(self.w_h).dot(&state.h);
        for (k, v) in z.iter_mut().enumerate() {
            *v = if (2 * h..3 * h).contains(&k) {
                v.tanh()
            } else {
                sigmoid(*v)
            };
        }
        let gates = z;
        let (i, f, g, o) = (
            gates.slice(s![..h]),
            gates.slice(s![h..2 * h]),
            gates.slice(s![2 * h..3 * h]),
            gates.slice(s![3 * h..]),
        );
        let c = &f * &state.c + &i * &g;
        let tanh_c = c.mapv(S::tanh);
        let h_new = &o * &tanh_c;
        if let Some(tape) = tape {
            tape.steps.push(StepRecord {
                x: x.to_owned(),
                h_prev: state.h.clone(),
                c_prev: state.c.clone(),
                gates: gates.clone(),
                tanh_c,
            });
        }
        LstmState { h: h_new, c }
    }

    /// Runs the whole sequence from `init`, returning every hidden state
    /// (`T x H`).
    pub fn forward_sequence<S: Real>(
        &self,
        store: &ParamStore<S>,
        xs: ArrayView2<'_, S>,
        init: LstmState<S>,
        mut tape: Option<&mut LstmTape<S>>,
    ) -> Result<Array2<S>> {
        if xs.ncols() != self.input || init.h.len() != self.hidden || init.c.len() != self.hidden {
            return Err(Error::Shape(format!(
                "lstm sequence expects {} inputs and {} hidden units; got {} and h[{}], c[{}]",
                self.input,
                self.hidden,
                xs.ncols(),
                init.h.len(),
                init.c.len()
            )));
        }
        // input projections for all steps in one product
        let zx = xs.dot(&store.matrix(self.w_x).t()) + store.vector(self.bias);
        let mut hs = Array2::zeros((xs.nrows(), self.hidden));
        let mut state = init;
        for (t, (x, z)) in xs.rows().into_iter().zip(zx.rows()).enumerate() {
            state = self.advance(store, z.to_owned(), x, &state, tape.as_deref_mut());
            hs.row_mut(t).assign(&state.h);
        }
        Ok(hs)
    }

    /// Backpropagation through time. `dh_ext[t]` is the loss gradient that
    /// reaches hidden state `t` from outside the recurrence. Gradients are
    /// accumulated into the store. The initial state is treated as constant.
    pub fn backward<S: Real>(
        &self,
        store: &mut ParamStore<S>,
        tape: LstmTape<S>,
        dh_ext: ArrayView2<'_, S>,
    ) -> Result<()> {
        let h = self.hidden;
        let steps = tape.steps.len();
        if dh_ext.dim() != (steps, h) {
            return Err(Error::Shape(format!(
                "lstm backward expects {steps}x{h} upstream gradient, got {:?}",
                dh_ext.dim()
            )));
        }
        let mut dz_all = Array2::<S>::zeros((steps, 4 * h));
        let mut dh_next = Array1::<S>::zeros(h);
        let mut dc_next = Array1::<S>::zeros(h);
        let one = S::one();
        {
            let w_h = store.matrix(self.w_h);
            for (t, rec) in tape.steps.iter().enumerate().rev() {
                let dh = &dh_ext.row(t) + &dh_next;
                let gates = &rec.gates;
                let mut dz = dz_all.row_mut(t);
                for k in 0..h {
                    let (i, f, g, o) = (gates[k], gates[h + k], gates[2 * h + k], gates[3 * h + k]);
                    let tc = rec.tanh_c[k];
                    let dc = dc_next[k] + dh[k] * o * (one - tc * tc);
                    dz[k] = dc * g * i * (one - i);
                    dz[h + k] = dc * rec.c_prev[k] * f * (one - f);
                    dz[2 * h + k] = dc * i * (one - g * g);
                    dz[3 * h + k] = dh[k] * tc * o * (one - o);
                    dc_next[k] = dc * f;
                }
                dh_next = w_h.t().dot(&dz);
            }
        }
        let xs = Array2::from_shape_fn((steps, self.input), |(t, j)| tape.steps[t].x[j]);
        let h_prev = Array2::from_shape_fn((steps, h), |(t, j)| tape.steps[t].h_prev[j]);
        let dzt = dz_all.t();
        store
            .grad_matrix_mut(self.w_x)
            .scaled_add(one, &dzt.dot(&xs));
        store
            .grad_matrix_mut(self.w_h)
            .scaled_add(one, &dzt.dot(&h_prev));
        let db = dz_all.sum_axis(ndarray::Axis(0));
        store.grad_vector_mut(self.bias).scaled_add(one, &db);
        Ok(())
    }
}
