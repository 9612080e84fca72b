use ndarray::{concatenate, s, Array1, Array2, Axis};
use rand::Rng;

use crate::data::FeatureSequence;
use crate::error::{Error, Result};
use crate::nn::{sigmoid, Dense, Lstm, LstmState, LstmTape, ParamStore, Parameterized};
use crate::scalar::Real;

use super::manager::Subgoal;

/// Worker forward record: LSTM tape plus per-frame head inputs.
#[derive(Debug, Clone)]
pub struct WorkerTape<S> {
    lstm: LstmTape<S>,
    /// `[g_i ; h_t]` per frame.
    combined: Array2<S>,
    /// Output of the combining layer per frame.
    mixed: Array2<S>,
    scores: Vec<S>,
}

impl<S: Real> WorkerTape<S> {
    pub fn scores(&self) -> &[S] {
        &self.scores
    }
}

/// Frame scorer: `p_t = sigmoid(w . (W1 [g_i ; h_t] + b1) + b)`.
///
/// Subgoals enter as constants, so no gradient flows back into the Manager.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerNet<S> {
    store: ParamStore<S>,
    lstm: Lstm,
    combine: Dense,
    head: Dense,
    goal_dim: usize,
}

impl<S> Parameterized<S> for WorkerNet<S> {
    fn params(&self) -> &ParamStore<S> {
        &self.store
    }

    fn params_mut(&mut self) -> &mut ParamStore<S> {
        &mut self.store
    }
}

impl<S: Real> WorkerNet<S> {
    pub fn new<R: Rng>(
        feature_dim: usize,
        hidden: usize,
        goal_dim: usize,
        seed: u64,
        rng: &mut R,
    ) -> Self {
        let mut store = ParamStore::new(seed);
        let lstm = Lstm::new(&mut store, "lstm", feature_dim, hidden, rng);
        let combine = Dense::new(&mut store, "combine", goal_dim + hidden, hidden, rng);
        let head = Dense::new(&mut store, "head", hidden, 1, rng);
        WorkerNet {
            store,
            lstm,
            combine,
            head,
            goal_dim,
        }
    }

    pub fn store(&self) -> &ParamStore<S> {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore<S> {
        &mut self.store
    }

    fn run(
        &self,
        video: &FeatureSequence<S>,
        subgoals: &[Subgoal<S>],
        subtask_size: usize,
        tape: Option<&mut LstmTape<S>>,
    ) -> Result<(Vec<S>, Array2<S>, Array2<S>)> {
        if subtask_size == 0 {
            return Err(Error::Config("subtask size must be positive".into()));
        }
        let tiling = video.tiling(subtask_size);
        if subgoals.len() != tiling.count() {
            return Err(Error::Shape(format!(
                "{} subgoals for {} subtasks",
                subgoals.len(),
                tiling.count()
            )));
        }
        if let Some(g) = subgoals.iter().find(|g| g.goal.len() != self.goal_dim) {
            return Err(Error::Shape(format!(
                "subgoal {} has dimension {}, expected {}",
                g.index,
                g.goal.len(),
                self.goal_dim
            )));
        }
        let hs = self.lstm.forward_sequence(
            &self.store,
            video.view(),
            LstmState::zeros(self.lstm.hidden_dim()),
            tape,
        )?;
        let t = video.len();
        let mut goals = Array2::<S>::zeros((t, self.goal_dim));
        for view in tiling.iter() {
            goals
                .slice_mut(s![view.range.clone(), ..])
                .assign(&subgoals[view.index].goal.view().insert_axis(Axis(0)));
        }
        let combined = concatenate![Axis(1), goals, hs];
        let w1 = self.store.matrix(self.combine.weight());
        let mixed = combined.dot(&w1.t()) + self.store.vector(self.combine.bias());
        let w = self.store.matrix(self.head.weight());
        let logits = mixed.dot(&w.t());
        let b = self.store.vector(self.head.bias())[0];
        let scores = logits.iter().map(|&z| sigmoid(z + b)).collect();
        Ok((scores, combined, mixed))
    }

    pub fn infer(
        &self,
        video: &FeatureSequence<S>,
        subgoals: &[Subgoal<S>],
        subtask_size: usize,
    ) -> Result<Vec<S>> {
        Ok(self.run(video, subgoals, subtask_size, None)?.0)
    }

    pub fn forward(
        &self,
        video: &FeatureSequence<S>,
        subgoals: &[Subgoal<S>],
        subtask_size: usize,
    ) -> Result<WorkerTape<S>> {
        let mut lstm = LstmTape::new();
        let (scores, combined, mixed) = self.run(video, subgoals, subtask_size, Some(&mut lstm))?;
        Ok(WorkerTape {
            lstm,
            combined,
            mixed,
            scores,
        })
    }

    /// Accumulates gradients given `d loss / d logit` for every frame, where
    /// the logit is the pre-sigmoid score.
    pub fn backward(&mut self, tape: WorkerTape<S>, d_logits: &[S]) -> Result<()> {
        let t = tape.scores.len();
        if d_logits.len() != t {
            return Err(Error::Shape(format!(
                "{} logit gradients for {t} frames",
                d_logits.len()
            )));
        }
        let one = S::one();
        let dz = Array1::from(d_logits.to_vec());
        let hidden = self.lstm.hidden_dim();

        // head: logit_t = w . mixed_t + b
        let (hw, hb) = (self.head.weight(), self.head.bias());
        let w_head = self.store.matrix(hw).row(0).to_owned();
        self.store
            .grad_matrix_mut(hw)
            .row_mut(0)
            .scaled_add(one, &tape.mixed.t().dot(&dz));
        self.store.grad_vector_mut(hb)[0] += dz.sum();
        // d mixed_t = dz_t * w
        let d_mixed = dz
            .view()
            .insert_axis(Axis(1))
            .dot(&w_head.view().insert_axis(Axis(0)));

        // combine: mixed_t = W1 combined_t + b1
        let (cw, cb) = (self.combine.weight(), self.combine.bias());
        let d_combined = d_mixed.dot(&self.store.matrix(cw));
        self.store
            .grad_matrix_mut(cw)
            .scaled_add(one, &d_mixed.t().dot(&tape.combined));
        self.store
            .grad_vector_mut(cb)
            .scaled_add(one, &d_mixed.sum_axis(Axis(0)));

        let dh = d_combined.slice(s![.., self.goal_dim..self.goal_dim + hidden]);
        self.lstm.backward(&mut self.store, tape.lstm, dh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::grad_check;
    use crate::policy::episode::Episode;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn video(t: usize, d: usize, seed: u64) -> FeatureSequence<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FeatureSequence::new(
            "v",
            Array2::from_shape_fn((t, d), |_| rng.random_range(-1.0..1.0)),
        )
        .unwrap()
    }

    fn goals(count: usize, dim: usize, seed: u64) -> Vec<Subgoal<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|index| Subgoal {
                index,
                goal: Array1::from_shape_fn(dim, |_| rng.random_range(-0.5..0.5)),
            })
            .collect()
    }

    #[test]
    fn output_covers_short_last_subtask() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = WorkerNet::<f64>::new(3, 4, 4, 0, &mut rng);
        let scores = net.infer(&video(50, 3, 1), &goals(3, 4, 2), 20).unwrap();
        assert_eq!(scores.len(), 50);
    }

    #[test]
    fn subgoal_count_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = WorkerNet::<f64>::new(3, 4, 4, 0, &mut rng);
        assert!(matches!(
            net.infer(&video(50, 3, 1), &goals(2, 4, 2), 20),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            net.infer(&video(50, 3, 1), &goals(3, 5, 2), 20),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn later_subgoal_only_affects_later_frames() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = WorkerNet::<f64>::new(3, 4, 4, 0, &mut rng);
        let v = video(10, 3, 5);
        let mut g = goals(2, 4, 6);
        let before = net.infer(&v, &g, 5).unwrap();
        g[1].goal[0] += 0.7;
        let after = net.infer(&v, &g, 5).unwrap();
        assert_eq!(before[..5], after[..5]);
        for t in 5..10 {
            assert_ne!(before[t], after[t]);
        }
    }

    #[test]
    fn log_prob_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut net = WorkerNet::<f64>::new(5, 4, 4, 0, &mut rng);
        let v = video(6, 5, 8);
        let g = goals(2, 4, 9);
        let actions = vec![true, false, false, true, true, false];
        let report = grad_check(
            &mut net,
            |net| {
                let tape = net.forward(&v, &g, 3).unwrap();
                let ep = Episode::from_actions(tape.scores(), actions.clone());
                let d = ep.log_prob_grad_logits(tape.scores());
                net.backward(tape, &d).unwrap();
                ep.log_prob
            },
            1e-5,
        );
        assert!(report.max_rel_error < 1e-5, "{report:?}");
    }
}
