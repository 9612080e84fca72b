use ndarray::{Array1, Array2};
use rand::Rng;

use crate::data::{FeatureSequence, SubtaskTiling};
use crate::error::{Error, Result};
use crate::nn::{
    bce, bce_grad, sigmoid, sigmoid_grad, Dense, Lstm, LstmState, LstmTape, ParamStore,
    Parameterized,
};
use crate::scalar::Real;

/// Manager hidden state at the last frame of a subtask.
#[derive(Debug, Clone, PartialEq)]
pub struct Subgoal<S> {
    pub index: usize,
    pub goal: Array1<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManagerOutput<S> {
    pub subgoals: Vec<Subgoal<S>>,
    /// Probability that each subtask contains a keyframe.
    pub predictions: Vec<S>,
}

/// Everything the Manager backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ManagerTape<S> {
    lstm: LstmTape<S>,
    tiling: SubtaskTiling,
    goals: Vec<Array1<S>>,
    predictions: Vec<S>,
}

/// LSTM over frames, threading its state across subtasks, plus a logistic
/// head on each subgoal.
#[derive(Debug, Clone, PartialEq)]
pub struct ManagerNet<S> {
    store: ParamStore<S>,
    lstm: Lstm,
    head: Dense,
}

impl<S> Parameterized<S> for ManagerNet<S> {
    fn params(&self) -> &ParamStore<S> {
        &self.store
    }

    fn params_mut(&mut self) -> &mut ParamStore<S> {
        &mut self.store
    }
}

impl<S: Real> ManagerNet<S> {
    pub fn new<R: Rng>(feature_dim: usize, hidden: usize, seed: u64, rng: &mut R) -> Self {
        let mut store = ParamStore::new(seed);
        let lstm = Lstm::new(&mut store, "lstm", feature_dim, hidden, rng);
        let head = Dense::new(&mut store, "head", hidden, 1, rng);
        ManagerNet { store, lstm, head }
    }

    pub fn store(&self) -> &ParamStore<S> {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore<S> {
        &mut self.store
    }

    pub fn hidden_dim(&self) -> usize {
        self.lstm.hidden_dim()
    }

    fn run(
        &self,
        video: &FeatureSequence<S>,
        subtask_size: usize,
        tape: Option<&mut LstmTape<S>>,
    ) -> Result<(ManagerOutput<S>, SubtaskTiling)> {
        if subtask_size == 0 {
            return Err(Error::Config("subtask size must be positive".into()));
        }
        let tiling = video.tiling(subtask_size);
        let hs = self.lstm.forward_sequence(
            &self.store,
            video.view(),
            LstmState::zeros(self.hidden_dim()),
            tape,
        )?;
        let mut subgoals = Vec::with_capacity(tiling.count());
        let mut predictions = Vec::with_capacity(tiling.count());
        for view in tiling.iter() {
            let goal = hs.row(view.range.end - 1).to_owned();
            let logit = self.head.forward(&self.store, goal.view())?[0];
            predictions.push(sigmoid(logit));
            subgoals.push(Subgoal {
                index: view.index,
                goal,
            });
        }
        Ok((
            ManagerOutput {
                subgoals,
                predictions,
            },
            tiling,
        ))
    }

    pub fn infer(
        &self,
        video: &FeatureSequence<S>,
        subtask_size: usize,
    ) -> Result<ManagerOutput<S>> {
        Ok(self.run(video, subtask_size, None)?.0)
    }

    pub fn forward(
        &self,
        video: &FeatureSequence<S>,
        subtask_size: usize,
    ) -> Result<(ManagerOutput<S>, ManagerTape<S>)> {
        let mut lstm = LstmTape::new();
        let (out, tiling) = self.run(video, subtask_size, Some(&mut lstm))?;
        let tape = ManagerTape {
            lstm,
            tiling,
            goals: out.subgoals.iter().map(|g| g.goal.clone()).collect(),
            predictions: out.predictions.clone(),
        };
        Ok((out, tape))
    }

    /// Accumulates gradients given `d loss / d prediction` per subtask.
    pub fn backward(&mut self, tape: ManagerTape<S>, d_predictions: &[S]) -> Result<()> {
        if d_predictions.len() != tape.predictions.len() {
            return Err(Error::Shape(format!(
                "{} prediction gradients for {} subtasks",
                d_predictions.len(),
                tape.predictions.len()
            )));
        }
        let mut dh = Array2::<S>::zeros((tape.lstm.len(), self.hidden_dim()));
        for (i, view) in tape.tiling.iter().enumerate() {
            let d_logit = d_predictions[i] * sigmoid_grad(tape.predictions[i]);
            let dy = Array1::from_elem(1, d_logit);
            let dg = self
                .head
                .backward(&mut self.store, tape.goals[i].view(), dy.view());
            dh.row_mut(view.range.end - 1).scaled_add(S::one(), &dg);
        }
        self.lstm.backward(&mut self.store, tape.lstm, dh.view())
    }

    /// Weak-label loss `-(1/N) sum_i [y_i ln p_i + (1 - y_i) ln(1 - p_i)]`;
    /// accumulates its gradient and returns the loss.
    pub fn loss_and_backward(
        &mut self,
        video: &FeatureSequence<S>,
        labels: &[bool],
        subtask_size: usize,
    ) -> Result<S> {
        let (out, tape) = self.forward(video, subtask_size)?;
        let loss = manager_loss(&out.predictions, labels)?;
        let scale = S::one() / S::lit(labels.len() as f64);
        let grads: Vec<S> = out
            .predictions
            .iter()
            .zip(labels)
            .map(|(&p, &y)| scale * bce_grad(p, label(y)))
            .collect();
        self.backward(tape, &grads)?;
        Ok(loss)
    }
}

fn label<S: Real>(y: bool) -> S {
    if y {
        S::one()
    } else {
        S::zero()
    }
}

/// Mean binary cross-entropy between subtask predictions and weak labels.
pub fn manager_loss<S: Real>(predictions: &[S], labels: &[bool]) -> Result<S> {
    if predictions.len() != labels.len() || labels.is_empty() {
        return Err(Error::Shape(format!(
            "{} predictions for {} task labels",
            predictions.len(),
            labels.len()
        )));
    }
    let mut total = S::zero();
    for (&p, &y) in predictions.iter().zip(labels) {
        total += bce(p, label(y))?;
    }
    Ok(total / S::lit(labels.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::grad_check;
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

    #[test]
    fn shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = ManagerNet::<f64>::new(8, 6, 0, &mut rng);
        let out = net.infer(&video(40, 8, 1), 20).unwrap();
        assert_eq!(out.subgoals.len(), 2);
        assert!(out.subgoals.iter().all(|g| g.goal.len() == 6));
    }

    fn assert_close(a: &Array1<f64>, b: &Array1<f64>) {
        let gap = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(gap < 1e-14, "{a} vs {b}");
    }

    #[test]
    fn subgoal_matches_step_replay() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = ManagerNet::<f64>::new(4, 5, 0, &mut rng);
        let v = video(12, 4, 3);
        let out = net.infer(&v, 5).unwrap();
        let mut state = LstmState::zeros(5);
        for t in 0..12 {
            state = net.lstm.step(&net.store, v.frame(t), &state, None).unwrap();
            if t == 4 {
                assert_close(&out.subgoals[0].goal, &state.h);
            }
            if t == 9 {
                assert_close(&out.subgoals[1].goal, &state.h);
            }
        }
        assert_close(&out.subgoals[2].goal, &state.h);
    }

    #[test]
    fn zero_params_predict_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut net = ManagerNet::<f64>::new(4, 5, 0, &mut rng);
        net.store
            .iter_mut()
            .for_each(|p| p.value.iter_mut().for_each(|v| *v = 0.0));
        let out = net.infer(&video(9, 4, 1), 3).unwrap();
        assert_eq!(out.predictions, vec![0.5; 3]);
        let loss = manager_loss(&out.predictions, &[true, false, true]).unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn perfect_predictions_have_near_zero_loss() {
        let loss = manager_loss(&[1.0, 0.0, 1.0], &[true, false, true]).unwrap();
        assert!(loss < 1e-6);
        assert!(manager_loss(&[0.5], &[true, false]).is_err());
    }

    #[test]
    fn loss_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut net = ManagerNet::<f64>::new(5, 4, 0, &mut rng);
        let v = video(6, 5, 6);
        let labels = [true, false];
        let report = grad_check(
            &mut net,
            |net| net.loss_and_backward(&v, &labels, 3).unwrap(),
            1e-5,
        );
        assert!(report.max_rel_error < 1e-5, "{report:?}");
    }
}
