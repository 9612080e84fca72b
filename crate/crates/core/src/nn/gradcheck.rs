use crate::scalar::Real;

use super::params::{ParamStore, Parameterized};

/// Floor on the denominator of the relative error, so entries whose true
/// gradient is numerically zero are compared in absolute terms.
const REL_ERROR_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// `(parameter name, max relative error over its entries)`.
    pub per_param: Vec<(String, f64)>,
    pub max_rel_error: f64,
}

/// Compares analytic gradients against central differences.
///
/// `loss` must return a deterministic scalar and accumulate its analytic
/// gradient into the model's store. Gradients are zeroed before every call.
/// Parameters are restored to their original values on return.
pub fn grad_check<S, M, F>(model: &mut M, mut loss: F, step: f64) -> GradCheckReport
where
    S: Real,
    M: Parameterized<S>,
    F: FnMut(&mut M) -> S,
{
    model.params_mut().zero_grad();
    loss(model);
    let analytic: Vec<Vec<S>> = model.params().iter().map(|p| p.grad.clone()).collect();
    let h = S::lit(step);

    let mut per_param = Vec::with_capacity(model.params().len());
    for (pi, grads) in analytic.iter().enumerate() {
        let mut worst = 0.0f64;
        for (k, &a) in grads.iter().enumerate() {
            let original = model.params().iter().nth(pi).unwrap().value[k];
            set(model.params_mut(), pi, k, original + h);
            model.params_mut().zero_grad();
            let plus = loss(model);
            set(model.params_mut(), pi, k, original - h);
            model.params_mut().zero_grad();
            let minus = loss(model);
            set(model.params_mut(), pi, k, original);

            let numeric = ((plus - minus) / (h + h)).as_f64();
            let a = a.as_f64();
            let denom = a.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
            worst = worst.max((a - numeric).abs() / denom);
        }
        per_param.push((model.params().iter().nth(pi).unwrap().name.clone(), worst));
    }
    model.params_mut().zero_grad();
    let max_rel_error = per_param.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    GradCheckReport {
        per_param,
        max_rel_error,
    }
}

fn set<S: Real>(store: &mut ParamStore<S>, param: usize, index: usize, value: S) {
    store.iter_mut().nth(param).unwrap().value[index] = value;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_closure_has_unit_gradient() {
        let mut store = ParamStore::<f64>::new(0);
        store.add("w", 1, 3, vec![0.5, -1.0, 2.0]);
        let mut seen = Vec::new();
        let report = grad_check(
            &mut store,
            |s| {
                let p = s.iter_mut().next().unwrap();
                p.grad[1] = 1.0;
                seen.push(p.grad[1]);
                p.value[1]
            },
            // dyadic step keeps the central difference exact
            2f64.powi(-16),
        );
        assert_eq!(report.max_rel_error, 0.0);
        assert_eq!(seen[0], 1.0);
        assert_eq!(store.iter().next().unwrap().value, vec![0.5, -1.0, 2.0]);
    }

    #[test]
    fn detects_wrong_gradient() {
        let mut store = ParamStore::<f64>::new(0);
        store.add("w", 1, 1, vec![1.5]);
        let report = grad_check(
            &mut store,
            |s| {
                let p = s.iter_mut().next().unwrap();
                p.grad[0] = p.value[0]; // true derivative is 2x
                p.value[0] * p.value[0]
            },
            1e-5,
        );
        assert!(report.max_rel_error > 0.4);
    }
}
