//! Central finite-difference checking of tape gradients.

use super::params::{BoundParams, ParamSet};
use super::tape::{Tape, Var};
use super::tensor::{Result, TensorError};

/// A differentiable scalar function of a parameter set: builds a tape, returns
/// the loss var and the binding used for the parameters.
pub type ScalarFn<'f> = dyn FnMut(&ParamSet) -> Result<(Tape, Var, BoundParams)> + 'f;

/// Compare the tape's analytic gradient against central differences with the
/// given step, over every coordinate of every parameter.
///
/// Returns the maximum of `|analytic - numeric| / max(1e-8, |analytic| + |numeric|)`.
pub fn finite_diff_check(params: &ParamSet, step: f64, f: &mut ScalarFn) -> Result<f64> {
    if !(step > 0.0) {
        return Err(TensorError::Invalid(format!("step must be > 0, got {step}")));
    }
    let (tape, loss, bound) = f(params)?;
    let base = tape.value(loss);
    if !base.scalar_value().is_finite() {
        return Err(TensorError::NonFinite { op: "finite_diff_check" });
    }
    let grads = tape.backward(loss)?;
    let analytic = params.collect_grads(&grads, &bound);

    let eval = |p: &ParamSet, f: &mut ScalarFn| -> Result<f64> {
        let (tape, loss, _) = f(p)?;
        let v = tape.value(loss).scalar_value();
        if !v.is_finite() {
            return Err(TensorError::NonFinite { op: "finite_diff_check" });
        }
        Ok(v)
    };

    let mut max_err: f64 = 0.0;
    for id in 0..params.len() {
        for coord in 0..params.tensor(id).numel() {
            let mut plus = params.clone();
            plus.tensor_mut(id).data_mut()[coord] += step;
            let mut minus = params.clone();
            minus.tensor_mut(id).data_mut()[coord] -= step;
            let numeric = (eval(&plus, f)? - eval(&minus, f)?) / (2.0 * step);
            let a = analytic[id].data()[coord];
            let err = (a - numeric).abs() / f64::max(1e-8, a.abs() + numeric.abs());
            if err > max_err {
                max_err = err;
            }
        }
    }
    Ok(max_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::tensor::Tensor;

    #[test]
    fn square_function_checks_out() {
        let mut params = ParamSet::new();
        let x = params.add("x", Tensor::scalar(3.0).unwrap()).unwrap();
        let err = finite_diff_check(&params, 1e-4, &mut |p: &ParamSet| {
            let mut tape = Tape::new();
            let bound = p.bind(&mut tape);
            let v = bound.var(x);
            let loss = tape.mul(v, v)?;
            Ok((tape, loss, bound))
        })
        .unwrap();
        assert!(err < 1e-6, "err = {err}");
    }

    #[test]
    fn constant_function_has_zero_error() {
        let mut params = ParamSet::new();
        params.add("x", Tensor::scalar(2.0).unwrap()).unwrap();
        let err = finite_diff_check(&params, 1e-4, &mut |p: &ParamSet| {
            let mut tape = Tape::new();
            let bound = p.bind(&mut tape);
            let loss = tape.scalar(1.5)?;
            Ok((tape, loss, bound))
        })
        .unwrap();
        assert!(err < 1e-4, "err = {err}");
    }

    #[test]
    fn bad_step_rejected() {
        let params = ParamSet::new();
        assert!(finite_diff_check(&params, 0.0, &mut |_: &ParamSet| {
            unreachable!()
        })
        .is_err());
    }
}
