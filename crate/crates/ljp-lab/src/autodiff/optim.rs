//! Adam optimizer over a `ParamSet`.

use super::params::ParamSet;
use super::tensor::{Result, Tensor, TensorError};

pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step_count: u32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(params: &ParamSet, learning_rate: f64) -> Self {
        let m = (0..params.len())
            .map(|i| vec![0.0; params.tensor(i).numel()])
            .collect();
        let v = (0..params.len())
            .map(|i| vec![0.0; params.tensor(i).numel()])
            .collect();
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step_count: 0,
            m,
            v,
        }
    }

    pub fn step(&mut self, params: &mut ParamSet, grads: &[Tensor]) -> Result<()> {
        if grads.len() != params.len() {
            return Err(TensorError::Invalid(format!(
                "adam: {} gradients for {} parameters",
                grads.len(),
                params.len()
            )));
        }
        self.step_count += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step_count as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step_count as i32);
        for id in 0..params.len() {
            if grads[id].shape() != params.tensor(id).shape() {
                return Err(TensorError::ShapeMismatch {
                    op: "adam",
                    left: params.tensor(id).shape().to_vec(),
                    right: grads[id].shape().to_vec(),
                });
            }
            let m = &mut self.m[id];
            let v = &mut self.v[id];
            let p = params.tensor_mut(id).data_mut();
            for ((pi, gi), (mi, vi)) in p
                .iter_mut()
                .zip(grads[id].data())
                .zip(m.iter_mut().zip(v.iter_mut()))
            {
                *mi = self.beta1 * *mi + (1.0 - self.beta1) * gi;
                *vi = self.beta2 * *vi + (1.0 - self.beta2) * gi * gi;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *pi -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn converges_on_quadratic() {
        let mut params = ParamSet::new();
        let id = params.add("x", Tensor::scalar(5.0).unwrap()).unwrap();
        let mut adam = Adam::new(&params, 0.1);
        for _ in 0..500 {
            let x = params.tensor(id).scalar_value();
            let grad = Tensor::scalar(2.0 * x).unwrap();
            adam.step(&mut params, &[grad]).unwrap();
        }
        assert!(params.tensor(id).scalar_value().abs() < 1e-2);
    }
}
