//! Named parameter collections and their binding onto tapes.

use serde::{Deserialize, Serialize};

use super::tape::{Gradients, Tape, Var};
use super::tensor::{Result, Tensor, TensorError};

pub type ParamId = usize;

/// An ordered, named set of parameter tensors. Order is stable, which gives
/// optimizer state and gradient vectors a fixed layout.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, tensor: Tensor) -> Result<ParamId> {
        if self.names.iter().any(|n| n == name) {
            return Err(TensorError::Invalid(format!("duplicate parameter {name}")));
        }
        self.names.push(name.to_string());
        self.tensors.push(tensor);
        Ok(self.names.len() - 1)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id]
    }

    pub fn tensor(&self, id: ParamId) -> &Tensor {
        &self.tensors[id]
    }

    pub fn tensor_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id]
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.tensors.iter())
    }

    /// Copy of the subset of parameters whose name satisfies `keep`,
    /// preserving order.
    pub fn subset<F: Fn(&str) -> bool>(&self, keep: F) -> ParamSet {
        let mut out = ParamSet::new();
        for (name, t) in self.iter() {
            if keep(name) {
                out.names.push(name.to_string());
                out.tensors.push(t.clone());
            }
        }
        out
    }

    pub fn total_coords(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }

    /// Register every parameter as a leaf on `tape`.
    pub fn bind(&self, tape: &mut Tape) -> BoundParams {
        let vars = self
            .tensors
            .iter()
            .map(|t| tape.leaf(t.clone()))
            .collect();
        BoundParams { vars }
    }

    /// Gradient per parameter (zeros where nothing flowed), in set order.
    pub fn collect_grads(&self, grads: &Gradients, bound: &BoundParams) -> Vec<Tensor> {
        self.tensors
            .iter()
            .enumerate()
            .map(|(i, t)| grads.take(bound.vars[i], t.shape()))
            .collect()
    }
}

/// Tape handles for one `ParamSet::bind` call. Indexed by `ParamId`.
pub struct BoundParams {
    vars: Vec<Var>,
}

impl BoundParams {
    pub fn var(&self, id: ParamId) -> Var {
        self.vars[id]
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_names_rejected() {
        let mut set = ParamSet::new();
        set.add("w", Tensor::zeros(&[2])).unwrap();
        assert!(set.add("w", Tensor::zeros(&[2])).is_err());
    }

    #[test]
    fn subset_preserves_order() {
        let mut set = ParamSet::new();
        set.add("a.x", Tensor::zeros(&[1])).unwrap();
        set.add("b.y", Tensor::zeros(&[1])).unwrap();
        set.add("a.z", Tensor::zeros(&[1])).unwrap();
        let sub = set.subset(|n| n.starts_with("a."));
        let names: Vec<&str> = sub.iter().map(|(n, _)| n).collect();
        assert_eq!(names, vec!["a.x", "a.z"]);
    }
}
