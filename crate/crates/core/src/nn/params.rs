use crate::error::{Error, Result};
use crate::nn::Tensor2D;

/// A collection of uniquely named learnable tensors.
///
/// Both orderings must agree: `named_tensors()[i]` and
/// `named_tensors_mut()[i]` refer to the same tensor. Gradient containers are
/// values of the same type, so parameters and gradients line up by position.
pub trait Parameters {
    fn named_tensors(&self) -> Vec<(String, &Tensor2D)>;
    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor2D)>;

    /// The tensor at position `index` of [`Parameters::named_tensors_mut`].
    /// Implementors may override this to avoid building the name list.
    fn tensor_mut(&mut self, index: usize) -> Option<&mut Tensor2D> {
        self.named_tensors_mut().into_iter().nth(index).map(|(_, t)| t)
    }

    fn parameter_count(&self) -> usize {
        self.named_tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// Resets every tensor to zero.
    fn zero(&mut self) {
        for (_, t) in self.named_tensors_mut() {
            t.fill(0.0);
        }
    }

    /// `self += other`, tensor by tensor.
    fn accumulate(&mut self, other: &Self) -> Result<()>
    where
        Self: Sized,
    {
        let src = other.named_tensors();
        let mut dst = self.named_tensors_mut();
        if src.len() != dst.len() {
            return Err(Error::contract("parameter sets have different layouts"));
        }
        for ((name, d), (_, s)) in dst.iter_mut().zip(src) {
            d.check_same_shape(name, s)?;
            d.add_assign(s)?;
        }
        Ok(())
    }

    fn scale_all(&mut self, factor: f64) {
        for (_, t) in self.named_tensors_mut() {
            t.scale(factor);
        }
    }
}

/// A flat, ordered list of named tensors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NamedTensors(pub Vec<(String, Tensor2D)>);

impl Parameters for NamedTensors {
    fn named_tensors(&self) -> Vec<(String, &Tensor2D)> {
        self.0.iter().map(|(n, t)| (n.clone(), t)).collect()
    }

    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor2D)> {
        self.0.iter_mut().map(|(n, t)| (n.clone(), t)).collect()
    }
}
