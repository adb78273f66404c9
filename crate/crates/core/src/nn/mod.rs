//! Small dense neural-network kernel with hand-written backward passes.
//!
//! Everything is `f64` and row-major. Layers never cache activations
//! internally; forward passes return whatever their backward pass needs.

mod activation;
mod adam;
mod dense;
mod dropout;
mod gradcheck;
mod loss;
mod norm;
mod params;
mod tensor;

pub use activation::{gelu, gelu_backward, gelu_forward, gelu_grad, gelu_tensor, GeluCache};
pub use adam::{AdamConfig, AdamState};
pub use dense::Dense;
pub use dropout::{dropout, DropoutMask, Mode};
pub use gradcheck::{grad_check, grad_check_subset, relative_error, GradCheckOptions, GradCheckReport};
pub use loss::mse_loss;
pub use norm::{normalize_rows, LayerNorm, LayerNormCache, LAYER_NORM_EPS};
pub use params::{NamedTensors, Parameters};
pub use tensor::{Shape, Tensor2D};
