//! Differentiable kernels the encoder is assembled from: dilated causal
//! convolution with weight normalization, leaky ReLU, global max pooling and
//! a dense layer, each with an explicit adjoint.

pub mod activation;
pub mod conv;
pub mod gradcheck;
pub mod linear;
pub mod pool;
pub mod tensor;

pub use activation::{leaky_relu, leaky_relu_backward};
pub use conv::{causal_conv1d_backward, causal_conv1d_forward, weight_norm_apply, weight_norm_backward, ConvSpec};
pub use gradcheck::{gradient_check, gradient_check_report, Differentiable, GradCheckOptions, GradCheckReport};
pub use linear::{linear_backward, linear_forward, Linear};
pub use pool::{global_max_pool, global_max_pool_backward, Pooled};
pub use tensor::{ParamTensor, Tensor3};
