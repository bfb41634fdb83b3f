//! Dense feedforward networks trained with exact backpropagation.
//!
//! Just enough machinery for the classifier and the boundary autoencoders:
//! a handful of activations, crossentropy / squared-error / composite
//! adversarial losses, SGD and Adam, inverted dropout, L2 penalties, and a
//! central-difference gradient checker.

mod activation;
mod gradcheck;
mod io;
mod layer;
mod loss;
mod network;
mod optim;

pub use activation::{sigmoid, Activation};
pub use gradcheck::{gradient_check, kink_margin, loss_gradients, GRADCHECK_STEP};
pub use layer::{DenseLayer, LayerSpec};
pub use loss::{crossentropy, mse, one_hot, CompositeLoss, Loss, LossEval, PROB_EPS};
pub use network::{Gradients, Network, Trace};
pub use optim::{EpochLog, Optimizer, StepLoss, TrainConfig, Trainer};
