//! Small feed-forward classifier trained with SGD and momentum.

mod arch;
mod eval;
mod io;
mod net;
mod train;

pub use arch::{Activation, Architecture, LayerSpec, CLASSES};
pub use eval::{evaluate, predict, report, EvalReport, GroupAccuracy};
pub use io::{load_params, load_params_into, params_from_bytes, params_to_bytes, save_params, PARAMS_VERSION};
pub use net::{argmax, forward, init_network, loss_and_grad, softmax, Gradients, LayerParams, NetworkParams, Real};
pub use train::{train, EpochRecord, Examples, TrainConfig, TrainOutcome};
