//! The knowledge state network: a fully connected feed-forward network with
//! ReLU hidden layers and sigmoid outputs, trained from scratch on simulated
//! assessment states.

mod io;
mod network;
mod train;

pub use io::{load_model, save_model, model_from_json, model_to_json, MODEL_FORMAT, MODEL_VERSION};
pub use network::{
    forward_params, ConstantPredictor, Layer, NetworkArchitecture, NetworkParameters, Predictor, OUTPUT_FLOOR,
};
pub use train::{
    dataset_loss, grad_check, gradient, loss, train, GradCheck, LossKind, Provenance, TrainedModel,
    TrainingConfig, GRAD_CHECK_FLOOR,
};
