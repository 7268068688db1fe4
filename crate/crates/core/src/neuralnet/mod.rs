//! Small convolutional classifier: layers, backprop, optimizers, training
//! loops, weight files and batched inference.

mod dataset;
mod gradcheck;
mod inference;
mod network;
mod optim;
mod scalar;
mod spec;
mod tensor;
mod train;
mod weights;

pub use dataset::{
    prepare_input, shuffled_indices, split_dataset, split_indices, Dataset, DatasetItem, ImageSource,
    LabeledTensor,
};
pub use gradcheck::gradient_check;
pub use inference::{predict_batch, InferenceSettings};
pub use network::{build_network, ConvLayer, DenseLayer, Gradients, Layer, Network};
pub use optim::{OptimizerConfig, SolverKind};
pub use scalar::Scalar;
pub use spec::{ActShape, LayerSpec, NetworkSpec, Padding};
pub use tensor::Tensor;
pub use train::{
    evaluate, fold_sizes, kfold_evaluate, kfold_with, train, EvalRecord, FoldResult, KFoldReport, TrainHistory,
};
pub use weights::{load_weights, load_weights_file, save_weights, save_weights_file};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid network spec: {0}")]
    Spec(String),
    #[error("label {label} out of range for {classes} classes")]
    Label { label: usize, classes: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("dataset error: {0}")]
    Data(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("class {0} has no training samples")]
    EmptyClass(usize),
    #[error("loss became non-finite at iteration {iteration}")]
    Divergence { iteration: usize },
    #[error("malformed weight file: {0}")]
    Format(String),
    #[error("batch rejected: {0}")]
    Batch(String),
}

pub type Result<T> = std::result::Result<T, NetError>;
