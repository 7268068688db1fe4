pub mod imaging;
pub mod features;
pub mod neuralnet;
pub mod experiments;
pub mod classifiers;
pub mod detection;
pub mod pubsub;
pub mod runtime;
pub mod cli;
