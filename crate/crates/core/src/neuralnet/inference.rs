use serde::{Deserialize, Serialize};

use super::{NetError, Network, Result, Tensor};

/// Per-call batch policy for inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferenceSettings {
    /// When set, any batch of `1..=max_batch` is accepted; otherwise every
    /// call must carry exactly `max_batch` samples.
    pub dynamic_batch_enabled: bool,
    pub max_batch: usize,
}

impl Default for InferenceSettings {
    fn default() -> Self {
        Self {
            dynamic_batch_enabled: true,
            max_batch: 32,
        }
    }
}

pub fn predict_batch(net: &Network, batch: &Tensor, settings: &InferenceSettings) -> Result<Tensor> {
    let n = batch.batch();
    if n == 0 || settings.max_batch == 0 {
        return Err(NetError::Batch(format!("batch of {n} with limit {}", settings.max_batch)));
    }
    if settings.dynamic_batch_enabled && n > settings.max_batch {
        return Err(NetError::Batch(format!(
            "batch of {n} exceeds the dynamic limit {}",
            settings.max_batch
        )));
    }
    if !settings.dynamic_batch_enabled && n != settings.max_batch {
        return Err(NetError::Batch(format!(
            "static batch is {}, got {n}",
            settings.max_batch
        )));
    }
    net.forward(batch)
}
