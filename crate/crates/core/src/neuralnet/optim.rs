use serde::{Deserialize, Serialize};

use super::{NetError, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolverKind {
    #[serde(rename = "sgd", alias = "SGD", alias = "Sgd")]
    Sgd,
    #[serde(rename = "adam", alias = "Adam", alias = "ADAM")]
    Adam,
}

impl SolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Sgd => "SGD",
            SolverKind::Adam => "Adam",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = NetError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(SolverKind::Sgd),
            "adam" => Ok(SolverKind::Adam),
            other => Err(NetError::Config(format!("unknown solver {other:?}"))),
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub kind: SolverKind,
    pub learning_rate: f64,
    /// Heavy-ball momentum for SGD.
    pub momentum: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Non-improving test-loss evaluations tolerated before stopping; 0 disables.
    pub early_stop_patience: usize,
    pub eval_interval: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            kind: SolverKind::Adam,
            learning_rate: 1e-3,
            momentum: 0.0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            max_iters: 2000,
            seed: 0,
            early_stop_patience: 5,
            eval_interval: 100,
        }
    }
}

impl OptimizerConfig {
    pub fn adam(learning_rate: f64) -> Self {
        Self {
            kind: SolverKind::Adam,
            learning_rate,
            ..Self::default()
        }
    }

    pub fn sgd(learning_rate: f64, momentum: f64) -> Self {
        Self {
            kind: SolverKind::Sgd,
            learning_rate,
            momentum,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(NetError::Config(m.to_string()));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be finite and non-negative");
        }
        if !(self.momentum >= 0.0 && self.momentum < 1.0) {
            return bad("momentum must lie in [0, 1)");
        }
        if self.kind == SolverKind::Adam {
            if !(self.beta1 > 0.0 && self.beta1 < 1.0 && self.beta2 > 0.0 && self.beta2 < 1.0) {
                return bad("adam betas must lie in (0, 1)");
            }
            if !(self.epsilon > 0.0) {
                return bad("adam epsilon must be positive");
            }
        }
        if self.batch_size == 0 || self.max_iters == 0 || self.eval_interval == 0 {
            return bad("batch_size, max_iters and eval_interval must be at least 1");
        }
        Ok(())
    }
}

/// Per-parameter optimizer state.
pub(crate) struct Optimizer<T> {
    cfg: OptimizerConfig,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
    step: u64,
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(cfg: &OptimizerConfig, sizes: &[usize]) -> Self {
        let zeros = || sizes.iter().map(|&n| vec![T::ZERO; n]).collect::<Vec<_>>();
        Self {
            cfg: cfg.clone(),
            first: zeros(),
            second: if cfg.kind == SolverKind::Adam { zeros() } else { Vec::new() },
            step: 0,
        }
    }

    pub fn apply(&mut self, params: Vec<&mut [T]>, grads: &[Vec<T>]) {
        self.step += 1;
        let lr = T::from_f64(self.cfg.learning_rate);
        match self.cfg.kind {
            SolverKind::Sgd => {
                let mu = T::from_f64(self.cfg.momentum);
                for ((p, g), vel) in params.into_iter().zip(grads).zip(&mut self.first) {
                    for ((w, &gi), v) in p.iter_mut().zip(g).zip(vel.iter_mut()) {
                        *v = mu * *v + gi;
                        *w -= lr * *v;
                    }
                }
            }
            SolverKind::Adam => {
                let b1 = self.cfg.beta1;
                let b2 = self.cfg.beta2;
                let c1 = T::from_f64(1.0 / (1.0 - b1.powi(self.step as i32)));
                let c2 = T::from_f64(1.0 / (1.0 - b2.powi(self.step as i32)));
                let (b1, b2) = (T::from_f64(b1), T::from_f64(b2));
                let (ob1, ob2) = (T::ONE - b1, T::ONE - b2);
                let eps = T::from_f64(self.cfg.epsilon);
                for (((p, g), m), v) in params
                    .into_iter()
                    .zip(grads)
                    .zip(&mut self.first)
                    .zip(&mut self.second)
                {
                    for (((w, &gi), mi), vi) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                        *mi = b1 * *mi + ob1 * gi;
                        *vi = b2 * *vi + ob2 * gi * gi;
                        let mhat = *mi * c1;
                        let vhat = *vi * c2;
                        *w -= lr * mhat / (vhat.sqrt() + eps);
                    }
                }
            }
        }
    }
}
