use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ExperimentError, Result};
use crate::neuralnet::{
    build_network, split_indices, train, Dataset, LabeledTensor, NetworkSpec, OptimizerConfig, SolverKind, Tensor,
    TrainHistory,
};

/// The four swept axes. Values may repeat; each entry is its own config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxes {
    #[serde(rename = "input-size")]
    pub input_size: Vec<usize>,
    pub iters: Vec<usize>,
    #[serde(rename = "solver-type")]
    pub solver: Vec<SolverKind>,
    #[serde(rename = "nn-size")]
    pub nn_size: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub axes: SweepAxes,
    #[serde(default = "one")]
    pub trials_per_config: usize,
    #[serde(default)]
    pub seed: u64,
    /// Concurrent runs; records come back in config order regardless.
    #[serde(default = "one")]
    pub workers: usize,
}

fn one() -> usize {
    1
}

impl SweepConfig {
    /// The published ten-row grid: one input size, 2000 iterations, both
    /// solvers, widths 8, 16, 16, 16, 32.
    pub fn reference_grid(seed: u64) -> Self {
        Self {
            axes: SweepAxes {
                input_size: vec![2],
                iters: vec![2000],
                solver: vec![SolverKind::Adam, SolverKind::Sgd],
                nn_size: vec![8, 16, 16, 16, 32],
            },
            trials_per_config: 1,
            seed,
            workers: 1,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| ExperimentError::Config(format!("sweep config: {e}")))
    }

    /// Cartesian product with the last axis varying fastest.
    pub fn points(&self) -> Vec<GridPoint> {
        let a = &self.axes;
        let mut out = Vec::new();
        for &input_size in &a.input_size {
            for &iters in &a.iters {
                for &solver in &a.solver {
                    for &nn_size in &a.nn_size {
                        out.push(GridPoint {
                            input_size,
                            iters,
                            solver,
                            nn_size,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPoint {
    pub input_size: usize,
    pub iters: usize,
    pub solver: SolverKind,
    pub nn_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskOutcome {
    pub train_loss: f64,
    pub test_loss: f64,
    pub history: TrainHistory,
}

/// Binds grid points to something trainable.
pub trait SweepTask: Sync {
    fn run(&self, point: &GridPoint, seed: u64) -> std::result::Result<TaskOutcome, String>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Diverged(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_id: usize,
    pub trial: usize,
    pub seed: u64,
    pub point: GridPoint,
    pub train_loss: Option<f64>,
    pub test_loss: Option<f64>,
    pub status: RunStatus,
    pub history: Option<TrainHistory>,
}

pub fn derive_seed(base: u64, config_id: usize, trial: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(((config_id as u64) << 20) ^ trial as u64);
    rng.gen()
}

/// Runs every (config, trial) pair. Failed runs stay in the list with a
/// `Diverged` status.
pub fn run_grid(sweep: &SweepConfig, task: &dyn SweepTask) -> Result<Vec<RunRecord>> {
    let points = sweep.points();
    if points.is_empty() || sweep.trials_per_config == 0 {
        return Err(ExperimentError::Config("empty grid".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|c| (0..sweep.trials_per_config).map(move |t| (c, t)))
        .collect();
    let slots: Vec<Mutex<Option<RunRecord>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let work = || loop {
        let j = next.fetch_add(1, Ordering::Relaxed);
        let Some(&(config_id, trial)) = jobs.get(j) else { break };
        let point = points[config_id];
        let seed = derive_seed(sweep.seed, config_id, trial);
        log::info!("config {} trial {trial}: {point:?}", config_id + 1);
        let record = match task.run(&point, seed) {
            Ok(o) if o.test_loss.is_finite() && o.train_loss.is_finite() => RunRecord {
                config_id,
                trial,
                seed,
                point,
                train_loss: Some(o.train_loss),
                test_loss: Some(o.test_loss),
                status: RunStatus::Ok,
                history: Some(o.history),
            },
            other => RunRecord {
                config_id,
                trial,
                seed,
                point,
                train_loss: None,
                test_loss: None,
                status: RunStatus::Diverged(match other {
                    Err(e) => e,
                    Ok(_) => "non-finite loss".into(),
                }),
                history: None,
            },
        };
        *slots[j].lock().expect("slot lock") = Some(record);
    };
    let workers = sweep.workers.clamp(1, jobs.len());
    if workers == 1 {
        work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(work);
            }
        });
    }
    Ok(slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot lock").expect("every job ran"))
        .collect())
}

fn finish(history: TrainHistory) -> std::result::Result<TaskOutcome, String> {
    let last = history.last().ok_or("no evaluation recorded")?;
    Ok(TaskOutcome {
        train_loss: last.train_loss,
        test_loss: last.test_loss,
        history,
    })
}

fn optimizer_for(point: &GridPoint, base: &OptimizerConfig, sgd_lr: f64, seed: u64) -> OptimizerConfig {
    let mut opt = base.clone();
    opt.kind = point.solver;
    if point.solver == SolverKind::Sgd {
        opt.learning_rate = sgd_lr;
    }
    opt.max_iters = point.iters;
    opt.seed = seed;
    opt
}

/// Two overlapping Gaussian classes in `input-size` dimensions learned by a
/// one-hidden-layer MLP of width `nn-size`.
#[derive(Debug, Clone)]
pub struct ToyTask {
    pub samples: usize,
    pub separation: f64,
    pub data_seed: u64,
    pub optimizer: OptimizerConfig,
    pub sgd_learning_rate: f64,
}

impl Default for ToyTask {
    fn default() -> Self {
        let mut optimizer = OptimizerConfig::adam(1e-2);
        optimizer.early_stop_patience = 0;
        optimizer.eval_interval = 100;
        Self {
            samples: 400,
            separation: 1.6,
            data_seed: 1,
            optimizer,
            sgd_learning_rate: 0.05,
        }
    }
}

impl ToyTask {
    /// 70/30 split of the toy set for a given dimension.
    pub fn data(&self, dim: usize) -> (LabeledTensor, LabeledTensor) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.data_seed);
        let mut x = Vec::with_capacity(self.samples * dim);
        let mut y = Vec::with_capacity(self.samples);
        let offset = self.separation / 2.0 / (dim as f64).sqrt();
        for i in 0..self.samples {
            let label = i % 2;
            let sign = if label == 0 { -1.0 } else { 1.0 };
            for _ in 0..dim {
                // Sum of uniforms is close enough to Gaussian here.
                let noise: f64 = (0..4).map(|_| rng.gen_range(-1.0..1.0)).sum::<f64>() * 0.87;
                x.push((sign * offset + noise * 0.5) as f32);
            }
            y.push(label);
        }
        let all = LabeledTensor::new(Tensor::new(vec![self.samples, dim], x).expect("sized"), y, 2).expect("valid");
        let (tr, te) = split_indices(self.samples, 0.7, self.data_seed).expect("nonempty");
        (all.subset(&tr), all.subset(&te))
    }
}

impl SweepTask for ToyTask {
    fn run(&self, point: &GridPoint, seed: u64) -> std::result::Result<TaskOutcome, String> {
        if point.input_size == 0 || point.nn_size == 0 {
            return Err("input-size and nn-size must be positive".into());
        }
        let (tr, te) = self.data(point.input_size);
        let spec = NetworkSpec::mlp(point.input_size, &[point.nn_size], 2);
        let mut net = build_network(&spec, seed).map_err(|e| e.to_string())?;
        let opt = optimizer_for(point, &self.optimizer, self.sgd_learning_rate, seed);
        finish(train(&mut net, &tr, &te, &opt).map_err(|e| e.to_string())?)
    }
}

/// Image classification on a dataset: `input-size` is the square input side
/// in pixels (grayscale), `nn-size` the first conv width of the default
/// layout.
pub struct ImageTask {
    dataset: Dataset,
    train_ratio: f64,
    split_seed: u64,
    pub optimizer: OptimizerConfig,
    pub sgd_learning_rate: f64,
    cache: Mutex<BTreeMap<usize, (LabeledTensor, LabeledTensor)>>,
}

impl ImageTask {
    pub fn new(dataset: Dataset, train_ratio: f64, split_seed: u64, optimizer: OptimizerConfig) -> Self {
        Self {
            dataset,
            train_ratio,
            split_seed,
            optimizer,
            sgd_learning_rate: 0.01,
            cache: Mutex::new(BTreeMap::new()),
        }
    }

    fn tensors(&self, side: usize) -> std::result::Result<(LabeledTensor, LabeledTensor), String> {
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&side) {
            return Ok(hit.clone());
        }
        let all = self.dataset.materialize([side, side, 1]).map_err(|e| e.to_string())?;
        let (tr, te) = split_indices(all.len(), self.train_ratio, self.split_seed).map_err(|e| e.to_string())?;
        let pair = (all.subset(&tr), all.subset(&te));
        self.cache.lock().expect("cache lock").insert(side, pair.clone());
        Ok(pair)
    }
}

impl SweepTask for ImageTask {
    fn run(&self, point: &GridPoint, seed: u64) -> std::result::Result<TaskOutcome, String> {
        let (tr, te) = self.tensors(point.input_size)?;
        let spec = NetworkSpec::classifier_with_stem([point.input_size, point.input_size, 1], tr.classes, point.nn_size);
        let mut net = build_network(&spec, seed).map_err(|e| e.to_string())?;
        let opt = optimizer_for(point, &self.optimizer, self.sgd_learning_rate, seed);
        finish(train(&mut net, &tr, &te, &opt).map_err(|e| e.to_string())?)
    }
}
