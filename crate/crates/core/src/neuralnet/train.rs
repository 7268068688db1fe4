use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::shuffled_indices;
use super::network::cross_entropy;
use super::optim::Optimizer;
use super::{LabeledTensor, NetError, Network, NetworkSpec, OptimizerConfig, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub iteration: usize,
    pub train_loss: f64,
    pub test_loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<EvalRecord>,
    pub wall_time_ms: f64,
    pub iterations_run: usize,
    pub stopped_early: bool,
}

impl TrainHistory {
    pub fn last(&self) -> Option<&EvalRecord> {
        self.records.last()
    }

    /// First evaluated iteration whose training loss is at or below `target`.
    pub fn iterations_to_train_loss(&self, target: f64) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.train_loss <= target)
            .map(|r| r.iteration)
    }

    /// `iteration,train_loss,test_loss,train_acc,test_acc` with header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,train_loss,test_loss,train_acc,test_acc\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6}\n",
                r.iteration, r.train_loss, r.test_loss, r.train_accuracy, r.test_accuracy
            ));
        }
        out
    }
}

const EVAL_CHUNK: usize = 64;

/// Mean loss and accuracy over a whole set, evaluated in fixed chunks.
pub fn evaluate(net: &Network, data: &LabeledTensor) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(NetError::Data("cannot evaluate an empty set".into()));
    }
    let mut loss_sum = 0.0;
    let mut correct = 0usize;
    let idx: Vec<usize> = (0..data.len()).collect();
    for chunk in idx.chunks(EVAL_CHUNK) {
        let batch = data.subset(chunk);
        let logits = net.logits(&batch.inputs)?;
        let loss = cross_entropy(logits.data(), &batch.labels, net.classes())?;
        loss_sum += loss * chunk.len() as f64;
        correct += logits
            .argmax_rows()
            .iter()
            .zip(&batch.labels)
            .filter(|(p, l)| p == l)
            .count();
    }
    Ok((loss_sum / data.len() as f64, correct as f64 / data.len() as f64))
}

/// Mini-batch training with periodic evaluation and optional early stopping.
///
/// Batches come from a seeded per-epoch shuffle of the training set.
/// A record is appended every `eval_interval` iterations and after the last.
pub fn train(
    net: &mut Network,
    train_set: &LabeledTensor,
    test_set: &LabeledTensor,
    opt: &OptimizerConfig,
) -> Result<TrainHistory> {
    opt.validate()?;
    if train_set.classes != net.classes() || test_set.classes != net.classes() {
        return Err(NetError::Config(format!(
            "network has {} classes, data has {}",
            net.classes(),
            train_set.classes
        )));
    }
    if let Some(class) = train_set.class_counts().iter().position(|&c| c == 0) {
        return Err(NetError::EmptyClass(class));
    }
    if test_set.is_empty() {
        return Err(NetError::Data("test set is empty".into()));
    }

    let start = Instant::now();
    let sizes: Vec<usize> = net.params().iter().map(|p| p.len()).collect();
    let mut optimizer = Optimizer::new(opt, &sizes);
    let mut rng = ChaCha8Rng::seed_from_u64(opt.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut cursor = order.len();
    let batch_size = opt.batch_size.min(train_set.len());

    let mut records: Vec<EvalRecord> = Vec::new();
    let mut best_test = f64::INFINITY;
    let mut stale = 0usize;
    let mut stopped_early = false;
    let mut iterations_run = 0;

    for iteration in 1..=opt.max_iters {
        if cursor + batch_size > order.len() {
            order.shuffle(&mut rng);
            cursor = 0;
        }
        let batch = train_set.subset(&order[cursor..cursor + batch_size]);
        cursor += batch_size;

        let (loss, grads) = net.loss_and_gradients(&batch.inputs, &batch.labels)?;
        if !loss.is_finite() {
            return Err(NetError::Divergence { iteration });
        }
        optimizer.apply(net.params_mut(), &grads.tensors);
        iterations_run = iteration;

        if iteration % opt.eval_interval == 0 || iteration == opt.max_iters {
            let (train_loss, train_accuracy) = evaluate(net, train_set)?;
            let (test_loss, test_accuracy) = evaluate(net, test_set)?;
            if !(train_loss.is_finite() && test_loss.is_finite()) {
                return Err(NetError::Divergence { iteration });
            }
            records.push(EvalRecord {
                iteration,
                train_loss,
                test_loss,
                train_accuracy,
                test_accuracy,
            });
            log::debug!(
                "iter {iteration}: train {train_loss:.4} ({train_accuracy:.3}) test {test_loss:.4} ({test_accuracy:.3})"
            );
            if test_loss < best_test {
                best_test = test_loss;
                stale = 0;
            } else {
                stale += 1;
                if opt.early_stop_patience > 0 && stale >= opt.early_stop_patience {
                    stopped_early = true;
                    break;
                }
            }
        }
    }
    Ok(TrainHistory {
        records,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        iterations_run,
        stopped_early,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub test_loss: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KFoldReport {
    pub folds: Vec<FoldResult>,
    pub mean_accuracy: f64,
    pub sd_accuracy: f64,
    pub mean_loss: f64,
    pub sd_loss: f64,
}

/// Fold sizes for `n` items in `k` folds; the first `n % k` folds get one extra.
pub fn fold_sizes(n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|i| n / k + usize::from(i < n % k)).collect()
}

/// Runs `run_fold(train_idx, test_idx, fold)` for each of `k` folds of a
/// seeded shuffle of `0..n` and aggregates mean and sample SD.
pub fn kfold_with<F>(n: usize, k: usize, seed: u64, mut run_fold: F) -> Result<KFoldReport>
where
    F: FnMut(&[usize], &[usize], usize) -> Result<FoldResult>,
{
    if k < 2 {
        return Err(NetError::Config(format!("k-fold needs k >= 2, got {k}")));
    }
    if k > n {
        return Err(NetError::Config(format!("k = {k} exceeds {n} samples")));
    }
    let order = shuffled_indices(n, seed);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for (fold, size) in fold_sizes(n, k).into_iter().enumerate() {
        let test: Vec<usize> = order[start..start + size].to_vec();
        let train: Vec<usize> = order[..start]
            .iter()
            .chain(&order[start + size..])
            .copied()
            .collect();
        folds.push(run_fold(&train, &test, fold)?);
        start += size;
    }
    let acc: Vec<f64> = folds.iter().map(|f| f.test_accuracy).collect();
    let loss: Vec<f64> = folds.iter().map(|f| f.test_loss).collect();
    let (mean_accuracy, sd_accuracy) = mean_sd(&acc);
    let (mean_loss, sd_loss) = mean_sd(&loss);
    Ok(KFoldReport {
        folds,
        mean_accuracy,
        sd_accuracy,
        mean_loss,
        sd_loss,
    })
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Train a fresh network per fold and test on the held-out fold.
pub fn kfold_evaluate(
    spec: &NetworkSpec,
    data: &LabeledTensor,
    opt: &OptimizerConfig,
    k: usize,
) -> Result<KFoldReport> {
    kfold_with(data.len(), k, opt.seed, |train_idx, test_idx, fold| {
        let train_set = data.subset(train_idx);
        let test_set = data.subset(test_idx);
        let mut net = Network::build(spec, opt.seed.wrapping_add(fold as u64))?;
        let mut fold_opt = opt.clone();
        fold_opt.seed = opt.seed.wrapping_add(1000 + fold as u64);
        train(&mut net, &train_set, &test_set, &fold_opt)?;
        let (test_loss, test_accuracy) = evaluate(&net, &test_set)?;
        Ok(FoldResult {
            fold,
            train_size: train_idx.len(),
            test_size: test_idx.len(),
            test_loss,
            test_accuracy,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::Tensor;

    #[test]
    fn fold_size_spread() {
        assert_eq!(fold_sizes(100, 5), vec![20; 5]);
        assert_eq!(fold_sizes(103, 5), vec![21, 21, 21, 20, 20]);
    }

    #[test]
    fn kfold_partitions_and_constant_predictor() {
        let mut seen = vec![0usize; 23];
        let report = kfold_with(23, 4, 7, |train, test, fold| {
            assert_eq!(train.len() + test.len(), 23);
            for &i in test {
                seen[i] += 1;
            }
            Ok(FoldResult {
                fold,
                train_size: train.len(),
                test_size: test.len(),
                test_loss: 0.5,
                test_accuracy: 0.25,
            })
        })
        .unwrap();
        assert!(seen.iter().all(|&c| c == 1));
        assert_eq!(report.sd_accuracy, 0.0);
        assert_eq!(report.mean_accuracy, 0.25);
        assert!(kfold_with(3, 4, 0, |_, _, _| unreachable!()).is_err());
        assert!(kfold_with(3, 1, 0, |_, _, _| unreachable!()).is_err());
    }

    #[test]
    fn empty_class_is_rejected() {
        let spec = NetworkSpec::mlp(2, &[], 2);
        let mut net = Network::build(&spec, 0).unwrap();
        let data = LabeledTensor::new(Tensor::zeros(vec![4, 2]), vec![0; 4], 2).unwrap();
        assert_eq!(
            train(&mut net, &data, &data, &OptimizerConfig::default()),
            Err(NetError::EmptyClass(1))
        );
    }

    #[test]
    fn divergence_is_reported_with_iteration() {
        let spec = NetworkSpec::mlp(2, &[4], 2);
        let mut net = Network::build(&spec, 0).unwrap();
        let x = Tensor::new(vec![4, 2], vec![1e30, -1e30, 2e30, 1e30, -1e30, 3e30, 0.0, 1e30]).unwrap();
        let data = LabeledTensor::new(x, vec![0, 1, 0, 1], 2).unwrap();
        let mut opt = OptimizerConfig::sgd(1e30, 0.0);
        opt.batch_size = 4;
        let err = train(&mut net, &data, &data, &opt).unwrap_err();
        assert!(matches!(err, NetError::Divergence { .. }), "{err:?}");
    }

    #[test]
    fn history_csv_header() {
        let h = TrainHistory {
            records: vec![EvalRecord {
                iteration: 100,
                train_loss: 0.5,
                test_loss: 0.25,
                train_accuracy: 1.0,
                test_accuracy: 0.75,
            }],
            wall_time_ms: 1.0,
            iterations_run: 100,
            stopped_early: false,
        };
        assert_eq!(
            h.to_csv(),
            "iteration,train_loss,test_loss,train_acc,test_acc\n100,0.500000,0.250000,1.000000,0.750000\n"
        );
        assert_eq!(h.iterations_to_train_loss(0.6), Some(100));
    }

    #[test]
    fn separable_points_are_learned() {
        let n = 64;
        let mut x = Vec::with_capacity(n * 2);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let a = (i as f32 * 0.37).sin();
            let b = (i as f32 * 0.91).cos();
            x.extend([a, b]);
            y.push(usize::from(a + 0.5 * b > 0.1));
        }
        let data = LabeledTensor::new(Tensor::new(vec![n, 2], x).unwrap(), y, 2).unwrap();
        let mut net = Network::build(&NetworkSpec::mlp(2, &[16], 2), 3).unwrap();
        let mut opt = OptimizerConfig::adam(0.05);
        opt.max_iters = 300;
        opt.eval_interval = 50;
        opt.early_stop_patience = 0;
        let hist = train(&mut net, &data, &data, &opt).unwrap();
        let last = hist.last().unwrap();
        assert_eq!(last.iteration, 300);
        assert!(last.train_accuracy >= 0.98, "{last:?}");
        assert!(last.train_loss < hist.records[0].train_loss);
    }
}
