use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{argmax_first, check_dim, ClassifierError, LabeledVectors, Result};

/// One-vs-rest linear SVM. Scores are `w_c · v + b_c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub lambda: f64,
    pub epochs: usize,
    #[serde(default)]
    pub class_names: Vec<String>,
}

impl LinearSvmModel {
    pub fn zeros(classes: usize, dim: usize) -> Self {
        Self {
            weights: vec![vec![0.0; dim]; classes],
            biases: vec![0.0; classes],
            lambda: 1.0,
            epochs: 0,
            class_names: (0..classes).map(|c| c.to_string()).collect(),
        }
    }

    pub fn classes(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self =
            serde_json::from_str(text).map_err(|e| ClassifierError::InvalidParameter(format!("svm model: {e}")))?;
        let dim = model.dim();
        if model.biases.len() != model.classes() || model.weights.iter().any(|w| w.len() != dim) {
            return Err(ClassifierError::InvalidParameter("svm model has ragged weights".into()));
        }
        Ok(model)
    }
}

/// Pegasos sub-gradient training per class with step `1/(lambda t)`.
///
/// The bias is learned as an extra constant-1 feature and is regularized
/// with the weights. Each epoch visits every sample once in an order drawn
/// from `seed`; all classes share the same visiting order.
pub fn svm_train(data: &LabeledVectors, lambda: f64, epochs: usize, seed: u64) -> Result<LinearSvmModel> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(ClassifierError::InvalidParameter(format!("lambda {lambda}")));
    }
    if epochs == 0 {
        return Err(ClassifierError::InvalidParameter("epochs must be at least 1".into()));
    }
    let classes = data.classes();
    if classes < 2 {
        return Err(ClassifierError::SingleClass);
    }
    let mut counts = vec![0usize; classes];
    for &l in data.labels() {
        counts[l] += 1;
    }
    if let Some(c) = counts.iter().position(|&c| c == 0) {
        return Err(ClassifierError::EmptyClass(c));
    }
    let dim = data.dim();
    let n = data.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut schedule = Vec::with_capacity(n * epochs);
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        schedule.extend_from_slice(&order);
    }

    let mut weights = Vec::with_capacity(classes);
    let mut biases = Vec::with_capacity(classes);
    for class in 0..classes {
        // Last slot is the bias.
        let mut w = vec![0.0f64; dim + 1];
        for (t, &i) in schedule.iter().enumerate() {
            let eta = 1.0 / (lambda * (t + 1) as f64);
            let x = &data.vectors()[i];
            let y = if data.labels()[i] == class { 1.0 } else { -1.0 };
            let margin = y * (dot(&w[..dim], x) + w[dim]);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                for (wj, xj) in w.iter_mut().zip(x) {
                    *wj += eta * y * xj;
                }
                w[dim] += eta * y;
            }
        }
        biases.push(w.pop().expect("bias slot"));
        weights.push(w);
    }
    Ok(LinearSvmModel {
        weights,
        biases,
        lambda,
        epochs,
        class_names: data.class_names().to_vec(),
    })
}

/// Winning class (lowest index on ties) and the raw per-class scores.
pub fn svm_predict(model: &LinearSvmModel, v: &[f64]) -> Result<(usize, Vec<f64>)> {
    check_dim(model.dim(), v)?;
    let scores: Vec<f64> = model
        .weights
        .iter()
        .zip(&model.biases)
        .map(|(w, b)| dot(w, v) + b)
        .collect();
    Ok((argmax_first(&scores), scores))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_points() -> LabeledVectors {
        LabeledVectors::numbered(vec![vec![-2.0], vec![2.0]], vec![0, 1]).unwrap()
    }

    #[test]
    fn one_dimensional_boundary() {
        let model = svm_train(&two_points(), 0.01, 200, 1).unwrap();
        assert_eq!(svm_predict(&model, &[-2.0]).unwrap().0, 0);
        assert_eq!(svm_predict(&model, &[2.0]).unwrap().0, 1);
        let (_, s) = svm_predict(&model, &[2.0]).unwrap();
        assert!(s[1] > 0.0 && s[0] < 0.0);
    }

    #[test]
    fn huge_lambda_shrinks_weights() {
        let model = svm_train(&two_points(), 1e6, 50, 1).unwrap();
        for (w, b) in model.weights.iter().zip(&model.biases) {
            let norm = (w.iter().map(|x| x * x).sum::<f64>() + b * b).sqrt();
            assert!(norm < 1e-2, "{norm}");
        }
    }

    #[test]
    fn zero_model_ties_to_class_zero() {
        let model = LinearSvmModel::zeros(3, 2);
        assert_eq!(svm_predict(&model, &[1.0, -4.0]).unwrap(), (0, vec![0.0; 3]));
    }

    #[test]
    fn scores_are_affine_responses_and_bias_shift_keeps_argmax() {
        let mut model = LinearSvmModel::zeros(2, 2);
        model.weights = vec![vec![1.0, 2.0], vec![-1.0, 0.5]];
        model.biases = vec![0.5, 1.0];
        let (c, s) = svm_predict(&model, &[1.0, 1.0]).unwrap();
        assert_eq!(s, vec![3.5, 0.5]);
        model.biases.iter_mut().for_each(|b| *b += 10.0);
        assert_eq!(svm_predict(&model, &[1.0, 1.0]).unwrap().0, c);
    }

    #[test]
    fn single_class_and_json_round_trip() {
        let one = LabeledVectors::numbered(vec![vec![1.0]], vec![0]).unwrap();
        assert_eq!(svm_train(&one, 0.1, 1, 0), Err(ClassifierError::SingleClass));
        let model = svm_train(&two_points(), 0.1, 5, 3).unwrap();
        assert_eq!(LinearSvmModel::from_json(&model.to_json()).unwrap(), model);
    }
}
