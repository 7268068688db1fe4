use debris_edge::classifiers::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn labeled_points(n: usize, dim: usize, classes: usize, seed: u64) -> LabeledVectors {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vectors = (0..n).map(|_| (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect();
    let mut labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    labels.shuffle(&mut rng);
    LabeledVectors::numbered(vectors, labels).unwrap()
}

/// Full sort by (distance, index), then a lowest-class vote.
fn knn_oracle(train: &LabeledVectors, q: &[f64], k: usize) -> usize {
    let mut d: Vec<(f64, usize)> = train
        .vectors()
        .iter()
        .enumerate()
        .map(|(i, v)| (v.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum(), i))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut votes = vec![0; train.classes()];
    for &(_, i) in &d[..k] {
        votes[train.labels()[i]] += 1;
    }
    let top = *votes.iter().max().unwrap();
    votes.iter().position(|&v| v == top).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn knn_matches_brute_force(n in 2usize..40, dim in 1usize..5, classes in 2usize..4, k in 1usize..8, seed in any::<u64>()) {
        let data = labeled_points(n.max(classes), dim, classes, seed);
        let k = k.min(data.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        for _ in 0..5 {
            let q: Vec<f64> = (0..dim).map(|_| rng.gen_range(-6.0..6.0)).collect();
            prop_assert_eq!(knn_classify(&data, &q, k).unwrap(), knn_oracle(&data, &q, k));
        }
    }

    #[test]
    fn knn_ignores_training_order(n in 3usize..40, k in 1usize..6, seed in any::<u64>()) {
        let data = labeled_points(n, 3, 3, seed);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 2));
        let shuffled = data.subset(&perm);
        let k = k.min(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
        for _ in 0..5 {
            let q: Vec<f64> = (0..3).map(|_| rng.gen_range(-6.0..6.0)).collect();
            prop_assert_eq!(knn_classify(&data, &q, k).unwrap(), knn_classify(&shuffled, &q, k).unwrap());
        }
    }

    #[test]
    fn knn_k1_recovers_every_training_label(n in 2usize..60, seed in any::<u64>()) {
        let data = labeled_points(n, 4, 2, seed);
        for (v, &l) in data.vectors().iter().zip(data.labels()) {
            prop_assert_eq!(knn_classify(&data, v, 1).unwrap(), l);
        }
    }

    #[test]
    fn confusion_totals_and_accuracy_bounds(
        pairs in proptest::collection::vec((0usize..4, 0usize..4), 1..200)
    ) {
        let (actual, predicted): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let cm = confusion_matrix(&actual, &predicted, 4).unwrap();
        prop_assert_eq!(cm.total(), actual.len() as u64);
        let m = classification_metrics(&cm).unwrap();
        prop_assert!((0.0..=1.0).contains(&m.accuracy));
        let hits = actual.iter().zip(&predicted).filter(|(a, p)| a == p).count();
        prop_assert!((m.accuracy - hits as f64 / actual.len() as f64).abs() < 1e-12);
    }
}

fn separable(n_per: usize, seed: u64) -> LabeledVectors {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = [[-4.0, 0.0], [4.0, 1.0], [0.0, 6.0]];
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..n_per {
            vectors.push(center.iter().map(|m| m + rng.gen_range(-1.0..1.0)).collect());
            labels.push(c);
        }
    }
    LabeledVectors::numbered(vectors, labels).unwrap()
}

#[test]
fn svm_predictions_survive_training_set_duplication() {
    for seed in 0..5 {
        let data = separable(20, seed);
        let n = data.len();
        let doubled = data.subset(&(0..2 * n).map(|i| i % n).collect::<Vec<_>>());
        let single = svm_train(&data, 0.01, 40, seed).unwrap();
        let twice = svm_train(&doubled, 0.01, 20, seed).unwrap();
        let probes = separable(30, seed + 100);
        for v in data.vectors().iter().chain(probes.vectors()) {
            assert_eq!(svm_predict(&single, v).unwrap().0, svm_predict(&twice, v).unwrap().0, "seed {seed} at {v:?}");
        }
    }
}

#[test]
fn svm_separates_separable_clusters() {
    let data = separable(25, 9);
    let model = svm_train(&data, 0.01, 30, 9).unwrap();
    let predicted: Vec<usize> = data.vectors().iter().map(|v| svm_predict(&model, v).unwrap().0).collect();
    let cm = confusion_matrix(data.labels(), &predicted, 3).unwrap();
    assert_eq!(cm.trace(), cm.total());
}
