use super::{check_dim, ClassifierError, LabeledVectors, Result};

/// Majority vote among the `k` nearest training vectors (Euclidean).
///
/// Equal distances prefer the lower sample index; tied votes go to the
/// lowest class index.
pub fn knn_classify(train: &LabeledVectors, query: &[f64], k: usize) -> Result<usize> {
    let n = train.len();
    if k == 0 || k > n {
        return Err(ClassifierError::InvalidK { k, n });
    }
    check_dim(train.dim(), query)?;
    let mut dist: Vec<(f64, usize)> = train
        .vectors()
        .iter()
        .enumerate()
        .map(|(i, v)| (v.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum(), i))
        .collect();
    let by_rank = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < n {
        dist.select_nth_unstable_by(k - 1, by_rank);
    }
    let mut votes = vec![0usize; train.classes()];
    for &(_, i) in &dist[..k] {
        votes[train.labels()[i]] += 1;
    }
    let mut best = 0;
    for (c, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = c;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_point_wins_at_k1() {
        let data = LabeledVectors::numbered(vec![vec![1.0], vec![3.0]], vec![0, 1]).unwrap();
        assert_eq!(knn_classify(&data, &[0.0], 1).unwrap(), 0);
        assert_eq!(knn_classify(&data, &[3.0], 1).unwrap(), 1);
    }

    #[test]
    fn equal_distance_prefers_lower_index_and_vote_ties_lowest_class() {
        let data = LabeledVectors::numbered(vec![vec![1.0], vec![-1.0], vec![5.0]], vec![1, 0, 1]).unwrap();
        assert_eq!(knn_classify(&data, &[0.0], 1).unwrap(), 1);
        assert_eq!(knn_classify(&data, &[0.0], 2).unwrap(), 0);
    }

    #[test]
    fn bad_inputs() {
        let data = LabeledVectors::numbered(vec![vec![1.0, 2.0]], vec![0]).unwrap();
        assert!(matches!(knn_classify(&data, &[1.0], 1), Err(ClassifierError::Dimension { .. })));
        assert!(matches!(knn_classify(&data, &[1.0, 2.0], 2), Err(ClassifierError::InvalidK { .. })));
    }
}
