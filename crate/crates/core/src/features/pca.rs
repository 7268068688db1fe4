use serde::{Deserialize, Serialize};

use super::{DescriptorKind, FeatureError, FeatureVector, Result};

/// Mean plus orthonormal principal directions, strongest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaBasis {
    pub mean: Vec<f64>,
    /// Row vectors, one per component.
    pub components: Vec<Vec<f64>>,
    /// Sample-covariance eigenvalue of each component.
    pub explained_variance: Vec<f64>,
    /// Sum of all covariance eigenvalues, for variance shares.
    pub total_variance: f64,
}

impl PcaBasis {
    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        self.explained_variance
            .iter()
            .map(|v| if self.total_variance > 0.0 { v / self.total_variance } else { 0.0 })
            .collect()
    }

    /// Map projected coordinates back to the input space.
    pub fn reconstruct(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, comp) in coords.iter().zip(&self.components) {
            for (o, v) in out.iter_mut().zip(comp) {
                *o += c * v;
            }
        }
        out
    }
}

/// Fit the top-`k` principal components.
///
/// Uses the covariance matrix directly, or the sample Gram matrix when the
/// dimension is large relative to the sample count. Each component is
/// signed so its largest-magnitude entry is positive.
pub fn pca_fit(samples: &[FeatureVector], k: usize) -> Result<PcaBasis> {
    let n = samples.len();
    if n < 2 {
        return Err(FeatureError::TooFewSamples(n));
    }
    let dim = samples[0].len();
    for s in samples {
        if s.len() != dim {
            return Err(FeatureError::LengthMismatch {
                expected: dim,
                found: s.len(),
            });
        }
    }
    if k == 0 || k > dim {
        return Err(FeatureError::TooManyComponents { k, dim });
    }

    let mut mean = vec![0.0; dim];
    for s in samples {
        for (m, v) in mean.iter_mut().zip(&s.values) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| s.values.iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();
    let denom = (n - 1) as f64;

    let (mut values, mut vectors) = if dim > 64 && dim > n && k < n {
        gram_route(&centered, denom)
    } else {
        let mut cov = vec![0.0; dim * dim];
        for row in &centered {
            for i in 0..dim {
                if row[i] == 0.0 {
                    continue;
                }
                for j in i..dim {
                    cov[i * dim + j] += row[i] * row[j];
                }
            }
        }
        for i in 0..dim {
            for j in i..dim {
                let v = cov[i * dim + j] / denom;
                cov[i * dim + j] = v;
                cov[j * dim + i] = v;
            }
        }
        symmetric_eigen(&cov, dim)
    };
    let total_variance: f64 = values.iter().map(|v| v.max(0.0)).sum();
    values.truncate(k);
    vectors.truncate(k);
    for v in vectors.iter_mut() {
        fix_sign(v);
    }
    Ok(PcaBasis {
        mean,
        components: vectors,
        explained_variance: values.into_iter().map(|v| v.max(0.0)).collect(),
        total_variance,
    })
}

/// Eigenpairs of the covariance through the `n`x`n` Gram matrix.
fn gram_route(centered: &[Vec<f64>], denom: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = centered.len();
    let dim = centered[0].len();
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let d: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
            gram[i * n + j] = d / denom;
            gram[j * n + i] = d / denom;
        }
    }
    let (values, u) = symmetric_eigen(&gram, n);
    let mut vectors = Vec::with_capacity(n);
    let mut kept = Vec::with_capacity(n);
    for (lambda, coeffs) in values.into_iter().zip(u) {
        let mut v = vec![0.0; dim];
        for (c, row) in coeffs.iter().zip(centered) {
            for (o, x) in v.iter_mut().zip(row) {
                *o += c * x;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        kept.push(lambda);
        vectors.push(v);
    }
    (kept, vectors)
}

fn fix_sign(v: &mut [f64]) {
    let mut idx = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[idx].abs() {
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Cyclic Jacobi eigendecomposition of a dense symmetric `n`x`n`
/// row-major matrix. Returns eigenvalues in non-increasing order with
/// matching unit eigenvectors as rows.
pub fn symmetric_eigen(matrix: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    assert_eq!(matrix.len(), n * n);
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&col| (0..n).map(|row| v[row * n + col]).collect())
        .collect();
    (values, vectors)
}

/// Coordinates of `v - mean` along each component.
pub fn pca_apply(basis: &PcaBasis, v: &FeatureVector) -> Result<FeatureVector> {
    if v.len() != basis.dimension() {
        return Err(FeatureError::LengthMismatch {
            expected: basis.dimension(),
            found: v.len(),
        });
    }
    let centered: Vec<f64> = v.values.iter().zip(&basis.mean).map(|(a, m)| a - m).collect();
    let coords = basis
        .components
        .iter()
        .map(|c| c.iter().zip(&centered).map(|(a, b)| a * b).sum())
        .collect();
    Ok(FeatureVector::new(coords, DescriptorKind::Pca))
}
