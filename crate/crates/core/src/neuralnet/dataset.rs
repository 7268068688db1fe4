use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{NetError, Result, Tensor};
use crate::experiments::ManifestEntry;
use crate::imaging::{object_scale_normalize, read_pnm_file, resize_bilinear, to_grayscale, BoundingBox, Image};

#[derive(Debug, Clone, PartialEq)]
pub enum ImageSource {
    Path(PathBuf),
    Raster(Image),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetItem {
    pub source: ImageSource,
    pub label: usize,
    /// Box of the labeled object, when known.
    pub focus: Option<BoundingBox>,
}

/// Labeled images plus their class names.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub items: Vec<DatasetItem>,
    pub class_names: Vec<String>,
    /// When set, items with a focus box are scale-normalized around it
    /// (object filling this fraction of the crop) before resizing.
    pub focus_fraction: Option<f64>,
}

/// Network-ready inputs `(n, h, w, c)` scaled to [0, 1], with labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTensor {
    pub inputs: Tensor<f32>,
    pub labels: Vec<usize>,
    pub classes: usize,
}

impl LabeledTensor {
    pub fn new(inputs: Tensor<f32>, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if inputs.batch() != labels.len() {
            return Err(NetError::Shape(format!(
                "{} inputs but {} labels",
                inputs.batch(),
                labels.len()
            )));
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
            return Err(NetError::Label { label, classes });
        }
        Ok(Self {
            inputs,
            labels,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            inputs: self.inputs.gather(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes,
        }
    }

    /// Samples per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

impl Dataset {
    pub fn new(items: Vec<DatasetItem>, class_names: Vec<String>) -> Result<Self> {
        let unique: BTreeSet<&String> = class_names.iter().collect();
        if unique.len() != class_names.len() {
            return Err(NetError::Data("class names must be unique".into()));
        }
        if let Some(item) = items.iter().find(|i| i.label >= class_names.len()) {
            return Err(NetError::Label {
                label: item.label,
                classes: class_names.len(),
            });
        }
        Ok(Self {
            items,
            class_names,
            focus_fraction: None,
        })
    }

    /// Reads a JSON-lines manifest. Image paths resolve relative to the
    /// manifest's directory; classes are the sorted distinct labels unless
    /// `class_names` is given.
    pub fn from_manifest(path: impl AsRef<Path>, class_names: Option<Vec<String>>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| NetError::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let entries: Vec<ManifestEntry> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| {
                serde_json::from_str(l)
                    .map_err(|e| NetError::Data(format!("manifest line {}: {e}", i + 1)))
            })
            .collect::<Result<_>>()?;
        let class_names = class_names.unwrap_or_else(|| {
            entries
                .iter()
                .map(|e| e.label.clone())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect()
        });
        let items = entries
            .into_iter()
            .map(|e| {
                let label = class_names
                    .iter()
                    .position(|c| *c == e.label)
                    .ok_or_else(|| NetError::Data(format!("unknown class {:?}", e.label)))?;
                Ok(DatasetItem {
                    source: ImageSource::Path(base.join(&e.path)),
                    label,
                    focus: e.boxes.first().map(|b| BoundingBox::new(b[0], b[1], b[2], b[3])),
                })
            })
            .collect::<Result<_>>()?;
        Self::new(items, class_names)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.items.iter().map(|i| i.label).collect()
    }

    /// Decode, convert channels and resize every item to `(h, w, c)`.
    pub fn materialize(&self, input_shape: [usize; 3]) -> Result<LabeledTensor> {
        let [h, w, c] = input_shape;
        let mut data = Vec::with_capacity(self.len() * h * w * c);
        for item in &self.items {
            let img = match &item.source {
                ImageSource::Path(p) => read_pnm_file(p).map_err(|e| NetError::Data(e.to_string()))?,
                ImageSource::Raster(img) => img.clone(),
            };
            let img = match (self.focus_fraction, item.focus) {
                (Some(frac), Some(b)) => object_scale_normalize(&img, &b, frac, w, h)
                    .map_err(|e| NetError::Data(e.to_string()))?,
                _ => img,
            };
            data.extend(prepare_input(&img, input_shape)?);
        }
        LabeledTensor::new(
            Tensor::new(vec![self.len(), h, w, c], data)?,
            self.labels(),
            self.classes(),
        )
    }
}

/// Channel-convert and resize one image into network input values.
pub fn prepare_input(img: &Image, input_shape: [usize; 3]) -> Result<Vec<f32>> {
    let [h, w, c] = input_shape;
    let img = match (c, img.channels()) {
        (1, 3) => to_grayscale(img),
        (a, b) if a == b => img.clone(),
        (a, b) => {
            return Err(NetError::Data(format!(
                "cannot feed a {b}-channel image to a {a}-channel input"
            )))
        }
    };
    let img = resize_bilinear(&img, w, h).map_err(|e| NetError::Data(e.to_string()))?;
    Ok(img.to_unit_f32())
}

/// Deterministic permutation of `0..n`.
pub fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

/// Seeded shuffle, then the first `round(ratio * n)` items train.
pub fn split_dataset(data: &Dataset, train_ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train_idx, test_idx) = split_indices(data.len(), train_ratio, seed)?;
    let pick = |idx: &[usize]| Dataset {
        items: idx.iter().map(|&i| data.items[i].clone()).collect(),
        class_names: data.class_names.clone(),
        focus_fraction: data.focus_fraction,
    };
    Ok((pick(&train_idx), pick(&test_idx)))
}

pub fn split_indices(n: usize, train_ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n == 0 {
        return Err(NetError::Data("cannot split an empty dataset".into()));
    }
    if !(train_ratio > 0.0 && train_ratio < 1.0) {
        return Err(NetError::Config(format!("train ratio {train_ratio} outside (0, 1)")));
    }
    let idx = shuffled_indices(n, seed);
    let cut = (train_ratio * n as f64).round() as usize;
    Ok((idx[..cut].to_vec(), idx[cut..].to_vec()))
}
