use serde::{Deserialize, Serialize};

use super::{NetError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    /// Output spatial size `ceil(in / stride)`.
    Same,
    /// No padding.
    Valid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayerSpec {
    Conv {
        filters: usize,
        kernel: usize,
        stride: usize,
        padding: Padding,
    },
    Relu,
    MaxPool {
        size: usize,
    },
    Flatten,
    Dense {
        units: usize,
    },
    Softmax,
}

/// Per-sample activation shape: `(h, w, c)` feature maps or a flat vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActShape {
    Map { h: usize, w: usize, c: usize },
    Flat(usize),
}

impl ActShape {
    pub fn len(&self) -> usize {
        match *self {
            ActShape::Map { h, w, c } => h * w * c,
            ActShape::Flat(n) => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> Vec<usize> {
        match *self {
            ActShape::Map { h, w, c } => vec![h, w, c],
            ActShape::Flat(n) => vec![n],
        }
    }
}

/// Input shape plus ordered layers ending in softmax.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    /// `(height, width, channels)`.
    pub input_shape: [usize; 3],
    pub layers: Vec<LayerSpec>,
}

/// Padding before (top/left) and output size along one axis.
pub(crate) fn conv_axis(input: usize, kernel: usize, stride: usize, padding: Padding) -> (usize, usize) {
    match padding {
        Padding::Valid => (0, (input.saturating_sub(kernel)) / stride + 1),
        Padding::Same => {
            let out = input.div_ceil(stride);
            let total = ((out - 1) * stride + kernel).saturating_sub(input);
            (total / 2, out)
        }
    }
}

impl NetworkSpec {
    /// Stem `conv8-pool-conv16-pool` then a dense `500-250-100` head.
    pub fn default_classifier(input_shape: [usize; 3], classes: usize) -> Self {
        Self::classifier_with_stem(input_shape, classes, 8)
    }

    /// The default layout with `base` and `2 * base` stem filters.
    pub fn classifier_with_stem(input_shape: [usize; 3], classes: usize, base: usize) -> Self {
        use LayerSpec::*;
        let conv = |filters| Conv {
            filters,
            kernel: 3,
            stride: 1,
            padding: Padding::Same,
        };
        Self {
            input_shape,
            layers: vec![
                conv(base),
                Relu,
                MaxPool { size: 2 },
                conv(2 * base),
                Relu,
                MaxPool { size: 2 },
                Flatten,
                Dense { units: 500 },
                Relu,
                Dense { units: 250 },
                Relu,
                Dense { units: 100 },
                Relu,
                Dense { units: classes },
                Softmax,
            ],
        }
    }

    /// Plain multilayer perceptron with the given hidden widths.
    pub fn mlp(inputs: usize, hidden: &[usize], classes: usize) -> Self {
        let mut layers = vec![LayerSpec::Flatten];
        for &units in hidden {
            layers.push(LayerSpec::Dense { units });
            layers.push(LayerSpec::Relu);
        }
        layers.push(LayerSpec::Dense { units: classes });
        layers.push(LayerSpec::Softmax);
        Self {
            input_shape: [1, 1, inputs],
            layers,
        }
    }

    pub fn input_len(&self) -> usize {
        self.input_shape.iter().product()
    }

    /// Output shape of every layer, validating the chain.
    pub fn layer_shapes(&self) -> Result<Vec<ActShape>> {
        let [h, w, c] = self.input_shape;
        if h == 0 || w == 0 || c == 0 {
            return Err(NetError::Spec(format!("empty input shape {:?}", self.input_shape)));
        }
        if self.layers.last() != Some(&LayerSpec::Softmax) {
            return Err(NetError::Spec("final layer must be softmax".into()));
        }
        let mut cur = ActShape::Map { h, w, c };
        let mut shapes = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let bad = |msg: String| NetError::Spec(format!("layer {i} ({layer:?}): {msg}"));
            cur = match (*layer, cur) {
                (
                    LayerSpec::Conv {
                        filters,
                        kernel,
                        stride,
                        padding,
                    },
                    ActShape::Map { h, w, .. },
                ) => {
                    if filters == 0 || kernel == 0 || stride == 0 {
                        return Err(bad("filters, kernel and stride must be positive".into()));
                    }
                    if padding == Padding::Valid && (kernel > h || kernel > w) {
                        return Err(bad(format!("kernel larger than {h}x{w} input")));
                    }
                    let (_, oh) = conv_axis(h, kernel, stride, padding);
                    let (_, ow) = conv_axis(w, kernel, stride, padding);
                    ActShape::Map {
                        h: oh,
                        w: ow,
                        c: filters,
                    }
                }
                (LayerSpec::MaxPool { size }, ActShape::Map { h, w, c }) => {
                    if size == 0 || size > h || size > w {
                        return Err(bad(format!("pool size {size} on {h}x{w}")));
                    }
                    ActShape::Map {
                        h: h / size,
                        w: w / size,
                        c,
                    }
                }
                (LayerSpec::Flatten, s) => ActShape::Flat(s.len()),
                (LayerSpec::Relu, s) => s,
                (LayerSpec::Dense { units }, ActShape::Flat(_)) => {
                    if units == 0 {
                        return Err(bad("zero units".into()));
                    }
                    ActShape::Flat(units)
                }
                (LayerSpec::Softmax, ActShape::Flat(n)) => {
                    if i + 1 != self.layers.len() {
                        return Err(bad("softmax is only allowed as the final layer".into()));
                    }
                    if n < 2 {
                        return Err(bad("softmax needs at least 2 classes".into()));
                    }
                    ActShape::Flat(n)
                }
                (_, s) => return Err(bad(format!("incompatible input shape {s:?}"))),
            };
            shapes.push(cur);
        }
        Ok(shapes)
    }

    pub fn classes(&self) -> Result<usize> {
        Ok(self.layer_shapes()?.last().map(|s| s.len()).unwrap_or(0))
    }
}
