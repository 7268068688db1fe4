use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::spec::conv_axis;
use super::{ActShape, LayerSpec, NetError, NetworkSpec, Padding, Result, Scalar, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer<T> {
    pub filters: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: Padding,
    pub in_channels: usize,
    /// `(kernel * kernel * in_channels) x filters`, row-major; rows ordered
    /// `(ky, kx, channel)`.
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<T> {
    pub inputs: usize,
    pub units: usize,
    /// `inputs x units`, row-major.
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer<T> {
    Conv(ConvLayer<T>),
    Relu,
    MaxPool(usize),
    Flatten,
    Dense(DenseLayer<T>),
    Softmax,
}

/// Layered classifier with explicit forward and backward passes.
///
/// Immutable during inference, so `&Network` may be shared across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T: Scalar = f32> {
    spec: NetworkSpec,
    layers: Vec<Layer<T>>,
    /// Input shape of each layer.
    in_shapes: Vec<ActShape>,
    classes: usize,
}

/// Parameter gradients in [`Network::params`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub tensors: Vec<Vec<T>>,
}

enum Cache<T> {
    None,
    Conv(Vec<T>),
    Relu(Vec<T>),
    MaxPool(Vec<u32>),
    Dense(Vec<T>),
}

/// He-uniform initialized network. Identical seeds give identical weights.
pub fn build_network(spec: &NetworkSpec, seed: u64) -> Result<Network<f32>> {
    Network::build(spec, seed)
}

impl<T: Scalar> Network<T> {
    pub fn build(spec: &NetworkSpec, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::assemble(spec, |fan_in, count| {
            let limit = (6.0 / fan_in as f64).sqrt();
            (0..count)
                .map(|_| T::from_f64(rng.gen_range(-limit..limit)))
                .collect()
        })
    }

    /// Builds the layer structure, drawing each weight block from `init`.
    pub(crate) fn assemble(
        spec: &NetworkSpec,
        mut init: impl FnMut(usize, usize) -> Vec<T>,
    ) -> Result<Self> {
        let out_shapes = spec.layer_shapes()?;
        let [h, w, c] = spec.input_shape;
        let mut in_shapes = Vec::with_capacity(out_shapes.len());
        let mut prev = ActShape::Map { h, w, c };
        let mut layers = Vec::with_capacity(spec.layers.len());
        for (layer, out) in spec.layers.iter().zip(&out_shapes) {
            in_shapes.push(prev);
            layers.push(match *layer {
                LayerSpec::Conv {
                    filters,
                    kernel,
                    stride,
                    padding,
                } => {
                    let ActShape::Map { c: in_c, .. } = prev else {
                        unreachable!("validated by layer_shapes")
                    };
                    let fan_in = kernel * kernel * in_c;
                    Layer::Conv(ConvLayer {
                        filters,
                        kernel,
                        stride,
                        padding,
                        in_channels: in_c,
                        weights: init(fan_in, fan_in * filters),
                        bias: vec![T::ZERO; filters],
                    })
                }
                LayerSpec::Dense { units } => {
                    let inputs = prev.len();
                    Layer::Dense(DenseLayer {
                        inputs,
                        units,
                        weights: init(inputs, inputs * units),
                        bias: vec![T::ZERO; units],
                    })
                }
                LayerSpec::Relu => Layer::Relu,
                LayerSpec::MaxPool { size } => Layer::MaxPool(size),
                LayerSpec::Flatten => Layer::Flatten,
                LayerSpec::Softmax => Layer::Softmax,
            });
            prev = *out;
        }
        Ok(Self {
            spec: spec.clone(),
            layers,
            in_shapes,
            classes: prev.len(),
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    /// Parameter blocks in a fixed order: per layer, weights then bias.
    pub fn params(&self) -> Vec<&[T]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Conv(l) => {
                    out.push(l.weights.as_slice());
                    out.push(l.bias.as_slice());
                }
                Layer::Dense(l) => {
                    out.push(l.weights.as_slice());
                    out.push(l.bias.as_slice());
                }
                _ => {}
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::Conv(l) => {
                    out.push(l.weights.as_mut_slice());
                    out.push(l.bias.as_mut_slice());
                }
                Layer::Dense(l) => {
                    out.push(l.weights.as_mut_slice());
                    out.push(l.bias.as_mut_slice());
                }
                _ => {}
            }
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Same architecture and values in another element type.
    pub fn cast<U: Scalar>(&self) -> Network<U> {
        let conv = |v: &[T]| v.iter().map(|x| U::from_f64(x.to_f64())).collect::<Vec<U>>();
        Network {
            spec: self.spec.clone(),
            in_shapes: self.in_shapes.clone(),
            classes: self.classes,
            layers: self
                .layers
                .iter()
                .map(|l| match l {
                    Layer::Conv(c) => Layer::Conv(ConvLayer {
                        filters: c.filters,
                        kernel: c.kernel,
                        stride: c.stride,
                        padding: c.padding,
                        in_channels: c.in_channels,
                        weights: conv(&c.weights),
                        bias: conv(&c.bias),
                    }),
                    Layer::Dense(d) => Layer::Dense(DenseLayer {
                        inputs: d.inputs,
                        units: d.units,
                        weights: conv(&d.weights),
                        bias: conv(&d.bias),
                    }),
                    Layer::Relu => Layer::Relu,
                    Layer::MaxPool(p) => Layer::MaxPool(*p),
                    Layer::Flatten => Layer::Flatten,
                    Layer::Softmax => Layer::Softmax,
                })
                .collect(),
        }
    }

    fn check_batch(&self, batch: &Tensor<T>) -> Result<usize> {
        let dims = &batch.shape()[1.min(batch.shape().len())..];
        let exact = dims == self.spec.input_shape;
        let flat = dims.len() == 1 && dims[0] == self.spec.input_len();
        if batch.shape().is_empty() || !(exact || flat) {
            return Err(NetError::Shape(format!(
                "batch shape {:?} does not match input {:?}",
                batch.shape(),
                self.spec.input_shape
            )));
        }
        Ok(batch.batch())
    }

    fn forward_impl(&self, batch: &Tensor<T>, keep: bool) -> Result<(Vec<T>, Vec<Cache<T>>)> {
        let n = self.check_batch(batch)?;
        let mut x = batch.data().to_vec();
        let mut caches = Vec::with_capacity(self.layers.len());
        for (layer, shape) in self.layers.iter().zip(&self.in_shapes) {
            let (y, cache) = match layer {
                Layer::Conv(l) => conv_forward(l, &x, n, *shape, keep),
                Layer::Dense(l) => {
                    let y = dense_forward(l, &x, n);
                    (y, if keep { Cache::Dense(x) } else { Cache::None })
                }
                Layer::Relu => {
                    let y: Vec<T> = x.iter().map(|&v| if v > T::ZERO { v } else { T::ZERO }).collect();
                    let cache = if keep { Cache::Relu(y.clone()) } else { Cache::None };
                    (y, cache)
                }
                Layer::MaxPool(p) => maxpool_forward(*p, &x, n, *shape, keep),
                Layer::Flatten => (x, Cache::None),
                Layer::Softmax => (x, Cache::None),
            };
            x = y;
            caches.push(cache);
        }
        Ok((x, caches))
    }

    /// Pre-softmax scores, shape `(n, classes)`.
    pub fn logits(&self, batch: &Tensor<T>) -> Result<Tensor<T>> {
        let n = self.check_batch(batch)?;
        let (z, _) = self.forward_impl(batch, false)?;
        Tensor::new(vec![n, self.classes], z)
    }

    /// Class probabilities, shape `(n, classes)`; each row sums to 1.
    pub fn forward(&self, batch: &Tensor<T>) -> Result<Tensor<T>> {
        let mut z = self.logits(batch)?;
        let c = self.classes;
        for row in z.data_mut().chunks_exact_mut(c) {
            softmax_in_place(row);
        }
        Ok(z)
    }

    /// Mean categorical cross-entropy.
    pub fn loss(&self, batch: &Tensor<T>, labels: &[usize]) -> Result<f64> {
        let z = self.logits(batch)?;
        cross_entropy(z.data(), labels, self.classes)
    }

    /// Mean cross-entropy and its gradient with respect to every parameter.
    pub fn loss_and_gradients(&self, batch: &Tensor<T>, labels: &[usize]) -> Result<(f64, Gradients<T>)> {
        let n = self.check_batch(batch)?;
        let (z, caches) = self.forward_impl(batch, true)?;
        let c = self.classes;
        let loss = cross_entropy(&z, labels, c)?;

        // d(mean CE)/d(logits) = (softmax - onehot) / n
        let inv_n = T::from_f64(1.0 / n as f64);
        let mut grad = z;
        for (row, &label) in grad.chunks_exact_mut(c).zip(labels) {
            softmax_in_place(row);
            row[label] -= T::ONE;
            row.iter_mut().for_each(|v| *v *= inv_n);
        }

        let first_param_layer = self
            .layers
            .iter()
            .position(|l| matches!(l, Layer::Conv(_) | Layer::Dense(_)))
            .unwrap_or(0);
        let mut param_grads: Vec<Vec<T>> = Vec::new();
        for (idx, ((layer, shape), cache)) in self
            .layers
            .iter()
            .zip(&self.in_shapes)
            .zip(caches)
            .enumerate()
            .rev()
        {
            let need_input_grad = idx > first_param_layer;
            match (layer, cache) {
                (Layer::Softmax, _) | (Layer::Flatten, _) => {}
                (Layer::Relu, Cache::Relu(y)) => {
                    for (g, out) in grad.iter_mut().zip(&y) {
                        if !(*out > T::ZERO) {
                            *g = T::ZERO;
                        }
                    }
                }
                (Layer::MaxPool(_), Cache::MaxPool(argmax)) => {
                    let mut dx = vec![T::ZERO; n * shape.len()];
                    for (g, &src) in grad.iter().zip(&argmax) {
                        dx[src as usize] += *g;
                    }
                    grad = dx;
                }
                (Layer::Dense(l), Cache::Dense(input)) => {
                    let (dw, db, dx) = dense_backward(l, &input, &grad, n, need_input_grad);
                    param_grads.push(db);
                    param_grads.push(dw);
                    grad = dx;
                }
                (Layer::Conv(l), Cache::Conv(cols)) => {
                    let (dw, db, dx) = conv_backward(l, &cols, &grad, n, *shape, need_input_grad);
                    param_grads.push(db);
                    param_grads.push(dw);
                    grad = dx;
                }
                _ => unreachable!("cache kind matches layer kind"),
            }
            if !need_input_grad && idx <= first_param_layer {
                break;
            }
        }
        param_grads.reverse();
        Ok((loss, Gradients { tensors: param_grads }))
    }
}

/// Max-shifted softmax over one row.
pub(crate) fn softmax_in_place<T: Scalar>(row: &mut [T]) {
    let max = row.iter().copied().fold(row[0], T::max);
    let mut sum = T::ZERO;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v = *v / sum;
    }
}

pub(crate) fn cross_entropy<T: Scalar>(logits: &[T], labels: &[usize], classes: usize) -> Result<f64> {
    let n = logits.len() / classes;
    if labels.len() != n {
        return Err(NetError::Shape(format!("{} labels for {n} samples", labels.len())));
    }
    let mut total = 0.0f64;
    for (row, &label) in logits.chunks_exact(classes).zip(labels) {
        if label >= classes {
            return Err(NetError::Label { label, classes });
        }
        let max = row.iter().copied().fold(row[0], T::max);
        let mut sum = T::ZERO;
        for &v in row {
            sum += (v - max).exp();
        }
        let lse = max + sum.ln();
        total += (lse - row[label]).to_f64();
    }
    Ok(total / n.max(1) as f64)
}

fn dense_forward<T: Scalar>(l: &DenseLayer<T>, x: &[T], n: usize) -> Vec<T> {
    let mut y = Vec::with_capacity(n * l.units);
    for _ in 0..n {
        y.extend_from_slice(&l.bias);
    }
    T::gemm(n, l.inputs, l.units, x, false, &l.weights, false, T::ONE, &mut y);
    y
}

fn dense_backward<T: Scalar>(
    l: &DenseLayer<T>,
    input: &[T],
    dy: &[T],
    n: usize,
    need_dx: bool,
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let mut dw = vec![T::ZERO; l.inputs * l.units];
    T::gemm(l.inputs, n, l.units, input, true, dy, false, T::ZERO, &mut dw);
    let mut db = vec![T::ZERO; l.units];
    for row in dy.chunks_exact(l.units) {
        for (b, g) in db.iter_mut().zip(row) {
            *b += *g;
        }
    }
    let mut dx = Vec::new();
    if need_dx {
        dx = vec![T::ZERO; n * l.inputs];
        T::gemm(n, l.units, l.inputs, dy, false, &l.weights, true, T::ZERO, &mut dx);
    }
    (dw, db, dx)
}

struct ConvGeom {
    h: usize,
    w: usize,
    c: usize,
    oh: usize,
    ow: usize,
    pad_top: isize,
    pad_left: isize,
}

fn conv_geom<T>(l: &ConvLayer<T>, shape: ActShape) -> ConvGeom {
    let ActShape::Map { h, w, c } = shape else {
        unreachable!("conv input is a feature map")
    };
    let (pt, oh) = conv_axis(h, l.kernel, l.stride, l.padding);
    let (pl, ow) = conv_axis(w, l.kernel, l.stride, l.padding);
    ConvGeom {
        h,
        w,
        c,
        oh,
        ow,
        pad_top: pt as isize,
        pad_left: pl as isize,
    }
}

fn conv_forward<T: Scalar>(
    l: &ConvLayer<T>,
    x: &[T],
    n: usize,
    shape: ActShape,
    keep: bool,
) -> (Vec<T>, Cache<T>) {
    let g = conv_geom(l, shape);
    let k = l.kernel;
    let kkc = k * k * g.c;
    let rows = n * g.oh * g.ow;
    let mut cols = vec![T::ZERO; rows * kkc];
    for b in 0..n {
        for oy in 0..g.oh {
            for ox in 0..g.ow {
                let row = ((b * g.oh + oy) * g.ow + ox) * kkc;
                for ky in 0..k {
                    let iy = (oy * l.stride + ky) as isize - g.pad_top;
                    if iy < 0 || iy >= g.h as isize {
                        continue;
                    }
                    for kx in 0..k {
                        let ix = (ox * l.stride + kx) as isize - g.pad_left;
                        if ix < 0 || ix >= g.w as isize {
                            continue;
                        }
                        let src = ((b * g.h + iy as usize) * g.w + ix as usize) * g.c;
                        let dst = row + (ky * k + kx) * g.c;
                        cols[dst..dst + g.c].copy_from_slice(&x[src..src + g.c]);
                    }
                }
            }
        }
    }
    let mut y = Vec::with_capacity(rows * l.filters);
    for _ in 0..rows {
        y.extend_from_slice(&l.bias);
    }
    T::gemm(rows, kkc, l.filters, &cols, false, &l.weights, false, T::ONE, &mut y);
    (y, if keep { Cache::Conv(cols) } else { Cache::None })
}

fn conv_backward<T: Scalar>(
    l: &ConvLayer<T>,
    cols: &[T],
    dy: &[T],
    n: usize,
    shape: ActShape,
    need_dx: bool,
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let g = conv_geom(l, shape);
    let k = l.kernel;
    let kkc = k * k * g.c;
    let rows = n * g.oh * g.ow;
    let mut dw = vec![T::ZERO; kkc * l.filters];
    T::gemm(kkc, rows, l.filters, cols, true, dy, false, T::ZERO, &mut dw);
    let mut db = vec![T::ZERO; l.filters];
    for row in dy.chunks_exact(l.filters) {
        for (b, v) in db.iter_mut().zip(row) {
            *b += *v;
        }
    }
    let mut dx = Vec::new();
    if need_dx {
        let mut dcols = vec![T::ZERO; rows * kkc];
        T::gemm(rows, l.filters, kkc, dy, false, &l.weights, true, T::ZERO, &mut dcols);
        dx = vec![T::ZERO; n * g.h * g.w * g.c];
        for b in 0..n {
            for oy in 0..g.oh {
                for ox in 0..g.ow {
                    let row = ((b * g.oh + oy) * g.ow + ox) * kkc;
                    for ky in 0..k {
                        let iy = (oy * l.stride + ky) as isize - g.pad_top;
                        if iy < 0 || iy >= g.h as isize {
                            continue;
                        }
                        for kx in 0..k {
                            let ix = (ox * l.stride + kx) as isize - g.pad_left;
                            if ix < 0 || ix >= g.w as isize {
                                continue;
                            }
                            let dst = ((b * g.h + iy as usize) * g.w + ix as usize) * g.c;
                            let src = row + (ky * k + kx) * g.c;
                            for ch in 0..g.c {
                                dx[dst + ch] += dcols[src + ch];
                            }
                        }
                    }
                }
            }
        }
    }
    (dw, db, dx)
}

fn maxpool_forward<T: Scalar>(
    p: usize,
    x: &[T],
    n: usize,
    shape: ActShape,
    keep: bool,
) -> (Vec<T>, Cache<T>) {
    let ActShape::Map { h, w, c } = shape else {
        unreachable!("pool input is a feature map")
    };
    let (oh, ow) = (h / p, w / p);
    let mut y = Vec::with_capacity(n * oh * ow * c);
    let mut argmax = Vec::with_capacity(if keep { n * oh * ow * c } else { 0 });
    for b in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                for ch in 0..c {
                    let mut best_idx = ((b * h + oy * p) * w + ox * p) * c + ch;
                    let mut best = x[best_idx];
                    for dy in 0..p {
                        for dx in 0..p {
                            let idx = ((b * h + oy * p + dy) * w + ox * p + dx) * c + ch;
                            if x[idx] > best {
                                best = x[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    y.push(best);
                    if keep {
                        argmax.push(best_idx as u32);
                    }
                }
            }
        }
    }
    (y, if keep { Cache::MaxPool(argmax) } else { Cache::None })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_conv_spec() -> NetworkSpec {
        NetworkSpec {
            input_shape: [6, 6, 2],
            layers: vec![
                LayerSpec::Conv { filters: 3, kernel: 3, stride: 1, padding: Padding::Same },
                LayerSpec::Relu,
                LayerSpec::MaxPool { size: 2 },
                LayerSpec::Flatten,
                LayerSpec::Dense { units: 4 },
                LayerSpec::Softmax,
            ],
        }
    }

    #[test]
    fn seeded_build_is_deterministic() {
        let spec = tiny_conv_spec();
        let a = build_network(&spec, 9).unwrap();
        let b = build_network(&spec, 9).unwrap();
        let c = build_network(&spec, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.parameter_count(), 3 * 3 * 2 * 3 + 3 + 27 * 4 + 4);
    }

    #[test]
    fn forward_rows_are_distributions() {
        let net = build_network(&tiny_conv_spec(), 1).unwrap();
        let x = Tensor::new(vec![3, 6, 6, 2], (0..216).map(|i| (i as f32 * 0.37).sin()).collect()).unwrap();
        let p = net.forward(&x).unwrap();
        assert_eq!(p.shape(), &[3, 4]);
        for i in 0..3 {
            let s: f32 = p.row(i).iter().sum();
            assert!((s - 1.0).abs() < 1e-6);
        }
        let bad = Tensor::new(vec![1, 6, 6, 1], vec![0.0; 36]).unwrap();
        assert!(matches!(net.forward(&bad), Err(NetError::Shape(_))));
    }

    #[test]
    fn zero_head_is_uniform_and_shift_invariant() {
        let spec = NetworkSpec::mlp(3, &[], 4);
        let mut net = build_network(&spec, 0).unwrap();
        for p in net.params_mut() {
            p.iter_mut().for_each(|v| *v = 0.0);
        }
        let x = Tensor::new(vec![1, 3], vec![0.3, -1.0, 2.0]).unwrap();
        let p = net.forward(&x).unwrap();
        assert!(p.data().iter().all(|v| (v - 0.25).abs() < 1e-7));

        let mut row = [1.0f32, 2.0, -0.5];
        let mut shifted = [101.0f32, 102.0, 99.5];
        softmax_in_place(&mut row);
        softmax_in_place(&mut shifted);
        for (a, b) in row.iter().zip(&shifted) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn softmax_survives_huge_logits() {
        let mut row = [1e30f32, 0.0, -1e30];
        softmax_in_place(&mut row);
        assert_eq!(row, [1.0, 0.0, 0.0]);
    }

    #[test]
    fn gradient_blocks_match_params() {
        let net = build_network(&tiny_conv_spec(), 3).unwrap();
        let x = Tensor::new(vec![2, 6, 6, 2], (0..144).map(|i| (i as f32 * 0.11).cos()).collect()).unwrap();
        let (loss, g) = net.loss_and_gradients(&x, &[1, 3]).unwrap();
        assert!(loss.is_finite());
        let sizes: Vec<usize> = net.params().iter().map(|p| p.len()).collect();
        let gsizes: Vec<usize> = g.tensors.iter().map(|t| t.len()).collect();
        assert_eq!(sizes, gsizes);
        assert!(net.loss(&x, &[1, 4]).is_err());
    }
}
