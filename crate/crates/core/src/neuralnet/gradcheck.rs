use super::{Network, Result, Scalar, Tensor};

/// Largest relative disagreement between backprop gradients and central
/// finite differences over every parameter:
/// `max |ga - gn| / max(|ga|, |gn|, 1e-8)`.
///
/// The step is `T::FD_STEP` scaled by `max(1, |w|)`. Intended for small
/// networks: every parameter costs two forward passes.
pub fn gradient_check<T: Scalar>(net: &Network<T>, batch: &Tensor<T>, labels: &[usize]) -> Result<f64> {
    let (_, analytic) = net.loss_and_gradients(batch, labels)?;
    let mut probe = net.clone();
    let mut worst = 0.0f64;
    for (block, grads) in analytic.tensors.iter().enumerate() {
        for (i, &ga) in grads.iter().enumerate() {
            let original = probe.params()[block][i];
            let h = T::FD_STEP * original.to_f64().abs().max(1.0);
            let set = |net: &mut Network<T>, v: f64| net.params_mut()[block][i] = T::from_f64(v);
            // Use the representable perturbation so the divisor is exact.
            set(&mut probe, original.to_f64() + h);
            let plus_w = probe.params()[block][i].to_f64();
            let plus = probe.loss(batch, labels)?;
            set(&mut probe, original.to_f64() - h);
            let minus_w = probe.params()[block][i].to_f64();
            let minus = probe.loss(batch, labels)?;
            probe.params_mut()[block][i] = original;

            let gn = (plus - minus) / (plus_w - minus_w);
            let ga = ga.to_f64();
            let denom = ga.abs().max(gn.abs()).max(1e-8);
            worst = worst.max((ga - gn).abs() / denom);
        }
    }
    Ok(worst)
}
