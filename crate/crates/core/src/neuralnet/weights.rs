//! `WDN1` weight files.
//!
//! Layout, all integers little-endian `u32`:
//!
//! ```text
//! "WDN1" | input h | input w | input c | layer count
//! per layer: kind tag (u8) | ndims | dims... | value count | f32 values...
//! ```
//!
//! Tags: 0 conv `[filters, kernel, in_channels, stride, padding]`
//! (padding 0 = same, 1 = valid), 1 relu `[]`, 2 maxpool `[size]`,
//! 3 flatten `[]`, 4 dense `[inputs, units]`, 5 softmax `[]`.
//! Conv and dense values are the weights followed by the biases.

use super::{Layer, LayerSpec, NetError, Network, NetworkSpec, Padding, Result};

pub const MAGIC: &[u8; 4] = b"WDN1";

pub fn save_weights(net: &Network) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    for d in net.spec().input_shape {
        put_u32(&mut out, d);
    }
    put_u32(&mut out, net.layers().len());
    for layer in net.layers() {
        let (tag, dims, values): (u8, Vec<usize>, Vec<f32>) = match layer {
            Layer::Conv(c) => (
                0,
                vec![
                    c.filters,
                    c.kernel,
                    c.in_channels,
                    c.stride,
                    match c.padding {
                        Padding::Same => 0,
                        Padding::Valid => 1,
                    },
                ],
                c.weights.iter().chain(&c.bias).copied().collect(),
            ),
            Layer::Relu => (1, vec![], vec![]),
            Layer::MaxPool(p) => (2, vec![*p], vec![]),
            Layer::Flatten => (3, vec![], vec![]),
            Layer::Dense(d) => (
                4,
                vec![d.inputs, d.units],
                d.weights.iter().chain(&d.bias).copied().collect(),
            ),
            Layer::Softmax => (5, vec![], vec![]),
        };
        out.push(tag);
        put_u32(&mut out, dims.len());
        for d in dims {
            put_u32(&mut out, d);
        }
        put_u32(&mut out, values.len());
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Parses a weight file. When `expected` is given the stored architecture
/// must equal it.
pub fn load_weights(bytes: &[u8], expected: Option<&NetworkSpec>) -> Result<Network> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(NetError::Format("bad magic, expected WDN1".into()));
    }
    let input_shape = [r.u32()?, r.u32()?, r.u32()?];
    let count = r.u32()?;
    let mut layers = Vec::with_capacity(count.min(1024));
    let mut blocks: Vec<Vec<f32>> = Vec::new();
    for i in 0..count {
        let tag = r.take(1)?[0];
        let ndims = r.u32()?;
        if ndims > 16 {
            return Err(NetError::Format(format!("layer {i}: {ndims} dims")));
        }
        let dims = (0..ndims).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let nvals = r.u32()?;
        let raw = r.take(nvals.checked_mul(4).ok_or_else(|| NetError::Format("overflow".into()))?)?;
        let values: Vec<f32> = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        let want = |n: usize| {
            if dims.len() != n {
                Err(NetError::Format(format!("layer {i}: tag {tag} expects {n} dims")))
            } else {
                Ok(())
            }
        };
        let spec = match tag {
            0 => {
                want(5)?;
                let padding = match dims[4] {
                    0 => Padding::Same,
                    1 => Padding::Valid,
                    p => return Err(NetError::Format(format!("layer {i}: padding code {p}"))),
                };
                let wlen = dims[1] * dims[1] * dims[2] * dims[0];
                if values.len() != wlen + dims[0] {
                    return Err(NetError::Format(format!("layer {i}: {} conv values", values.len())));
                }
                blocks.push(values[..wlen].to_vec());
                blocks.push(values[wlen..].to_vec());
                LayerSpec::Conv {
                    filters: dims[0],
                    kernel: dims[1],
                    stride: dims[3],
                    padding,
                }
            }
            1 => {
                want(0)?;
                LayerSpec::Relu
            }
            2 => {
                want(1)?;
                LayerSpec::MaxPool { size: dims[0] }
            }
            3 => {
                want(0)?;
                LayerSpec::Flatten
            }
            4 => {
                want(2)?;
                let wlen = dims[0] * dims[1];
                if values.len() != wlen + dims[1] {
                    return Err(NetError::Format(format!("layer {i}: {} dense values", values.len())));
                }
                blocks.push(values[..wlen].to_vec());
                blocks.push(values[wlen..].to_vec());
                LayerSpec::Dense { units: dims[1] }
            }
            5 => {
                want(0)?;
                LayerSpec::Softmax
            }
            t => return Err(NetError::Format(format!("layer {i}: unknown tag {t}"))),
        };
        layers.push(spec);
    }
    if r.pos != bytes.len() {
        return Err(NetError::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    let spec = NetworkSpec { input_shape, layers };
    if let Some(exp) = expected {
        if *exp != spec {
            return Err(NetError::Format("stored architecture differs from the expected spec".into()));
        }
    }
    let mut net = Network::assemble(&spec, |_, count| vec![0.0; count])?;
    let mut targets = net.params_mut();
    if targets.len() != blocks.len() {
        return Err(NetError::Format("parameter block count differs from the architecture".into()));
    }
    for (dst, src) in targets.iter_mut().zip(&blocks) {
        if dst.len() != src.len() {
            return Err(NetError::Format(format!(
                "parameter block of {} values where the architecture needs {}",
                src.len(),
                dst.len()
            )));
        }
        dst.copy_from_slice(src);
    }
    Ok(net)
}

pub fn save_weights_file(net: &Network, path: impl AsRef<std::path::Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, save_weights(net)).map_err(|e| NetError::Io(format!("{}: {e}", path.display())))
}

pub fn load_weights_file(path: impl AsRef<std::path::Path>, expected: Option<&NetworkSpec>) -> Result<Network> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| NetError::Io(format!("{}: {e}", path.display())))?;
    load_weights(&bytes, expected)
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            NetError::Format(format!("truncated at byte {} (need {n} more)", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::{build_network, Tensor};

    fn spec() -> NetworkSpec {
        NetworkSpec {
            input_shape: [8, 8, 1],
            layers: vec![
                LayerSpec::Conv { filters: 2, kernel: 3, stride: 1, padding: Padding::Valid },
                LayerSpec::Relu,
                LayerSpec::MaxPool { size: 2 },
                LayerSpec::Flatten,
                LayerSpec::Dense { units: 3 },
                LayerSpec::Softmax,
            ],
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let net = build_network(&spec(), 5).unwrap();
        let bytes = save_weights(&net);
        assert_eq!(&bytes[..4], b"WDN1");
        let back = load_weights(&bytes, Some(&spec())).unwrap();
        assert_eq!(back, net);
        let x = Tensor::new(vec![2, 8, 8, 1], (0..128).map(|i| (i as f32).sin()).collect()).unwrap();
        let a = net.forward(&x).unwrap();
        let b = back.forward(&x).unwrap();
        assert!(a.data().iter().zip(b.data()).all(|(p, q)| p.to_bits() == q.to_bits()));
        assert_eq!(save_weights(&back), bytes);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let bytes = save_weights(&build_network(&spec(), 5).unwrap());
        for cut in [0, 3, 10, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(load_weights(&bytes[..cut], None), Err(NetError::Format(_))));
        }
        let mut bad = bytes.clone();
        bad[3] = b'2';
        assert!(matches!(load_weights(&bad, None), Err(NetError::Format(_))));
        let mut other = spec();
        other.layers[4] = LayerSpec::Dense { units: 4 };
        assert!(load_weights(&bytes, Some(&other)).is_err());
    }
}
