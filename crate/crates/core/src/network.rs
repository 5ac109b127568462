//! Multilayer perceptron `u(x): R^2 -> R` with tanh-squared hidden units and
//! an identity output unit.
//!
//! Flat parameter order: layers first to last; within a layer the weight
//! matrix row-major (`n_out x n_in`), then the bias vector.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::jet::{jet_activate, jet_affine, jet_seed, Activation, Jet2};

/// Default architecture: three hidden layers of 32 neurons.
pub const DEFAULT_LAYER_SIZES: [usize; 5] = [2, 32, 32, 32, 1];

const CHECKPOINT_MAGIC: &[u8; 6] = b"MANET1";

/// Offsets of one layer inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpan {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: usize,
    pub biases: usize,
}

/// Checks `sizes` and returns the per-layer spans plus the total flat length.
pub fn layer_spans(sizes: &[usize]) -> Result<(Vec<LayerSpan>, usize)> {
    if sizes.len() < 2 || sizes[0] != 2 || *sizes.last().unwrap() != 1 || sizes.contains(&0) {
        return Err(Error::InvalidLayerSizes(sizes.to_vec()));
    }
    let mut spans = Vec::with_capacity(sizes.len() - 1);
    let mut offset = 0;
    for pair in sizes.windows(2) {
        let (n_in, n_out) = (pair[0], pair[1]);
        let weights = offset;
        let biases = weights + n_in * n_out;
        offset = biases + n_out;
        spans.push(LayerSpan {
            n_in,
            n_out,
            weights,
            biases,
        });
    }
    Ok((spans, offset))
}

/// Number of scalars in the flat parameter vector for `sizes`.
pub fn flat_len(sizes: &[usize]) -> Result<usize> {
    layer_spans(sizes).map(|(_, n)| n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub layer_sizes: Vec<usize>,
    /// Row-major `n_out x n_in` per layer.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub hidden_activation: Activation,
}

impl NetworkParams {
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        let (spans, _) = layer_spans(layer_sizes)?;
        Ok(NetworkParams {
            layer_sizes: layer_sizes.to_vec(),
            weights: spans.iter().map(|s| vec![0.0; s.n_in * s.n_out]).collect(),
            biases: spans.iter().map(|s| vec![0.0; s.n_out]).collect(),
            hidden_activation: Activation::TanhSquared,
        })
    }

    /// Glorot-uniform weights, zero biases. Deterministic in `seed`.
    pub fn init(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        let mut p = Self::zeros(layer_sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (w, pair) in p.weights.iter_mut().zip(layer_sizes.windows(2)) {
            let limit = (6.0 / (pair[0] + pair[1]) as f64).sqrt();
            for v in w.iter_mut() {
                *v = rng.random_range(-limit..limit);
            }
        }
        Ok(p)
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn flat_len(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>() + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.flat_len());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }

    /// Builds parameters shaped like `template` from the flat vector `v`.
    pub fn unflatten(template: &NetworkParams, v: &[f64]) -> Result<Self> {
        let mut p = template.clone();
        p.assign_flat(v)?;
        Ok(p)
    }

    pub fn assign_flat(&mut self, v: &[f64]) -> Result<()> {
        let expected = self.flat_len();
        if v.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: v.len(),
            });
        }
        let mut rest = v;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            let (head, tail) = rest.split_at(w.len());
            w.copy_from_slice(head);
            let (head, tail) = tail.split_at(b.len());
            b.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    /// Evaluates the network at `x` together with its exact spatial gradient
    /// and Hessian.
    pub fn forward_jet(&self, x: [f64; 2]) -> Result<Jet2> {
        let (x1, x2) = jet_seed(x);
        let mut current = vec![x1, x2];
        let last = self.num_layers() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let n_in = current.len();
            let next: Result<Vec<Jet2>> = b
                .iter()
                .enumerate()
                .map(|(i, &bias)| {
                    let z = jet_affine(&w[i * n_in..(i + 1) * n_in], &current, bias)?;
                    Ok(if l == last {
                        z
                    } else {
                        jet_activate(self.hidden_activation, z)
                    })
                })
                .collect();
            current = next?;
        }
        let out = current[0];
        if !out.is_finite() {
            return Err(Error::NonFinite("network output"));
        }
        Ok(out)
    }

    /// Plain scalar evaluation.
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let mut current = x.to_vec();
        let last = self.num_layers() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let n_in = current.len();
            current = b
                .iter()
                .enumerate()
                .map(|(i, &bias)| {
                    let z = bias
                        + w[i * n_in..(i + 1) * n_in]
                            .iter()
                            .zip(&current)
                            .map(|(a, c)| a * c)
                            .sum::<f64>();
                    if l == last {
                        z
                    } else {
                        self.hidden_activation.eval(z)
                    }
                })
                .collect();
        }
        current[0]
    }

    /// Binary checkpoint: magic `MANET1`, `u32` count of layer sizes, the
    /// sizes as `u32`, `u64` parameter count, then the flat parameters as
    /// `f64`. Everything little-endian.
    pub fn write_checkpoint<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(CHECKPOINT_MAGIC)?;
        out.write_all(&(self.layer_sizes.len() as u32).to_le_bytes())?;
        for &s in &self.layer_sizes {
            out.write_all(&(s as u32).to_le_bytes())?;
        }
        let flat = self.flatten();
        out.write_all(&(flat.len() as u64).to_le_bytes())?;
        for v in flat {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 6];
        input.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::BadCheckpoint("wrong magic".into()));
        }
        let mut u32buf = [0u8; 4];
        input.read_exact(&mut u32buf)?;
        let n_sizes = u32::from_le_bytes(u32buf) as usize;
        if n_sizes > 1024 {
            return Err(Error::BadCheckpoint(format!("{n_sizes} layers")));
        }
        let mut sizes = Vec::with_capacity(n_sizes);
        for _ in 0..n_sizes {
            input.read_exact(&mut u32buf)?;
            sizes.push(u32::from_le_bytes(u32buf) as usize);
        }
        let mut p = Self::zeros(&sizes).map_err(|e| Error::BadCheckpoint(e.to_string()))?;
        let mut u64buf = [0u8; 8];
        input.read_exact(&mut u64buf)?;
        let n = u64::from_le_bytes(u64buf) as usize;
        if n != p.flat_len() {
            return Err(Error::BadCheckpoint(format!(
                "parameter count {n} does not match layer sizes {sizes:?}"
            )));
        }
        let mut flat = Vec::with_capacity(n);
        for _ in 0..n {
            input.read_exact(&mut u64buf)?;
            flat.push(f64::from_le_bytes(u64buf));
        }
        p.assign_flat(&flat)?;
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_checkpoint(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_checkpoint(std::io::BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_lengths() {
        // 32*3 + 32*33 + 32*33 + 1*33
        assert_eq!(flat_len(&DEFAULT_LAYER_SIZES).unwrap(), 2241);
        assert_eq!(flat_len(&[2, 16, 1]).unwrap(), 65);
        assert!(flat_len(&[3, 4, 1]).is_err());
        assert!(flat_len(&[2, 0, 1]).is_err());
        assert!(flat_len(&[2, 4, 2]).is_err());
        assert!(flat_len(&[2]).is_err());
    }

    #[test]
    fn init_is_seeded() {
        let a = NetworkParams::init(&DEFAULT_LAYER_SIZES, 7).unwrap();
        let b = NetworkParams::init(&DEFAULT_LAYER_SIZES, 7).unwrap();
        let c = NetworkParams::init(&DEFAULT_LAYER_SIZES, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.flatten(), c.flatten());
        assert!(a.biases.iter().flatten().all(|&v| v == 0.0));
        let limit = (6.0f64 / 34.0).sqrt();
        assert!(a.weights[0].iter().all(|v| v.abs() <= limit));
    }

    #[test]
    fn zero_params_give_zero_jet() {
        let p = NetworkParams::zeros(&DEFAULT_LAYER_SIZES).unwrap();
        assert_eq!(p.forward_jet([0.3, -0.8]).unwrap(), Jet2::constant(0.0));
    }

    #[test]
    fn single_linear_layer() {
        let mut p = NetworkParams::zeros(&[2, 1]).unwrap();
        p.weights[0] = vec![1.0, 2.0];
        p.biases[0] = vec![3.0];
        let j = p.forward_jet([0.5, -2.0]).unwrap();
        assert_eq!(j.value, 0.5 - 4.0 + 3.0);
        assert_eq!(j.grad, [1.0, 2.0]);
        assert_eq!(j.hess(), [[0.0; 2]; 2]);
    }

    #[test]
    fn flatten_round_trip_and_zero_vector() {
        let p = NetworkParams::init(&[2, 5, 3, 1], 3).unwrap();
        let flat = p.flatten();
        assert_eq!(NetworkParams::unflatten(&p, &flat).unwrap(), p);
        let z = NetworkParams::unflatten(&p, &vec![0.0; flat.len()]).unwrap();
        assert_eq!(z, NetworkParams::zeros(&[2, 5, 3, 1]).unwrap());
        assert!(matches!(
            NetworkParams::unflatten(&p, &flat[1..]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn flat_order_is_weights_then_biases_per_layer() {
        let mut p = NetworkParams::zeros(&[2, 2, 1]).unwrap();
        p.weights[0] = vec![1.0, 2.0, 3.0, 4.0];
        p.biases[0] = vec![5.0, 6.0];
        p.weights[1] = vec![7.0, 8.0];
        p.biases[1] = vec![9.0];
        assert_eq!(p.flatten(), (1..=9).map(f64::from).collect::<Vec<_>>());
    }

    #[test]
    fn forward_jet_matches_finite_differences() {
        let p = NetworkParams::init(&[2, 8, 8, 8, 1], 11).unwrap();
        let h = 1e-5;
        for x in [[0.1, 0.2], [-0.7, 0.4], [0.5, -0.5]] {
            let j = p.forward_jet(x).unwrap();
            assert!((j.value - p.eval(x)).abs() < 1e-14);
            let g = |q: [f64; 2]| p.forward_jet(q).unwrap().grad;
            let fd = |i: usize| {
                let mut a = x;
                let mut b = x;
                a[i] += h;
                b[i] -= h;
                ((p.eval(a) - p.eval(b)) / (2.0 * h), {
                    let (ga, gb) = (g(a), g(b));
                    [(ga[0] - gb[0]) / (2.0 * h), (ga[1] - gb[1]) / (2.0 * h)]
                })
            };
            let (d1, row1) = fd(0);
            let (d2, row2) = fd(1);
            let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-2);
            assert!(rel(j.grad[0], d1) < 1e-6);
            assert!(rel(j.grad[1], d2) < 1e-6);
            assert!(rel(j.h11, row1[0]) < 1e-6);
            assert!(rel(j.h12, row1[1]) < 1e-6);
            assert!(rel(j.h12, row2[0]) < 1e-6);
            assert!(rel(j.h22, row2[1]) < 1e-6);
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let p = NetworkParams::init(&[2, 4, 3, 1], 5).unwrap();
        let mut bytes = Vec::new();
        p.write_checkpoint(&mut bytes).unwrap();
        assert_eq!(&bytes[..6], b"MANET1");
        assert_eq!(bytes.len(), 6 + 4 + 4 * 4 + 8 + 8 * p.flat_len());
        let back = NetworkParams::read_checkpoint(bytes.as_slice()).unwrap();
        assert_eq!(back, p);

        let mut corrupt = bytes.clone();
        corrupt[0] = b'X';
        assert!(matches!(
            NetworkParams::read_checkpoint(corrupt.as_slice()),
            Err(Error::BadCheckpoint(_))
        ));
        assert!(NetworkParams::read_checkpoint(&bytes[..20]).is_err());
    }
}
