use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::gemm::{gemm, View};
use crate::error::{Error, Result};

/// Fully connected network: affine layers with ReLU between them and an
/// identity output.
///
/// Parameters live in one flat buffer, layer by layer, each layer as its
/// `out x in` row-major weight matrix followed by its bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    params: Vec<f64>,
    generation: u64,
}

/// Layer inputs recorded by a forward pass, needed by [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    batch: usize,
    generation: u64,
    /// `activations[l]` is the `batch x dims[l]` input of layer `l`.
    activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn batch(&self) -> usize {
        self.batch
    }
}

/// Output of [`Mlp::backward`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub params: Vec<f64>,
    pub input: Vec<f64>,
}

fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

impl Mlp {
    /// Network with all parameters zero.
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 || dims.iter().any(|&d| d == 0) {
            return Err(Error::Config(format!(
                "layer dims must have at least two nonzero entries, got {dims:?}"
            )));
        }
        Ok(Self {
            dims: dims.to_vec(),
            params: vec![0.0; param_count(dims)],
            generation: 0,
        })
    }

    /// Orthogonal weights scaled by `hidden_gain` (all but the last layer)
    /// and `output_gain` (last layer); zero biases.
    pub fn orthogonal<R: Rng + ?Sized>(
        dims: &[usize],
        hidden_gain: f64,
        output_gain: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = Self::zeros(dims)?;
        let layers = net.num_layers();
        for l in 0..layers {
            let gain = if l + 1 == layers { output_gain } else { hidden_gain };
            let (rows, cols) = (dims[l + 1], dims[l]);
            let w = orthogonal_matrix(rows, cols, rng);
            let (w_range, _) = net.layer_ranges(l);
            for (dst, src) in net.params[w_range].iter_mut().zip(w) {
                *dst = gain * src;
            }
        }
        Ok(net)
    }

    /// Rebuilds a network from its dims and flat parameters.
    pub fn from_params(dims: &[usize], params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(dims)?;
        if params.len() != net.params.len() {
            return Err(Error::Config(format!(
                "expected {} parameters for dims {dims:?}, got {}",
                net.params.len(),
                params.len()
            )));
        }
        net.params = params;
        Ok(net)
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Mutable parameter access. Invalidates outstanding forward caches.
    pub fn params_mut(&mut self) -> &mut [f64] {
        self.generation += 1;
        &mut self.params
    }

    /// Incremented on every mutable access to the parameters.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    fn layer_ranges(&self, layer: usize) -> (core::ops::Range<usize>, core::ops::Range<usize>) {
        let start: usize = param_count(&self.dims[..=layer]);
        let (i, o) = (self.dims[layer], self.dims[layer + 1]);
        (start..start + o * i, start + o * i..start + o * i + o)
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        &self.params[self.layer_ranges(layer).0]
    }

    pub fn bias(&self, layer: usize) -> &[f64] {
        &self.params[self.layer_ranges(layer).1]
    }

    fn check_input(&self, inputs: &[f64], batch: usize) -> Result<()> {
        if inputs.len() != batch * self.input_dim() {
            return Err(Error::Config(format!(
                "input of length {} does not match batch {batch} x input dim {}",
                inputs.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    fn affine(&self, layer: usize, x: &[f64], batch: usize, out: &mut Vec<f64>) {
        let (i, o) = (self.dims[layer], self.dims[layer + 1]);
        let (w, b) = self.layer_ranges(layer);
        out.clear();
        for _ in 0..batch {
            out.extend_from_slice(&self.params[b.clone()]);
        }
        gemm(
            View::new(x, batch, i),
            View::t(&self.params[w], o, i),
            1.0,
            out,
        );
        if layer + 1 < self.num_layers() {
            out.iter_mut().for_each(|z| *z = z.max(0.0));
        }
    }

    /// Forward pass over a row-major `batch x input_dim` block without
    /// recording activations.
    pub fn predict_batch(&self, inputs: &[f64], batch: usize) -> Result<Vec<f64>> {
        self.check_input(inputs, batch)?;
        let mut x = inputs.to_vec();
        let mut y = Vec::new();
        for l in 0..self.num_layers() {
            self.affine(l, &x, batch, &mut y);
            core::mem::swap(&mut x, &mut y);
        }
        Ok(x)
    }

    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.predict_batch(input, 1)
    }

    /// Forward pass that keeps what [`Mlp::backward`] needs.
    pub fn forward_batch(&self, inputs: &[f64], batch: usize) -> Result<(Vec<f64>, ForwardCache)> {
        self.check_input(inputs, batch)?;
        let mut activations = Vec::with_capacity(self.num_layers());
        activations.push(inputs.to_vec());
        let mut out = Vec::new();
        for l in 0..self.num_layers() {
            let mut y = Vec::new();
            self.affine(l, &activations[l], batch, &mut y);
            if l + 1 < self.num_layers() {
                activations.push(y);
            } else {
                out = y;
            }
        }
        Ok((
            out,
            ForwardCache {
                batch,
                generation: self.generation,
                activations,
            },
        ))
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        self.forward_batch(input, 1)
    }

    /// Accumulates `d loss / d params` into `param_grads` and returns
    /// `d loss / d input` for the whole batch. `output_grad` is
    /// `batch x output_dim`. The ReLU derivative at zero is taken as zero.
    pub fn backward_into(
        &self,
        cache: &ForwardCache,
        output_grad: &[f64],
        param_grads: &mut [f64],
    ) -> Result<Vec<f64>> {
        if cache.generation != self.generation {
            return Err(Error::StaleCache {
                cache: cache.generation,
                net: self.generation,
            });
        }
        let batch = cache.batch;
        if output_grad.len() != batch * self.output_dim() || param_grads.len() != self.num_params() {
            return Err(Error::Config(format!(
                "gradient shapes do not match network: output grad {}, expected {}; param grad {}, expected {}",
                output_grad.len(),
                batch * self.output_dim(),
                param_grads.len(),
                self.num_params()
            )));
        }
        let mut dz = output_grad.to_vec();
        for l in (0..self.num_layers()).rev() {
            let (i, o) = (self.dims[l], self.dims[l + 1]);
            let x = &cache.activations[l];
            let (w_range, b_range) = self.layer_ranges(l);
            // dW += dZ^T X
            gemm(
                View::t(&dz, batch, o),
                View::new(x, batch, i),
                1.0,
                &mut param_grads[w_range.clone()],
            );
            let db = &mut param_grads[b_range];
            for row in dz.chunks_exact(o) {
                for (g, d) in db.iter_mut().zip(row) {
                    *g += d;
                }
            }
            // dX = dZ W
            let mut dx = vec![0.0; batch * i];
            gemm(
                View::new(&dz, batch, o),
                View::new(&self.params[w_range], o, i),
                0.0,
                &mut dx,
            );
            if l > 0 {
                for (g, a) in dx.iter_mut().zip(x) {
                    if *a <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            dz = dx;
        }
        Ok(dz)
    }

    /// Parameter and input gradients of the loss whose output gradient is
    /// `output_grad`.
    pub fn backward(&self, cache: &ForwardCache, output_grad: &[f64]) -> Result<Gradients> {
        let mut params = vec![0.0; self.num_params()];
        let input = self.backward_into(cache, output_grad, &mut params)?;
        Ok(Gradients { params, input })
    }
}

/// `rows x cols` matrix with orthonormal rows or columns (whichever is the
/// shorter side), drawn from the Haar measure via Gram–Schmidt on a Gaussian
/// matrix.
pub fn orthogonal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Vec<f64> {
    let (long, short) = if rows >= cols { (rows, cols) } else { (cols, rows) };
    // Columns of a long x short matrix, stored column-major.
    let mut q: Vec<f64> = (0..long * short)
        .map(|_| StandardNormal.sample(rng))
        .collect();
    for j in 0..short {
        // Two passes of modified Gram–Schmidt for numerical orthogonality.
        for _ in 0..2 {
            for k in 0..j {
                let (head, tail) = q.split_at_mut(j * long);
                let qk = &head[k * long..(k + 1) * long];
                let qj = &mut tail[..long];
                let proj: f64 = qk.iter().zip(qj.iter()).map(|(a, b)| a * b).sum();
                qj.iter_mut().zip(qk).for_each(|(b, a)| *b -= proj * a);
            }
        }
        let col = &mut q[j * long..(j + 1) * long];
        let norm = libm::sqrt(col.iter().map(|v| v * v).sum::<f64>());
        col.iter_mut().for_each(|v| *v /= norm);
    }
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = if rows >= cols {
                q[c * long + r]
            } else {
                q[r * long + c]
            };
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn zero_network_outputs_zero() {
        let net = Mlp::zeros(&[6, 64, 64, 2]).unwrap();
        let (y, _) = net.forward(&[1.0, -2.0, 3.0, 0.5, 0.1, 9.0]).unwrap();
        assert_eq!(y, vec![0.0, 0.0]);
    }

    #[test]
    fn identity_single_layer() {
        let mut params = vec![0.0; 3 * 3 + 3];
        for i in 0..3 {
            params[i * 3 + i] = 1.0;
        }
        let net = Mlp::from_params(&[3, 3], params).unwrap();
        let (y, _) = net.forward(&[0.5, 2.0, 7.0]).unwrap();
        assert_eq!(y, vec![0.5, 2.0, 7.0]);
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let net = Mlp::zeros(&[6, 4, 2]).unwrap();
        assert!(matches!(net.forward(&[1.0; 5]), Err(Error::Config(_))));
    }

    #[test]
    fn linear_net_weight_gradient_is_outer_product() {
        let mut rng = seeded(5);
        let net = Mlp::orthogonal(&[3, 2], 1.0, 1.0, &mut rng).unwrap();
        let x = [0.3, -1.2, 2.0];
        let g = [0.7, -0.4];
        let (_, cache) = net.forward(&x).unwrap();
        let grads = net.backward(&cache, &g).unwrap();
        for o in 0..2 {
            for i in 0..3 {
                assert!((grads.params[o * 3 + i] - g[o] * x[i]).abs() < 1e-15);
            }
            assert_eq!(grads.params[6 + o], g[o]);
        }
    }

    #[test]
    fn zero_output_gradient_gives_zero_grads() {
        let mut rng = seeded(9);
        let net = Mlp::orthogonal(&[6, 8, 2], 2f64.sqrt(), 1.0, &mut rng).unwrap();
        let (_, cache) = net.forward(&[0.1; 6]).unwrap();
        let g = net.backward(&cache, &[0.0, 0.0]).unwrap();
        assert!(g.params.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stale_cache_is_rejected() {
        let mut rng = seeded(2);
        let mut net = Mlp::orthogonal(&[2, 3, 1], 1.0, 1.0, &mut rng).unwrap();
        let (_, cache) = net.forward(&[1.0, 1.0]).unwrap();
        net.params_mut()[0] += 0.1;
        assert!(matches!(net.backward(&cache, &[1.0]), Err(Error::StaleCache { .. })));
    }

    #[test]
    fn orthogonal_rows_or_columns() {
        let mut rng = seeded(4);
        for (r, c) in [(64, 6), (6, 64), (64, 64), (2, 64)] {
            let w = orthogonal_matrix(r, c, &mut rng);
            let (n, inner, by_rows) = if r <= c { (r, c, true) } else { (c, r, false) };
            for a in 0..n {
                for b in 0..n {
                    let dot: f64 = (0..inner)
                        .map(|k| {
                            if by_rows {
                                w[a * c + k] * w[b * c + k]
                            } else {
                                w[k * c + a] * w[k * c + b]
                            }
                        })
                        .sum();
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn batch_forward_matches_single_rows() {
        let mut rng = seeded(8);
        let net = Mlp::orthogonal(&[6, 64, 64, 64, 64, 64, 2], 2f64.sqrt(), 1.0, &mut rng).unwrap();
        let x: Vec<f64> = (0..18).map(|i| (i as f64 * 0.37).sin()).collect();
        let batch = net.predict_batch(&x, 3).unwrap();
        for b in 0..3 {
            let single = net.predict(&x[b * 6..(b + 1) * 6]).unwrap();
            for k in 0..2 {
                assert!((single[k] - batch[b * 2 + k]).abs() < 1e-12);
            }
        }
    }
}
