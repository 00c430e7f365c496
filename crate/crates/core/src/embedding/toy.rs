use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{check_dims, EmbeddingVec, Encoder};
use crate::error::{Error, Result};
use crate::seed;
use crate::tensor::ImageShape;

/// Everything that determines a [`ToyEncoder`]'s weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderSpec {
    pub seed: u64,
    /// Input dimension `m = H·W·C`.
    pub m: usize,
    /// Hidden width.
    pub h: usize,
    /// Embedding dimension.
    pub n: usize,
}

impl EncoderSpec {
    pub const DEFAULT_HIDDEN: usize = 256;
    pub const DEFAULT_OUTPUT: usize = 64;

    pub fn for_shape(seed: u64, shape: ImageShape) -> Self {
        Self { seed, m: shape.len(), h: Self::DEFAULT_HIDDEN, n: Self::DEFAULT_OUTPUT }
    }
}

/// Two-layer network `f(x) = W2 · tanh(W1 · (x - 0.5))`.
///
/// Weights are i.i.d. standard normal scaled by `1/sqrt(fan_in)`, drawn from a
/// ChaCha stream keyed by the seed, so equal specs give bit-identical weights.
#[derive(Debug, Clone)]
pub struct ToyEncoder {
    spec: EncoderSpec,
    shape: ImageShape,
    /// h×m, row-major.
    w1: Vec<f64>,
    /// n×h, row-major.
    w2: Vec<f64>,
}

impl ToyEncoder {
    pub fn new(spec: EncoderSpec, shape: ImageShape) -> Result<Self> {
        if spec.m != shape.len() {
            return Err(Error::DimensionMismatch { expected: shape.len(), actual: spec.m });
        }
        if spec.m == 0 || spec.h == 0 || spec.n == 0 {
            return Err(Error::InvalidInput("encoder dimensions must be positive".into()));
        }
        let mut rng = seed::rng(seed::derive(spec.seed, &[0x70e_e4c0de]));
        let s1 = 1.0 / (spec.m as f64).sqrt();
        let s2 = 1.0 / (spec.h as f64).sqrt();
        let w1 = (0..spec.h * spec.m).map(|_| rng.sample::<f64, _>(StandardNormal) * s1).collect();
        let w2 = (0..spec.n * spec.h).map(|_| rng.sample::<f64, _>(StandardNormal) * s2).collect();
        Ok(Self { spec, shape, w1, w2 })
    }

    /// Default-sized encoder (h = 256, n = 64) for the given image shape.
    pub fn with_seed(seed: u64, shape: ImageShape) -> Result<Self> {
        Self::new(EncoderSpec::for_shape(seed, shape), shape)
    }

    pub fn spec(&self) -> EncoderSpec {
        self.spec
    }

    pub fn w1(&self) -> &[f64] {
        &self.w1
    }

    pub fn w2(&self) -> &[f64] {
        &self.w2
    }

    fn check_input(&self, pixels: &[f64]) -> Result<()> {
        if pixels.len() != self.spec.m {
            return Err(Error::DimensionMismatch { expected: self.spec.m, actual: pixels.len() });
        }
        Ok(())
    }

    /// Hidden activations `tanh(W1 (x - 0.5))`.
    fn hidden(&self, pixels: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = pixels.iter().map(|p| p - 0.5).collect();
        self.w1
            .chunks_exact(self.spec.m)
            .map(|row| dot(row, &centered).tanh())
            .collect()
    }

    fn output(&self, act: &[f64]) -> Vec<f64> {
        self.w2.chunks_exact(self.spec.h).map(|row| dot(row, act)).collect()
    }

    /// `W1ᵀ [(1 - a²) ⊙ (W2ᵀ v)]`.
    fn backward(&self, act: &[f64], cotangent: &[f64]) -> Vec<f64> {
        let (m, h) = (self.spec.m, self.spec.h);
        let mut delta = vec![0.0; h];
        for (row, &c) in self.w2.chunks_exact(h).zip(cotangent) {
            axpy(c, row, &mut delta);
        }
        for (d, a) in delta.iter_mut().zip(act) {
            *d *= 1.0 - a * a;
        }
        let mut grad = vec![0.0; m];
        for (row, &d) in self.w1.chunks_exact(m).zip(&delta) {
            axpy(d, row, &mut grad);
        }
        grad
    }
}

impl Encoder for ToyEncoder {
    fn input_shape(&self) -> ImageShape {
        self.shape
    }

    fn output_dim(&self) -> usize {
        self.spec.n
    }

    fn forward(&self, pixels: &[f64]) -> Result<EmbeddingVec> {
        self.check_input(pixels)?;
        EmbeddingVec::new(self.output(&self.hidden(pixels)))
    }

    fn pullback(&self, pixels: &[f64], cotangent: &[f64]) -> Result<Vec<f64>> {
        self.check_input(pixels)?;
        if cotangent.len() != self.spec.n {
            return Err(Error::DimensionMismatch { expected: self.spec.n, actual: cotangent.len() });
        }
        Ok(self.backward(&self.hidden(pixels), cotangent))
    }

    fn forward_with_gradient(
        &self,
        pixels: &[f64],
        target: &EmbeddingVec,
    ) -> Result<(EmbeddingVec, Vec<f64>)> {
        self.check_input(pixels)?;
        let act = self.hidden(pixels);
        let emb = EmbeddingVec::new(self.output(&act))?;
        check_dims(&emb, target)?;
        let residual: Vec<f64> =
            emb.as_slice().iter().zip(target.as_slice()).map(|(a, b)| a - b).collect();
        Ok((emb, self.backward(&act, &residual)))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
