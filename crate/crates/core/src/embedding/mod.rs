//! Image/text encoders and embedding-space alignment.
//!
//! The rest of the crate talks to the vision-language model only through the
//! [`Encoder`] trait: a forward map `f(x)` and its vector-Jacobian product.
//! [`ToyEncoder`] is the deterministic two-layer stand-in used throughout.

mod align;
mod noise;
mod toy;

use serde::{Deserialize, Serialize};

pub use align::{
    align_to_embedding, align_until, alignment_gradient, alignment_loss, Alignment,
    AlignmentConfig, AlignmentStatus, AlignmentTrace, StepRecord, StepView, TraceSummary,
};
pub use noise::noise_response;
pub use toy::{EncoderSpec, ToyEncoder};

use crate::error::{Error, Result};
use crate::tensor::{ImageShape, ImageTensor};

/// An unnormalized, finite embedding vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVec(Vec<f64>);

impl EmbeddingVec {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("embedding has a non-finite component".into()));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &EmbeddingVec) -> Result<f64> {
        check_dims(self, other)?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
    }
}

fn check_dims(a: &EmbeddingVec, b: &EmbeddingVec) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), actual: b.dim() });
    }
    Ok(())
}

/// `a·b / (‖a‖‖b‖)`, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &EmbeddingVec, b: &EmbeddingVec) -> Result<f64> {
    check_dims(a, b)?;
    let (dot, na, nb) = a.0.iter().zip(&b.0).fold((0.0, 0.0, 0.0), |(d, na, nb), (x, y)| {
        (d + x * y, na + x * x, nb + y * y)
    });
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    // sqrt(na * nb) rather than sqrt(na) * sqrt(nb): cos(v, v) is then exactly 1.
    Ok((dot / (na * nb).sqrt()).clamp(-1.0, 1.0))
}

/// A differentiable image encoder `f: [0,1]^m -> R^n`.
pub trait Encoder: Send + Sync {
    fn input_shape(&self) -> ImageShape;

    fn output_dim(&self) -> usize;

    /// `f(x)` on widened pixels.
    fn forward(&self, pixels: &[f64]) -> Result<EmbeddingVec>;

    /// Vector-Jacobian product `J(x)ᵀ v`.
    fn pullback(&self, pixels: &[f64], cotangent: &[f64]) -> Result<Vec<f64>>;

    /// `f(x)` together with `J(x)ᵀ (f(x) - target)`. Implementations may fuse
    /// the two passes.
    fn forward_with_gradient(
        &self,
        pixels: &[f64],
        target: &EmbeddingVec,
    ) -> Result<(EmbeddingVec, Vec<f64>)> {
        let emb = self.forward(pixels)?;
        check_dims(&emb, target)?;
        let residual: Vec<f64> =
            emb.as_slice().iter().zip(target.as_slice()).map(|(a, b)| a - b).collect();
        let grad = self.pullback(pixels, &residual)?;
        Ok((emb, grad))
    }

    fn encode_image(&self, img: &ImageTensor) -> Result<EmbeddingVec> {
        if img.shape() != self.input_shape() {
            return Err(Error::DimensionMismatch {
                expected: self.input_shape().len(),
                actual: img.len(),
            });
        }
        self.forward(&img.to_f64())
    }
}

/// Maps free text to an image whose embedding stands for the text.
///
/// This is how the toy world provides a shared image/text embedding space:
/// the text embedding is the image embedding of a rendering of the concept
/// the text names.
pub trait TextGrounding {
    fn ground_text(&self, text: &str) -> Result<ImageTensor>;
}

pub fn encode_text<E, G>(enc: &E, grounding: &G, text: &str) -> Result<EmbeddingVec>
where
    E: Encoder + ?Sized,
    G: TextGrounding + ?Sized,
{
    enc.encode_image(&grounding.ground_text(text)?)
}
