use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Height, width, channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImageShape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl ImageShape {
    pub const fn new(height: usize, width: usize, channels: usize) -> Self {
        Self { height, width, channels }
    }

    pub const fn len(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for ImageShape {
    fn default() -> Self {
        Self::new(32, 32, 3)
    }
}

/// An H×W×C image with pixels in `[0, 1]`, row-major and channel-fastest.
///
/// Pixels are stored as `f32`, the on-disk precision, so anything held in
/// memory persists bit-exactly. Numerical work widens to `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    shape: ImageShape,
    data: Vec<f32>,
}

impl ImageTensor {
    pub fn new(shape: ImageShape, data: Vec<f32>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::DimensionMismatch { expected: shape.len(), actual: data.len() });
        }
        if let Some(i) = data.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidInput(format!(
                "pixel {i} = {} outside [0, 1]",
                data[i]
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn filled(shape: ImageShape, value: f32) -> Result<Self> {
        Self::new(shape, vec![value; shape.len()])
    }

    /// Narrow `f64` pixels to storage precision, clamping into `[0, 1]`.
    pub fn from_f64_clamped(shape: ImageShape, pixels: &[f64]) -> Result<Self> {
        if pixels.len() != shape.len() {
            return Err(Error::DimensionMismatch { expected: shape.len(), actual: pixels.len() });
        }
        if pixels.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidInput("NaN pixel".into()));
        }
        let data = pixels.iter().map(|&v| v.clamp(0.0, 1.0) as f32).collect();
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> ImageShape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| f64::from(v)).collect()
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> f32 {
        let s = self.shape;
        self.data[(row * s.width + col) * s.channels + channel]
    }

    /// Largest absolute per-pixel difference.
    pub fn max_abs_diff(&self, other: &ImageTensor) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch { expected: self.len(), actual: other.len() });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (f64::from(*a) - f64::from(*b)).abs())
            .fold(0.0, f64::max))
    }

    /// Bitwise equality, distinguishing `0.0` from `-0.0`.
    pub fn bit_eq(&self, other: &ImageTensor) -> bool {
        self.shape == other.shape
            && self.data.iter().zip(&other.data).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}
