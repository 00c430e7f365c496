//! Gradient-descent embedding alignment.
//!
//! Minimizes `L(x) = ½‖f(x) − target‖²` over pixels with fixed-step gradient
//! descent, clamping to `[0, 1]` after every step. No momentum, no restarts:
//! divergence is reported as an error carrying the trace.

use serde::{Deserialize, Serialize};

use super::{check_dims, EmbeddingVec, Encoder};
use crate::error::{Error, Result};
use crate::tensor::ImageTensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentConfig {
    pub learning_rate: f64,
    pub max_steps: usize,
    /// Stop once `‖f(x) − target‖ ≤ l2_threshold` (and the cosine test holds).
    pub l2_threshold: f64,
    pub cos_threshold: f64,
    pub clamp_pixels: bool,
}

impl Default for AlignmentConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            max_steps: 3000,
            l2_threshold: f64::INFINITY,
            cos_threshold: 0.95,
            clamp_pixels: true,
        }
    }
}

impl AlignmentConfig {
    /// Fraction of the typical inter-embedding distance used as the L2 stop
    /// threshold.
    pub const L2_FRACTION: f64 = 0.05;

    /// Default config with the L2 threshold set from a measured typical
    /// inter-embedding distance.
    pub fn calibrated(typical_distance: f64) -> Self {
        Self { l2_threshold: Self::L2_FRACTION * typical_distance, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidInput("max_steps must be at least 1".into()));
        }
        if !(self.cos_threshold <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "cos_threshold must be <= 1, got {}",
                self.cos_threshold
            )));
        }
        if self.l2_threshold.is_nan() || self.l2_threshold < 0.0 {
            return Err(Error::InvalidInput("l2_threshold must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub loss: f64,
    pub cosine: f64,
    pub l2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentStatus {
    Converged,
    MaxStepsReached,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentTrace {
    /// One record per gradient evaluation, before the update of that step.
    pub records: Vec<StepRecord>,
    /// State of the returned (storage-precision) image.
    pub final_record: StepRecord,
    pub status: AlignmentStatus,
    /// Number of gradient updates applied.
    pub steps_taken: usize,
}

impl AlignmentTrace {
    pub fn summary(&self) -> TraceSummary {
        TraceSummary {
            status: self.status,
            steps_taken: self.steps_taken,
            initial_loss: self.records.first().map_or(self.final_record.loss, |r| r.loss),
            final_loss: self.final_record.loss,
            final_cosine: self.final_record.cosine,
            final_l2: self.final_record.l2,
        }
    }

    /// Fraction of consecutive record pairs whose loss did not increase.
    pub fn monotone_fraction(&self) -> f64 {
        let pairs = self.records.windows(2).count();
        if pairs == 0 {
            return 1.0;
        }
        let ok = self.records.windows(2).filter(|w| w[1].loss <= w[0].loss).count();
        ok as f64 / pairs as f64
    }
}

/// Compact trace description carried in reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub status: AlignmentStatus,
    pub steps_taken: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub final_cosine: f64,
    pub final_l2: f64,
}

/// What a stop predicate sees at each step.
#[derive(Debug, Clone, Copy)]
pub struct StepView<'a> {
    pub step: usize,
    pub embedding: &'a EmbeddingVec,
    pub loss: f64,
    pub cosine: f64,
    pub l2: f64,
}

#[derive(Debug, Clone)]
pub struct Alignment {
    pub image: ImageTensor,
    pub trace: AlignmentTrace,
}

/// `½‖f(x) − target‖²`.
pub fn alignment_loss<E: Encoder + ?Sized>(
    enc: &E,
    x: &ImageTensor,
    target: &EmbeddingVec,
) -> Result<f64> {
    let emb = enc.encode_image(x)?;
    check_dims(&emb, target)?;
    Ok(half_sq_dist(&emb, target))
}

/// Analytic `∂L/∂x = J(x)ᵀ (f(x) − target)`, image-shaped.
pub fn alignment_gradient<E: Encoder + ?Sized>(
    enc: &E,
    x: &ImageTensor,
    target: &EmbeddingVec,
) -> Result<Vec<f64>> {
    if x.shape() != enc.input_shape() {
        return Err(Error::DimensionMismatch { expected: enc.input_shape().len(), actual: x.len() });
    }
    Ok(enc.forward_with_gradient(&x.to_f64(), target)?.1)
}

/// Align until both the L2 and cosine thresholds of `cfg` are met, or
/// `cfg.max_steps` updates have been applied.
pub fn align_to_embedding<E: Encoder + ?Sized>(
    enc: &E,
    x0: &ImageTensor,
    target: &EmbeddingVec,
    cfg: &AlignmentConfig,
) -> Result<Alignment> {
    let (l2_max, cos_min) = (cfg.l2_threshold, cfg.cos_threshold);
    align_until(enc, x0, target, cfg, |v| v.l2 <= l2_max && v.cosine >= cos_min)
}

/// Gradient descent toward `target` with a caller-supplied stop predicate.
///
/// The predicate is checked before every update and once more on the final
/// image. If it holds at step 0 the input is returned unchanged, bit for bit.
pub fn align_until<E, F>(
    enc: &E,
    x0: &ImageTensor,
    target: &EmbeddingVec,
    cfg: &AlignmentConfig,
    mut stop: F,
) -> Result<Alignment>
where
    E: Encoder + ?Sized,
    F: FnMut(&StepView<'_>) -> bool,
{
    cfg.validate()?;
    if x0.shape() != enc.input_shape() {
        return Err(Error::DimensionMismatch {
            expected: enc.input_shape().len(),
            actual: x0.len(),
        });
    }
    if target.dim() != enc.output_dim() {
        return Err(Error::DimensionMismatch { expected: enc.output_dim(), actual: target.dim() });
    }

    let mut x = x0.to_f64();
    let mut records = Vec::with_capacity(cfg.max_steps.min(4096));
    for step in 0..cfg.max_steps {
        let (emb, grad) = enc.forward_with_gradient(&x, target)?;
        let record = measure(step, &emb, target);
        records.push(record);
        if !record.loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(diverged(step, records));
        }
        if stop(&view(&record, &emb)) {
            if step == 0 {
                let trace = AlignmentTrace {
                    records,
                    final_record: record,
                    status: AlignmentStatus::Converged,
                    steps_taken: 0,
                };
                return Ok(Alignment { image: x0.clone(), trace });
            }
            return finish(enc, &x, x0, target, records, step, AlignmentStatus::Converged);
        }
        for (xi, gi) in x.iter_mut().zip(&grad) {
            *xi -= cfg.learning_rate * gi;
            if cfg.clamp_pixels {
                *xi = xi.clamp(0.0, 1.0);
            }
        }
    }

    // One last check on the image produced by the final update.
    let emb = enc.forward(&x)?;
    let record = measure(cfg.max_steps, &emb, target);
    if !record.loss.is_finite() {
        return Err(diverged(cfg.max_steps, records));
    }
    let status = if stop(&view(&record, &emb)) {
        AlignmentStatus::Converged
    } else {
        AlignmentStatus::MaxStepsReached
    };
    finish(enc, &x, x0, target, records, cfg.max_steps, status)
}

fn finish<E: Encoder + ?Sized>(
    enc: &E,
    x: &[f64],
    x0: &ImageTensor,
    target: &EmbeddingVec,
    records: Vec<StepRecord>,
    steps_taken: usize,
    status: AlignmentStatus,
) -> Result<Alignment> {
    let image = ImageTensor::from_f64_clamped(x0.shape(), x)?;
    let emb = enc.encode_image(&image)?;
    let final_record = measure(steps_taken, &emb, target);
    Ok(Alignment { image, trace: AlignmentTrace { records, final_record, status, steps_taken } })
}

fn diverged(step: usize, records: Vec<StepRecord>) -> Error {
    let final_record = *records.last().expect("at least one record before divergence");
    Error::Diverged {
        step,
        trace: Box::new(AlignmentTrace {
            records,
            final_record,
            status: AlignmentStatus::MaxStepsReached,
            steps_taken: step,
        }),
    }
}

fn view<'a>(r: &StepRecord, emb: &'a EmbeddingVec) -> StepView<'a> {
    StepView { step: r.step, embedding: emb, loss: r.loss, cosine: r.cosine, l2: r.l2 }
}

fn measure(step: usize, emb: &EmbeddingVec, target: &EmbeddingVec) -> StepRecord {
    let loss = half_sq_dist(emb, target);
    let cosine = super::cosine_similarity(emb, target).unwrap_or(0.0);
    StepRecord { step, loss, cosine, l2: (2.0 * loss).sqrt() }
}

fn half_sq_dist(a: &EmbeddingVec, b: &EmbeddingVec) -> f64 {
    0.5 * a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
}
