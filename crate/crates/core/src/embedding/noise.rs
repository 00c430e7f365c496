use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::Encoder;
use crate::error::{Error, Result};
use crate::seed;
use crate::tensor::ImageTensor;

/// Mean over `trials` of `‖f(x) − f(clamp(x + ε))‖₂` with `ε ~ N(0, σ²)` per
/// pixel. Trial `k` draws from its own stream derived from `(seed, k)`, so the
/// result does not depend on how trials are scheduled.
pub fn noise_response<E: Encoder + ?Sized>(
    enc: &E,
    x: &ImageTensor,
    sigma: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
    }
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    let base = x.to_f64();
    let clean = enc.forward(&base)?;
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;

    let diffs = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = seed::rng(seed::derive(seed, &[k as u64]));
            let noisy: Vec<f64> =
                base.iter().map(|p| (p + normal.sample(&mut rng)).clamp(0.0, 1.0)).collect();
            enc.forward(&noisy)?.distance(&clean)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(diffs.iter().sum::<f64>() / trials as f64)
}
