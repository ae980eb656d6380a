//! Exhaustive maximum-likelihood detection over the full frame codebook.

use crate::channel::EffectiveChannel;
use crate::im::enumerate_codebook;
use crate::transform::DafVector;
use crate::types::{AfdmParams, ImConfig};
use crate::Result;

use super::DetectionResult;

/// Joint ML decision: `argmin_x ||y - H_eff x||^2` over all codebook
/// frames, lowest codebook index on ties.
pub fn ml_detect(
    y: &DafVector,
    eff: &EffectiveChannel,
    im: &ImConfig,
    params: &AfdmParams,
) -> Result<DetectionResult> {
    let book = enumerate_codebook(im, params)?;
    let mut best = 0usize;
    let mut best_metric = f64::INFINITY;
    for (i, frame) in book.iter().enumerate() {
        let metric = (&y.values - &eff.h_eff * &frame.x.values).norm_squared();
        if metric < best_metric {
            best_metric = metric;
            best = i;
        }
    }
    let frame = book.into_iter().nth(best).unwrap();
    Ok(DetectionResult {
        x_hat: frame.x,
        patterns: frame.patterns,
        symbols: frame.symbols,
        bits: frame.bits,
        iterations_used: 0,
        flops: 0.0,
    })
}
