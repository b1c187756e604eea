use log::warn;

use crate::error::{Error, Result};

/// `½(1 − ⟨f, f̂⟩ / (‖f restricted to supp f̂‖ ‖f̂‖))`: 0 for perfect
/// alignment, 1 for opposite flows. If `f` vanishes on the support of `f̂`
/// the loss is 0.5.
pub fn cosine_loss(f: &[f64], fhat: &[f64]) -> Result<f64> {
    if f.len() != fhat.len() {
        return Err(Error::ShapeMismatch {
            expected: fhat.len().to_string(),
            actual: f.len().to_string(),
        });
    }
    let mut dot = 0.0;
    let mut restricted = 0.0;
    let mut target = 0.0;
    for (&a, &b) in f.iter().zip(fhat) {
        if b != 0.0 {
            dot += a * b;
            restricted += a * a;
            target += b * b;
        }
    }
    if target == 0.0 {
        return Err(Error::param("cosine loss against an all-zero target flow"));
    }
    if restricted == 0.0 {
        warn!("flow vanishes on the support of the target; cosine loss set to 0.5");
        return Ok(0.5);
    }
    let cos = (dot / (restricted.sqrt() * target.sqrt())).clamp(-1.0, 1.0);
    Ok(0.5 * (1.0 - cos))
}
