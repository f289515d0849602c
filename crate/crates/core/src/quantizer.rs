//! Deterministic rounding quantizer onto the lattice `{t·Δ : t ∈ ℤ}`.
//!
//! A scalar `y` maps to `t·Δ` for the unique `t` with
//! `(t − ½)Δ ≤ y < (t + ½)Δ`; the half-open interval rounds boundary values
//! up, so `Q(-1.5) = -1` at Δ = 1. `Δ = 0` is the identity (no quantization),
//! which lets the same engine run the exact recursion.

use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerConfig {
    delta: f64,
}

impl QuantizerConfig {
    pub fn new(delta: f64) -> Result<Self> {
        if !delta.is_finite() || delta < 0.0 {
            return Err(invalid("quantization resolution must be finite and >= 0"));
        }
        Ok(Self { delta })
    }

    /// Identity quantizer (Δ = 0).
    pub fn identity() -> Self {
        Self { delta: 0.0 }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn is_identity(&self) -> bool {
        self.delta == 0.0
    }
}

/// Nearest lattice point, boundary rounding toward +∞.
pub fn quantize_scalar(y: f64, q: &QuantizerConfig) -> Result<f64> {
    if !y.is_finite() {
        return Err(invalid("cannot quantize a non-finite value"));
    }
    if q.delta == 0.0 {
        return Ok(y);
    }
    let t = (y / q.delta + 0.5).floor();
    Ok(t * q.delta)
}

/// Entrywise quantization; returns `(w_q, e)` with `e = w_q − w`.
/// The error satisfies `‖e‖₂ ≤ ½ Δ √L` for a length-L vector.
pub fn quantize_vector(w: &[f64], q: &QuantizerConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut w_q = Vec::with_capacity(w.len());
    for &y in w {
        w_q.push(quantize_scalar(y, q)?);
    }
    let e = w_q.iter().zip(w).map(|(a, b)| a - b).collect();
    Ok((w_q, e))
}
