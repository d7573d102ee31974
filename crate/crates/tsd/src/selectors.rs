//! Frame-selection baselines expressed as transformation matrices, so that
//! random sampling, uniform sampling and temporal attention all run through
//! the same Y = XP pipeline as the learned block.

use crate::scalar::Scalar;
use crate::tsd::TransformMatrix;
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectorKind {
    Random,
    Uniform,
    Attention,
    Tsd,
}

/// Stride used by uniform sampling.
pub fn uniform_stride(t: usize, t_s: usize) -> usize {
    t / t_s
}

/// One-hot columns at `offset + j * floor(T/T_s)`.
pub fn uniform_p<S: Scalar>(t: usize, t_s: usize, offset: usize) -> Result<TransformMatrix<S>> {
    check_lengths(t, t_s)?;
    let stride = uniform_stride(t, t_s);
    let max_offset = t - 1 - (t_s - 1) * stride;
    if offset > max_offset {
        return Err(Error::Argument(format!(
            "offset {} out of range 0..={} for T={}, T_s={}",
            offset, max_offset, t, t_s
        )));
    }
    let rows: Vec<usize> = (0..t_s).map(|j| offset + j * stride).collect();
    TransformMatrix::one_hot(t, &rows)
}

/// One-hot columns at a uniformly random size-T_s subset, sorted ascending.
pub fn random_p<S: Scalar>(t: usize, t_s: usize, seed: u64) -> Result<TransformMatrix<S>> {
    check_lengths(t, t_s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all: Vec<usize> = (0..t).collect();
    all.shuffle(&mut rng);
    let mut rows: Vec<usize> = all[..t_s].to_vec();
    rows.sort_unstable();
    TransformMatrix::one_hot(t, &rows)
}

/// One-hot columns at consecutive indices `offset..offset+T_s` (the plain
/// recognizer's "consecutive frames" evaluation).
pub fn consecutive_p<S: Scalar>(t: usize, t_s: usize, offset: usize) -> Result<TransformMatrix<S>> {
    check_lengths(t, t_s)?;
    if offset + t_s > t {
        return Err(Error::Argument(format!(
            "window {}..{} exceeds clip length {}",
            offset,
            offset + t_s,
            t
        )));
    }
    let rows: Vec<usize> = (offset..offset + t_s).collect();
    TransformMatrix::one_hot(t, &rows)
}

/// Training-time attention: diagonal matrix scaling frame i by w_i * T, so
/// every frame reaches the main network with its importance applied. The
/// scale factor T keeps the mean frame magnitude unchanged.
pub fn attention_p_train<S: Scalar>(weights: &[S]) -> Result<TransformMatrix<S>> {
    validate_attention_weights(weights)?;
    let t = weights.len();
    let mut m = crate::tensor::Tensor::zeros(&[t, t]);
    let scale = S::from_usize(t);
    for (i, &w) in weights.iter().enumerate() {
        m.set(&[i, i], w * scale);
    }
    TransformMatrix::new(m)
}

/// Test-time attention: one-hot columns at the T_s largest weights, ordered
/// ascending by frame index; ties go to the smaller index.
pub fn attention_p_test<S: Scalar>(weights: &[S], t_s: usize) -> Result<TransformMatrix<S>> {
    validate_attention_weights(weights)?;
    let t = weights.len();
    check_lengths(t, t_s)?;
    let mut order: Vec<usize> = (0..t).collect();
    // stable descending sort by weight keeps the smaller index first on ties
    order.sort_by(|&a, &b| weights[b].partial_cmp(&weights[a]).unwrap());
    let mut rows: Vec<usize> = order[..t_s].to_vec();
    rows.sort_unstable();
    TransformMatrix::one_hot(t, &rows)
}

fn check_lengths(t: usize, t_s: usize) -> Result<()> {
    if t_s == 0 || t_s > t {
        return Err(Error::Argument(format!(
            "need 1 <= T_s <= T, got T={}, T_s={}",
            t, t_s
        )));
    }
    Ok(())
}

fn validate_attention_weights<S: Scalar>(weights: &[S]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::Argument("empty attention weights".into()));
    }
    if weights.iter().any(|&w| w < S::zero()) {
        return Err(Error::Argument("negative attention weight".into()));
    }
    let sum: S = weights.iter().copied().sum();
    if (sum - S::one()).abs().to_f64() > 1e-6 {
        return Err(Error::Argument(format!(
            "attention weights must sum to 1, got {}",
            sum
        )));
    }
    Ok(())
}
