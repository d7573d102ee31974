//! The temporal sequence distillation block.
//!
//! Two paths run over the coarse feature map `f` (T×H×W×C): one is convolved,
//! transposed to put time last and reduced T→T_s by a 1×1×1 convolution over
//! the temporal "channels" (producing O), the other is convolved in place
//! (producing G). Flattening each to matrices and multiplying gives T×T_s
//! logits; a column-wise softmax turns them into the transformation matrix P.
//! Distillation is then the linear combination Y = XP over raw frames.

use crate::scalar::Scalar;
use crate::tape::{NodeId, Tape};
use crate::tensor::{Padding, Tensor};
use crate::{Error, Result};
use rand::Rng;

/// T×T_s matrix; entry (i, j) is the weight of input frame i in distilled
/// frame j. Columns produced by the block are stochastic (non-negative,
/// summing to 1).
#[derive(Debug, Clone, PartialEq)]
pub struct TransformMatrix<S: Scalar> {
    values: Tensor<S>,
}

impl<S: Scalar> TransformMatrix<S> {
    pub fn new(values: Tensor<S>) -> Result<Self> {
        if values.rank() != 2 {
            return Err(Error::Dimension(format!(
                "transform matrix must be rank 2, got {:?}",
                values.shape()
            )));
        }
        Ok(TransformMatrix { values })
    }

    pub fn t(&self) -> usize {
        self.values.shape()[0]
    }

    pub fn t_s(&self) -> usize {
        self.values.shape()[1]
    }

    pub fn values(&self) -> &Tensor<S> {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> S {
        self.values.at(&[i, j])
    }

    pub fn column_sums(&self) -> Vec<S> {
        let (t, ts) = (self.t(), self.t_s());
        (0..ts)
            .map(|j| (0..t).map(|i| self.at(i, j)).sum())
            .collect()
    }

    /// Matrix with one-hot columns at the given (strictly increasing) rows.
    pub fn one_hot(t: usize, rows: &[usize]) -> Result<Self> {
        if rows.iter().any(|&r| r >= t) {
            return Err(Error::Argument(format!(
                "one-hot row out of range: {:?} for T={}",
                rows, t
            )));
        }
        let mut m = Tensor::zeros(&[t, rows.len()]);
        for (j, &i) in rows.iter().enumerate() {
            m.set(&[i, j], S::one());
        }
        TransformMatrix::new(m)
    }
}

/// The three convolution kernels of the block.
///
/// `w_alpha`: 3×3×3, C→C, applied to f before the transpose.
/// `w_beta`: 1×1×1 over the transposed layout, treating time as channels,
/// mapping T→T_s.
/// `w_gamma`: 3×3×3, C→C, the feature-embedding path.
#[derive(Debug, Clone, PartialEq)]
pub struct TsdWeights<S: Scalar> {
    pub w_alpha: Tensor<S>,
    pub w_beta: Tensor<S>,
    pub w_gamma: Tensor<S>,
}

impl<S: Scalar> TsdWeights<S> {
    /// Gaussian init with standard deviation `std`.
    pub fn init<R: Rng>(channels: usize, t: usize, t_s: usize, std: S, rng: &mut R) -> Self {
        TsdWeights {
            w_alpha: Tensor::randn(&[3, 3, 3, channels, channels], std, rng),
            w_beta: Tensor::randn(&[1, 1, 1, t, t_s], std, rng),
            w_gamma: Tensor::randn(&[3, 3, 3, channels, channels], std, rng),
        }
    }

    pub fn t_s(&self) -> usize {
        self.w_beta.shape()[4]
    }

    pub fn t(&self) -> usize {
        self.w_beta.shape()[3]
    }
}

/// Tape-recorded transform computation; returns the node holding P (T×T_s).
pub fn compute_transform_on<S: Scalar>(
    tape: &mut Tape<S>,
    f: NodeId,
    w_alpha: NodeId,
    w_beta: NodeId,
    w_gamma: NodeId,
) -> Result<NodeId> {
    let fs = tape.value(f).shape().to_vec();
    if fs.len() != 4 {
        return Err(Error::Dimension(format!(
            "feature map must be T×H×W×C, got {:?}",
            fs
        )));
    }
    let (t, h, w) = (fs[0], fs[1], fs[2]);
    let t_s = tape.value(w_beta).shape()[4];
    if t_s > t {
        return Err(Error::Argument(format!(
            "distilled length T_s={} exceeds clip length T={}",
            t_s, t
        )));
    }
    if !tape.value(f).all_finite() {
        return Err(Error::Numeric("feature map contains non-finite values".into()));
    }

    let a = tape.conv3d(f, w_alpha, [1, 1, 1], Padding::Same)?;
    let c_emb = tape.value(a).shape()[3];
    let transposed = tape.permute(a, &[1, 2, 3, 0])?; // H×W×C'×T
    let o = tape.conv3d(transposed, w_beta, [1, 1, 1], Padding::Same)?; // H×W×C'×T_s
    let g = tape.conv3d(f, w_gamma, [1, 1, 1], Padding::Same)?; // T×H×W×C'

    let o_mat = tape.reshape(o, &[h * w * c_emb, t_s])?;
    let g_mat = tape.reshape(g, &[t, h * w * c_emb])?;
    let logits = tape.matmul(g_mat, o_mat)?; // T×T_s
    tape.softmax_cols(logits)
}

/// Convenience non-training entry point.
pub fn compute_transform<S: Scalar>(
    f: &Tensor<S>,
    weights: &TsdWeights<S>,
) -> Result<TransformMatrix<S>> {
    let mut tape = Tape::new();
    let fid = tape.leaf(f.clone());
    let wa = tape.leaf(weights.w_alpha.clone());
    let wb = tape.leaf(weights.w_beta.clone());
    let wg = tape.leaf(weights.w_gamma.clone());
    let p = compute_transform_on(&mut tape, fid, wa, wb, wg)?;
    TransformMatrix::new(tape.value(p).clone())
}

/// Tape-recorded distillation Y = XP; x is T×H×W×C, p is T×T_s.
pub fn distill_on<S: Scalar>(tape: &mut Tape<S>, x: NodeId, p: NodeId) -> Result<NodeId> {
    let xs = tape.value(x).shape().to_vec();
    let ps = tape.value(p).shape().to_vec();
    if xs.len() != 4 || ps.len() != 2 || ps[0] != xs[0] {
        return Err(Error::Dimension(format!(
            "distill wants clip T×H×W×C and matrix T×T_s, got {:?} and {:?}",
            xs, ps
        )));
    }
    let (t, h, w, c) = (xs[0], xs[1], xs[2], xs[3]);
    let x_mat = tape.reshape(x, &[t, h * w * c])?;
    let p_t = tape.permute(p, &[1, 0])?;
    let y_mat = tape.matmul(p_t, x_mat)?;
    tape.reshape(y_mat, &[ps[1], h, w, c])
}

/// Distilled frame j = sum_i P_ij * frame_i.
pub fn distill<S: Scalar>(x: &Tensor<S>, p: &TransformMatrix<S>) -> Result<Tensor<S>> {
    if x.rank() != 4 || p.t() != x.shape()[0] {
        return Err(Error::Dimension(format!(
            "distill wants clip T×H×W×C with T={} rows in P, got clip {:?}",
            p.t(),
            x.shape()
        )));
    }
    let (t, h, w, c) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let frame = h * w * c;
    let mut out = Tensor::zeros(&[p.t_s(), h, w, c]);
    for j in 0..p.t_s() {
        for i in 0..t {
            let pij = p.at(i, j);
            if pij == S::zero() {
                continue;
            }
            let src = &x.data()[i * frame..(i + 1) * frame];
            let dst = &mut out.data_mut()[j * frame..(j + 1) * frame];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += pij * s;
            }
        }
    }
    let _ = t;
    Ok(out)
}
