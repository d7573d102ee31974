//! Dense row-major tensors and the raw numeric kernels behind the tape ops.
//!
//! Everything here is a pure function of its inputs; gradients live in
//! [`crate::tape`], which calls back into the `*_grads` kernels.

use crate::scalar::Scalar;
use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Zero padding mode for the convolution kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// No padding; kernel must fit inside the input.
    Valid,
    /// Output extent = ceil(input/stride); symmetric zero padding with the
    /// extra cell on the trailing side for even kernels.
    Same,
}

/// Dense N-dimensional array, row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<S: Scalar> {
    shape: Vec<usize>,
    data: Vec<S>,
}

impl<S: Scalar> Tensor<S> {
    pub fn zeros(shape: &[usize]) -> Self {
        Self::filled(shape, S::zero())
    }

    pub fn filled(shape: &[usize], v: S) -> Self {
        let n: usize = shape.iter().product();
        Tensor { shape: shape.to_vec(), data: vec![v; n] }
    }

    pub fn scalar(v: S) -> Self {
        Tensor { shape: vec![], data: vec![v] }
    }

    pub fn from_vec(shape: &[usize], data: Vec<S>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Dimension(format!(
                "shape {:?} wants {} elements, got {}",
                shape,
                n,
                data.len()
            )));
        }
        Ok(Tensor { shape: shape.to_vec(), data })
    }

    /// Gaussian init, mean 0.
    pub fn randn<R: Rng>(shape: &[usize], std: S, rng: &mut R) -> Self {
        let normal = Normal::new(0.0f64, 1.0).unwrap();
        let n: usize = shape.iter().product();
        let data = (0..n)
            .map(|_| S::from_f64(normal.sample(rng)) * std)
            .collect();
        Tensor { shape: shape.to_vec(), data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1 && self.shape.is_empty()
    }

    pub fn scalar_value(&self) -> S {
        debug_assert_eq!(self.data.len(), 1);
        self.data[0]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Row-major strides.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.shape.len()];
        for i in (0..self.shape.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.shape[i + 1];
        }
        s
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        let mut off = 0;
        let strides = self.strides();
        for (i, &ix) in idx.iter().enumerate() {
            debug_assert!(ix < self.shape[i]);
            off += ix * strides[i];
        }
        off
    }

    pub fn at(&self, idx: &[usize]) -> S {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: S) {
        let off = self.offset(idx);
        self.data[off] = v;
    }

    /// Same data, new shape; element count must match.
    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.data.len() {
            return Err(Error::Dimension(format!(
                "cannot reshape {:?} ({} elems) to {:?} ({} elems)",
                self.shape,
                self.data.len(),
                shape,
                n
            )));
        }
        Ok(Tensor { shape: shape.to_vec(), data: self.data.clone() })
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Tensor { shape: self.shape.clone(), data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip(&self, other: &Self, f: impl Fn(S, S) -> S) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::Dimension(format!(
                "elementwise shapes differ: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Tensor { shape: self.shape.clone(), data })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a * b)
    }

    pub fn scale(&self, k: S) -> Self {
        self.map(|v| v * k)
    }

    pub fn relu(&self) -> Self {
        self.map(|v| if v > S::zero() { v } else { S::zero() })
    }
}

/// out[i,j] = sum_k a[i,k] * b[k,j]
pub fn matmul<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> Result<Tensor<S>> {
    if a.rank() != 2 || b.rank() != 2 {
        return Err(Error::Dimension(format!(
            "matmul needs matrices, got ranks {} and {}",
            a.rank(),
            b.rank()
        )));
    }
    let (m, k) = (a.shape()[0], a.shape()[1]);
    let (k2, n) = (b.shape()[0], b.shape()[1]);
    if k != k2 {
        return Err(Error::Dimension(format!(
            "matmul inner extents differ: {:?} x {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let mut out = Tensor::zeros(&[m, n]);
    let (ad, bd) = (a.data(), b.data());
    let od = out.data_mut();
    for i in 0..m {
        let orow = &mut od[i * n..(i + 1) * n];
        for kk in 0..k {
            let av = ad[i * k + kk];
            let brow = &bd[kk * n..(kk + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    Ok(out)
}

pub fn transpose2<S: Scalar>(a: &Tensor<S>) -> Result<Tensor<S>> {
    permute(a, &[1, 0])
}

pub fn permute<S: Scalar>(t: &Tensor<S>, axes: &[usize]) -> Result<Tensor<S>> {
    let r = t.rank();
    let mut seen = vec![false; r];
    if axes.len() != r || axes.iter().any(|&a| a >= r || std::mem::replace(&mut seen[a], true)) {
        return Err(Error::Argument(format!(
            "axes {:?} is not a permutation of 0..{}",
            axes, r
        )));
    }
    let out_shape: Vec<usize> = axes.iter().map(|&a| t.shape()[a]).collect();
    let mut out = Tensor::zeros(&out_shape);
    let in_strides = t.strides();
    let out_strides = out.strides();
    let od = out.data_mut();
    // walk the input linearly, scatter to the permuted offset
    let mut idx = vec![0usize; r];
    for (lin, &v) in t.data().iter().enumerate() {
        let mut ooff = 0;
        for (oax, &iax) in axes.iter().enumerate() {
            ooff += idx[iax] * out_strides[oax];
        }
        od[ooff] = v;
        // increment multi-index
        if lin + 1 < t.len() {
            for ax in (0..r).rev() {
                idx[ax] += 1;
                if idx[ax] < t.shape()[ax] {
                    break;
                }
                idx[ax] = 0;
            }
        }
    }
    let _ = in_strides;
    Ok(out)
}

/// Inverse of `axes` as a permutation.
pub fn inverse_permutation(axes: &[usize]) -> Vec<usize> {
    let mut inv = vec![0usize; axes.len()];
    for (i, &a) in axes.iter().enumerate() {
        inv[a] = i;
    }
    inv
}

/// Column-wise softmax of a matrix, stabilized by per-column max subtraction.
pub fn softmax_cols<S: Scalar>(m: &Tensor<S>) -> Result<Tensor<S>> {
    if m.rank() != 2 {
        return Err(Error::Dimension(format!(
            "softmax_cols needs a matrix, got rank {}",
            m.rank()
        )));
    }
    let (rows, cols) = (m.shape()[0], m.shape()[1]);
    let mut out = Tensor::zeros(&[rows, cols]);
    let md = m.data();
    let od = out.data_mut();
    for j in 0..cols {
        let mut mx = S::neg_infinity();
        for i in 0..rows {
            mx = mx.max(md[i * cols + j]);
        }
        let mut sum = S::zero();
        for i in 0..rows {
            let e = (md[i * cols + j] - mx).exp();
            od[i * cols + j] = e;
            sum += e;
        }
        for i in 0..rows {
            od[i * cols + j] = od[i * cols + j] / sum;
        }
    }
    Ok(out)
}

/// Mean over one axis; output rank drops by one.
pub fn mean_axis<S: Scalar>(t: &Tensor<S>, axis: usize) -> Result<Tensor<S>> {
    if axis >= t.rank() {
        return Err(Error::Argument(format!(
            "axis {} out of range for rank {}",
            axis,
            t.rank()
        )));
    }
    let extent = t.shape()[axis];
    let out_shape: Vec<usize> = t
        .shape()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != axis)
        .map(|(_, &e)| e)
        .collect();
    let outer: usize = t.shape()[..axis].iter().product();
    let inner: usize = t.shape()[axis + 1..].iter().product();
    let mut out = Tensor::zeros(&out_shape);
    let inv = S::one() / S::from_usize(extent);
    let td = t.data();
    let od = out.data_mut();
    for o in 0..outer {
        for a in 0..extent {
            let base = (o * extent + a) * inner;
            let obase = o * inner;
            for i in 0..inner {
                od[obase + i] += td[base + i];
            }
        }
    }
    for v in od.iter_mut() {
        *v *= inv;
    }
    Ok(out)
}

fn conv_out_extent(input: usize, kernel: usize, stride: usize, padding: Padding) -> Result<(usize, usize)> {
    match padding {
        Padding::Valid => {
            if kernel > input {
                return Err(Error::Dimension(format!(
                    "kernel extent {} exceeds input extent {} (valid padding)",
                    kernel, input
                )));
            }
            Ok(((input - kernel) / stride + 1, 0))
        }
        Padding::Same => {
            let out = input.div_ceil(stride);
            let pad_total = ((out - 1) * stride + kernel).saturating_sub(input);
            // leading pad; trailing side gets the extra cell for even kernels
            Ok((out, pad_total / 2))
        }
    }
}

/// Output shape of `conv3d` without computing it.
pub fn conv3d_out_shape(
    in_shape: &[usize],
    k_shape: &[usize],
    stride: [usize; 3],
    padding: Padding,
) -> Result<[usize; 4]> {
    if in_shape.len() != 4 || k_shape.len() != 5 {
        return Err(Error::Dimension(format!(
            "conv3d wants input rank 4 and kernel rank 5, got {:?} and {:?}",
            in_shape, k_shape
        )));
    }
    if in_shape[3] != k_shape[3] {
        return Err(Error::Dimension(format!(
            "conv3d channel mismatch: input {:?} vs kernel {:?}",
            in_shape, k_shape
        )));
    }
    if stride.iter().any(|&s| s == 0) {
        return Err(Error::Argument("conv3d stride must be positive".into()));
    }
    let (ot, _) = conv_out_extent(in_shape[0], k_shape[0], stride[0], padding)?;
    let (oh, _) = conv_out_extent(in_shape[1], k_shape[1], stride[1], padding)?;
    let (ow, _) = conv_out_extent(in_shape[2], k_shape[2], stride[2], padding)?;
    Ok([ot, oh, ow, k_shape[4]])
}

/// 3D cross-correlation over (T,H,W) with channels last.
/// input: T×H×W×C_in, kernel: K_t×K_h×K_w×C_in×C_out.
pub fn conv3d<S: Scalar>(
    input: &Tensor<S>,
    kernel: &Tensor<S>,
    stride: [usize; 3],
    padding: Padding,
) -> Result<Tensor<S>> {
    let out_shape = conv3d_out_shape(input.shape(), kernel.shape(), stride, padding)?;
    let [it, ih, iw, ci_n] = [input.shape()[0], input.shape()[1], input.shape()[2], input.shape()[3]];
    let [kt, kh, kw, co_n] = [kernel.shape()[0], kernel.shape()[1], kernel.shape()[2], kernel.shape()[4]];
    let (_, pt) = conv_out_extent(it, kt, stride[0], padding)?;
    let (_, ph) = conv_out_extent(ih, kh, stride[1], padding)?;
    let (_, pw) = conv_out_extent(iw, kw, stride[2], padding)?;
    let [ot_n, oh_n, ow_n, _] = out_shape;

    let mut out = Tensor::zeros(&out_shape);
    let id = input.data();
    let kd = kernel.data();
    let od = out.data_mut();
    for ot in 0..ot_n {
        for oh in 0..oh_n {
            for ow in 0..ow_n {
                let obase = ((ot * oh_n + oh) * ow_n + ow) * co_n;
                for dt in 0..kt {
                    let t = (ot * stride[0] + dt) as isize - pt as isize;
                    if t < 0 || t as usize >= it {
                        continue;
                    }
                    for dh in 0..kh {
                        let h = (oh * stride[1] + dh) as isize - ph as isize;
                        if h < 0 || h as usize >= ih {
                            continue;
                        }
                        for dw in 0..kw {
                            let w = (ow * stride[2] + dw) as isize - pw as isize;
                            if w < 0 || w as usize >= iw {
                                continue;
                            }
                            let ibase =
                                (((t as usize) * ih + h as usize) * iw + w as usize) * ci_n;
                            let kbase = ((dt * kh + dh) * kw + dw) * ci_n * co_n;
                            for ci in 0..ci_n {
                                let x = id[ibase + ci];
                                let krow = &kd[kbase + ci * co_n..kbase + (ci + 1) * co_n];
                                let orow = &mut od[obase..obase + co_n];
                                for (o, &k) in orow.iter_mut().zip(krow) {
                                    *o += x * k;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Gradients of `conv3d` w.r.t. input and kernel given the output gradient.
pub fn conv3d_grads<S: Scalar>(
    input: &Tensor<S>,
    kernel: &Tensor<S>,
    stride: [usize; 3],
    padding: Padding,
    gout: &Tensor<S>,
) -> Result<(Tensor<S>, Tensor<S>)> {
    let out_shape = conv3d_out_shape(input.shape(), kernel.shape(), stride, padding)?;
    debug_assert_eq!(gout.shape(), &out_shape);
    let [it, ih, iw, ci_n] = [input.shape()[0], input.shape()[1], input.shape()[2], input.shape()[3]];
    let [kt, kh, kw, co_n] = [kernel.shape()[0], kernel.shape()[1], kernel.shape()[2], kernel.shape()[4]];
    let (_, pt) = conv_out_extent(it, kt, stride[0], padding)?;
    let (_, ph) = conv_out_extent(ih, kh, stride[1], padding)?;
    let (_, pw) = conv_out_extent(iw, kw, stride[2], padding)?;
    let [ot_n, oh_n, ow_n, _] = out_shape;

    let mut gin = Tensor::zeros(input.shape());
    let mut gker = Tensor::zeros(kernel.shape());
    let id = input.data();
    let kd = kernel.data();
    let gd = gout.data();
    let gi = gin.data_mut();
    let gk = gker.data_mut();
    for ot in 0..ot_n {
        for oh in 0..oh_n {
            for ow in 0..ow_n {
                let obase = ((ot * oh_n + oh) * ow_n + ow) * co_n;
                let grow = &gd[obase..obase + co_n];
                for dt in 0..kt {
                    let t = (ot * stride[0] + dt) as isize - pt as isize;
                    if t < 0 || t as usize >= it {
                        continue;
                    }
                    for dh in 0..kh {
                        let h = (oh * stride[1] + dh) as isize - ph as isize;
                        if h < 0 || h as usize >= ih {
                            continue;
                        }
                        for dw in 0..kw {
                            let w = (ow * stride[2] + dw) as isize - pw as isize;
                            if w < 0 || w as usize >= iw {
                                continue;
                            }
                            let ibase =
                                (((t as usize) * ih + h as usize) * iw + w as usize) * ci_n;
                            let kbase = ((dt * kh + dh) * kw + dw) * ci_n * co_n;
                            for ci in 0..ci_n {
                                let x = id[ibase + ci];
                                let krow = &kd[kbase + ci * co_n..kbase + (ci + 1) * co_n];
                                let gkrow = &mut gk[kbase + ci * co_n..kbase + (ci + 1) * co_n];
                                let mut acc = S::zero();
                                for ((&g, &k), gkv) in grow.iter().zip(krow).zip(gkrow.iter_mut()) {
                                    acc += g * k;
                                    *gkv += g * x;
                                }
                                gi[ibase + ci] += acc;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok((gin, gker))
}

/// Depthwise 3D cross-correlation: each channel is convolved with its own
/// kernel slice. input: T×H×W×C, kernel: K_t×K_h×K_w×C.
pub fn depthwise3d<S: Scalar>(
    input: &Tensor<S>,
    kernel: &Tensor<S>,
    stride: [usize; 3],
    padding: Padding,
) -> Result<Tensor<S>> {
    let (out_shape, pads) = depthwise_geometry(input.shape(), kernel.shape(), stride, padding)?;
    let [it, ih, iw, c_n] = [input.shape()[0], input.shape()[1], input.shape()[2], input.shape()[3]];
    let [kt, kh, kw] = [kernel.shape()[0], kernel.shape()[1], kernel.shape()[2]];
    let [ot_n, oh_n, ow_n, _] = out_shape;
    let [pt, ph, pw] = pads;

    let mut out = Tensor::zeros(&out_shape);
    let id = input.data();
    let kd = kernel.data();
    let od = out.data_mut();
    for ot in 0..ot_n {
        for oh in 0..oh_n {
            for ow in 0..ow_n {
                let obase = ((ot * oh_n + oh) * ow_n + ow) * c_n;
                for dt in 0..kt {
                    let t = (ot * stride[0] + dt) as isize - pt as isize;
                    if t < 0 || t as usize >= it {
                        continue;
                    }
                    for dh in 0..kh {
                        let h = (oh * stride[1] + dh) as isize - ph as isize;
                        if h < 0 || h as usize >= ih {
                            continue;
                        }
                        for dw in 0..kw {
                            let w = (ow * stride[2] + dw) as isize - pw as isize;
                            if w < 0 || w as usize >= iw {
                                continue;
                            }
                            let ibase =
                                (((t as usize) * ih + h as usize) * iw + w as usize) * c_n;
                            let kbase = ((dt * kh + dh) * kw + dw) * c_n;
                            for c in 0..c_n {
                                od[obase + c] += id[ibase + c] * kd[kbase + c];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

pub fn depthwise3d_grads<S: Scalar>(
    input: &Tensor<S>,
    kernel: &Tensor<S>,
    stride: [usize; 3],
    padding: Padding,
    gout: &Tensor<S>,
) -> Result<(Tensor<S>, Tensor<S>)> {
    let (out_shape, pads) = depthwise_geometry(input.shape(), kernel.shape(), stride, padding)?;
    debug_assert_eq!(gout.shape(), &out_shape);
    let [it, ih, iw, c_n] = [input.shape()[0], input.shape()[1], input.shape()[2], input.shape()[3]];
    let [kt, kh, kw] = [kernel.shape()[0], kernel.shape()[1], kernel.shape()[2]];
    let [ot_n, oh_n, ow_n, _] = out_shape;
    let [pt, ph, pw] = pads;

    let mut gin = Tensor::zeros(input.shape());
    let mut gker = Tensor::zeros(kernel.shape());
    let id = input.data();
    let kd = kernel.data();
    let gd = gout.data();
    let gi = gin.data_mut();
    let gk = gker.data_mut();
    for ot in 0..ot_n {
        for oh in 0..oh_n {
            for ow in 0..ow_n {
                let obase = ((ot * oh_n + oh) * ow_n + ow) * c_n;
                for dt in 0..kt {
                    let t = (ot * stride[0] + dt) as isize - pt as isize;
                    if t < 0 || t as usize >= it {
                        continue;
                    }
                    for dh in 0..kh {
                        let h = (oh * stride[1] + dh) as isize - ph as isize;
                        if h < 0 || h as usize >= ih {
                            continue;
                        }
                        for dw in 0..kw {
                            let w = (ow * stride[2] + dw) as isize - pw as isize;
                            if w < 0 || w as usize >= iw {
                                continue;
                            }
                            let ibase =
                                (((t as usize) * ih + h as usize) * iw + w as usize) * c_n;
                            let kbase = ((dt * kh + dh) * kw + dw) * c_n;
                            for c in 0..c_n {
                                let gv = gd[obase + c];
                                gi[ibase + c] += gv * kd[kbase + c];
                                gk[kbase + c] += gv * id[ibase + c];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok((gin, gker))
}

fn depthwise_geometry(
    in_shape: &[usize],
    k_shape: &[usize],
    stride: [usize; 3],
    padding: Padding,
) -> Result<([usize; 4], [usize; 3])> {
    if in_shape.len() != 4 || k_shape.len() != 4 {
        return Err(Error::Dimension(format!(
            "depthwise3d wants input and kernel rank 4, got {:?} and {:?}",
            in_shape, k_shape
        )));
    }
    if in_shape[3] != k_shape[3] {
        return Err(Error::Dimension(format!(
            "depthwise3d channel mismatch: input {:?} vs kernel {:?}",
            in_shape, k_shape
        )));
    }
    if stride.iter().any(|&s| s == 0) {
        return Err(Error::Argument("depthwise3d stride must be positive".into()));
    }
    let (ot, pt) = conv_out_extent(in_shape[0], k_shape[0], stride[0], padding)?;
    let (oh, ph) = conv_out_extent(in_shape[1], k_shape[1], stride[1], padding)?;
    let (ow, pw) = conv_out_extent(in_shape[2], k_shape[2], stride[2], padding)?;
    Ok(([ot, oh, ow, in_shape[3]], [pt, ph, pw]))
}

/// Factor-2 spatial average pooling of a T×H×W×C clip (H, W even).
pub fn avgpool2_spatial<S: Scalar>(input: &Tensor<S>) -> Result<Tensor<S>> {
    if input.rank() != 4 {
        return Err(Error::Dimension(format!(
            "avgpool2 wants rank 4, got {:?}",
            input.shape()
        )));
    }
    let [t_n, h, w, c] = [input.shape()[0], input.shape()[1], input.shape()[2], input.shape()[3]];
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::Dimension(format!(
            "avgpool2 wants even spatial extents, got {}x{}",
            h, w
        )));
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Tensor::zeros(&[t_n, oh, ow, c]);
    let id = input.data();
    let od = out.data_mut();
    let quarter = S::from_f64(0.25);
    for t in 0..t_n {
        for y in 0..oh {
            for x in 0..ow {
                for ch in 0..c {
                    let mut acc = S::zero();
                    for dy in 0..2 {
                        for dx in 0..2 {
                            acc += id[(((t * h) + 2 * y + dy) * w + 2 * x + dx) * c + ch];
                        }
                    }
                    od[((t * oh + y) * ow + x) * c + ch] = acc * quarter;
                }
            }
        }
    }
    Ok(out)
}

pub fn avgpool2_spatial_grad<S: Scalar>(in_shape: &[usize], gout: &Tensor<S>) -> Tensor<S> {
    let [t_n, h, w, c] = [in_shape[0], in_shape[1], in_shape[2], in_shape[3]];
    let (oh, ow) = (h / 2, w / 2);
    let mut gin = Tensor::zeros(in_shape);
    let gd = gout.data();
    let gi = gin.data_mut();
    let quarter = S::from_f64(0.25);
    for t in 0..t_n {
        for y in 0..oh {
            for x in 0..ow {
                for ch in 0..c {
                    let g = gd[((t * oh + y) * ow + x) * c + ch] * quarter;
                    for dy in 0..2 {
                        for dx in 0..2 {
                            gi[(((t * h) + 2 * y + dy) * w + 2 * x + dx) * c + ch] += g;
                        }
                    }
                }
            }
        }
    }
    gin
}

/// Scale frame t of a T×H×W×C clip by w[t].
pub fn frame_scale<S: Scalar>(x: &Tensor<S>, w: &Tensor<S>) -> Result<Tensor<S>> {
    if x.rank() != 4 || w.rank() != 1 || w.shape()[0] != x.shape()[0] {
        return Err(Error::Dimension(format!(
            "frame_scale wants clip T×H×W×C and weights of length T, got {:?} and {:?}",
            x.shape(),
            w.shape()
        )));
    }
    let frame = x.len() / x.shape()[0];
    let mut out = x.clone();
    for (t, &wv) in w.data().iter().enumerate() {
        for v in &mut out.data_mut()[t * frame..(t + 1) * frame] {
            *v *= wv;
        }
    }
    Ok(out)
}

/// Add bias[c] to every (t,h,w) site of a T×H×W×C clip.
pub fn bias_add<S: Scalar>(x: &Tensor<S>, b: &Tensor<S>) -> Result<Tensor<S>> {
    if x.rank() != 4 || b.rank() != 1 || b.shape()[0] != x.shape()[3] {
        return Err(Error::Dimension(format!(
            "bias_add wants clip T×H×W×C and bias of length C, got {:?} and {:?}",
            x.shape(),
            b.shape()
        )));
    }
    let c = b.shape()[0];
    let mut out = x.clone();
    let bd = b.data();
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        *v += bd[i % c];
    }
    Ok(out)
}
