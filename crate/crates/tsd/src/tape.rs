//! Reverse-mode automatic differentiation over a flat tape.
//!
//! Every op appends one node holding its output value and enough metadata to
//! run its backward rule. `backward` walks the tape in exact reverse
//! execution order, so the chain rule is applied without any graph analysis.

use crate::scalar::Scalar;
use crate::tensor::{self, Padding, Tensor};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub usize);

/// Probability floor inside `cross_entropy`.
pub const CE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
enum Op<S: Scalar> {
    Leaf,
    Matmul(NodeId, NodeId),
    Conv3d {
        input: NodeId,
        kernel: NodeId,
        stride: [usize; 3],
        padding: Padding,
    },
    Depthwise3d {
        input: NodeId,
        kernel: NodeId,
        stride: [usize; 3],
        padding: Padding,
    },
    Permute {
        input: NodeId,
        axes: Vec<usize>,
    },
    Reshape {
        input: NodeId,
    },
    SoftmaxCols {
        input: NodeId,
    },
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale {
        input: NodeId,
        factor: S,
    },
    Relu {
        input: NodeId,
    },
    MeanAxis {
        input: NodeId,
        axis: usize,
    },
    AvgPool2 {
        input: NodeId,
    },
    FrameScale {
        clip: NodeId,
        weights: NodeId,
    },
    BiasAdd {
        clip: NodeId,
        bias: NodeId,
    },
    CrossEntropy {
        probs: NodeId,
        label: usize,
    },
}

#[derive(Debug, Clone)]
struct Node<S: Scalar> {
    value: Tensor<S>,
    op: Op<S>,
}

/// Gradients per node id, produced by [`Tape::backward`]. Nodes the loss does
/// not depend on carry `None`; callers treat that as zero.
pub struct Gradients<S: Scalar> {
    grads: Vec<Option<Tensor<S>>>,
}

impl<S: Scalar> Gradients<S> {
    pub fn get(&self, id: NodeId) -> Option<&Tensor<S>> {
        self.grads.get(id.0).and_then(|g| g.as_ref())
    }

    /// Gradient for `id`, zero-filled to `shape` when the loss is unrelated.
    pub fn get_or_zero(&self, id: NodeId, shape: &[usize]) -> Tensor<S> {
        match self.get(id) {
            Some(g) => g.clone(),
            None => Tensor::zeros(shape),
        }
    }
}

#[derive(Debug, Default)]
pub struct Tape<S: Scalar> {
    nodes: Vec<Node<S>>,
}

impl<S: Scalar> Tape<S> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor<S> {
        &self.nodes[id.0].value
    }

    fn push(&mut self, value: Tensor<S>, op: Op<S>) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    /// Record an input or parameter.
    pub fn leaf(&mut self, value: Tensor<S>) -> NodeId {
        self.push(value, Op::Leaf)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = tensor::matmul(self.value(a), self.value(b))?;
        Ok(self.push(v, Op::Matmul(a, b)))
    }

    pub fn conv3d(
        &mut self,
        input: NodeId,
        kernel: NodeId,
        stride: [usize; 3],
        padding: Padding,
    ) -> Result<NodeId> {
        let v = tensor::conv3d(self.value(input), self.value(kernel), stride, padding)?;
        Ok(self.push(v, Op::Conv3d { input, kernel, stride, padding }))
    }

    pub fn depthwise3d(
        &mut self,
        input: NodeId,
        kernel: NodeId,
        stride: [usize; 3],
        padding: Padding,
    ) -> Result<NodeId> {
        let v = tensor::depthwise3d(self.value(input), self.value(kernel), stride, padding)?;
        Ok(self.push(v, Op::Depthwise3d { input, kernel, stride, padding }))
    }

    pub fn permute(&mut self, input: NodeId, axes: &[usize]) -> Result<NodeId> {
        let v = tensor::permute(self.value(input), axes)?;
        Ok(self.push(v, Op::Permute { input, axes: axes.to_vec() }))
    }

    pub fn reshape(&mut self, input: NodeId, shape: &[usize]) -> Result<NodeId> {
        let v = self.value(input).reshape(shape)?;
        Ok(self.push(v, Op::Reshape { input }))
    }

    pub fn softmax_cols(&mut self, input: NodeId) -> Result<NodeId> {
        let v = tensor::softmax_cols(self.value(input))?;
        Ok(self.push(v, Op::SoftmaxCols { input }))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).add(self.value(b))?;
        Ok(self.push(v, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).sub(self.value(b))?;
        Ok(self.push(v, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).mul(self.value(b))?;
        Ok(self.push(v, Op::Mul(a, b)))
    }

    pub fn scale(&mut self, input: NodeId, factor: S) -> NodeId {
        let v = self.value(input).scale(factor);
        self.push(v, Op::Scale { input, factor })
    }

    pub fn relu(&mut self, input: NodeId) -> NodeId {
        let v = self.value(input).relu();
        self.push(v, Op::Relu { input })
    }

    pub fn mean_axis(&mut self, input: NodeId, axis: usize) -> Result<NodeId> {
        let v = tensor::mean_axis(self.value(input), axis)?;
        Ok(self.push(v, Op::MeanAxis { input, axis }))
    }

    pub fn avgpool2(&mut self, input: NodeId) -> Result<NodeId> {
        let v = tensor::avgpool2_spatial(self.value(input))?;
        Ok(self.push(v, Op::AvgPool2 { input }))
    }

    pub fn frame_scale(&mut self, clip: NodeId, weights: NodeId) -> Result<NodeId> {
        let v = tensor::frame_scale(self.value(clip), self.value(weights))?;
        Ok(self.push(v, Op::FrameScale { clip, weights }))
    }

    pub fn bias_add(&mut self, clip: NodeId, bias: NodeId) -> Result<NodeId> {
        let v = tensor::bias_add(self.value(clip), self.value(bias))?;
        Ok(self.push(v, Op::BiasAdd { clip, bias }))
    }

    /// −log(probs[label]) with a probability floor; `probs` is a column
    /// vector K×1 (or a length-K rank-1 tensor).
    pub fn cross_entropy(&mut self, probs: NodeId, label: usize) -> Result<NodeId> {
        let p = self.value(probs);
        let k = p.len();
        if label >= k {
            return Err(Error::Argument(format!(
                "label {} out of range for {} classes",
                label, k
            )));
        }
        let floor = S::from_f64(CE_FLOOR);
        let loss = -(p.data()[label].max(floor)).ln();
        Ok(self.push(Tensor::scalar(loss), Op::CrossEntropy { probs, label }))
    }

    /// Reverse sweep from `loss`, which must be a scalar produced on this tape.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients<S>> {
        let lv = &self.nodes[loss.0].value;
        if lv.len() != 1 {
            return Err(Error::Argument(format!(
                "backward needs a scalar loss, got shape {:?}",
                lv.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor<S>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(lv.map(|_| S::one()));

        for i in (0..=loss.0).rev() {
            let g = match grads[i].take() {
                Some(g) => g,
                None => continue,
            };
            self.accumulate_inputs(i, &g, &mut grads)?;
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn acc(grads: &mut [Option<Tensor<S>>], id: NodeId, delta: Tensor<S>) -> Result<()> {
        match &mut grads[id.0] {
            Some(g) => {
                *g = g.add(&delta)?;
            }
            slot @ None => *slot = Some(delta),
        }
        Ok(())
    }

    fn accumulate_inputs(
        &self,
        i: usize,
        g: &Tensor<S>,
        grads: &mut [Option<Tensor<S>>],
    ) -> Result<()> {
        match &self.nodes[i].op {
            Op::Leaf => {}
            Op::Matmul(a, b) => {
                let av = self.value(*a);
                let bv = self.value(*b);
                let ga = tensor::matmul(g, &tensor::transpose2(bv)?)?;
                let gb = tensor::matmul(&tensor::transpose2(av)?, g)?;
                Self::acc(grads, *a, ga)?;
                Self::acc(grads, *b, gb)?;
            }
            Op::Conv3d { input, kernel, stride, padding } => {
                let (gi, gk) = tensor::conv3d_grads(
                    self.value(*input),
                    self.value(*kernel),
                    *stride,
                    *padding,
                    g,
                )?;
                Self::acc(grads, *input, gi)?;
                Self::acc(grads, *kernel, gk)?;
            }
            Op::Depthwise3d { input, kernel, stride, padding } => {
                let (gi, gk) = tensor::depthwise3d_grads(
                    self.value(*input),
                    self.value(*kernel),
                    *stride,
                    *padding,
                    g,
                )?;
                Self::acc(grads, *input, gi)?;
                Self::acc(grads, *kernel, gk)?;
            }
            Op::Permute { input, axes } => {
                let gi = tensor::permute(g, &tensor::inverse_permutation(axes))?;
                Self::acc(grads, *input, gi)?;
            }
            Op::Reshape { input } => {
                let gi = g.reshape(self.value(*input).shape())?;
                Self::acc(grads, *input, gi)?;
            }
            Op::SoftmaxCols { input } => {
                // dL/dx_ij = p_ij * (g_ij - sum_i p_ij g_ij)  per column j
                let p = &self.nodes[i].value;
                let (rows, cols) = (p.shape()[0], p.shape()[1]);
                let mut gi = Tensor::zeros(p.shape());
                for j in 0..cols {
                    let mut dot = S::zero();
                    for r in 0..rows {
                        dot += p.data()[r * cols + j] * g.data()[r * cols + j];
                    }
                    for r in 0..rows {
                        let idx = r * cols + j;
                        gi.data_mut()[idx] = p.data()[idx] * (g.data()[idx] - dot);
                    }
                }
                Self::acc(grads, *input, gi)?;
            }
            Op::Add(a, b) => {
                Self::acc(grads, *a, g.clone())?;
                Self::acc(grads, *b, g.clone())?;
            }
            Op::Sub(a, b) => {
                Self::acc(grads, *a, g.clone())?;
                Self::acc(grads, *b, g.scale(-S::one()))?;
            }
            Op::Mul(a, b) => {
                Self::acc(grads, *a, g.mul(self.value(*b))?)?;
                Self::acc(grads, *b, g.mul(self.value(*a))?)?;
            }
            Op::Scale { input, factor } => {
                Self::acc(grads, *input, g.scale(*factor))?;
            }
            Op::Relu { input } => {
                // subgradient 0 at 0
                let x = self.value(*input);
                let gi = g.zip(x, |gv, xv| if xv > S::zero() { gv } else { S::zero() })?;
                Self::acc(grads, *input, gi)?;
            }
            Op::MeanAxis { input, axis } => {
                let x = self.value(*input);
                let extent = x.shape()[*axis];
                let outer: usize = x.shape()[..*axis].iter().product();
                let inner: usize = x.shape()[*axis + 1..].iter().product();
                let inv = S::one() / S::from_usize(extent);
                let mut gi = Tensor::zeros(x.shape());
                for o in 0..outer {
                    for a in 0..extent {
                        for k in 0..inner {
                            gi.data_mut()[(o * extent + a) * inner + k] =
                                g.data()[o * inner + k] * inv;
                        }
                    }
                }
                Self::acc(grads, *input, gi)?;
            }
            Op::AvgPool2 { input } => {
                let gi = tensor::avgpool2_spatial_grad(self.value(*input).shape(), g);
                Self::acc(grads, *input, gi)?;
            }
            Op::FrameScale { clip, weights } => {
                let x = self.value(*clip);
                let w = self.value(*weights);
                let t_n = x.shape()[0];
                let frame = x.len() / t_n;
                let mut gx = Tensor::zeros(x.shape());
                let mut gw = Tensor::zeros(w.shape());
                for t in 0..t_n {
                    let wv = w.data()[t];
                    let mut acc = S::zero();
                    for k in 0..frame {
                        let idx = t * frame + k;
                        gx.data_mut()[idx] = g.data()[idx] * wv;
                        acc += g.data()[idx] * x.data()[idx];
                    }
                    gw.data_mut()[t] = acc;
                }
                Self::acc(grads, *clip, gx)?;
                Self::acc(grads, *weights, gw)?;
            }
            Op::BiasAdd { clip, bias } => {
                let c = self.value(*bias).shape()[0];
                let mut gb = Tensor::zeros(&[c]);
                for (k, &gv) in g.data().iter().enumerate() {
                    gb.data_mut()[k % c] += gv;
                }
                Self::acc(grads, *clip, g.clone())?;
                Self::acc(grads, *bias, gb)?;
            }
            Op::CrossEntropy { probs, label } => {
                let p = self.value(*probs);
                let floor = S::from_f64(CE_FLOOR);
                let mut gp = Tensor::zeros(p.shape());
                let pl = p.data()[*label];
                if pl >= floor {
                    gp.data_mut()[*label] = -g.data()[0] / pl;
                }
                Self::acc(grads, *probs, gp)?;
            }
        }
        Ok(())
    }
}
