//! Independent brute-force oracles shared by the oracle, gradient and
//! acceptance suites. Everything here works on plain `Vec<f64>` with
//! explicit loops and never calls into the library's numeric kernels.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Triple-loop matrix product.
pub fn matmul_oracle(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            let mut acc = 0.0;
            for kk in 0..k {
                acc += a[i * k + kk] * b[kk * n + j];
            }
            out[i * n + j] = acc;
        }
    }
    out
}

/// Per-column softmax with max shift.
pub fn softmax_cols_oracle(m: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for j in 0..cols {
        let mut mx = f64::NEG_INFINITY;
        for i in 0..rows {
            mx = mx.max(m[i * cols + j]);
        }
        let mut sum = 0.0;
        for i in 0..rows {
            let e = (m[i * cols + j] - mx).exp();
            out[i * cols + j] = e;
            sum += e;
        }
        for i in 0..rows {
            out[i * cols + j] /= sum;
        }
    }
    out
}

/// Leading pad for "same" padding (extra cell trails for even kernels).
pub fn same_pad(input: usize, kernel: usize, stride: usize) -> (usize, usize) {
    let out = input.div_ceil(stride);
    let pad_total = ((out - 1) * stride + kernel).saturating_sub(input);
    (out, pad_total / 2)
}

/// Seven-nested-loop 3D cross-correlation, channels last.
/// input T×H×W×Cin, kernel Kt×Kh×Kw×Cin×Cout.
#[allow(clippy::too_many_arguments)]
pub fn conv3d_oracle(
    input: &[f64],
    in_shape: [usize; 4],
    kernel: &[f64],
    k_shape: [usize; 5],
    stride: [usize; 3],
    same: bool,
) -> (Vec<f64>, [usize; 4]) {
    let [it, ih, iw, cin] = in_shape;
    let [kt, kh, kw, _, cout] = k_shape;
    let dims: Vec<(usize, usize)> = if same {
        vec![
            same_pad(it, kt, stride[0]),
            same_pad(ih, kh, stride[1]),
            same_pad(iw, kw, stride[2]),
        ]
    } else {
        vec![
            ((it - kt) / stride[0] + 1, 0),
            ((ih - kh) / stride[1] + 1, 0),
            ((iw - kw) / stride[2] + 1, 0),
        ]
    };
    let ([ot, oh, ow], [pt, ph, pw]) = (
        [dims[0].0, dims[1].0, dims[2].0],
        [dims[0].1, dims[1].1, dims[2].1],
    );
    let mut out = vec![0.0; ot * oh * ow * cout];
    for a in 0..ot {
        for b in 0..oh {
            for c in 0..ow {
                for co in 0..cout {
                    let mut acc = 0.0;
                    for dt in 0..kt {
                        for dh in 0..kh {
                            for dw in 0..kw {
                                let t = (a * stride[0] + dt) as isize - pt as isize;
                                let h = (b * stride[1] + dh) as isize - ph as isize;
                                let w = (c * stride[2] + dw) as isize - pw as isize;
                                if t < 0
                                    || h < 0
                                    || w < 0
                                    || t as usize >= it
                                    || h as usize >= ih
                                    || w as usize >= iw
                                {
                                    continue;
                                }
                                for ci in 0..cin {
                                    let iv = input
                                        [(((t as usize) * ih + h as usize) * iw + w as usize)
                                            * cin
                                            + ci];
                                    let kv =
                                        kernel[(((dt * kh + dh) * kw + dw) * cin + ci) * cout + co];
                                    acc += iv * kv;
                                }
                            }
                        }
                    }
                    out[((a * oh + b) * ow + c) * cout + co] = acc;
                }
            }
        }
    }
    (out, [ot, oh, ow, cout])
}

/// Triple loop over (distilled frame, input frame, pixel).
pub fn distill_oracle(
    x: &[f64],
    t: usize,
    frame: usize,
    p: &[f64],
    t_s: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; t_s * frame];
    for j in 0..t_s {
        for i in 0..t {
            for k in 0..frame {
                out[j * frame + k] += p[i * t_s + j] * x[i * frame + k];
            }
        }
    }
    out
}

/// Step-by-step transform oracle: explicit convs, explicit transpose,
/// explicit reshape, explicit matmul, explicit softmax.
#[allow(clippy::too_many_arguments)]
pub fn compute_transform_oracle(
    f: &[f64],
    t: usize,
    h: usize,
    w: usize,
    c: usize,
    w_alpha: &[f64],
    w_beta: &[f64],
    w_gamma: &[f64],
    t_s: usize,
) -> Vec<f64> {
    // path one: conv, transpose to H×W×C×T, 1x1x1 conv T -> T_s
    let (a, _) = conv3d_oracle(f, [t, h, w, c], w_alpha, [3, 3, 3, c, c], [1, 1, 1], true);
    // transpose T×H×W×C -> H×W×C×T
    let mut tr = vec![0.0; h * w * c * t];
    for ti in 0..t {
        for hi in 0..h {
            for wi in 0..w {
                for ci in 0..c {
                    tr[((hi * w + wi) * c + ci) * t + ti] = a[((ti * h + hi) * w + wi) * c + ci];
                }
            }
        }
    }
    let (o, _) = conv3d_oracle(&tr, [h, w, c, t], w_beta, [1, 1, 1, t, t_s], [1, 1, 1], true);
    // path two
    let (g, _) = conv3d_oracle(f, [t, h, w, c], w_gamma, [3, 3, 3, c, c], [1, 1, 1], true);
    // o is H×W×C×T_s which reshapes row-major to (HWC)×T_s; g is T×(HWC)
    let logits = matmul_oracle(&g, &o, t, h * w * c, t_s);
    softmax_cols_oracle(&logits, t, t_s)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

// ---- shared gradient-check harness ----

use tsd::tape::{NodeId, Tape};
use tsd::tensor::Tensor;

pub const FD_EPS: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-4;

pub fn rand_tensor64(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    Tensor::from_vec(shape, rand_vec(rng, n)).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Reduce an arbitrary node to a scalar with fixed random weights so the
/// loss exercises every output element.
pub fn reduce(tape: &mut Tape<f64>, out: NodeId, weights: &Tensor<f64>) -> NodeId {
    let n = tape.value(out).len();
    assert_eq!(weights.len(), n);
    let w = tape.leaf(weights.reshape(&[n, 1]).unwrap());
    let flat = tape.reshape(out, &[1, n]).unwrap();
    let prod = tape.matmul(flat, w).unwrap();
    tape.reshape(prod, &[]).unwrap()
}

/// Compare analytic gradients of `build`'s scalar loss against central
/// finite differences at every element of every leaf.
pub fn fd_check(leaves: &[Tensor<f64>], build: &dyn Fn(&mut Tape<f64>, &[NodeId]) -> NodeId) {
    let mut tape = Tape::new();
    let ids: Vec<NodeId> = leaves.iter().map(|t| tape.leaf(t.clone())).collect();
    let loss = build(&mut tape, &ids);
    let grads = tape.backward(loss).unwrap();
    let eval = |perturbed: &[Tensor<f64>]| {
        let mut tp = Tape::new();
        let ids2: Vec<NodeId> = perturbed.iter().map(|t| tp.leaf(t.clone())).collect();
        let l = build(&mut tp, &ids2);
        tp.value(l).scalar_value()
    };
    for (li, leaf) in leaves.iter().enumerate() {
        let g = grads.get_or_zero(ids[li], leaf.shape());
        for e in 0..leaf.len() {
            let mut hi = leaves.to_vec();
            hi[li].data_mut()[e] += FD_EPS;
            let mut lo = leaves.to_vec();
            lo[li].data_mut()[e] -= FD_EPS;
            let fd = (eval(&hi) - eval(&lo)) / (2.0 * FD_EPS);
            let a = g.data()[e];
            assert!(
                rel_err(a, fd) < FD_TOL,
                "leaf {li} elem {e}: analytic {a} vs fd {fd}"
            );
        }
    }
}

/// Random structural mutation of a byte buffer: truncation, bit flips,
/// huge-field overwrites, appended garbage.
pub fn mutate(bytes: &[u8], rng: &mut ChaCha8Rng) -> Vec<u8> {
    let mut b = bytes.to_vec();
    match rng.gen_range(0..4) {
        0 => {
            let keep = rng.gen_range(0..b.len());
            b.truncate(keep);
        }
        1 => {
            for _ in 0..rng.gen_range(1..=8) {
                let i = rng.gen_range(0..b.len());
                b[i] ^= 1 << rng.gen_range(0..8);
            }
        }
        2 => {
            let i = rng.gen_range(0..b.len().saturating_sub(4).max(1));
            let n = 4.min(b.len() - i);
            let huge = u32::MAX - rng.gen_range(0..1000);
            b[i..i + n].copy_from_slice(&huge.to_le_bytes()[..n]);
        }
        _ => {
            for _ in 0..rng.gen_range(1..=64) {
                b.push(rng.gen());
            }
        }
    }
    b
}

// ---- per-op FD sweeps, shared between the gradient and acceptance suites ----

use rand::SeedableRng;
use tsd::nets::{extractor_forward, init_params, main_forward, NetConfig, ParamBinding};
use tsd::tensor::Padding;
use tsd::tsd::{compute_transform_on, distill_on};

/// Inputs whose magnitude stays clear of relu's kink.
fn rand_tensor_offzero(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    rand_tensor64(rng, shape).map(|v| v + 0.2 * v.signum())
}

pub fn fd_matmul(configs: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..configs {
        let (m, k, n) = (
            rng.gen_range(1..=4),
            rng.gen_range(1..=4),
            rng.gen_range(1..=4),
        );
        let a = rand_tensor64(&mut rng, &[m, k]);
        let b = rand_tensor64(&mut rng, &[k, n]);
        let w = rand_tensor64(&mut rng, &[m * n]);
        fd_check(&[a, b], &|t, ids| {
            let y = t.matmul(ids[0], ids[1]).unwrap();
            reduce(t, y, &w)
        });
    }
}

pub fn fd_conv3d(configs: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for case in 0..configs {
        let (it, ih, iw) = (
            rng.gen_range(2..=4),
            rng.gen_range(2..=4),
            rng.gen_range(2..=4),
        );
        let (cin, cout) = (rng.gen_range(1..=2), rng.gen_range(1..=2));
        let (kt, kh, kw) = (
            rng.gen_range(1..=2),
            rng.gen_range(1..=2),
            rng.gen_range(1..=2),
        );
        let stride = [
            rng.gen_range(1..=2),
            rng.gen_range(1..=2),
            rng.gen_range(1..=2),
        ];
        let pad = if case % 2 == 0 { Padding::Same } else { Padding::Valid };
        let x = rand_tensor64(&mut rng, &[it, ih, iw, cin]);
        let k = rand_tensor64(&mut rng, &[kt, kh, kw, cin, cout]);
        let mut probe = Tape::new();
        let (xi, ki) = (probe.leaf(x.clone()), probe.leaf(k.clone()));
        let Ok(out) = probe.conv3d(xi, ki, stride, pad) else { continue };
        let w = rand_tensor64(&mut rng, &[probe.value(out).len()]);
        fd_check(&[x, k], &|t, ids| {
            let y = t.conv3d(ids[0], ids[1], stride, pad).unwrap();
            reduce(t, y, &w)
        });
    }
}

pub fn fd_depthwise3d(configs: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for case in 0..configs {
        let (it, ih, iw, c) = (
            rng.gen_range(2..=4),
            rng.gen_range(2..=4),
            rng.gen_range(2..=4),
            rng.gen_range(1..=3),
        );
        let stride = [1, rng.gen_range(1..=2), rng.gen_range(1..=2)];
        let pad = if case % 2 == 0 { Padding::Same } else { Padding::Valid };
        let x = rand_tensor64(&mut rng, &[it, ih, iw, c]);
        let k = rand_tensor64(&mut rng, &[1, 2, 2, c]);
        let mut probe = Tape::new();
        let (xi, ki) = (probe.leaf(x.clone()), probe.leaf(k.clone()));
        let Ok(out) = probe.depthwise3d(xi, ki, stride, pad) else { continue };
        let w = rand_tensor64(&mut rng, &[probe.value(out).len()]);
        fd_check(&[x, k], &|t, ids| {
            let y = t.depthwise3d(ids[0], ids[1], stride, pad).unwrap();
            reduce(t, y, &w)
        });
    }
}

pub fn fd_elementwise_and_shape(configs: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..configs {
        let shape: Vec<usize> = (0..3).map(|_| rng.gen_range(1..=4)).collect();
        let n: usize = shape.iter().product();
        let a = rand_tensor_offzero(&mut rng, &shape);
        let b = rand_tensor_offzero(&mut rng, &shape);
        let w = rand_tensor64(&mut rng, &[n]);
        let k = rng.gen_range(0.5..2.0);
        let axis = rng.gen_range(0..shape.len());
        let wm = rand_tensor64(&mut rng, &[n / shape[axis]]);

        fd_check(&[a.clone(), b.clone()], &|t, ids| {
            let y = t.add(ids[0], ids[1]).unwrap();
            reduce(t, y, &w)
        });
        fd_check(&[a.clone(), b.clone()], &|t, ids| {
            let y = t.sub(ids[0], ids[1]).unwrap();
            reduce(t, y, &w)
        });
        fd_check(&[a.clone(), b.clone()], &|t, ids| {
            let y = t.mul(ids[0], ids[1]).unwrap();
            reduce(t, y, &w)
        });
        fd_check(&[a.clone()], &|t, ids| {
            let y = t.scale(ids[0], k);
            reduce(t, y, &w)
        });
        fd_check(&[a.clone()], &|t, ids| {
            let y = t.relu(ids[0]);
            reduce(t, y, &w)
        });
        fd_check(&[a.clone()], &|t, ids| {
            let y = t.permute(ids[0], &[2, 0, 1]).unwrap();
            reduce(t, y, &w)
        });
        fd_check(&[a.clone()], &|t, ids| {
            let y = t.reshape(ids[0], &[n]).unwrap();
            reduce(t, y, &w)
        });
        fd_check(&[a.clone()], &|t, ids| {
            let y = t.mean_axis(ids[0], axis).unwrap();
            reduce(t, y, &wm)
        });
    }
}

pub fn fd_softmax_cross_entropy(configs: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for _ in 0..configs {
        let (r, c) = (rng.gen_range(2..=5), rng.gen_range(1..=4));
        let m = rand_tensor64(&mut rng, &[r, c]);
        let w = rand_tensor64(&mut rng, &[r * c]);
        fd_check(&[m.clone()], &|t, ids| {
            let y = t.softmax_cols(ids[0]).unwrap();
            reduce(t, y, &w)
        });
        let logits = rand_tensor64(&mut rng, &[r, 1]);
        let label = rng.gen_range(0..r);
        fd_check(&[logits], &|t, ids| {
            let p = t.softmax_cols(ids[0]).unwrap();
            t.cross_entropy(p, label).unwrap()
        });
        let probs = rand_tensor64(&mut rng, &[r, 1]).map(|v| 0.15 + 0.4 * (v + 1.0));
        fd_check(&[probs], &|t, ids| t.cross_entropy(ids[0], label).unwrap());
    }
}

pub fn fd_pool_scale_bias(configs: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    for _ in 0..configs {
        let (t_ext, h, w_ext, c) = (
            rng.gen_range(1..=3),
            2 * rng.gen_range(1..=2),
            2 * rng.gen_range(1..=2),
            rng.gen_range(1..=3),
        );
        let x = rand_tensor64(&mut rng, &[t_ext, h, w_ext, c]);
        let n = x.len();
        let wp = rand_tensor64(&mut rng, &[n / 4]);
        fd_check(&[x.clone()], &|t, ids| {
            let y = t.avgpool2(ids[0]).unwrap();
            reduce(t, y, &wp)
        });
        let fw = rand_tensor64(&mut rng, &[t_ext]);
        let wf = rand_tensor64(&mut rng, &[n]);
        fd_check(&[x.clone(), fw], &|t, ids| {
            let y = t.frame_scale(ids[0], ids[1]).unwrap();
            reduce(t, y, &wf)
        });
        let bias = rand_tensor64(&mut rng, &[c]);
        fd_check(&[x.clone(), bias], &|t, ids| {
            let y = t.bias_add(ids[0], ids[1]).unwrap();
            reduce(t, y, &wf)
        });
    }
}

fn tiny_net_cfg() -> NetConfig {
    NetConfig {
        input_hw: 4,
        extractor_hw: 2,
        in_channels: 2,
        extractor_channels: [3, 4],
        main_channels: [3, 4],
        t: 4,
        t_s: 2,
        classes: 3,
    }
}

/// FD check on the composed extractor→TSD→recognizer graph; spot-checks
/// `per_tensor` random elements of every parameter tensor per config.
pub fn fd_composed(configs: usize, per_tensor: usize) {
    let cfg = tiny_net_cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    for case in 0..configs {
        let params = init_params::<f64, _>(&cfg, &mut rng);
        let x = rand_tensor64(&mut rng, &[cfg.t, cfg.input_hw, cfg.input_hw, cfg.in_channels]);
        let label = case % cfg.classes;

        let forward = |p: &tsd::nets::ModelParams<f64>| -> (Tape<f64>, ParamBinding, NodeId) {
            let mut tape = Tape::new();
            let bind = ParamBinding::bind(&mut tape, p);
            let xid = tape.leaf(x.clone());
            let f = extractor_forward(&mut tape, &cfg, &bind, xid).unwrap();
            let pm = compute_transform_on(
                &mut tape,
                f,
                bind.id("tsd.w_alpha"),
                bind.id("tsd.w_beta"),
                bind.id("tsd.w_gamma"),
            )
            .unwrap();
            let y = distill_on(&mut tape, xid, pm).unwrap();
            let probs = main_forward(&mut tape, &cfg, &bind, y).unwrap();
            let loss = tape.cross_entropy(probs, label).unwrap();
            (tape, bind, loss)
        };
        let loss_of = |p: &tsd::nets::ModelParams<f64>| -> f64 {
            let (tape, _, loss) = forward(p);
            tape.value(loss).scalar_value()
        };

        let (tape, bind, loss) = forward(&params);
        let grads = tape.backward(loss).unwrap();
        let mut probe = ChaCha8Rng::seed_from_u64(900 + case as u64);
        for (name, value) in params.iter() {
            if name == "attn.logits" {
                continue; // not on this graph
            }
            let g = grads.get_or_zero(bind.id(name), value.shape());
            for _ in 0..per_tensor.min(value.len()) {
                let e = probe.gen_range(0..value.len());
                let mut hi = params.clone();
                hi.get_mut(name).unwrap().data_mut()[e] += FD_EPS;
                let mut lo = params.clone();
                lo.get_mut(name).unwrap().data_mut()[e] -= FD_EPS;
                let fd = (loss_of(&hi) - loss_of(&lo)) / (2.0 * FD_EPS);
                let a = g.data()[e];
                assert!(
                    rel_err(a, fd) < FD_TOL,
                    "case {case} {name}[{e}]: analytic {a} vs fd {fd}"
                );
            }
        }
    }
}
