//! Toy client/cloud networks: a lightweight coarse feature extractor (the
//! client side, feeding the distillation block) and a temporal-convolution
//! recognizer (the cloud side). Small enough to train on a laptop while
//! keeping the split-pipeline structure intact.

use crate::scalar::Scalar;
use crate::tape::{Gradients, NodeId, Tape};
use crate::tensor::{Padding, Tensor};
use crate::tsd::TsdWeights;
use crate::{Error, Result};
use rand::Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetConfig {
    /// Raw frame side length.
    pub input_hw: usize,
    /// Side length after the extractor's input pool.
    pub extractor_hw: usize,
    pub in_channels: usize,
    /// Channels after extractor stage 1 and 2.
    pub extractor_channels: [usize; 2],
    /// Channels after main-network stage 1 and 2.
    pub main_channels: [usize; 2],
    pub t: usize,
    pub t_s: usize,
    pub classes: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            input_hw: 32,
            extractor_hw: 16,
            in_channels: 3,
            extractor_channels: [8, 16],
            main_channels: [16, 32],
            t: 16,
            t_s: 4,
            classes: 8,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.extractor_hw > self.input_hw {
            return Err(Error::Argument(format!(
                "extractor_hw {} exceeds input_hw {}",
                self.extractor_hw, self.input_hw
            )));
        }
        if self.input_hw != self.extractor_hw * 2 {
            return Err(Error::Argument(
                "extractor pools by a factor of 2; input_hw must be 2*extractor_hw".into(),
            ));
        }
        if self.t_s == 0 || self.t_s > self.t || self.classes < 2 {
            return Err(Error::Argument(format!(
                "bad config: T={}, T_s={}, K={}",
                self.t, self.t_s, self.classes
            )));
        }
        Ok(())
    }

    /// Extractor output: T × hw/4 × hw/4 × c2 (pool /2, stage-2 stride /2).
    pub fn feature_shape(&self, t: usize) -> [usize; 4] {
        [t, self.input_hw / 4, self.input_hw / 4, self.extractor_channels[1]]
    }
}

/// Named parameter store. Names are dotted, the prefix before the first dot
/// is the component group: `extractor.*` and `tsd.*` (plus `attn.*` for the
/// attention baseline) live on the client, `main.*` on the cloud. The two
/// sides share no parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<S: Scalar> {
    entries: Vec<(String, Tensor<S>)>,
}

impl<S: Scalar> ModelParams<S> {
    pub fn new() -> Self {
        ModelParams { entries: Vec::new() }
    }

    pub fn insert(&mut self, name: &str, value: Tensor<S>) {
        assert!(
            self.get(name).is_none(),
            "duplicate parameter name {name}"
        );
        self.entries.push((name.to_string(), value));
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<S>> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<S>> {
        self.entries
            .iter_mut()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<S>)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn group(&self, prefix: &str) -> impl Iterator<Item = (&str, &Tensor<S>)> {
        let p = format!("{prefix}.");
        self.entries
            .iter()
            .filter(move |(n, _)| n.starts_with(&p))
            .map(|(n, t)| (n.as_str(), t))
    }

    pub fn group_param_count(&self, prefix: &str) -> usize {
        self.group(prefix).map(|(_, t)| t.len()).sum()
    }

    pub fn tsd_weights(&self) -> Result<TsdWeights<S>> {
        Ok(TsdWeights {
            w_alpha: self.require("tsd.w_alpha")?.clone(),
            w_beta: self.require("tsd.w_beta")?.clone(),
            w_gamma: self.require("tsd.w_gamma")?.clone(),
        })
    }

    pub fn require(&self, name: &str) -> Result<&Tensor<S>> {
        self.get(name)
            .ok_or_else(|| Error::Argument(format!("missing parameter {name}")))
    }
}

impl<S: Scalar> Default for ModelParams<S> {
    fn default() -> Self {
        Self::new()
    }
}

fn he_std<S: Scalar>(fan_in: usize) -> S {
    S::from_f64((2.0 / fan_in as f64).sqrt())
}

/// Fresh parameters for the full pipeline: extractor, TSD block (Gaussian,
/// standard deviation 0.01, zero biases), main network, and the attention
/// baseline's per-position logits.
pub fn init_params<S: Scalar, R: Rng>(cfg: &NetConfig, rng: &mut R) -> ModelParams<S> {
    let mut p = ModelParams::new();
    let cin = cfg.in_channels;
    let [e1, e2] = cfg.extractor_channels;
    let [m1, m2] = cfg.main_channels;
    let k = cfg.classes;

    p.insert("extractor.dw1", Tensor::randn(&[1, 3, 3, cin], he_std(9), rng));
    p.insert("extractor.pw1", Tensor::randn(&[1, 1, 1, cin, e1], he_std(cin), rng));
    p.insert("extractor.b1", Tensor::zeros(&[e1]));
    p.insert("extractor.dw2", Tensor::randn(&[1, 3, 3, e1], he_std(9), rng));
    p.insert("extractor.pw2", Tensor::randn(&[1, 1, 1, e1, e2], he_std(e1), rng));
    p.insert("extractor.b2", Tensor::zeros(&[e2]));

    let std = S::from_f64(0.01);
    let tsd = TsdWeights::init(e2, cfg.t, cfg.t_s, std, rng);
    p.insert("tsd.w_alpha", tsd.w_alpha);
    p.insert("tsd.w_beta", tsd.w_beta);
    p.insert("tsd.w_gamma", tsd.w_gamma);

    p.insert("main.conv1", Tensor::randn(&[3, 3, 3, cin, m1], he_std(27 * cin), rng));
    p.insert("main.b1", Tensor::zeros(&[m1]));
    p.insert("main.conv2", Tensor::randn(&[3, 3, 3, m1, m2], he_std(27 * m1), rng));
    p.insert("main.b2", Tensor::zeros(&[m2]));
    p.insert("main.fc_w", Tensor::randn(&[k, m2], he_std(m2), rng));
    p.insert("main.fc_b", Tensor::zeros(&[k, 1]));

    p.insert("attn.logits", Tensor::zeros(&[cfg.t]));
    p
}

/// Parameter leaves registered on a tape, by name.
pub struct ParamBinding {
    ids: Vec<(String, NodeId)>,
}

impl ParamBinding {
    pub fn bind<S: Scalar>(tape: &mut Tape<S>, params: &ModelParams<S>) -> Self {
        let ids = params
            .iter()
            .map(|(n, t)| (n.to_string(), tape.leaf(t.clone())))
            .collect();
        ParamBinding { ids }
    }

    pub fn id(&self, name: &str) -> NodeId {
        self.ids
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, id)| *id)
            .unwrap_or_else(|| panic!("unbound parameter {name}"))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, NodeId)> {
        self.ids.iter().map(|(n, id)| (n.as_str(), *id))
    }

    /// Accumulated gradient per parameter name (zero when unrelated).
    pub fn collect_grads<S: Scalar>(
        &self,
        tape: &Tape<S>,
        grads: &Gradients<S>,
    ) -> Vec<(String, Tensor<S>)> {
        self.ids
            .iter()
            .map(|(n, id)| {
                (
                    n.clone(),
                    grads.get_or_zero(*id, tape.value(*id).shape()),
                )
            })
            .collect()
    }
}

/// Coarse feature path: factor-2 average pool, then two depthwise-separable
/// stages (3×3 spatial depthwise + 1×1 pointwise + relu); stage 2 strides the
/// spatial extents by 2. Time is preserved throughout.
pub fn extractor_forward<S: Scalar>(
    tape: &mut Tape<S>,
    cfg: &NetConfig,
    bind: &ParamBinding,
    x: NodeId,
) -> Result<NodeId> {
    let xs = tape.value(x).shape().to_vec();
    if xs.len() != 4 || xs[1] != cfg.input_hw || xs[2] != cfg.input_hw || xs[3] != cfg.in_channels {
        return Err(Error::Dimension(format!(
            "extractor wants T×{}×{}×{}, got {:?}",
            cfg.input_hw, cfg.input_hw, cfg.in_channels, xs
        )));
    }
    let pooled = tape.avgpool2(x)?;
    let s1 = tape.depthwise3d(pooled, bind.id("extractor.dw1"), [1, 1, 1], Padding::Same)?;
    let s1 = tape.conv3d(s1, bind.id("extractor.pw1"), [1, 1, 1], Padding::Same)?;
    let s1 = tape.bias_add(s1, bind.id("extractor.b1"))?;
    let s1 = tape.relu(s1);
    let s2 = tape.depthwise3d(s1, bind.id("extractor.dw2"), [1, 2, 2], Padding::Same)?;
    let s2 = tape.conv3d(s2, bind.id("extractor.pw2"), [1, 1, 1], Padding::Same)?;
    let s2 = tape.bias_add(s2, bind.id("extractor.b2"))?;
    Ok(tape.relu(s2))
}

/// Recognizer: two 3×3×3 conv+relu stages (spatial stride 2, temporal same
/// padding so any T_s ≥ 1 works), global average pool, linear classifier,
/// column softmax. Returns the K×1 probability node.
pub fn main_forward<S: Scalar>(
    tape: &mut Tape<S>,
    cfg: &NetConfig,
    bind: &ParamBinding,
    y: NodeId,
) -> Result<NodeId> {
    let ys = tape.value(y).shape().to_vec();
    if ys.len() != 4 || ys[1] != cfg.input_hw || ys[2] != cfg.input_hw || ys[3] != cfg.in_channels {
        return Err(Error::Dimension(format!(
            "recognizer wants T_s×{}×{}×{}, got {:?}",
            cfg.input_hw, cfg.input_hw, cfg.in_channels, ys
        )));
    }
    let c1 = tape.conv3d(y, bind.id("main.conv1"), [1, 2, 2], Padding::Same)?;
    let c1 = tape.bias_add(c1, bind.id("main.b1"))?;
    let c1 = tape.relu(c1);
    let c2 = tape.conv3d(c1, bind.id("main.conv2"), [1, 2, 2], Padding::Same)?;
    let c2 = tape.bias_add(c2, bind.id("main.b2"))?;
    let c2 = tape.relu(c2);
    // global average pool over (T, H, W)
    let g = tape.mean_axis(c2, 0)?;
    let g = tape.mean_axis(g, 0)?;
    let g = tape.mean_axis(g, 0)?;
    let feat = tape.reshape(g, &[cfg.main_channels[1], 1])?;
    let logits = tape.matmul(bind.id("main.fc_w"), feat)?;
    let logits = tape.add(logits, bind.id("main.fc_b"))?;
    tape.softmax_cols(logits)
}

/// Non-training wrapper around [`extractor_forward`].
pub fn coarse_features<S: Scalar>(
    cfg: &NetConfig,
    params: &ModelParams<S>,
    x: &Tensor<S>,
) -> Result<Tensor<S>> {
    let mut tape = Tape::new();
    let bind = ParamBinding::bind(&mut tape, params);
    let xid = tape.leaf(x.clone());
    let f = extractor_forward(&mut tape, cfg, &bind, xid)?;
    Ok(tape.value(f).clone())
}

/// Non-training wrapper around [`main_forward`]; returns length-K
/// probabilities.
pub fn recognize<S: Scalar>(
    cfg: &NetConfig,
    params: &ModelParams<S>,
    y: &Tensor<S>,
) -> Result<Tensor<S>> {
    let mut tape = Tape::new();
    let bind = ParamBinding::bind(&mut tape, params);
    let yid = tape.leaf(y.clone());
    let probs = main_forward(&mut tape, cfg, &bind, yid)?;
    tape.value(probs).reshape(&[cfg.classes])
}
