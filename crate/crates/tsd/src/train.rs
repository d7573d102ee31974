//! Loss, SGD with momentum, the two-stage schedule (client side first with
//! the recognizer frozen, then everything end-to-end), and Q-clip evaluation.

use crate::nets::{extractor_forward, main_forward, ModelParams, NetConfig, ParamBinding};
use crate::scalar::Scalar;
use crate::selectors;
use crate::synthvid::{LabeledClip, SynthDataset};
use crate::tape::{NodeId, Tape};
use crate::tensor::Tensor;
use crate::tsd::{compute_transform_on, distill_on};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Plain recognizer on consecutive frames.
    I3d,
    /// Random ordered frame sampling.
    Random,
    /// Equal-interval frame sampling.
    Uniform,
    /// Learned per-position importance weights.
    Attention,
    /// The learned distillation block.
    Tsd,
}

impl Variant {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "i3d" => Ok(Variant::I3d),
            "rand" | "random" => Ok(Variant::Random),
            "uniform" => Ok(Variant::Uniform),
            "attn" | "attention" => Ok(Variant::Attention),
            "tsd" => Ok(Variant::Tsd),
            other => Err(Error::Argument(format!("unknown variant '{other}'"))),
        }
    }

    /// Whether part of the model runs on the client in a split deployment.
    pub fn has_client_component(&self) -> bool {
        matches!(self, Variant::Tsd | Variant::Attention)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Variant::I3d => "i3d",
            Variant::Random => "rand",
            Variant::Uniform => "uniform",
            Variant::Attention => "attn",
            Variant::Tsd => "tsd",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub stage1_lr: f64,
    pub stage1_decay_factor: f64,
    pub stage1_decay_steps: usize,
    pub stage1_max_steps: usize,
    pub stage2_lr: f64,
    pub stage2_decay_factor: f64,
    pub stage2_decay_steps: usize,
    pub stage2_max_steps: usize,
    pub batch_size: usize,
    pub momentum: f64,
    pub seed: u64,
    pub variant: Variant,
    pub q: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            stage1_lr: 0.1,
            stage1_decay_factor: 0.1,
            stage1_decay_steps: 1000,
            stage1_max_steps: 3000,
            stage2_lr: 0.01,
            stage2_decay_factor: 0.3,
            stage2_decay_steps: 1500,
            stage2_max_steps: 3000,
            batch_size: 8,
            momentum: 0.9,
            seed: 0,
            variant: Variant::Tsd,
            q: 3,
        }
    }
}

/// Anything that can hand out labeled clips by index.
pub trait ClipSource<S: Scalar> {
    fn len(&self) -> usize;
    fn get(&self, i: usize) -> Result<LabeledClip<S>>;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<S: Scalar> ClipSource<S> for SynthDataset {
    fn len(&self) -> usize {
        self.len
    }
    fn get(&self, i: usize) -> Result<LabeledClip<S>> {
        SynthDataset::get(self, i)
    }
}

impl<S: Scalar> ClipSource<S> for Vec<LabeledClip<S>> {
    fn len(&self) -> usize {
        Vec::len(self)
    }
    fn get(&self, i: usize) -> Result<LabeledClip<S>> {
        Ok(self[i].clone())
    }
}

/// Clip files on disk, as produced by `gen-data`.
pub struct DiskDataset {
    pub dir: PathBuf,
    pub entries: Vec<(String, usize)>,
}

impl DiskDataset {
    pub fn open(dir: &std::path::Path) -> Result<Self> {
        let entries = crate::synthvid::read_manifest(dir)?;
        Ok(DiskDataset { dir: dir.to_path_buf(), entries })
    }
}

impl<S: Scalar> ClipSource<S> for DiskDataset {
    fn len(&self) -> usize {
        self.entries.len()
    }
    fn get(&self, i: usize) -> Result<LabeledClip<S>> {
        crate::synthvid::read_clip(&self.dir.join(&self.entries[i].0))
    }
}

/// −log(probs[label]) with the probability floor of the tape op.
pub fn cross_entropy<S: Scalar>(probs: &[S], label: usize) -> Result<S> {
    if label >= probs.len() {
        return Err(Error::Argument(format!(
            "label {} out of range for {} classes",
            label,
            probs.len()
        )));
    }
    let floor = S::from_f64(crate::tape::CE_FLOOR);
    Ok(-(probs[label].max(floor)).ln())
}

/// Contiguous length-`t` window of frames starting at `offset`.
/// Per-frame standardization: each frame to zero mean and unit variance.
/// Kills the DC background component so the conv features carry signal (the
/// usual preprocessing for raw [0,1] frames), and keeps every frame's
/// statistics local so frames without the pattern stay uninformative.
pub fn standardize<S: Scalar>(window: &Tensor<S>) -> Tensor<S> {
    let t = window.shape()[0].max(1);
    let frame = window.len() / t;
    let mut out = window.clone();
    for ft in 0..t {
        let slice = &mut out.data_mut()[ft * frame..(ft + 1) * frame];
        let n = S::from_usize(frame.max(1));
        let mean = slice.iter().copied().sum::<S>() / n;
        let var = slice.iter().map(|&v| (v - mean) * (v - mean)).sum::<S>() / n;
        let inv_std = (var + S::from_f64(1e-8)).sqrt().recip();
        for v in slice.iter_mut() {
            *v = (*v - mean) * inv_std;
        }
    }
    out
}

pub fn frame_window<S: Scalar>(clip: &Tensor<S>, offset: usize, t: usize) -> Result<Tensor<S>> {
    if clip.rank() != 4 || offset + t > clip.shape()[0] {
        return Err(Error::Dimension(format!(
            "window {}..{} exceeds clip {:?}",
            offset,
            offset + t,
            clip.shape()
        )));
    }
    let frame: usize = clip.shape()[1..].iter().product();
    let data = clip.data()[offset * frame..(offset + t) * frame].to_vec();
    let mut shape = clip.shape().to_vec();
    shape[0] = t;
    Tensor::from_vec(&shape, data)
}

/// Attention weights (softmax of the learned per-position logits) as plain
/// values, for test-time top-k selection.
pub fn attention_weights<S: Scalar>(params: &ModelParams<S>) -> Result<Vec<S>> {
    let logits = params.require("attn.logits")?;
    let col = logits.reshape(&[logits.len(), 1])?;
    let sm = crate::tensor::softmax_cols(&col)?;
    Ok(sm.data().to_vec())
}

/// Build the per-sample forward graph for `variant` and return the K×1
/// probability node. `draw` provides the selection randomness for the
/// sampling baselines during training.
fn sample_probs_graph<S: Scalar>(
    tape: &mut Tape<S>,
    cfg: &NetConfig,
    bind: &ParamBinding,
    variant: Variant,
    x: &Tensor<S>,
    draw: &mut ChaCha8Rng,
) -> Result<NodeId> {
    let t = x.shape()[0];
    let t_s = cfg.t_s;
    let input = tape.leaf(standardize(x));
    let distilled = match variant {
        Variant::I3d => input,
        Variant::Random => {
            let p = selectors::random_p::<S>(t, t_s, draw.gen())?;
            let pid = tape.leaf(p.values().clone());
            distill_on(tape, input, pid)?
        }
        Variant::Uniform => {
            let stride = selectors::uniform_stride(t, t_s);
            let max_offset = t - 1 - (t_s - 1) * stride;
            let offset = draw.gen_range(0..=max_offset);
            let p = selectors::uniform_p::<S>(t, t_s, offset)?;
            let pid = tape.leaf(p.values().clone());
            distill_on(tape, input, pid)?
        }
        Variant::Attention => {
            let logits = bind.id("attn.logits");
            let col = tape.reshape(logits, &[t, 1])?;
            let sm = tape.softmax_cols(col)?;
            let w = tape.reshape(sm, &[t])?;
            let w = tape.scale(w, S::from_usize(t));
            tape.frame_scale(input, w)?
        }
        Variant::Tsd => {
            let f = extractor_forward(tape, cfg, bind, input)?;
            let p = compute_transform_on(
                tape,
                f,
                bind.id("tsd.w_alpha"),
                bind.id("tsd.w_beta"),
                bind.id("tsd.w_gamma"),
            )?;
            distill_on(tape, input, p)?
        }
    };
    main_forward(tape, cfg, bind, distilled)
}

fn step_lr(base: f64, decay: f64, decay_steps: usize, step: usize) -> f64 {
    base * decay.powi((step / decay_steps.max(1)) as i32)
}

/// One SGD-with-momentum step over a batch; only parameters passing
/// `trainable` are updated. Returns the mean batch loss.
#[allow(clippy::too_many_arguments)]
fn sgd_batch_step<S: Scalar>(
    params: &mut ModelParams<S>,
    net_cfg: &NetConfig,
    variant: Variant,
    batch: &[LabeledClip<S>],
    lr: f64,
    momentum: f64,
    velocities: &mut HashMap<String, Tensor<S>>,
    trainable: &dyn Fn(&str) -> bool,
    draw: &mut ChaCha8Rng,
) -> Result<f64> {
    let inv_b = S::from_f64(1.0 / batch.len() as f64);
    let mut grad_sum: HashMap<String, Tensor<S>> = HashMap::new();
    let mut loss_sum = 0.0f64;
    for lc in batch {
        let mut tape = Tape::new();
        let bind = ParamBinding::bind(&mut tape, params);
        let probs = sample_probs_graph(&mut tape, net_cfg, &bind, variant, &lc.clip, draw)?;
        let loss = tape.cross_entropy(probs, lc.label)?;
        loss_sum += tape.value(loss).scalar_value().to_f64();
        let grads = tape.backward(loss)?;
        for (name, g) in bind.collect_grads(&tape, &grads) {
            if !trainable(&name) {
                continue;
            }
            let scaled = g.scale(inv_b);
            match grad_sum.get_mut(&name) {
                Some(acc) => *acc = acc.add(&scaled)?,
                None => {
                    grad_sum.insert(name, scaled);
                }
            }
        }
    }
    let mu = S::from_f64(momentum);
    let lr_s = S::from_f64(lr);
    let mut names: Vec<&String> = grad_sum.keys().collect();
    names.sort(); // fixed update order for determinism
    for name in names {
        let g = &grad_sum[name];
        let v = velocities
            .entry(name.clone())
            .or_insert_with(|| Tensor::zeros(g.shape()));
        *v = v.scale(mu).add(g)?;
        let p = params.get_mut(name).expect("gradient for unknown parameter");
        *p = p.sub(&v.scale(lr_s))?;
    }
    Ok(loss_sum / batch.len() as f64)
}

fn run_stage<S: Scalar>(
    params: &mut ModelParams<S>,
    net_cfg: &NetConfig,
    data: &dyn ClipSource<S>,
    cfg: &TrainConfig,
    stage: u8,
    trainable: &dyn Fn(&str) -> bool,
) -> Result<Vec<(usize, f64)>> {
    if data.is_empty() {
        return Err(Error::Argument("empty training set".into()));
    }
    let (lr0, decay, decay_steps, max_steps) = match stage {
        1 => (cfg.stage1_lr, cfg.stage1_decay_factor, cfg.stage1_decay_steps, cfg.stage1_max_steps),
        _ => (cfg.stage2_lr, cfg.stage2_decay_factor, cfg.stage2_decay_steps, cfg.stage2_max_steps),
    };
    let mut rng = seeded_rng(cfg.seed.wrapping_add(stage as u64));
    let mut draw = seeded_rng(cfg.seed.wrapping_add(1000 + stage as u64));
    let mut velocities = HashMap::new();
    let mut curve = Vec::with_capacity(max_steps);
    for step in 0..max_steps {
        let batch: Vec<LabeledClip<S>> = (0..cfg.batch_size)
            .map(|_| data.get(rng.gen_range(0..data.len())))
            .collect::<Result<_>>()?;
        let lr = step_lr(lr0, decay, decay_steps, step);
        let loss = sgd_batch_step(
            params, net_cfg, cfg.variant, &batch, lr, cfg.momentum, &mut velocities, trainable,
            &mut draw,
        )?;
        if !loss.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite loss at stage {stage} step {step}"
            )));
        }
        curve.push((step, loss));
    }
    Ok(curve)
}

/// Stage 1: train the coarse feature extractor and the distillation block
/// while the recognizer stays frozen (bit-identical before and after).
pub fn train_stage1<S: Scalar>(
    params: &mut ModelParams<S>,
    net_cfg: &NetConfig,
    data: &dyn ClipSource<S>,
    cfg: &TrainConfig,
) -> Result<Vec<(usize, f64)>> {
    run_stage(params, net_cfg, data, cfg, 1, &|name| !name.starts_with("main."))
}

/// Stage 2: everything trains end-to-end.
pub fn train_stage2<S: Scalar>(
    params: &mut ModelParams<S>,
    net_cfg: &NetConfig,
    data: &dyn ClipSource<S>,
    cfg: &TrainConfig,
) -> Result<Vec<(usize, f64)>> {
    run_stage(params, net_cfg, data, cfg, 2, &|_| true)
}

/// Variant-appropriate full training: the distillation variant runs the two
/// stages in order, everything else trains in a single end-to-end stage.
pub fn train_full<S: Scalar>(
    params: &mut ModelParams<S>,
    net_cfg: &NetConfig,
    data: &dyn ClipSource<S>,
    cfg: &TrainConfig,
) -> Result<Vec<(usize, f64)>> {
    if cfg.variant == Variant::Tsd {
        let mut curve = train_stage1(params, net_cfg, data, cfg)?;
        let offset = curve.len();
        let c2 = train_stage2(params, net_cfg, data, cfg)?;
        curve.extend(c2.into_iter().map(|(s, l)| (s + offset, l)));
        Ok(curve)
    } else {
        train_stage2(params, net_cfg, data, cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub variant: Variant,
    pub t: usize,
    pub t_s: usize,
    pub q: usize,
    pub accuracy: f64,
    pub per_class: Vec<f64>,
    pub clips_evaluated: usize,
    pub clips_skipped: usize,
}

impl EvalReport {
    pub fn csv_header() -> &'static str {
        "variant,T,T_s,Q,accuracy"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.variant, self.t, self.t_s, self.q, self.accuracy
        )
    }
}

/// Q-clip evaluation: per video, draw Q length-`t` windows (center window
/// when Q == 1), run the variant's selection at `t_s` frames, average the
/// probability vectors and take the argmax (lowest class index on ties).
#[allow(clippy::too_many_arguments)]
pub fn evaluate_qclips<S: Scalar>(
    params: &ModelParams<S>,
    net_cfg: &NetConfig,
    data: &dyn ClipSource<S>,
    variant: Variant,
    t: usize,
    t_s: usize,
    q: usize,
    seed: u64,
) -> Result<EvalReport> {
    if q < 1 {
        return Err(Error::Argument("Q must be at least 1".into()));
    }
    let eval_cfg = NetConfig { t, t_s, ..net_cfg.clone() };
    let k = eval_cfg.classes;
    let mut rng = seeded_rng(seed);
    let mut correct = vec![0usize; k];
    let mut total = vec![0usize; k];
    let mut skipped = 0usize;
    for i in 0..data.len() {
        let lc = data.get(i)?;
        let video_len = lc.clip.shape()[0];
        if video_len < t {
            skipped += 1;
            continue;
        }
        let mut mean_probs = vec![0.0f64; k];
        for _ in 0..q {
            let offset = if q == 1 {
                (video_len - t) / 2
            } else {
                rng.gen_range(0..=video_len - t)
            };
            let window = frame_window(&lc.clip, offset, t)?;
            let probs = predict_window(params, &eval_cfg, variant, &window, q == 1, &mut rng)?;
            for (m, p) in mean_probs.iter_mut().zip(probs.data()) {
                *m += Scalar::to_f64(*p) / q as f64;
            }
        }
        let pred = argmax(&mean_probs);
        total[lc.label] += 1;
        if pred == lc.label {
            correct[lc.label] += 1;
        }
    }
    let clips_evaluated: usize = total.iter().sum();
    let n_correct: usize = correct.iter().sum();
    let per_class = correct
        .iter()
        .zip(&total)
        .map(|(&c, &n)| if n == 0 { 0.0 } else { c as f64 / n as f64 })
        .collect();
    Ok(EvalReport {
        variant,
        t,
        t_s,
        q,
        accuracy: if clips_evaluated == 0 {
            0.0
        } else {
            n_correct as f64 / clips_evaluated as f64
        },
        per_class,
        clips_evaluated,
        clips_skipped: skipped,
    })
}

/// Single-window probabilities under a variant's test-time selection rule.
/// `centered` pins the plain recognizer's consecutive window to the center
/// (the Q = 1 protocol); otherwise its position is drawn from `rng`.
pub fn predict_window<S: Scalar>(
    params: &ModelParams<S>,
    cfg: &NetConfig,
    variant: Variant,
    window: &Tensor<S>,
    centered: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Tensor<S>> {
    let t = window.shape()[0];
    let t_s = cfg.t_s;
    let mut tape = Tape::new();
    let bind = ParamBinding::bind(&mut tape, params);
    let x = tape.leaf(standardize(window));
    let distilled = match variant {
        Variant::I3d => {
            let offset = if centered || t == t_s {
                (t - t_s) / 2
            } else {
                rng.gen_range(0..=t - t_s)
            };
            let p = selectors::consecutive_p::<S>(t, t_s, offset)?;
            let pid = tape.leaf(p.values().clone());
            distill_on(&mut tape, x, pid)?
        }
        Variant::Random => {
            let p = selectors::random_p::<S>(t, t_s, rng.gen())?;
            let pid = tape.leaf(p.values().clone());
            distill_on(&mut tape, x, pid)?
        }
        Variant::Uniform => {
            let p = selectors::uniform_p::<S>(t, t_s, 0)?;
            let pid = tape.leaf(p.values().clone());
            distill_on(&mut tape, x, pid)?
        }
        Variant::Attention => {
            let w = attention_weights(params)?;
            let p = selectors::attention_p_test(&w, t_s)?;
            let pid = tape.leaf(p.values().clone());
            distill_on(&mut tape, x, pid)?
        }
        Variant::Tsd => {
            let f = extractor_forward(&mut tape, cfg, &bind, x)?;
            let p = compute_transform_on(
                &mut tape,
                f,
                bind.id("tsd.w_alpha"),
                bind.id("tsd.w_beta"),
                bind.id("tsd.w_gamma"),
            )?;
            distill_on(&mut tape, x, p)?
        }
    };
    let probs = main_forward(&mut tape, cfg, &bind, distilled)?;
    tape.value(probs).reshape(&[cfg.classes])
}

/// Argmax with ties broken by the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub fn write_loss_csv(path: &std::path::Path, curve: &[(usize, f64)]) -> Result<()> {
    let mut out = String::from("step,loss\n");
    for (s, l) in curve {
        out.push_str(&format!("{s},{l}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::init_params;

    fn tiny_cfg() -> NetConfig {
        NetConfig {
            input_hw: 16,
            extractor_hw: 8,
            extractor_channels: [4, 6],
            main_channels: [6, 8],
            t: 6,
            t_s: 2,
            classes: 3,
            ..NetConfig::default()
        }
    }

    fn tiny_data(cfg: &NetConfig, n: usize) -> Vec<LabeledClip<f32>> {
        let spec = crate::synthvid::SynthSpec {
            t: cfg.t,
            h: cfg.input_hw,
            w: cfg.input_hw,
            classes: cfg.classes,
            signal_frames: 2,
            noise_level: 0.02,
            seed: 5,
        };
        (0..n)
            .map(|i| crate::synthvid::generate_clip(&spec, i % cfg.classes, i as u64).unwrap())
            .collect()
    }

    #[test]
    fn cross_entropy_matches_formula() {
        let probs = [0.1f64, 0.7, 0.2];
        for (label, &p) in probs.iter().enumerate() {
            assert!((cross_entropy(&probs, label).unwrap() + p.ln()).abs() < 1e-12);
        }
        assert!(cross_entropy(&probs, 3).is_err());
        assert_eq!(cross_entropy(&[1.0f64, 0.0], 0).unwrap(), 0.0);
    }

    #[test]
    fn zero_steps_leave_params_unchanged() {
        let cfg = tiny_cfg();
        let mut rng = seeded_rng(1);
        let mut params = init_params::<f32, _>(&cfg, &mut rng);
        let before = params.clone();
        let data = tiny_data(&cfg, 6);
        let tc = TrainConfig {
            stage1_max_steps: 0,
            stage2_max_steps: 0,
            variant: Variant::Tsd,
            ..TrainConfig::default()
        };
        train_full(&mut params, &cfg, &data, &tc).unwrap();
        assert_eq!(params, before);
    }

    #[test]
    fn stage1_freezes_main_network() {
        let cfg = tiny_cfg();
        let mut rng = seeded_rng(2);
        let mut params = init_params::<f32, _>(&cfg, &mut rng);
        let main_before: Vec<(String, Tensor<f32>)> = params
            .group("main")
            .map(|(n, t)| (n.to_string(), t.clone()))
            .collect();
        let data = tiny_data(&cfg, 6);
        let tc = TrainConfig {
            stage1_max_steps: 3,
            batch_size: 2,
            variant: Variant::Tsd,
            ..TrainConfig::default()
        };
        train_stage1(&mut params, &cfg, &data, &tc).unwrap();
        for (n, before) in &main_before {
            assert_eq!(params.get(n).unwrap(), before, "{n} changed in stage 1");
        }
        // something on the client side did move
        assert!(params.group("extractor").any(|(n, t)| {
            t != init_params::<f32, _>(&cfg, &mut seeded_rng(2)).get(n).unwrap()
        }));
    }

    #[test]
    fn stage2_reaches_all_parameter_groups() {
        let cfg = tiny_cfg();
        let mut rng = seeded_rng(3);
        let params = init_params::<f32, _>(&cfg, &mut rng);
        let data = tiny_data(&cfg, 3);
        // single-batch gradient probe through the full graph
        let mut tape = Tape::new();
        let bind = ParamBinding::bind(&mut tape, &params);
        let mut draw = seeded_rng(9);
        let probs =
            sample_probs_graph(&mut tape, &cfg, &bind, Variant::Tsd, &data[0].clip, &mut draw)
                .unwrap();
        let loss = tape.cross_entropy(probs, data[0].label).unwrap();
        let grads = tape.backward(loss).unwrap();
        for group in ["extractor", "tsd", "main"] {
            let norm: f64 = bind
                .iter()
                .filter(|(n, _)| n.starts_with(group))
                .map(|(_, id)| {
                    grads
                        .get_or_zero(id, tape.value(id).shape())
                        .data()
                        .iter()
                        .map(|&v| (v as f64) * (v as f64))
                        .sum::<f64>()
                })
                .sum();
            assert!(norm > 0.0, "no gradient reached group {group}");
        }
    }

    #[test]
    fn training_is_seed_deterministic() {
        let cfg = tiny_cfg();
        let data = tiny_data(&cfg, 6);
        let tc = TrainConfig {
            stage1_max_steps: 2,
            stage2_max_steps: 2,
            batch_size: 2,
            variant: Variant::Tsd,
            seed: 7,
            ..TrainConfig::default()
        };
        let run = || {
            let mut params = init_params::<f32, _>(&cfg, &mut seeded_rng(4));
            let curve = train_full(&mut params, &cfg, &data, &tc).unwrap();
            (params, curve)
        };
        let (p1, c1) = run();
        let (p2, c2) = run();
        assert_eq!(p1, p2);
        assert_eq!(c1, c2);
    }

    #[test]
    fn q1_equals_center_window_prediction() {
        let cfg = tiny_cfg();
        let mut rng = seeded_rng(5);
        let params = init_params::<f32, _>(&cfg, &mut rng);
        let data = tiny_data(&cfg, 6);
        let report = evaluate_qclips(
            &params, &cfg, &data, Variant::Uniform, cfg.t, cfg.t_s, 1, 11,
        )
        .unwrap();
        // recompute by hand
        let mut correct = 0;
        for lc in &data {
            let window = frame_window(&lc.clip, 0, cfg.t).unwrap();
            let probs =
                predict_window(&params, &cfg, Variant::Uniform, &window, true, &mut seeded_rng(0))
                    .unwrap();
            let v: Vec<f64> = probs.data().iter().map(|&p| p as f64).collect();
            if argmax(&v) == lc.label {
                correct += 1;
            }
        }
        assert_eq!(report.accuracy, correct as f64 / data.len() as f64);
        assert_eq!(report.clips_evaluated, data.len());
    }

    #[test]
    fn evaluation_is_deterministic() {
        let cfg = tiny_cfg();
        let params = init_params::<f32, _>(&cfg, &mut seeded_rng(6));
        let data = tiny_data(&cfg, 8);
        let r1 = evaluate_qclips(&params, &cfg, &data, Variant::Random, cfg.t, cfg.t_s, 3, 21)
            .unwrap();
        let r2 = evaluate_qclips(&params, &cfg, &data, Variant::Random, cfg.t, cfg.t_s, 3, 21)
            .unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn short_videos_are_skipped_and_counted() {
        let cfg = tiny_cfg();
        let params = init_params::<f32, _>(&cfg, &mut seeded_rng(7));
        let mut data = tiny_data(&cfg, 4);
        // shorten one clip below T
        let lc = &mut data[0];
        lc.clip = frame_window(&lc.clip, 0, cfg.t - 1).unwrap();
        let report =
            evaluate_qclips(&params, &cfg, &data, Variant::Uniform, cfg.t, cfg.t_s, 1, 0).unwrap();
        assert_eq!(report.clips_skipped, 1);
        assert_eq!(report.clips_evaluated, 3);
    }

    #[test]
    fn i3d_with_ts_equal_t_is_plain_recognition() {
        let cfg = NetConfig { t_s: 6, ..tiny_cfg() };
        let params = init_params::<f32, _>(&cfg, &mut seeded_rng(8));
        let data = tiny_data(&cfg, 5);
        for lc in &data {
            let probs =
                predict_window(&params, &cfg, Variant::I3d, &lc.clip, true, &mut seeded_rng(1)).unwrap();
            let direct = crate::nets::recognize(&cfg, &params, &standardize(&lc.clip)).unwrap();
            for (a, b) in probs.data().iter().zip(direct.data()) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }
}
