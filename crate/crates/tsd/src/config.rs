//! Run configuration: a flat `key=value` text file plus flag overrides.
//! Unknown keys are rejected and every run can echo its fully resolved
//! config, which replays the run exactly.

use crate::nets::NetConfig;
use crate::saasbench::Deployment;
use crate::synthvid::SynthSpec;
use crate::train::{TrainConfig, Variant};
use crate::{Error, Result};
use std::path::Path;

#[derive(Debug, Clone)]
pub struct RunConfig {
    // task geometry
    pub t: usize,
    pub t_s: usize,
    pub q: usize,
    pub frame_hw: usize,
    pub classes: usize,
    pub signal_frames: usize,
    pub noise_level: f64,
    // dataset sizes
    pub train_clips: usize,
    pub test_clips: usize,
    // model widths
    pub extractor_channels: [usize; 2],
    pub main_channels: [usize; 2],
    // training
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
    // run
    pub seed: u64,
    pub variant: Variant,
    pub deployment: Deployment,
}

impl Default for RunConfig {
    fn default() -> Self {
        let nc = NetConfig::default();
        let tc = TrainConfig::default();
        let ss = SynthSpec::default();
        RunConfig {
            t: nc.t,
            t_s: nc.t_s,
            q: tc.q,
            frame_hw: nc.input_hw,
            classes: nc.classes,
            signal_frames: ss.signal_frames,
            noise_level: ss.noise_level,
            train_clips: 4000,
            test_clips: 1000,
            extractor_channels: nc.extractor_channels,
            main_channels: nc.main_channels,
            stage1_lr: tc.stage1_lr,
            stage1_decay_factor: tc.stage1_decay_factor,
            stage1_decay_steps: tc.stage1_decay_steps,
            stage1_max_steps: tc.stage1_max_steps,
            stage2_lr: tc.stage2_lr,
            stage2_decay_factor: tc.stage2_decay_factor,
            stage2_decay_steps: tc.stage2_decay_steps,
            stage2_max_steps: tc.stage2_max_steps,
            batch_size: tc.batch_size,
            momentum: tc.momentum,
            seed: tc.seed,
            variant: tc.variant,
            deployment: Deployment::Split,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value '{value}' for key '{key}'")))
}

fn parse_pair(key: &str, value: &str) -> Result<[usize; 2]> {
    let parts: Vec<&str> = value.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::Config(format!(
            "key '{key}' wants two comma-separated integers, got '{value}'"
        )));
    }
    Ok([parse_num(key, parts[0].trim())?, parse_num(key, parts[1].trim())?])
}

impl RunConfig {
    /// Apply one `key=value` assignment; unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "t" => self.t = parse_num(key, value)?,
            "t_s" => self.t_s = parse_num(key, value)?,
            "q" => self.q = parse_num(key, value)?,
            "frame_hw" => self.frame_hw = parse_num(key, value)?,
            "classes" => self.classes = parse_num(key, value)?,
            "signal_frames" => self.signal_frames = parse_num(key, value)?,
            "noise_level" => self.noise_level = parse_num(key, value)?,
            "train_clips" => self.train_clips = parse_num(key, value)?,
            "test_clips" => self.test_clips = parse_num(key, value)?,
            "extractor_channels" => self.extractor_channels = parse_pair(key, value)?,
            "main_channels" => self.main_channels = parse_pair(key, value)?,
            "stage1_lr" => self.stage1_lr = parse_num(key, value)?,
            "stage1_decay_factor" => self.stage1_decay_factor = parse_num(key, value)?,
            "stage1_decay_steps" => self.stage1_decay_steps = parse_num(key, value)?,
            "stage1_max_steps" => self.stage1_max_steps = parse_num(key, value)?,
            "stage2_lr" => self.stage2_lr = parse_num(key, value)?,
            "stage2_decay_factor" => self.stage2_decay_factor = parse_num(key, value)?,
            "stage2_decay_steps" => self.stage2_decay_steps = parse_num(key, value)?,
            "stage2_max_steps" => self.stage2_max_steps = parse_num(key, value)?,
            "batch_size" => self.batch_size = parse_num(key, value)?,
            "momentum" => self.momentum = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "variant" => self.variant = Variant::parse(value)?,
            "deployment" => self.deployment = Deployment::parse(value)?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key=value, got '{line}'", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// The fully resolved config, re-parseable by `apply_text`.
    pub fn resolved(&self) -> String {
        format!(
            "t={}\nt_s={}\nq={}\nframe_hw={}\nclasses={}\nsignal_frames={}\nnoise_level={}\n\
             train_clips={}\ntest_clips={}\nextractor_channels={},{}\nmain_channels={},{}\n\
             stage1_lr={}\nstage1_decay_factor={}\nstage1_decay_steps={}\nstage1_max_steps={}\n\
             stage2_lr={}\nstage2_decay_factor={}\nstage2_decay_steps={}\nstage2_max_steps={}\n\
             batch_size={}\nmomentum={}\nseed={}\nvariant={}\ndeployment={}\n",
            self.t,
            self.t_s,
            self.q,
            self.frame_hw,
            self.classes,
            self.signal_frames,
            self.noise_level,
            self.train_clips,
            self.test_clips,
            self.extractor_channels[0],
            self.extractor_channels[1],
            self.main_channels[0],
            self.main_channels[1],
            self.stage1_lr,
            self.stage1_decay_factor,
            self.stage1_decay_steps,
            self.stage1_max_steps,
            self.stage2_lr,
            self.stage2_decay_factor,
            self.stage2_decay_steps,
            self.stage2_max_steps,
            self.batch_size,
            self.momentum,
            self.seed,
            self.variant,
            self.deployment,
        )
    }

    pub fn synth_spec(&self) -> SynthSpec {
        SynthSpec {
            t: self.t,
            h: self.frame_hw,
            w: self.frame_hw,
            classes: self.classes,
            signal_frames: self.signal_frames,
            noise_level: self.noise_level,
            seed: self.seed,
        }
    }

    pub fn net_config(&self) -> NetConfig {
        NetConfig {
            input_hw: self.frame_hw,
            extractor_hw: self.frame_hw / 2,
            in_channels: 3,
            extractor_channels: self.extractor_channels,
            main_channels: self.main_channels,
            t: self.t,
            t_s: self.t_s,
            classes: self.classes,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            stage1_lr: self.stage1_lr,
            stage1_decay_factor: self.stage1_decay_factor,
            stage1_decay_steps: self.stage1_decay_steps,
            stage1_max_steps: self.stage1_max_steps,
            stage2_lr: self.stage2_lr,
            stage2_decay_factor: self.stage2_decay_factor,
            stage2_decay_steps: self.stage2_decay_steps,
            stage2_max_steps: self.stage2_max_steps,
            batch_size: self.batch_size,
            momentum: self.momentum,
            seed: self.seed,
            variant: self.variant,
            q: self.q,
        }
    }
}
