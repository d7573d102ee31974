//! Split-deployment cost accounting: parameter counts, FLOP counts and
//! transmission volume per variant, with the client/cloud attribution the
//! distilled pipeline makes possible. Pure arithmetic, no sockets.
//!
//! Convention: one multiply-accumulate = 2 FLOPs; elementwise ops cost one
//! FLOP per element; a softmax column of length n costs 4n.

use crate::nets::{ModelParams, NetConfig};
use crate::scalar::Scalar;
use crate::train::Variant;
use crate::{Error, Result};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Deployment {
    CloudOnly,
    Split,
}

impl Deployment {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cloud" | "cloud_only" => Ok(Deployment::CloudOnly),
            "split" => Ok(Deployment::Split),
            other => Err(Error::Argument(format!("unknown deployment '{other}'"))),
        }
    }
}

impl fmt::Display for Deployment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Deployment::CloudOnly => "cloud",
            Deployment::Split => "split",
        })
    }
}

/// Shaped operation descriptor for FLOP counting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OpDesc {
    Matmul { m: usize, k: usize, n: usize },
    Conv3d { kt: usize, kh: usize, kw: usize, cin: usize, cout: usize, out_t: usize, out_h: usize, out_w: usize },
    Depthwise3d { kt: usize, kh: usize, kw: usize, c: usize, out_t: usize, out_h: usize, out_w: usize },
    Elementwise { count: usize },
    SoftmaxCols { rows: usize, cols: usize },
}

pub fn count_flops(d: &OpDesc) -> Result<u64> {
    let flops = match *d {
        OpDesc::Matmul { m, k, n } => {
            check_shaped(&[m, k, n])?;
            2 * m as u64 * k as u64 * n as u64
        }
        OpDesc::Conv3d { kt, kh, kw, cin, cout, out_t, out_h, out_w } => {
            check_shaped(&[kt, kh, kw, cin, cout, out_t, out_h, out_w])?;
            2 * (kt * kh * kw * cin * cout) as u64 * (out_t * out_h * out_w) as u64
        }
        OpDesc::Depthwise3d { kt, kh, kw, c, out_t, out_h, out_w } => {
            check_shaped(&[kt, kh, kw, c, out_t, out_h, out_w])?;
            2 * (kt * kh * kw * c) as u64 * (out_t * out_h * out_w) as u64
        }
        OpDesc::Elementwise { count } => {
            check_shaped(&[count])?;
            count as u64
        }
        OpDesc::SoftmaxCols { rows, cols } => {
            check_shaped(&[rows, cols])?;
            4 * rows as u64 * cols as u64
        }
    };
    Ok(flops)
}

fn check_shaped(extents: &[usize]) -> Result<()> {
    if extents.iter().any(|&e| e == 0) {
        return Err(Error::Argument("unshaped descriptor (zero extent)".into()));
    }
    Ok(())
}

pub fn total_flops(descs: &[OpDesc]) -> Result<u64> {
    descs.iter().map(count_flops).sum()
}

/// Per-layer descriptors for the coarse feature extractor on a length-`t` clip.
pub fn extractor_layers(cfg: &NetConfig, t: usize) -> Vec<OpDesc> {
    let cin = cfg.in_channels;
    let [e1, e2] = cfg.extractor_channels;
    let eh = cfg.extractor_hw;
    let fh = eh / 2;
    vec![
        OpDesc::Elementwise { count: t * eh * eh * cin }, // input pool
        OpDesc::Depthwise3d { kt: 1, kh: 3, kw: 3, c: cin, out_t: t, out_h: eh, out_w: eh },
        OpDesc::Conv3d { kt: 1, kh: 1, kw: 1, cin, cout: e1, out_t: t, out_h: eh, out_w: eh },
        OpDesc::Elementwise { count: 2 * t * eh * eh * e1 }, // bias + relu
        OpDesc::Depthwise3d { kt: 1, kh: 3, kw: 3, c: e1, out_t: t, out_h: fh, out_w: fh },
        OpDesc::Conv3d { kt: 1, kh: 1, kw: 1, cin: e1, cout: e2, out_t: t, out_h: fh, out_w: fh },
        OpDesc::Elementwise { count: 2 * t * fh * fh * e2 }, // bias + relu
    ]
}

/// Per-layer descriptors for the distillation block over a T×fh×fw×C'
/// feature map, plus the Y = XP application to the raw frames.
pub fn tsd_layers(cfg: &NetConfig, t: usize, t_s: usize) -> Vec<OpDesc> {
    let c = cfg.extractor_channels[1];
    let fh = cfg.input_hw / 4;
    let hwc = fh * fh * c;
    let frame = cfg.input_hw * cfg.input_hw * cfg.in_channels;
    vec![
        // w_alpha path
        OpDesc::Conv3d { kt: 3, kh: 3, kw: 3, cin: c, cout: c, out_t: t, out_h: fh, out_w: fh },
        // w_beta on the transposed layout: time is the channel axis
        OpDesc::Conv3d { kt: 1, kh: 1, kw: 1, cin: t, cout: t_s, out_t: fh, out_h: fh, out_w: c },
        // w_gamma path
        OpDesc::Conv3d { kt: 3, kh: 3, kw: 3, cin: c, cout: c, out_t: t, out_h: fh, out_w: fh },
        // logits and normalization
        OpDesc::Matmul { m: t, k: hwc, n: t_s },
        OpDesc::SoftmaxCols { rows: t, cols: t_s },
        // distillation Y = XP over raw frames
        OpDesc::Matmul { m: t_s, k: t, n: frame },
    ]
}

/// Frame gather/scaling cost for the non-learned selectors.
pub fn selection_layers(cfg: &NetConfig, t: usize, t_s: usize, variant: Variant) -> Vec<OpDesc> {
    let frame = cfg.input_hw * cfg.input_hw * cfg.in_channels;
    match variant {
        Variant::Tsd => tsd_layers(cfg, t, t_s),
        Variant::Attention => vec![
            OpDesc::SoftmaxCols { rows: t, cols: 1 },
            OpDesc::Elementwise { count: t_s * frame },
        ],
        // one-hot gather of T_s frames; identity selection is free
        _ if t_s == t => vec![],
        _ => vec![OpDesc::Elementwise { count: t_s * frame }],
    }
}

/// Per-layer descriptors for the recognizer on a length-`t_s` input.
pub fn main_layers(cfg: &NetConfig, t_s: usize) -> Vec<OpDesc> {
    let cin = cfg.in_channels;
    let [m1, m2] = cfg.main_channels;
    let h1 = cfg.input_hw / 2;
    let h2 = cfg.input_hw / 4;
    let k = cfg.classes;
    vec![
        OpDesc::Conv3d { kt: 3, kh: 3, kw: 3, cin, cout: m1, out_t: t_s, out_h: h1, out_w: h1 },
        OpDesc::Elementwise { count: 2 * t_s * h1 * h1 * m1 },
        OpDesc::Conv3d { kt: 3, kh: 3, kw: 3, cin: m1, cout: m2, out_t: t_s, out_h: h2, out_w: h2 },
        OpDesc::Elementwise { count: 2 * t_s * h2 * h2 * m2 },
        OpDesc::Elementwise { count: t_s * h2 * h2 * m2 }, // global average pool
        OpDesc::Matmul { m: k, k: m2, n: 1 },
        OpDesc::Elementwise { count: k },
        OpDesc::SoftmaxCols { rows: k, cols: 1 },
    ]
}

/// Extractor cost runs only for variants that compute coarse features.
fn client_side_layers(cfg: &NetConfig, t: usize, t_s: usize, variant: Variant) -> Vec<OpDesc> {
    let mut layers = Vec::new();
    if variant == Variant::Tsd {
        layers.extend(extractor_layers(cfg, t));
    }
    layers.extend(selection_layers(cfg, t, t_s, variant));
    layers
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostReport {
    pub variant: Variant,
    pub deployment: Deployment,
    pub t: usize,
    pub t_s: usize,
    pub q: usize,
    pub client_params: usize,
    pub cloud_params: usize,
    pub client_flops: u64,
    pub cloud_flops: u64,
    pub frames_processed_client: usize,
    pub frames_transmitted: usize,
    pub frames_processed_cloud: usize,
    pub bytes_transmitted: usize,
}

impl CostReport {
    pub fn csv_header() -> &'static str {
        "variant,deployment,Q,T,T_s,client_params,client_flops,frames_processed_client,\
         frames_transmitted,bytes_transmitted,cloud_params,cloud_flops,frames_processed_cloud"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.variant,
            self.deployment,
            self.q,
            self.t,
            self.t_s,
            self.client_params,
            self.client_flops,
            self.frames_processed_client,
            self.frames_transmitted,
            self.bytes_transmitted,
            self.cloud_params,
            self.cloud_flops,
            self.frames_processed_cloud
        )
    }
}

/// Account one evaluation session of Q clips of length T distilled to T_s.
///
/// Under `Split`, the extractor + selection (and the distillation itself)
/// are attributed to the client and only the T_s distilled frames travel;
/// under `CloudOnly` the raw clip travels and every op runs on the cloud.
/// The op set is identical either way, so FLOPs are conserved across
/// deployments.
#[allow(clippy::too_many_arguments)]
pub fn simulate_session<S: Scalar>(
    params: &ModelParams<S>,
    cfg: &NetConfig,
    variant: Variant,
    deployment: Deployment,
    t: usize,
    t_s: usize,
    q: usize,
) -> Result<CostReport> {
    if t_s == 0 || t_s > t || q == 0 {
        return Err(Error::Argument(format!(
            "need 1 <= T_s <= T and Q >= 1, got T={t}, T_s={t_s}, Q={q}"
        )));
    }
    if deployment == Deployment::Split && !variant.has_client_component() {
        return Err(Error::Argument(format!(
            "variant {variant} has no client component; split deployment is invalid"
        )));
    }
    let scan_cfg = NetConfig { t, t_s, ..cfg.clone() };
    let client_ops = total_flops(&client_side_layers(&scan_cfg, t, t_s, variant))? * q as u64;
    let cloud_ops = total_flops(&main_layers(&scan_cfg, t_s))? * q as u64;

    let client_params = match variant {
        Variant::Tsd => params.group_param_count("extractor") + params.group_param_count("tsd"),
        Variant::Attention => params.group_param_count("attn"),
        _ => 0,
    };
    let cloud_params = params.group_param_count("main");

    let frame_bytes = cfg.input_hw * cfg.input_hw * cfg.in_channels * S::BYTES;
    let (client_flops, cloud_flops, frames_client, frames_tx, frames_cloud) = match deployment {
        Deployment::Split => (client_ops, cloud_ops, q * t, q * t_s, q * t_s),
        Deployment::CloudOnly => (0, client_ops + cloud_ops, 0, q * t, q * t),
    };

    Ok(CostReport {
        variant,
        deployment,
        t,
        t_s,
        q,
        client_params,
        cloud_params,
        client_flops,
        cloud_flops,
        frames_processed_client: frames_client,
        frames_transmitted: frames_tx,
        frames_processed_cloud: frames_cloud,
        bytes_transmitted: frames_tx * frame_bytes,
    })
}
