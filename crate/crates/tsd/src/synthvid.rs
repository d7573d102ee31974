//! Deterministic synthetic clips for desk-scale experiments.
//!
//! Each clip is a static background plus per-frame Gaussian noise; a
//! class-keyed bright pattern moves through exactly `signal_frames`
//! contiguous frames at a random temporal position. The other frames carry
//! no class information at all, so a sampler that misses the signal block
//! has nothing to classify — the premise the distillation block exploits.

use crate::scalar::Scalar;
use crate::tensor::Tensor;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use rand_chacha::ChaCha8Rng;
use std::io::{Read, Write};
use std::path::Path;

/// Side length of the pattern patch.
pub const PATCH: usize = 16;
/// Pattern brightness over the background.
pub const PATTERN_AMPLITUDE: f64 = 0.75;
/// Background gray level.
pub const BACKGROUND_LEVEL: f64 = 0.15;
/// Pattern drift per signal frame, in pixels.
pub const DRIFT_STEP: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub t: usize,
    pub h: usize,
    pub w: usize,
    pub classes: usize,
    /// Number of contiguous frames carrying the pattern.
    pub signal_frames: usize,
    pub noise_level: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            t: 16,
            h: 32,
            w: 32,
            classes: 8,
            signal_frames: 2,
            noise_level: 0.05,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.signal_frames == 0 || self.signal_frames > self.t {
            return Err(Error::Argument(format!(
                "need 1 <= signal_frames <= T, got k={} T={}",
                self.signal_frames, self.t
            )));
        }
        if self.classes < 2 {
            return Err(Error::Argument("need at least 2 classes".into()));
        }
        if self.noise_level < 0.0 {
            return Err(Error::Argument("noise_level must be >= 0".into()));
        }
        let patch = self.patch();
        if patch < 4 || self.w < patch + DRIFT_STEP * (self.signal_frames - 1) {
            return Err(Error::Argument(format!(
                "frame {}x{} too small for the pattern",
                self.h, self.w
            )));
        }
        Ok(())
    }

    /// Pattern side length: [`PATCH`], shrunk to fit small frames.
    pub fn patch(&self) -> usize {
        PATCH.min(self.h / 2).min(self.w / 2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledClip<S: Scalar> {
    pub clip: Tensor<S>,
    pub label: usize,
}

fn mix_seed(a: u64, b: u64, c: u64) -> u64 {
    // splitmix-style stirring so nearby (seed, clip) pairs decorrelate
    let mut z = a
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(b.wrapping_mul(0xBF58_476D_1CE4_E5B9))
        .wrapping_add(c.wrapping_mul(0x94D0_49BB_1331_11EB));
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z
}

/// Class-keyed pattern patch: `patch`×`patch` mask in [0,1]. The shape is
/// keyed to `label % 4`, the vertical band and drift direction to `label / 4`.
pub fn pattern_mask(label: usize, patch: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0f64; patch]; patch];
    let c = patch as isize / 2;
    let p = patch as isize;
    for y in 0..patch {
        for x in 0..patch {
            let (yi, xi) = (y as isize, x as isize);
            let on = match label % 4 {
                // filled square
                0 => yi >= p / 8 && yi < p - p / 8 && xi >= p / 8 && xi < p - p / 8,
                // plus sign
                1 => (c - p / 4..c + p / 4).contains(&yi) || (c - p / 4..c + p / 4).contains(&xi),
                // diagonal stripe
                2 => (yi - xi).abs() <= p / 4,
                // hollow ring
                _ => {
                    let d2 = (yi - c) * (yi - c) + (xi - c) * (xi - c);
                    let (r0, r1) = (p / 4, p / 2 - 1);
                    (r0 * r0..=r1 * r1).contains(&d2)
                }
            };
            if on {
                m[y][x] = 1.0;
            }
        }
    }
    m
}

/// Vertical band (top row of the pattern) for a label: classes 0..K/2 sit in
/// the top half, the rest in the bottom half.
pub fn pattern_band(label: usize, classes: usize, h: usize) -> usize {
    if label < classes.div_ceil(2) {
        h / 8
    } else {
        h / 2
    }
}

/// Deterministic clip for (spec, label, seed). The background and the signal
/// block position come from a label-independent stream, so non-signal frames
/// are identical across labels for a fixed seed.
pub fn generate_clip<S: Scalar>(
    spec: &SynthSpec,
    label: usize,
    seed: u64,
) -> Result<LabeledClip<S>> {
    spec.validate()?;
    if label >= spec.classes {
        return Err(Error::Argument(format!(
            "label {} out of range for {} classes",
            label, spec.classes
        )));
    }
    let (t, h, w, c) = (spec.t, spec.h, spec.w, 3usize);
    let k = spec.signal_frames;
    let mut bg_rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.seed, seed, 0));
    let normal = Normal::new(0.0f64, 1.0).unwrap();

    // static background, shared across labels
    let mut background = vec![0.0f64; h * w * c];
    for v in background.iter_mut() {
        *v = BACKGROUND_LEVEL + 0.03 * normal.sample(&mut bg_rng);
    }

    // temporal position of the signal block, also label-independent
    let t0 = bg_rng.gen_range(0..=t - k);

    // per-frame noise
    let mut data = vec![S::zero(); t * h * w * c];
    for ft in 0..t {
        for i in 0..h * w * c {
            let noise = if spec.noise_level > 0.0 {
                spec.noise_level * normal.sample(&mut bg_rng)
            } else {
                0.0
            };
            data[ft * h * w * c + i] = S::from_f64((background[i] + noise).clamp(0.0, 1.0));
        }
    }

    // stamp the class pattern into the signal frames
    let mut sig_rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.seed, seed, 1 + label as u64));
    let patch = spec.patch();
    let mask = pattern_mask(label, patch);
    let band_y = pattern_band(label, spec.classes, h).min(h - patch);
    let max_x = w - patch - DRIFT_STEP * (k - 1);
    let base_x = sig_rng.gen_range(0..=max_x);
    let dir: isize = if (label / 4) % 2 == 0 { 1 } else { -1 };
    for phase in 0..k {
        let ft = t0 + phase;
        let x_off = if dir > 0 {
            base_x + DRIFT_STEP * phase
        } else {
            base_x + DRIFT_STEP * (k - 1 - phase)
        };
        for py in 0..patch {
            for px in 0..patch {
                if mask[py][px] == 0.0 {
                    continue;
                }
                let (y, x) = (band_y + py, x_off + px);
                for ch in 0..c {
                    // brighter in the label-keyed channel
                    let boost = if ch == label % 3 { 1.0 } else { 0.35 };
                    let idx = ((ft * h + y) * w + x) * c + ch;
                    let v = data[idx].to_f64() + PATTERN_AMPLITUDE * boost;
                    data[idx] = S::from_f64(v.clamp(0.0, 1.0));
                }
            }
        }
    }

    Ok(LabeledClip {
        clip: Tensor::from_vec(&[t, h, w, c], data)?,
        label,
    })
}

const CLIP_MAGIC: &[u8; 4] = b"TSDC";
const CLIP_VERSION: u32 = 1;

/// Little-endian clip file: magic "TSDC", version u32, label u32, T,H,W,C
/// u32 each, dtype code u8, 3 pad bytes, then T·H·W·C scalars row-major.
pub fn write_clip<S: Scalar>(path: &Path, lc: &LabeledClip<S>) -> Result<()> {
    let shape = lc.clip.shape();
    if shape.len() != 4 {
        return Err(Error::Dimension(format!(
            "clip must be rank 4, got {:?}",
            shape
        )));
    }
    let mut buf = Vec::with_capacity(32 + lc.clip.len() * S::BYTES);
    buf.extend_from_slice(CLIP_MAGIC);
    buf.extend_from_slice(&CLIP_VERSION.to_le_bytes());
    buf.extend_from_slice(&(lc.label as u32).to_le_bytes());
    for &e in shape {
        buf.extend_from_slice(&(e as u32).to_le_bytes());
    }
    buf.push(S::DTYPE_CODE);
    buf.extend_from_slice(&[0, 0, 0]);
    for &v in lc.clip.data() {
        v.write_le(&mut buf);
    }
    std::fs::write(path, buf)?;
    Ok(())
}

fn fmt_err<T>(offset: u64, msg: impl Into<String>) -> Result<T> {
    Err(Error::Format { offset, msg: msg.into() })
}

pub fn read_clip<S: Scalar>(path: &Path) -> Result<LabeledClip<S>> {
    let mut file = std::fs::File::open(path)?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)?;
    parse_clip(&bytes)
}

pub fn parse_clip<S: Scalar>(bytes: &[u8]) -> Result<LabeledClip<S>> {
    if bytes.len() < 32 {
        return fmt_err(bytes.len() as u64, "truncated header (need 32 bytes)");
    }
    if &bytes[0..4] != CLIP_MAGIC {
        return fmt_err(0, "bad magic, expected \"TSDC\"");
    }
    let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != CLIP_VERSION {
        return fmt_err(4, format!("unsupported version {version}"));
    }
    let label = u32_at(8) as usize;
    let dims: Vec<usize> = (0..4).map(|i| u32_at(12 + 4 * i) as usize).collect();
    for (i, &d) in dims.iter().enumerate() {
        if d == 0 {
            return fmt_err(12 + 4 * i as u64, "zero extent");
        }
    }
    let dtype = bytes[28];
    if dtype != S::DTYPE_CODE {
        return fmt_err(28, format!("dtype code {} does not match reader", dtype));
    }
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or(Error::Format { offset: 12, msg: "dimension product overflows".into() })?;
    let payload_len = count
        .checked_mul(S::BYTES)
        .ok_or(Error::Format { offset: 12, msg: "payload size overflows".into() })?;
    let body = &bytes[32..];
    if body.len() != payload_len {
        return fmt_err(
            32,
            format!("payload is {} bytes, header wants {}", body.len(), payload_len),
        );
    }
    let data: Vec<S> = body.chunks_exact(S::BYTES).map(S::read_le).collect();
    Ok(LabeledClip {
        clip: Tensor::from_vec(&dims, data)?,
        label,
    })
}

/// Lazily generated dataset: clip i has a balanced label and its own seed.
#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub spec: SynthSpec,
    pub len: usize,
    pub seed: u64,
}

impl SynthDataset {
    pub fn new(spec: SynthSpec, len: usize, seed: u64) -> Self {
        SynthDataset { spec, len, seed }
    }

    pub fn label_of(&self, i: usize) -> usize {
        i % self.spec.classes
    }

    pub fn get<S: Scalar>(&self, i: usize) -> Result<LabeledClip<S>> {
        generate_clip(&self.spec, self.label_of(i), self.seed.wrapping_add(i as u64))
    }
}

/// Write `ds` as a directory of clip files plus a manifest listing
/// `relative_path label` per line.
pub fn write_dataset<S: Scalar>(ds: &SynthDataset, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut manifest = String::new();
    for i in 0..ds.len {
        let lc: LabeledClip<S> = ds.get(i)?;
        let name = format!("clip_{i:05}.tsdc");
        write_clip(&dir.join(&name), &lc)?;
        manifest.push_str(&format!("{name} {}\n", lc.label));
    }
    let mut f = std::fs::File::create(dir.join("manifest.txt"))?;
    f.write_all(manifest.as_bytes())?;
    Ok(())
}

/// Parse a dataset directory's manifest into (relative path, label) pairs.
pub fn read_manifest(dir: &Path) -> Result<Vec<(String, usize)>> {
    let text = std::fs::read_to_string(dir.join("manifest.txt"))?;
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (path, label) = match (parts.next(), parts.next()) {
            (Some(p), Some(l)) => (p, l),
            _ => {
                return Err(Error::Config(format!(
                    "manifest line {}: expected 'path label'",
                    lineno + 1
                )))
            }
        };
        let label: usize = label
            .parse()
            .map_err(|_| Error::Config(format!("manifest line {}: bad label", lineno + 1)))?;
        entries.push((path.to_string(), label));
    }
    Ok(entries)
}
