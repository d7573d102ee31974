//! Command-line entry point: dataset generation, training, evaluation,
//! one-clip distillation, and split-cost benchmarking.

use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use tsd::config::RunConfig;
use tsd::nets::{init_params, ModelParams};
use tsd::saasbench;
use tsd::synthvid::{self, LabeledClip, SynthDataset};
use tsd::train::{self, ClipSource, DiskDataset, EvalReport, TrainConfig, Variant};
use tsd::{checkpoint, Error};

#[derive(Parser)]
#[command(name = "tsd", about = "Temporal sequence distillation toolkit")]
struct Cli {
    /// key=value config file; flags below override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, help = "i3d | rand | uniform | attn | tsd")]
    variant: Option<String>,
    #[arg(long = "T", global = true)]
    t: Option<usize>,
    #[arg(long = "Ts", global = true)]
    t_s: Option<usize>,
    #[arg(long = "Q", global = true)]
    q: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for artifacts (default ./out)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, help = "cloud | split")]
    deployment: Option<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write train/ and test/ synthetic datasets under --out
    GenData,
    /// Train the selected variant and write a checkpoint
    Train {
        /// dataset directory (default: generate synthetically in memory)
        #[arg(long)]
        data: Option<PathBuf>,
        /// checkpoint providing the pre-trained recognizer for the
        /// distillation variant's stage 1
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Evaluate a checkpoint with Q-clip averaging, writing eval.csv
    Eval {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Distill one clip file to T_s frames; writes the distilled clip and P
    Distill {
        #[arg(long)]
        clip: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Write a split-cost report as CSV
    Bench,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Argument(_) | Error::Io(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &cli.variant {
        cfg.set("variant", v)?;
    }
    if let Some(t) = cli.t {
        cfg.set("t", &t.to_string())?;
    }
    if let Some(ts) = cli.t_s {
        cfg.set("t_s", &ts.to_string())?;
    }
    if let Some(q) = cli.q {
        cfg.set("q", &q.to_string())?;
    }
    if let Some(s) = cli.seed {
        cfg.set("seed", &s.to_string())?;
    }
    if let Some(d) = &cli.deployment {
        cfg.set("deployment", d)?;
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn require_file(path: &Path) -> Result<(), Error> {
    if !path.exists() {
        return Err(Error::Config(format!("missing file: {}", path.display())));
    }
    Ok(())
}

fn echo_config(dir: &Path, cfg: &RunConfig) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("resolved_config.txt"), cfg.resolved())?;
    Ok(())
}

fn open_data(path: &Option<PathBuf>, cfg: &RunConfig, test: bool) -> Result<Box<dyn ClipSource<f32>>, Error> {
    match path {
        Some(dir) => {
            require_file(dir)?;
            Ok(Box::new(DiskDataset::open(dir)?))
        }
        None => {
            let (len, seed) = if test {
                (cfg.test_clips, cfg.seed.wrapping_add(1_000_000))
            } else {
                (cfg.train_clips, cfg.seed)
            };
            Ok(Box::new(SynthDataset::new(cfg.synth_spec(), len, seed)))
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let cfg = resolve_config(&cli)?;
    let out = out_dir(&cli);
    match &cli.cmd {
        Cmd::GenData => {
            echo_config(&out, &cfg)?;
            let train_ds = SynthDataset::new(cfg.synth_spec(), cfg.train_clips, cfg.seed);
            let test_ds = SynthDataset::new(
                cfg.synth_spec(),
                cfg.test_clips,
                cfg.seed.wrapping_add(1_000_000),
            );
            synthvid::write_dataset::<f32>(&train_ds, &out.join("train"))?;
            synthvid::write_dataset::<f32>(&test_ds, &out.join("test"))?;
            println!(
                "wrote {} train and {} test clips under {}",
                cfg.train_clips,
                cfg.test_clips,
                out.display()
            );
        }
        Cmd::Train { data, init } => {
            echo_config(&out, &cfg)?;
            let net = cfg.net_config();
            net.validate()?;
            let tc = cfg.train_config();
            let source = open_data(data, &cfg, false)?;
            let mut params = match init {
                Some(path) => {
                    require_file(path)?;
                    checkpoint::load::<f32>(path)?
                }
                None => init_params(&net, &mut train::seeded_rng(cfg.seed)),
            };
            if tc.variant == Variant::Tsd && init.is_none() {
                // stage 1 expects a pre-trained recognizer; bootstrap one
                // with a plain consecutive-frame run on the same data
                let pre = TrainConfig { variant: Variant::I3d, ..tc.clone() };
                train::train_stage2(&mut params, &net, source.as_ref(), &pre)?;
            }
            let curve = train::train_full(&mut params, &net, source.as_ref(), &tc)?;
            checkpoint::save(&out.join("checkpoint.tsdp"), &params)?;
            train::write_loss_csv(&out.join("loss.csv"), &curve)?;
            println!(
                "trained variant {} for {} steps; checkpoint at {}",
                tc.variant,
                curve.len(),
                out.join("checkpoint.tsdp").display()
            );
        }
        Cmd::Eval { data, checkpoint: ckpt } => {
            echo_config(&out, &cfg)?;
            require_file(ckpt)?;
            let net = cfg.net_config();
            let params = checkpoint::load::<f32>(ckpt)?;
            let source = open_data(data, &cfg, true)?;
            let report = train::evaluate_qclips(
                &params,
                &net,
                source.as_ref(),
                cfg.variant,
                cfg.t,
                cfg.t_s,
                cfg.q,
                cfg.seed,
            )?;
            let csv = format!("{}\n{}\n", EvalReport::csv_header(), report.csv_row());
            std::fs::write(out.join("eval.csv"), &csv)?;
            println!("{}", report.csv_row());
        }
        Cmd::Distill { clip, checkpoint: ckpt } => {
            echo_config(&out, &cfg)?;
            require_file(clip)?;
            require_file(ckpt)?;
            let net = cfg.net_config();
            let params = checkpoint::load::<f32>(ckpt)?;
            let lc = synthvid::read_clip::<f32>(clip)?;
            let feats = tsd::nets::coarse_features(&net, &params, &lc.clip)?;
            let p = tsd::tsd::compute_transform(&feats, &params.tsd_weights()?)?;
            let distilled = tsd::tsd::distill(&lc.clip, &p)?;
            synthvid::write_clip(
                &out.join("distilled.tsdc"),
                &LabeledClip { clip: distilled, label: lc.label },
            )?;
            let mut csv = String::new();
            for i in 0..p.t() {
                let row: Vec<String> = (0..p.t_s()).map(|j| p.at(i, j).to_string()).collect();
                csv.push_str(&row.join(","));
                csv.push('\n');
            }
            std::fs::write(out.join("p.csv"), csv)?;
            println!(
                "distilled {} frames to {}; P written to {}",
                lc.clip.shape()[0],
                out.join("distilled.tsdc").display(),
                out.join("p.csv").display()
            );
        }
        Cmd::Bench => {
            echo_config(&out, &cfg)?;
            let net = cfg.net_config();
            let params: ModelParams<f32> = init_params(&net, &mut train::seeded_rng(cfg.seed));
            let report = saasbench::simulate_session(
                &params,
                &net,
                cfg.variant,
                cfg.deployment,
                cfg.t,
                cfg.t_s,
                cfg.q,
            )?;
            let csv = format!(
                "{}\n{}\n",
                saasbench::CostReport::csv_header(),
                report.csv_row()
            );
            std::fs::write(out.join("cost.csv"), &csv)?;
            println!("{}", report.csv_row());
        }
    }
    Ok(())
}
