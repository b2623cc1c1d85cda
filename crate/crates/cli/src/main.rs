//! `tll`: encode, decode, evaluate and simulate topological-line maps.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod maps_io;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use tll_core::decoder::TemporalMode;
use tll_core::simgen::{DegradeConfig, SceneConfig};

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "tll", version, about = "Topological-line pedestrian detection pipeline")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (0 = one per core). Never changes results.
    #[arg(long, global = true, env = "TLL_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl From<Switch> for bool {
    fn from(s: Switch) -> bool {
        matches!(s, Switch::On)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render ground-truth vertex maps and link fields from annotations.
    Encode {
        /// Annotation table (TSV).
        #[arg(long)]
        annotations: PathBuf,
        /// Output directory for map files.
        #[arg(long)]
        out: PathBuf,
        /// Image size in pixels, e.g. 640x480.
        #[arg(long, value_parser = parse_size)]
        image_size: Option<(usize, usize)>,
    },
    /// Decode map triples into detections.
    Decode {
        /// Directory of map files.
        #[arg(long)]
        maps: PathBuf,
        /// Detection table; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// MRF refinement of candidate lines.
        #[arg(long, value_enum)]
        mrf: Option<Switch>,
        /// Aggregate a trailing window of frames: max, mean or ema:<alpha>.
        #[arg(long)]
        temporal: Option<String>,
        /// Temporal window length in frames.
        #[arg(long)]
        window: Option<usize>,
    },
    /// Log-average miss rate of detections against annotations.
    Eval {
        /// Detection table (TSV).
        #[arg(long)]
        detections: PathBuf,
        /// Annotation table (TSV).
        #[arg(long)]
        annotations: PathBuf,
        /// Comma-separated protocol names.
        #[arg(long, value_delimiter = ',')]
        protocols: Option<Vec<String>>,
        /// Directory for summary.csv and per-protocol curve CSVs.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write one SVG MR-FPPI plot per protocol into --out.
        #[arg(long, requires = "out")]
        svg: bool,
    },
    /// Generate synthetic scenes with (optionally degraded) maps.
    Simulate {
        /// Output directory: annotations.tsv and maps/.
        #[arg(long)]
        out: PathBuf,
        /// Scene preset: clear, default or crowded.
        #[arg(long)]
        preset: Option<String>,
        /// Degradation preset: none, mild or heavy.
        #[arg(long)]
        degrade: Option<String>,
        /// Number of frames.
        #[arg(long, default_value_t = 1)]
        frames: usize,
        /// Base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Instance count range, e.g. 5,5.
        #[arg(long, value_parser = parse_range)]
        instances: Option<(usize, usize)>,
        /// Reuse one scene for every frame; only the degradation changes.
        #[arg(long)]
        static_scene: bool,
    },
    /// Seeded synthetic benchmark.
    Bench {
        /// Base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of scenes.
        #[arg(long)]
        scenes: Option<usize>,
        /// Scene preset: clear, default or crowded.
        #[arg(long)]
        preset: Option<String>,
        /// Degradation preset: none, mild or heavy.
        #[arg(long)]
        degrade: Option<String>,
        /// MRF refinement of candidate lines.
        #[arg(long, value_enum)]
        mrf: Option<Switch>,
        /// Also run the dropout benchmark with this aggregation mode.
        #[arg(long)]
        temporal: Option<String>,
    },
}

fn parse_pair(s: &str, seps: &[char]) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(seps)
        .ok_or_else(|| format!("expected two numbers separated by one of {seps:?}"))?;
    let p = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    Ok((p(a)?, p(b)?))
}

fn parse_size(s: &str) -> std::result::Result<(usize, usize), String> {
    parse_pair(s, &['x', 'X'])
}

fn parse_range(s: &str) -> std::result::Result<(usize, usize), String> {
    parse_pair(s, &[',', '-'])
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }

    match &cli.command {
        Command::Encode { image_size, .. } => {
            if let Some(s) = image_size {
                cfg.scene.image_size = *s;
            }
        }
        Command::Decode {
            mrf, temporal, window, ..
        } => {
            if let Some(m) = mrf {
                cfg.decode.mrf = (*m).into();
            }
            if temporal.is_some() {
                cfg.decode.temporal.clone_from(temporal);
            }
            if let Some(w) = window {
                cfg.decode.window = *w;
            }
        }
        Command::Eval { protocols, .. } => {
            if let Some(p) = protocols {
                cfg.eval.protocols.clone_from(p);
                cfg.eval.custom.clear();
            }
        }
        Command::Simulate {
            preset,
            degrade,
            seed,
            instances,
            ..
        } => {
            if let Some(p) = preset {
                cfg.scene = SceneConfig {
                    image_size: cfg.scene.image_size,
                    ..SceneConfig::preset(p)?
                };
            }
            if let Some(d) = degrade {
                cfg.degrade = DegradeConfig::preset(d)?;
            }
            if let Some(s) = seed {
                cfg.scene.rng_seed = *s;
            }
            if let Some(r) = instances {
                cfg.scene.num_instances = *r;
            }
        }
        Command::Bench {
            seed,
            scenes,
            preset,
            degrade,
            mrf,
            ..
        } => {
            let b = &mut cfg.bench;
            if let Some(s) = seed {
                b.seed = *s;
            }
            if let Some(n) = scenes {
                b.num_scenes = *n;
            }
            if let Some(p) = preset {
                b.scene_preset.clone_from(p);
            }
            if let Some(d) = degrade {
                b.degrade_preset.clone_from(d);
            }
            if let Some(m) = mrf {
                b.use_mrf = (*m).into();
            }
        }
    }
    cfg.validate()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .context("starting worker pool")?;
    pool.install(|| dispatch(&cli.command, &cfg))
}

fn dispatch(command: &Command, cfg: &RunConfig) -> Result<()> {
    match command {
        Command::Encode { annotations, out, .. } => {
            let n = commands::encode(cfg, annotations, out)?;
            log::info!("wrote maps for {n} frame(s) to {}", out.display());
        }
        Command::Decode { maps, out, .. } => {
            emit(out.as_ref(), &commands::decode(cfg, maps)?)?;
        }
        Command::Eval {
            detections,
            annotations,
            out,
            svg,
            ..
        } => {
            let result = commands::eval(cfg, detections, annotations)?;
            if let Some(dir) = out {
                commands::write_eval_files(&result, dir, *svg)?;
            }
            emit(None, &result.summary)?;
        }
        Command::Simulate {
            out,
            frames,
            static_scene,
            ..
        } => {
            commands::simulate(cfg, out, *frames, *static_scene)?;
        }
        Command::Bench { temporal, .. } => {
            let mode: Option<TemporalMode> = temporal.as_deref().map(str::parse).transpose()?;
            emit(None, &commands::bench(cfg, mode)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
