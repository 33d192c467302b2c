//! Command-line front end: argument parsing, run orchestration and report
//! files.

use std::ffi::OsString;
use std::fmt;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use crate::encoder::{encode_sequence, EncoderConfig, Policy};
use crate::error::{Error, Result};
use crate::metrics::{emit_rd_curve, emit_report, RunStats};
use crate::synth::{generate_synthetic, SyntheticKind};
use crate::yuv::{read_sequence, Frame};

pub const DEFAULT_QPS: [u8; 4] = [40, 34, 28, 22];
pub const REPORT_FILE: &str = "report.csv";
pub const DEFAULT_SYNTHETIC_SIZE: (usize, usize) = (64, 64);
pub const DEFAULT_SYNTHETIC_FRAMES: usize = 17;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Full,
    Fast,
    Both,
}

#[derive(Debug, Parser)]
#[command(name = "svc-fmd", version, about = "Scalable video encoder kernel comparing full-search and fast mode decision")]
pub struct Args {
    /// Raw planar YUV 4:2:0 input (repeatable)
    #[arg(long, value_name = "PATH")]
    pub input: Vec<PathBuf>,
    /// Synthetic clip: flat, translate, noise or mixed (repeatable)
    #[arg(long, value_name = "KIND")]
    pub synthetic: Vec<String>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    /// Frames to encode (all frames of an input file when omitted)
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long, default_value_t = 8)]
    pub gop: usize,
    /// Number of quality layers, 1 to 4
    #[arg(long)]
    pub layers: Option<usize>,
    /// QP per layer, base first (repeatable)
    #[arg(long)]
    pub qp: Vec<u8>,
    /// Motion search range in integer pixels
    #[arg(long, default_value_t = 8)]
    pub range: i32,
    #[arg(long, value_enum, default_value_t = PolicyArg::Both)]
    pub policy: PolicyArg,
    #[arg(long, default_value_t = 30.0)]
    pub fps: f64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Seed of the synthetic noise texture
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    File(PathBuf),
    Synthetic(SyntheticKind),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub sources: Vec<Source>,
    pub width: usize,
    pub height: usize,
    pub frames: Option<usize>,
    pub encoder: EncoderConfig,
    pub policies: Vec<Policy>,
    pub fps: f64,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl TryFrom<Args> for RunConfig {
    type Error = Error;

    fn try_from(a: Args) -> Result<Self> {
        let mut sources: Vec<Source> = a.input.into_iter().map(Source::File).collect();
        for s in &a.synthetic {
            sources.push(Source::Synthetic(s.parse()?));
        }
        if sources.is_empty() {
            return Err(Error::Config("give at least one --input or --synthetic".into()));
        }
        let has_file = sources.iter().any(|s| matches!(s, Source::File(_)));
        let (width, height) = match (a.width, a.height) {
            (Some(w), Some(h)) => (w, h),
            (None, None) if !has_file => DEFAULT_SYNTHETIC_SIZE,
            _ => return Err(Error::Config("--width and --height are required for --input".into())),
        };
        if a.frames == Some(0) {
            return Err(Error::Config("--frames must be at least 1".into()));
        }
        let qps = match (a.layers, a.qp.is_empty()) {
            (_, false) => a.qp,
            (Some(n), true) if (1..=4).contains(&n) => DEFAULT_QPS[..n].to_vec(),
            (Some(n), true) => return Err(Error::Config(format!("{n} layers requested, expected 1..=4"))),
            (None, true) => DEFAULT_QPS[..3].to_vec(),
        };
        if let Some(n) = a.layers {
            if n != qps.len() {
                return Err(Error::Config(format!("--layers {n} but {} --qp values", qps.len())));
            }
        }
        if a.range < 0 {
            return Err(Error::Config("--range must be non-negative".into()));
        }
        if !(a.fps.is_finite() && a.fps > 0.0) {
            return Err(Error::Config("--fps must be positive".into()));
        }
        crate::gop::build_layers(&qps)?;
        crate::gop::build_gop(1, a.gop)?;
        crate::yuv::check_dimensions(width, height)?;
        let policies = match a.policy {
            PolicyArg::Full => vec![Policy::Full],
            PolicyArg::Fast => vec![Policy::Fast],
            PolicyArg::Both => vec![Policy::Full, Policy::Fast],
        };
        Ok(Self {
            sources,
            width,
            height,
            frames: a.frames,
            encoder: EncoderConfig {
                gop_size: a.gop,
                qps,
                search_range: a.range,
            },
            policies,
            fps: a.fps,
            out_dir: a.out,
            seed: a.seed,
        })
    }
}

/// Pipeline stage named in diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Config,
    Read,
    Encode,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Read => "read",
            Stage::Encode => "encode",
            Stage::Report => "report",
        })
    }
}

#[derive(Debug)]
pub struct Failure {
    pub stage: Stage,
    pub error: Error,
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        exit_code(&self.error)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} failed: {}", self.stage, self.error)
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 1,
        Error::Input { .. } | Error::Io(_) | Error::Truncated(_) | Error::Csv(_) => 2,
        Error::Sequencing(_) | Error::Contract(_) => 3,
    }
}

fn at(stage: Stage) -> impl Fn(Error) -> Failure {
    move |error| Failure { stage, error }
}

/// Everything one run produced.
#[derive(Debug)]
pub struct RunSummary {
    pub stats: Vec<RunStats>,
    pub written: Vec<PathBuf>,
}

fn sequence_name(source: &Source) -> String {
    match source {
        Source::Synthetic(k) => k.name().to_string(),
        Source::File(p) => p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "input".into()),
    }
}

fn load(cfg: &RunConfig, source: &Source) -> Result<Vec<Frame>> {
    let frames = match source {
        Source::File(p) => read_sequence(p, cfg.width, cfg.height, cfg.frames.unwrap_or(usize::MAX))?,
        Source::Synthetic(k) => generate_synthetic(
            *k,
            cfg.width,
            cfg.height,
            cfg.frames.unwrap_or(DEFAULT_SYNTHETIC_FRAMES),
            cfg.seed,
        )?,
    };
    if frames.is_empty() {
        return Err(Error::Config(format!("{} holds no complete frame", sequence_name(source))));
    }
    Ok(frames)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Input {
            path: path.to_path_buf(),
            source,
        })
}

/// Encodes every source under every policy and writes reports into the
/// output directory: `rd_<sequence>.csv` always, `report.csv` when both
/// policies ran.
pub fn run(cfg: &RunConfig) -> std::result::Result<RunSummary, Failure> {
    let mut names: Vec<String> = Vec::new();
    for s in &cfg.sources {
        let n = sequence_name(s);
        if names.contains(&n) {
            return Err(Failure {
                stage: Stage::Config,
                error: Error::Config(format!("sequence '{n}' given twice")),
            });
        }
        names.push(n);
    }
    let mut stats = Vec::new();
    for (source, name) in cfg.sources.iter().zip(&names) {
        let frames = load(cfg, source).map_err(at(Stage::Read))?;
        for &policy in &cfg.policies {
            let output = encode_sequence(&frames, &cfg.encoder, policy).map_err(at(Stage::Encode))?;
            stats.push(RunStats::from_output(name, policy, &cfg.encoder, cfg.fps, &output).map_err(at(Stage::Encode))?);
        }
    }
    let written = write_reports(cfg, &names, &stats).map_err(at(Stage::Report))?;
    Ok(RunSummary { stats, written })
}

fn write_reports(cfg: &RunConfig, names: &[String], stats: &[RunStats]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(&cfg.out_dir).map_err(|source| Error::Input {
        path: cfg.out_dir.clone(),
        source,
    })?;
    let mut written = Vec::new();
    let per_seq = cfg.policies.len();
    for (name, runs) in names.iter().zip(stats.chunks(per_seq)) {
        let path = cfg.out_dir.join(format!("rd_{name}.csv"));
        let refs: Vec<&RunStats> = runs.iter().collect();
        emit_rd_curve(&refs, create(&path)?)?;
        written.push(path);
    }
    if per_seq == 2 {
        let pairs: Vec<(&RunStats, &RunStats)> = stats.chunks(2).map(|c| (&c[0], &c[1])).collect();
        let path = cfg.out_dir.join(REPORT_FILE);
        emit_report(&pairs, create(&path)?)?;
        written.push(path);
    }
    Ok(written)
}

/// Parses `args`, runs, prints a one-line diagnostic on failure and
/// returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = RunConfig::try_from(args).map_err(at(Stage::Config)).and_then(|cfg| run(&cfg));
    match result {
        Ok(summary) => {
            for s in &summary.stats {
                println!(
                    "{} {}: {} evaluations, {:.2} dB, {:.2} kbps, {:.2} s",
                    s.sequence_name,
                    s.policy.name(),
                    s.total_rdc_evaluations,
                    s.mean_y_psnr,
                    s.bitrate_estimate,
                    s.wall_time
                );
            }
            0
        }
        Err(f) => {
            eprintln!("svc-fmd: {f}");
            f.exit_code()
        }
    }
}
