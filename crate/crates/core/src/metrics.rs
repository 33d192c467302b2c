//! Comparative metrics between a full-search and a fast run, and CSV output.

use std::io::Write;

use crate::encoder::{EncodeOutput, EncoderConfig, FrameRecord, Policy};
use crate::error::{Error, Result};

/// First line of every comparison report.
pub const REPORT_HEADER_COMMENT: &str =
    "# dtime_pct, devals_pct and dbitrate_pct are savings of fast over full (positive = fast is cheaper); dpsnr_db = fast - full";

pub const REPORT_COLUMNS: [&str; 13] = [
    "sequence",
    "time_full_s",
    "time_fast_s",
    "dtime_pct",
    "evals_full",
    "evals_fast",
    "devals_pct",
    "psnr_full_db",
    "psnr_fast_db",
    "dpsnr_db",
    "kbps_full",
    "kbps_fast",
    "dbitrate_pct",
];

pub const RD_COLUMNS: [&str; 4] = ["qp", "kbps", "psnr_db", "policy"];

fn saving_pct(what: &str, baseline: f64, proposed: f64) -> Result<f64> {
    if baseline == 0.0 || !baseline.is_finite() {
        return Err(Error::Contract(format!("{what} baseline must be non-zero, got {baseline}")));
    }
    Ok((baseline - proposed) / baseline * 100.0)
}

/// Time saving in percent, positive when `proposed` is faster.
pub fn delta_time(baseline_time: f64, proposed_time: f64) -> Result<f64> {
    saving_pct("time", baseline_time, proposed_time)
}

pub fn delta_psnr(baseline_psnr: f64, proposed_psnr: f64) -> f64 {
    proposed_psnr - baseline_psnr
}

/// Bit saving in percent, positive when `proposed` uses fewer bits.
pub fn delta_bitrate(baseline_kbps: f64, proposed_kbps: f64) -> Result<f64> {
    saving_pct("bitrate", baseline_kbps, proposed_kbps)
}

/// One point of a rate-distortion curve: a layer at its QP, with the rate of
/// that layer and everything below it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RdPoint {
    pub qp: u8,
    pub kbps: f64,
    pub psnr_db: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunStats {
    pub policy: Policy,
    pub sequence_name: String,
    pub config: EncoderConfig,
    pub frame_count: usize,
    pub fps: f64,
    pub total_rdc_evaluations: u64,
    pub wall_time: f64,
    /// Mean per-frame Y-PSNR of the top layer.
    pub mean_y_psnr: f64,
    /// All layers' estimated bits over the clip duration, in kbit/s.
    pub bitrate_estimate: f64,
    pub records: Vec<FrameRecord>,
}

impl RunStats {
    pub fn from_output(
        sequence_name: &str,
        policy: Policy,
        config: &EncoderConfig,
        fps: f64,
        output: &EncodeOutput,
    ) -> Result<Self> {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::Config(format!("fps {fps} must be positive")));
        }
        let frame_count = output.plan.frame_count();
        let top = config.qps.len() - 1;
        let top_psnr: Vec<f64> = output
            .records
            .iter()
            .filter(|r| r.layer_id == top)
            .map(|r| r.psnr_y)
            .collect();
        let mean_y_psnr = top_psnr.iter().sum::<f64>() / top_psnr.len() as f64;
        let total_bits: u64 = output.records.iter().map(|r| r.bits).sum();
        Ok(Self {
            policy,
            sequence_name: sequence_name.to_string(),
            config: config.clone(),
            frame_count,
            fps,
            total_rdc_evaluations: output.total_evaluations(),
            wall_time: output.wall_time,
            mean_y_psnr,
            bitrate_estimate: kbps(total_bits, frame_count, fps),
            records: output.records.clone(),
        })
    }

    /// Per-layer (qp, cumulative kbps, mean layer PSNR), base layer first.
    pub fn rd_curve(&self) -> Vec<RdPoint> {
        let mut cumulative = 0u64;
        self.config
            .qps
            .iter()
            .enumerate()
            .map(|(l, &qp)| {
                let layer: Vec<&FrameRecord> = self.records.iter().filter(|r| r.layer_id == l).collect();
                cumulative += layer.iter().map(|r| r.bits).sum::<u64>();
                RdPoint {
                    qp,
                    kbps: kbps(cumulative, self.frame_count, self.fps),
                    psnr_db: layer.iter().map(|r| r.psnr_y).sum::<f64>() / layer.len() as f64,
                }
            })
            .collect()
    }
}

fn kbps(bits: u64, frames: usize, fps: f64) -> f64 {
    bits as f64 / (frames as f64 / fps) / 1000.0
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeltaReport {
    pub delta_time_pct: f64,
    pub delta_psnr_db: f64,
    pub delta_bitrate_pct: f64,
    pub delta_evaluations_pct: f64,
}

fn check_comparable(baseline: &RunStats, proposed: &RunStats) -> Result<()> {
    if baseline.sequence_name != proposed.sequence_name
        || baseline.config != proposed.config
        || baseline.frame_count != proposed.frame_count
        || baseline.fps != proposed.fps
    {
        return Err(Error::Contract(format!(
            "runs '{}' and '{}' use different sequences or configurations",
            baseline.sequence_name, proposed.sequence_name
        )));
    }
    Ok(())
}

pub fn compare(baseline: &RunStats, proposed: &RunStats) -> Result<DeltaReport> {
    check_comparable(baseline, proposed)?;
    Ok(DeltaReport {
        delta_time_pct: delta_time(baseline.wall_time, proposed.wall_time)?,
        delta_psnr_db: delta_psnr(baseline.mean_y_psnr, proposed.mean_y_psnr),
        delta_bitrate_pct: delta_bitrate(baseline.bitrate_estimate, proposed.bitrate_estimate)?,
        delta_evaluations_pct: saving_pct(
            "evaluation count",
            baseline.total_rdc_evaluations as f64,
            proposed.total_rdc_evaluations as f64,
        )?,
    })
}

/// Writes the comparison CSV: a comment line, the header and one row per
/// `(baseline, proposed)` pair.
pub fn emit_report<W: Write>(pairs: &[(&RunStats, &RunStats)], out: W) -> Result<()> {
    let mut out = out;
    writeln!(out, "{REPORT_HEADER_COMMENT}")?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(REPORT_COLUMNS)?;
    for (full, fast) in pairs {
        let d = compare(full, fast)?;
        w.write_record([
            full.sequence_name.clone(),
            fmt2(full.wall_time),
            fmt2(fast.wall_time),
            fmt2(d.delta_time_pct),
            full.total_rdc_evaluations.to_string(),
            fast.total_rdc_evaluations.to_string(),
            fmt2(d.delta_evaluations_pct),
            fmt2(full.mean_y_psnr),
            fmt2(fast.mean_y_psnr),
            fmt2(d.delta_psnr_db),
            fmt2(full.bitrate_estimate),
            fmt2(fast.bitrate_estimate),
            fmt2(d.delta_bitrate_pct),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes RD-curve points of one or more runs of the same sequence.
pub fn emit_rd_curve<W: Write>(runs: &[&RunStats], out: W) -> Result<()> {
    if let Some(first) = runs.first() {
        for r in &runs[1..] {
            check_comparable(first, r)?;
        }
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(RD_COLUMNS)?;
    for run in runs {
        for p in run.rd_curve() {
            w.write_record([p.qp.to_string(), fmt2(p.kbps), fmt2(p.psnr_db), run.policy.name().to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn fmt2(v: f64) -> String {
    let s = format!("{v:.2}");
    // avoid "-0.00"
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}
