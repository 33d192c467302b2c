//! Sequence encoding loop: GOP plan, layers, macroblock decisions and
//! reconstruction.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::fmd::{self, DecisionPath};
use crate::gop::{build_gop, build_layers, colocated_decision, GopPlan, LayerContext};
use crate::predict::encode::{reconstruct_chroma, MB};
use crate::predict::{MbContext, RefPicture};
use crate::rd::{full_search_decide, lambda_mode, DecisionGrid, MBDecision};
use crate::yuv::{psnr, Frame, PictureType, Plane};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Policy {
    Full,
    Fast,
}

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::Full => "full",
            Policy::Fast => "fast",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncoderConfig {
    pub gop_size: usize,
    /// QP per layer, base first.
    pub qps: Vec<u8>,
    pub search_range: i32,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            gop_size: 8,
            qps: vec![40, 34, 28],
            search_range: 8,
        }
    }
}

/// Per-frame, per-layer outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameRecord {
    pub display_index: usize,
    pub layer_id: usize,
    pub qp: u8,
    pub picture_type: PictureType,
    pub psnr_y: f64,
    pub bits: u64,
    pub evaluations: u64,
}

/// One macroblock decision as seen by an observer.
pub struct MbVisit<'v, 'a> {
    pub layer_id: usize,
    pub display_index: usize,
    pub ctx: &'v MbContext<'a>,
    pub decision: &'v MBDecision,
    /// Branch taken by the fast policy; `None` under full search.
    pub path: Option<DecisionPath>,
}

pub struct EncodeOutput {
    pub plan: GopPlan,
    pub layers: Vec<LayerContext>,
    /// Records in coding order, layers bottom-up within a frame.
    pub records: Vec<FrameRecord>,
    pub wall_time: f64,
}

impl EncodeOutput {
    pub fn total_evaluations(&self) -> u64 {
        self.records.iter().map(|r| r.evaluations).sum()
    }

    /// Reconstructed frames of one layer in display order.
    pub fn recon_frames(&self, layer_id: usize) -> Vec<Frame> {
        self.layers[layer_id].recon.values().cloned().collect()
    }
}

pub fn encode_sequence(frames: &[Frame], config: &EncoderConfig, policy: Policy) -> Result<EncodeOutput> {
    encode_sequence_observed(frames, config, policy, |_| {})
}

/// Encodes `frames` and calls `observe` after every macroblock decision.
pub fn encode_sequence_observed<F>(
    frames: &[Frame],
    config: &EncoderConfig,
    policy: Policy,
    mut observe: F,
) -> Result<EncodeOutput>
where
    F: FnMut(&MbVisit<'_, '_>),
{
    if frames.is_empty() {
        return Err(Error::Config("no frames to encode".into()));
    }
    if config.search_range < 0 {
        return Err(Error::Config(format!("search range {} is negative", config.search_range)));
    }
    let (width, height) = (frames[0].width(), frames[0].height());
    if frames.iter().any(|f| f.width() != width || f.height() != height) {
        return Err(Error::Contract("frames differ in size".into()));
    }
    let start = Instant::now();
    let plan = build_gop(frames.len(), config.gop_size)?;
    let mut frames = frames.to_vec();
    plan.annotate(&mut frames)?;
    let mut layers = build_layers(&config.qps)?;
    let (cols, rows) = (width / MB, height / MB);
    let mut records = Vec::with_capacity(frames.len() * layers.len());

    for &d in &plan.coding_order {
        let frame = &frames[d];
        let info = *plan.picture(d);
        let previous_index = plan.previous_in_coding_order(d);
        for l in 0..layers.len() {
            let (below, rest) = layers.split_at_mut(l);
            let layer = &mut rest[0];
            let lower = below.last();
            let qp = layer.qp;
            let lambda = lambda_mode(i32::from(qp))?;
            let mut recon = Frame {
                y: Plane::filled(width, height, 0),
                cb: Plane::filled(width / 2, height / 2, 0),
                cr: Plane::filled(width / 2, height / 2, 0),
                display_index: d,
                temporal_level: info.temporal_level,
                picture_type: info.picture_type,
            };
            let mut grid = DecisionGrid::new(cols, rows);
            let mut bits = 0u64;
            let mut evaluations = 0u64;
            {
                let layer_ref: &LayerContext = layer;
                let mut refs: [Option<RefPicture<'_>>; 2] = [None, None];
                let mut chroma_refs: [Option<(&Plane, &Plane)>; 2] = [None, None];
                for (slot, r) in info.refs.iter().enumerate() {
                    let Some(r) = *r else { continue };
                    let (Some(rf), Some(rg)) = (layer_ref.recon.get(&r), layer_ref.decisions.get(&r)) else {
                        return Err(Error::Sequencing(format!(
                            "frame {d} layer {l}: reference {r} not coded"
                        )));
                    };
                    refs[slot] = Some(RefPicture {
                        luma: &rf.y,
                        decisions: rg,
                    });
                    chroma_refs[slot] = Some((&rf.cb, &rf.cr));
                }
                let previous = previous_index.and_then(|p| layer_ref.decisions.get(&p));
                for my in 0..rows {
                    for mx in 0..cols {
                        let ctx = MbContext::new(
                            &frame.y,
                            &recon.y,
                            &grid,
                            refs,
                            info.picture_type,
                            mx,
                            my,
                            qp,
                            lambda,
                            config.search_range,
                        );
                        let (decision, path) = match policy {
                            Policy::Full => (full_search_decide(&ctx)?, None),
                            Policy::Fast if l == 0 => {
                                let (dd, p) = fmd::decide_base_layer_traced(&ctx, previous)?;
                                (dd, Some(p))
                            }
                            Policy::Fast => {
                                let co = colocated_decision(lower, d, mx, my)?;
                                let (dd, p) = fmd::decide_enh_layer_traced(&ctx, l, co, previous)?;
                                (dd, Some(p))
                            }
                        };
                        observe(&MbVisit {
                            layer_id: l,
                            display_index: d,
                            ctx: &ctx,
                            decision: &decision,
                            path,
                        });
                        recon.y.write_block(mx * MB, my * MB, MB, MB, &decision.recon);
                        let cb_refs = chroma_refs.map(|c| c.map(|(cb, _)| cb));
                        let cr_refs = chroma_refs.map(|c| c.map(|(_, cr)| cr));
                        reconstruct_chroma(&frame.cb, cb_refs, &mut recon.cb, mx, my, &decision.motion, qp);
                        reconstruct_chroma(&frame.cr, cr_refs, &mut recon.cr, mx, my, &decision.motion, qp);
                        bits += u64::from(decision.cost.rate_bits);
                        evaluations += u64::from(decision.evaluated_count);
                        grid.set(mx, my, decision);
                    }
                }
            }
            records.push(FrameRecord {
                display_index: d,
                layer_id: l,
                qp,
                picture_type: info.picture_type,
                psnr_y: psnr(&frame.y, &recon.y)?,
                bits,
                evaluations,
            });
            layer.decisions.insert(d, grid);
            layer.recon.insert(d, recon);
        }
    }

    Ok(EncodeOutput {
        plan,
        layers,
        records,
        wall_time: start.elapsed().as_secs_f64(),
    })
}
