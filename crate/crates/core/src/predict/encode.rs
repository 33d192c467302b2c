//! Candidate-mode evaluation for one 16x16 macroblock.
//!
//! Every decision policy funnels through [`encode_mb_with_mode`] (and
//! [`encode_p8x8_greedy`] for P8x8), so their RD costs are directly
//! comparable.

use super::bits::{self, MvPredictors};
use super::intra::{intra_predict, IntraDirection};
use super::motion::{clamp_mv, motion_search, skip_mv_predictor, valid_mv_range};
use super::transform::{inverse_quant_transform, transform_quant};
use super::{Mode, MotionField, MotionInfo, MotionVector, PartitionMotion, Rect, SubMode};
use crate::rd::DecisionGrid;
use crate::yuv::{PictureType, Plane};

pub const MB: usize = 16;

type Block = [u8; MB * MB];
type Levels = [[i32; 16]; 16];

/// A reconstructed reference picture of the current layer together with
/// the decisions made while coding it.
#[derive(Clone, Copy)]
pub struct RefPicture<'a> {
    pub luma: &'a Plane,
    pub decisions: &'a DecisionGrid,
}

/// Everything needed to evaluate candidate modes for one macroblock.
pub struct MbContext<'a> {
    pub source: &'a Plane,
    /// Current-frame luma reconstruction; every macroblock before this one
    /// in raster order is final.
    pub recon: &'a Plane,
    pub current: &'a DecisionGrid,
    pub refs: [Option<RefPicture<'a>>; 2],
    pub picture_type: PictureType,
    pub mb_x: usize,
    pub mb_y: usize,
    pub qp: u8,
    pub lambda: f64,
    pub search_range: i32,
    src: [u8; MB * MB],
    predictors: MvPredictors,
}

impl<'a> MbContext<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        source: &'a Plane,
        recon: &'a Plane,
        current: &'a DecisionGrid,
        refs: [Option<RefPicture<'a>>; 2],
        picture_type: PictureType,
        mb_x: usize,
        mb_y: usize,
        qp: u8,
        lambda: f64,
        search_range: i32,
    ) -> Self {
        let mut src = [0u8; MB * MB];
        source.read_block(mb_x * MB, mb_y * MB, MB, MB, &mut src);
        let mut ctx = Self {
            source,
            recon,
            current,
            refs,
            picture_type,
            mb_x,
            mb_y,
            qp,
            lambda,
            search_range,
            src,
            predictors: MvPredictors::default(),
        };
        ctx.predictors = ctx.compute_predictors();
        ctx
    }

    #[inline]
    pub fn source_block(&self) -> &[u8; MB * MB] {
        &self.src
    }

    #[inline]
    pub fn predictors(&self) -> &MvPredictors {
        &self.predictors
    }

    #[inline]
    pub fn has_inter(&self) -> bool {
        self.picture_type != PictureType::I && self.refs[0].is_some()
    }

    #[inline]
    fn origin(&self) -> (usize, usize) {
        (self.mb_x * MB, self.mb_y * MB)
    }

    fn compute_predictors(&self) -> MvPredictors {
        // representative 4x4 block of each neighbour, adjacent to our top-left
        let neighbour = |dx: isize, dy: isize, block: usize| -> Option<MotionInfo> {
            let x = self.mb_x as isize + dx;
            let y = self.mb_y as isize + dy;
            if x < 0 || y < 0 {
                return None;
            }
            self.current.get(x as usize, y as usize)?.motion[block]
        };
        let left = neighbour(-1, 0, 3);
        let top = neighbour(0, -1, 12);
        let topright = neighbour(1, -1, 12);
        let mut per_ref = [MotionVector::ZERO; 2];
        for (r, p) in per_ref.iter_mut().enumerate() {
            let pick = |m: Option<MotionInfo>| m.filter(|m| usize::from(m.ref_idx) == r).map(|m| m.mv);
            *p = skip_mv_predictor(pick(left), pick(top), pick(topright));
        }
        MvPredictors { per_ref }
    }
}

/// Outcome of coding one macroblock with one mode.
#[derive(Clone, Debug)]
pub struct CandidateResult {
    pub mode: Mode,
    pub partitions: Vec<PartitionMotion>,
    pub motion: MotionField,
    pub ssd: u64,
    pub rate_bits: u32,
    pub recon: [u8; MB * MB],
    /// Quantized levels per 4x4 block, raster block order.
    pub levels: [[i32; 16]; 16],
}

impl CandidateResult {
    /// SSD between `source` and the stored reconstruction.
    pub fn recompute_ssd(&self, source: &[u8; MB * MB]) -> u64 {
        ssd(source, &self.recon)
    }
}

pub fn ssd(a: &[u8], b: &[u8]) -> u64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = i32::from(x) - i32::from(y);
            (d * d) as u64
        })
        .sum()
}

#[inline]
fn block_index(bx: usize, by: usize) -> usize {
    (by / 4) * 4 + bx / 4
}

/// Codes the residual of every 4x4 block inside `area`.
/// Returns (coefficient bits, ssd over the area).
fn code_residual(
    src: &[u8; MB * MB],
    pred: &[u8; MB * MB],
    area: Rect,
    qp: u8,
    recon: &mut [u8; MB * MB],
    levels: &mut [[i32; 16]; 16],
) -> (u32, u64) {
    let mut bits = 0;
    let mut dist = 0;
    for by in (area.y..area.y + area.h).step_by(4) {
        for bx in (area.x..area.x + area.w).step_by(4) {
            let mut res = [0i32; 16];
            for j in 0..4 {
                for i in 0..4 {
                    let p = (by + j) * MB + bx + i;
                    res[j * 4 + i] = i32::from(src[p]) - i32::from(pred[p]);
                }
            }
            let l = transform_quant(&res, qp);
            let rec = inverse_quant_transform(&l, qp);
            bits += bits::coefficient_bits(&l);
            for j in 0..4 {
                for i in 0..4 {
                    let p = (by + j) * MB + bx + i;
                    let v = (i32::from(pred[p]) + rec[j * 4 + i]).clamp(0, 255) as u8;
                    recon[p] = v;
                    let d = i64::from(src[p]) - i64::from(v);
                    dist += (d * d) as u64;
                }
            }
            levels[block_index(bx, by)] = l;
        }
    }
    (bits, dist)
}

fn copy_prediction(ctx: &MbContext<'_>, reference: &Plane, area: Rect, mv: MotionVector, pred: &mut [u8; MB * MB]) {
    let (ox, oy) = ctx.origin();
    let rx = (ox + area.x) as i32 + mv.dx;
    let ry = (oy + area.y) as i32 + mv.dy;
    for j in 0..area.h {
        for i in 0..area.w {
            pred[(area.y + j) * MB + area.x + i] = reference.get(rx as usize + i, ry as usize + j);
        }
    }
}

fn set_motion(field: &mut MotionField, area: Rect, info: Option<MotionInfo>) {
    for by in (area.y..area.y + area.h).step_by(4) {
        for bx in (area.x..area.x + area.w).step_by(4) {
            field[block_index(bx, by)] = info;
        }
    }
}

/// Searches every available reference for `area` and writes the best
/// prediction into `pred`. The lower SAD wins; reference 0 on ties.
fn search_partition(ctx: &MbContext<'_>, area: Rect, pred: &mut [u8; MB * MB]) -> MotionInfo {
    let (ox, oy) = ctx.origin();
    let mut src = [0u8; MB * MB];
    for j in 0..area.h {
        let s = (area.y + j) * MB + area.x;
        src[j * area.w..j * area.w + area.w].copy_from_slice(&ctx.src[s..s + area.w]);
    }
    let mut best: Option<(MotionInfo, u32, &Plane)> = None;
    for (r, reference) in ctx.refs.iter().enumerate() {
        let Some(reference) = reference else { continue };
        let (mv, sad) = motion_search(
            &src[..area.w * area.h],
            area.w,
            area.h,
            ox + area.x,
            oy + area.y,
            reference.luma,
            ctx.predictors.for_ref(r as u8),
            ctx.search_range,
        );
        if best.as_ref().is_none_or(|b| sad < b.1) {
            best = Some((MotionInfo { ref_idx: r as u8, mv }, sad, reference.luma));
        }
    }
    let (info, _, luma) = best.expect("inter partition without reference");
    copy_prediction(ctx, luma, area, info.mv, pred);
    info
}

fn partition_rects(mode: &Mode) -> &'static [Rect] {
    const R16X16: [Rect; 1] = [Rect::new(0, 0, 16, 16)];
    const R16X8: [Rect; 2] = [Rect::new(0, 0, 16, 8), Rect::new(0, 8, 16, 8)];
    const R8X16: [Rect; 2] = [Rect::new(0, 0, 8, 16), Rect::new(8, 0, 8, 16)];
    match mode {
        Mode::Inter16x16 => &R16X16,
        Mode::Inter16x8 => &R16X8,
        Mode::Inter8x16 => &R8X16,
        _ => &[],
    }
}

fn sub_rects(quadrant: usize, sub: SubMode) -> Vec<Rect> {
    let (qx, qy) = ((quadrant % 2) * 8, (quadrant / 2) * 8);
    match sub {
        SubMode::Direct8x8 | SubMode::Sub8x8 => vec![Rect::new(qx, qy, 8, 8)],
        SubMode::Sub8x4 => vec![Rect::new(qx, qy, 8, 4), Rect::new(qx, qy + 4, 8, 4)],
        SubMode::Sub4x8 => vec![Rect::new(qx, qy, 4, 8), Rect::new(qx + 4, qy, 4, 8)],
        SubMode::Sub4x4 => (0..4)
            .map(|k| Rect::new(qx + (k % 2) * 4, qy + (k / 2) * 4, 4, 4))
            .collect(),
    }
}

/// One quadrant of a P8x8 macroblock coded with one sub-mode.
#[derive(Clone, Debug)]
struct QuadrantResult {
    partitions: Vec<PartitionMotion>,
    recon: [u8; MB * MB],
    levels: [[i32; 16]; 16],
    motion: MotionField,
    ssd: u64,
    bits: u32,
}

fn encode_quadrant(ctx: &MbContext<'_>, quadrant: usize, sub: SubMode) -> QuadrantResult {
    let mut pred = [0u8; MB * MB];
    let mut motion: MotionField = [None; 16];
    let mut partitions = Vec::new();
    let mut bits = 0;
    let (ox, oy) = ctx.origin();
    for area in sub_rects(quadrant, sub) {
        let info = if sub == SubMode::Direct8x8 {
            let reference = ctx.refs[0].expect("direct without reference 0");
            let inherited = reference
                .decisions
                .get(ctx.mb_x, ctx.mb_y)
                .and_then(|d| d.motion[block_index(area.x, area.y)])
                .map_or(MotionVector::ZERO, |m| m.mv);
            let bounds = valid_mv_range(
                ox + area.x,
                oy + area.y,
                area.w,
                area.h,
                reference.luma.width(),
                reference.luma.height(),
            );
            let mv = clamp_mv(inherited, bounds);
            copy_prediction(ctx, reference.luma, area, mv, &mut pred);
            let info = MotionInfo { ref_idx: 0, mv };
            partitions.push(PartitionMotion { motion: info, coded: false });
            info
        } else {
            let info = search_partition(ctx, area, &mut pred);
            bits += bits::mvd_bits(info.mv, ctx.predictors.for_ref(info.ref_idx));
            partitions.push(PartitionMotion { motion: info, coded: true });
            info
        };
        set_motion(&mut motion, area, Some(info));
    }
    let mut recon = [0u8; MB * MB];
    let mut levels = [[0i32; 16]; 16];
    let qarea = Rect::new((quadrant % 2) * 8, (quadrant / 2) * 8, 8, 8);
    let (cbits, dist) = code_residual(&ctx.src, &pred, qarea, ctx.qp, &mut recon, &mut levels);
    QuadrantResult {
        partitions,
        recon,
        levels,
        motion,
        ssd: dist,
        bits: bits + cbits,
    }
}

fn assemble_p8x8(ctx: &MbContext<'_>, quads: [QuadrantResult; 4], subs: [SubMode; 4]) -> CandidateResult {
    let mut out = CandidateResult {
        mode: Mode::P8x8(subs),
        partitions: Vec::new(),
        motion: [None; 16],
        ssd: 0,
        rate_bits: 0,
        recon: [0; MB * MB],
        levels: [[0; 16]; 16],
    };
    for (q, qr) in quads.into_iter().enumerate() {
        let (qx, qy) = ((q % 2) * 8, (q / 2) * 8);
        for j in 0..8 {
            let s = (qy + j) * MB + qx;
            out.recon[s..s + 8].copy_from_slice(&qr.recon[s..s + 8]);
        }
        for by in (qy..qy + 8).step_by(4) {
            for bx in (qx..qx + 8).step_by(4) {
                let b = block_index(bx, by);
                out.levels[b] = qr.levels[b];
                out.motion[b] = qr.motion[b];
            }
        }
        out.partitions.extend(qr.partitions);
        out.ssd += qr.ssd;
    }
    out.rate_bits = bits::estimate_bits(&out, &ctx.predictors);
    out
}

/// Local cost used to pick a quadrant's sub-mode. The per-sub-mode header
/// cost is identical for all sub-modes and omitted.
fn quadrant_cost(ctx: &MbContext<'_>, q: &QuadrantResult) -> f64 {
    q.ssd as f64 + ctx.lambda * f64::from(q.bits)
}

/// P8x8 with each quadrant's sub-mode picked independently by local RD cost
/// among `allowed` (first minimum in the given order wins).
pub fn encode_p8x8_greedy(ctx: &MbContext<'_>, allowed: &[SubMode]) -> Option<CandidateResult> {
    if !ctx.has_inter() || allowed.is_empty() {
        return None;
    }
    let mut subs = [allowed[0]; 4];
    let quads: [QuadrantResult; 4] = std::array::from_fn(|q| {
        let mut best: Option<(f64, SubMode, QuadrantResult)> = None;
        for &s in allowed {
            let r = encode_quadrant(ctx, q, s);
            let c = quadrant_cost(ctx, &r);
            if best.as_ref().is_none_or(|b| c < b.0) {
                best = Some((c, s, r));
            }
        }
        let (_, s, r) = best.unwrap();
        subs[q] = s;
        r
    });
    Some(assemble_p8x8(ctx, quads, subs))
}

fn encode_inter(ctx: &MbContext<'_>, mode: Mode) -> CandidateResult {
    let mut pred = [0u8; MB * MB];
    let mut motion: MotionField = [None; 16];
    let mut partitions = Vec::new();
    for &area in partition_rects(&mode) {
        let info = search_partition(ctx, area, &mut pred);
        partitions.push(PartitionMotion { motion: info, coded: true });
        set_motion(&mut motion, area, Some(info));
    }
    let mut out = CandidateResult {
        mode,
        partitions,
        motion,
        ssd: 0,
        rate_bits: 0,
        recon: [0; MB * MB],
        levels: [[0; 16]; 16],
    };
    let (_, dist) = code_residual(&ctx.src, &pred, Rect::new(0, 0, 16, 16), ctx.qp, &mut out.recon, &mut out.levels);
    out.ssd = dist;
    out.rate_bits = bits::estimate_bits(&out, &ctx.predictors);
    out
}

fn encode_skip(ctx: &MbContext<'_>) -> CandidateResult {
    let reference = ctx.refs[0].expect("skip without reference 0");
    let (ox, oy) = ctx.origin();
    let bounds = valid_mv_range(ox, oy, MB, MB, reference.luma.width(), reference.luma.height());
    let mv = clamp_mv(ctx.predictors.for_ref(0), bounds);
    let info = MotionInfo { ref_idx: 0, mv };
    let mut recon = [0u8; MB * MB];
    copy_prediction(ctx, reference.luma, Rect::new(0, 0, 16, 16), mv, &mut recon);
    let mut out = CandidateResult {
        mode: Mode::Skip,
        partitions: vec![PartitionMotion { motion: info, coded: false }],
        motion: [Some(info); 16],
        ssd: ssd(&ctx.src, &recon),
        rate_bits: 0,
        recon,
        levels: [[0; 16]; 16],
    };
    out.rate_bits = bits::estimate_bits(&out, &ctx.predictors);
    out
}

/// Reconstructed edge samples for an intra block at MB-local (bx, by).
fn intra_edges(
    ctx: &MbContext<'_>,
    local: &[u8; MB * MB],
    bx: usize,
    by: usize,
    size: usize,
) -> (Option<Vec<u8>>, Option<Vec<u8>>) {
    let (ox, oy) = ctx.origin();
    let top = if by > 0 {
        Some(local[(by - 1) * MB + bx..(by - 1) * MB + bx + size].to_vec())
    } else if oy > 0 {
        Some((0..size).map(|i| ctx.recon.get(ox + bx + i, oy - 1)).collect())
    } else {
        None
    };
    let left = if bx > 0 {
        Some((0..size).map(|j| local[(by + j) * MB + bx - 1]).collect())
    } else if ox > 0 {
        Some((0..size).map(|j| ctx.recon.get(ox - 1, oy + by + j)).collect())
    } else {
        None
    };
    (top, left)
}

fn encode_intra(ctx: &MbContext<'_>, mode: Mode) -> CandidateResult {
    let size = match mode {
        Mode::Intra16x16 => 16,
        Mode::Intra8x8 => 8,
        Mode::Intra4x4 => 4,
        _ => unreachable!("not an intra mode"),
    };
    let mut recon = [0u8; MB * MB];
    let mut levels = [[0i32; 16]; 16];
    let mut total_ssd = 0;
    for by in (0..MB).step_by(size) {
        for bx in (0..MB).step_by(size) {
            let (top, left) = intra_edges(ctx, &recon, bx, by, size);
            let area = Rect::new(bx, by, size, size);
            let mut best: Option<(f64, u64, Block, Levels)> = None;
            for dir in IntraDirection::ALL {
                let Some(p) = intra_predict(size, top.as_deref(), left.as_deref(), dir) else {
                    continue;
                };
                let mut pred = [0u8; MB * MB];
                for j in 0..size {
                    pred[(by + j) * MB + bx..(by + j) * MB + bx + size]
                        .copy_from_slice(&p[j * size..j * size + size]);
                }
                let mut rec = recon;
                let mut lv = levels;
                let (cbits, dist) = code_residual(&ctx.src, &pred, area, ctx.qp, &mut rec, &mut lv);
                let cost = dist as f64 + ctx.lambda * f64::from(cbits);
                if best.as_ref().is_none_or(|b| cost < b.0) {
                    best = Some((cost, dist, rec, lv));
                }
            }
            let (_, dist, rec, lv) = best.expect("DC prediction is always available");
            recon = rec;
            levels = lv;
            total_ssd += dist;
        }
    }
    let mut out = CandidateResult {
        mode,
        partitions: Vec::new(),
        motion: [None; 16],
        ssd: total_ssd,
        rate_bits: 0,
        recon,
        levels,
    };
    out.rate_bits = bits::estimate_bits(&out, &ctx.predictors);
    out
}

/// Codes the macroblock with `mode`. `None` signals that the mode is
/// unavailable here (inter mode without a reference picture).
pub fn encode_mb_with_mode(ctx: &MbContext<'_>, mode: Mode) -> Option<CandidateResult> {
    match mode {
        Mode::Intra16x16 | Mode::Intra8x8 | Mode::Intra4x4 => Some(encode_intra(ctx, mode)),
        _ if !ctx.has_inter() => None,
        Mode::Skip => Some(encode_skip(ctx)),
        Mode::Inter16x16 | Mode::Inter16x8 | Mode::Inter8x16 => Some(encode_inter(ctx, mode)),
        Mode::P8x8(subs) => {
            let quads = std::array::from_fn(|q| encode_quadrant(ctx, q, subs[q]));
            Some(assemble_p8x8(ctx, quads, subs))
        }
    }
}

/// Reconstructs the 8x8 chroma block of a decided macroblock: motion
/// compensation with the luma vectors halved (or DC intra prediction for
/// intra macroblocks), then the same residual coding as luma.
pub fn reconstruct_chroma(
    source: &Plane,
    refs: [Option<&Plane>; 2],
    recon: &mut Plane,
    mb_x: usize,
    mb_y: usize,
    motion: &MotionField,
    qp: u8,
) {
    const C: usize = 8;
    let (ox, oy) = (mb_x * C, mb_y * C);
    let mut pred = [0u8; C * C];
    if motion.iter().all(Option::is_none) {
        let top: Option<Vec<u8>> = (oy > 0).then(|| (0..C).map(|i| recon.get(ox + i, oy - 1)).collect());
        let left: Option<Vec<u8>> = (ox > 0).then(|| (0..C).map(|j| recon.get(ox - 1, oy + j)).collect());
        let p = intra_predict(C, top.as_deref(), left.as_deref(), IntraDirection::Dc).expect("dc");
        pred.copy_from_slice(&p);
    } else {
        for (b, info) in motion.iter().enumerate() {
            let info = info.expect("mixed intra/inter motion field");
            let reference = refs[usize::from(info.ref_idx)].expect("missing chroma reference");
            let (bx, by) = ((b % 4) * 2, (b / 4) * 2);
            let mv = MotionVector::new(info.mv.dx >> 1, info.mv.dy >> 1);
            let bounds = valid_mv_range(ox + bx, oy + by, 2, 2, reference.width(), reference.height());
            let mv = clamp_mv(mv, bounds);
            for j in 0..2 {
                for i in 0..2 {
                    pred[(by + j) * C + bx + i] = reference.get(
                        ( (ox + bx + i) as i32 + mv.dx) as usize,
                        ((oy + by + j) as i32 + mv.dy) as usize,
                    );
                }
            }
        }
    }
    for by in (0..C).step_by(4) {
        for bx in (0..C).step_by(4) {
            let mut res = [0i32; 16];
            for j in 0..4 {
                for i in 0..4 {
                    res[j * 4 + i] = i32::from(source.get(ox + bx + i, oy + by + j))
                        - i32::from(pred[(by + j) * C + bx + i]);
                }
            }
            let rec = inverse_quant_transform(&transform_quant(&res, qp), qp);
            for j in 0..4 {
                for i in 0..4 {
                    let v = (i32::from(pred[(by + j) * C + bx + i]) + rec[j * 4 + i]).clamp(0, 255);
                    recon.set(ox + bx + i, oy + by + j, v as u8);
                }
            }
        }
    }
}
