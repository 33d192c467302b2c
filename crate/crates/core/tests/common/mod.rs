#![allow(dead_code)]

use svc_fmd::predict::{encode_mb_with_mode, MbContext, MbType, Mode, RefPicture, SubMode};
use svc_fmd::rd::DecisionGrid;
use svc_fmd::yuv::{PictureType, Plane};

/// Minimum J over every candidate of `ctx`, recomputed from scratch.
///
/// Costs are rebuilt as `ssd + λ·bits` here instead of going through the
/// crate's cost function. P8x8 is enumerated over all 5^4 sub-mode
/// combinations; because the P8x8 header and the motion predictors are
/// fixed per macroblock, a quadrant's ssd and bits do not depend on the
/// other quadrants, so 17 encodes give the exact (ssd, bits) of every
/// combination.
pub fn oracle_min_j(ctx: &MbContext<'_>) -> f64 {
    let lambda = ctx.lambda;
    let j = |ssd: i64, bits: i64| ssd as f64 + lambda * bits as f64;
    let mut best = f64::INFINITY;
    for kind in MbType::ALL {
        if let Some(mode) = Mode::from_kind(kind) {
            if let Some(c) = encode_mb_with_mode(ctx, mode) {
                best = best.min(j(c.ssd as i64, i64::from(c.rate_bits)));
            }
        }
    }
    let base = [SubMode::Direct8x8; 4];
    let Some(b) = encode_mb_with_mode(ctx, Mode::P8x8(base)) else {
        return best;
    };
    let (b_ssd, b_bits) = (b.ssd as i64, i64::from(b.rate_bits));
    // per quadrant, per sub-mode: (Δssd, Δbits) against the base
    let mut delta = [[(0i64, 0i64); 5]; 4];
    for (q, row) in delta.iter_mut().enumerate() {
        for (s, &sub) in SubMode::ALL.iter().enumerate().skip(1) {
            let mut subs = base;
            subs[q] = sub;
            let c = encode_mb_with_mode(ctx, Mode::P8x8(subs)).expect("P8x8 available");
            row[s] = (c.ssd as i64 - b_ssd, i64::from(c.rate_bits) - b_bits);
        }
    }
    for combo in 0..625usize {
        let (mut ssd, mut bits) = (b_ssd, b_bits);
        let mut k = combo;
        for row in &delta {
            let (ds, db) = row[k % 5];
            ssd += ds;
            bits += db;
            k /= 5;
        }
        best = best.min(j(ssd, bits));
    }
    best
}

/// Owned planes and grids behind a single-macroblock context.
pub struct Scene {
    pub source: Plane,
    pub recon: Plane,
    pub current: DecisionGrid,
    pub refs: Vec<(Plane, DecisionGrid)>,
}

impl Scene {
    pub fn new(source: Plane, refs: Vec<Plane>) -> Self {
        let (cols, rows) = (source.width() / 16, source.height() / 16);
        let recon = Plane::filled(source.width(), source.height(), 0);
        Self {
            recon,
            current: DecisionGrid::new(cols, rows),
            refs: refs.into_iter().map(|p| (p, DecisionGrid::new(cols, rows))).collect(),
            source,
        }
    }

    pub fn ctx(&self, picture_type: PictureType, mb_x: usize, mb_y: usize, qp: u8, range: i32) -> MbContext<'_> {
        let mut refs: [Option<RefPicture<'_>>; 2] = [None, None];
        for (slot, (luma, decisions)) in refs.iter_mut().zip(&self.refs) {
            *slot = Some(RefPicture { luma, decisions });
        }
        let lambda = svc_fmd::rd::lambda_mode(i32::from(qp)).unwrap();
        MbContext::new(
            &self.source,
            &self.recon,
            &self.current,
            refs,
            picture_type,
            mb_x,
            mb_y,
            qp,
            lambda,
            range,
        )
    }
}

pub fn plane_from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Plane {
    let mut v = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            v.push(f(x, y));
        }
    }
    Plane::new(width, height, v).unwrap()
}
