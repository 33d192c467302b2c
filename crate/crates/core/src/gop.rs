//! Hierarchical-B GOP planning and per-layer coding state.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fmd::gamma;
use crate::rd::{DecisionGrid, MBDecision};
use crate::yuv::{Frame, PictureType};

/// Coding metadata of one picture, indexed by display order in [`GopPlan`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PictureInfo {
    pub picture_type: PictureType,
    pub temporal_level: u8,
    /// Display indices of reference 0 (past) and reference 1 (future).
    pub refs: [Option<usize>; 2],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GopPlan {
    pub gop_size: usize,
    pub coding_order: Vec<usize>,
    pub pictures: Vec<PictureInfo>,
}

impl GopPlan {
    pub fn frame_count(&self) -> usize {
        self.pictures.len()
    }

    pub fn picture(&self, display_index: usize) -> &PictureInfo {
        &self.pictures[display_index]
    }

    pub fn temporal_levels(&self) -> Vec<u8> {
        self.pictures.iter().map(|p| p.temporal_level).collect()
    }

    /// Copies picture type and temporal level onto the frames.
    pub fn annotate(&self, frames: &mut [Frame]) -> Result<()> {
        if frames.len() != self.frame_count() {
            return Err(Error::Contract(format!(
                "plan covers {} frames, got {}",
                self.frame_count(),
                frames.len()
            )));
        }
        for (f, p) in frames.iter_mut().zip(&self.pictures) {
            f.set_coding_info(p.picture_type, p.temporal_level)?;
        }
        Ok(())
    }

    /// Picture coded immediately before `display_index`, if any.
    pub fn previous_in_coding_order(&self, display_index: usize) -> Option<usize> {
        let pos = self.coding_order.iter().position(|&d| d == display_index)?;
        pos.checked_sub(1).map(|p| self.coding_order[p])
    }
}

/// Dyadic hierarchical-B plan.
///
/// Key pictures sit at multiples of `gop_size` (an I picture first, P
/// pictures after it, each referencing the previous key). Between two keys
/// the B pictures are inserted by recursive bisection, coded level by level;
/// each references the nearest coded pictures on either side. Frames past
/// the last key picture are coded as P pictures in display order.
pub fn build_gop(frame_count: usize, gop_size: usize) -> Result<GopPlan> {
    if !matches!(gop_size, 1 | 2 | 4 | 8 | 16) {
        return Err(Error::Config(format!("gop size {gop_size} must be one of 1, 2, 4, 8, 16")));
    }
    if frame_count == 0 {
        return Err(Error::Config("frame count must be at least 1".into()));
    }
    let mut pictures = vec![
        PictureInfo {
            picture_type: PictureType::P,
            temporal_level: 0,
            refs: [None, None],
        };
        frame_count
    ];
    pictures[0].picture_type = PictureType::I;
    let mut coding_order = vec![0];

    let mut key = 0;
    while key + gop_size < frame_count {
        let next = key + gop_size;
        pictures[next].refs = [Some(key), None];
        coding_order.push(next);
        let mut spans = vec![(key, next)];
        let mut level = 1u8;
        while !spans.is_empty() {
            let mut deeper = Vec::new();
            for (lo, hi) in spans {
                if hi - lo < 2 {
                    continue;
                }
                let mid = (lo + hi) / 2;
                pictures[mid] = PictureInfo {
                    picture_type: PictureType::B,
                    temporal_level: level,
                    refs: [Some(lo), Some(hi)],
                };
                coding_order.push(mid);
                deeper.push((lo, mid));
                deeper.push((mid, hi));
            }
            spans = deeper;
            level += 1;
        }
        key = next;
    }
    for (d, p) in pictures.iter_mut().enumerate().skip(key + 1) {
        p.refs = [Some(d - 1), None];
        coding_order.push(d);
    }
    Ok(GopPlan {
        gop_size,
        coding_order,
        pictures,
    })
}

/// Coding state of one quality layer.
#[derive(Clone, Debug)]
pub struct LayerContext {
    pub layer_id: usize,
    pub qp: u8,
    /// Threshold model parameter; `None` for the base layer.
    pub gamma: Option<f64>,
    pub decisions: BTreeMap<usize, DecisionGrid>,
    pub recon: BTreeMap<usize, Frame>,
}

impl LayerContext {
    pub fn new(layer_id: usize, qp: u8) -> Result<Self> {
        if qp > 51 {
            return Err(Error::Config(format!("qp {qp} outside 0..=51")));
        }
        let gamma = if layer_id == 0 { None } else { Some(gamma(layer_id)?) };
        Ok(Self {
            layer_id,
            qp,
            gamma,
            decisions: BTreeMap::new(),
            recon: BTreeMap::new(),
        })
    }

    pub fn frame_decisions(&self, display_index: usize) -> Option<&DecisionGrid> {
        self.decisions.get(&display_index)
    }
}

/// Base plus enhancement layers; QPs must strictly decrease upwards.
pub fn build_layers(qps: &[u8]) -> Result<Vec<LayerContext>> {
    if qps.is_empty() || qps.len() > 4 {
        return Err(Error::Config(format!("{} layers requested, expected 1..=4", qps.len())));
    }
    if qps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config(format!(
            "layer qps {qps:?} must strictly decrease from base to top layer"
        )));
    }
    qps.iter()
        .enumerate()
        .map(|(id, &qp)| LayerContext::new(id, qp))
        .collect()
}

/// Decision at the same macroblock in the layer below; `None` for the base
/// layer. Querying a lower layer that has not coded the MB is a sequencing
/// error.
pub fn colocated_decision(
    lower_layer: Option<&LayerContext>,
    frame: usize,
    mb_x: usize,
    mb_y: usize,
) -> Result<Option<&MBDecision>> {
    let Some(lower) = lower_layer else {
        return Ok(None);
    };
    lower
        .frame_decisions(frame)
        .and_then(|g| g.get(mb_x, mb_y))
        .map(Some)
        .ok_or_else(|| {
            Error::Sequencing(format!(
                "layer {} has not coded MB ({mb_x},{mb_y}) of frame {frame}",
                lower.layer_id
            ))
        })
}

/// Co-located decisions in reference pictures 0 and 1 of `frame`.
pub fn reference_decisions<'l>(
    plan: &GopPlan,
    layer: &'l LayerContext,
    frame: usize,
    mb_x: usize,
    mb_y: usize,
) -> Result<(Option<&'l MBDecision>, Option<&'l MBDecision>)> {
    let info = plan.picture(frame);
    let lookup = |r: Option<usize>| -> Result<Option<&'l MBDecision>> {
        let Some(r) = r else { return Ok(None) };
        let grid = layer.frame_decisions(r).ok_or_else(|| {
            Error::Sequencing(format!(
                "reference frame {r} of frame {frame} not coded in layer {}",
                layer.layer_id
            ))
        })?;
        Ok(grid.get(mb_x, mb_y))
    };
    Ok((lookup(info.refs[0])?, lookup(info.refs[1])?))
}
