//! Fast macroblock mode decision.
//!
//! Candidate pruning combines:
//!
//! * a desired mode list ranked by how often each type occurs among the
//!   causal neighbours (left, upper-left, upper, upper-right and the
//!   co-located MB of the previously coded picture);
//! * mode correlation with the co-located MBs of the two reference
//!   pictures (both SKIP, one SKIP, neither SKIP);
//! * early termination. In the base layer a partition candidate that
//!   undercuts every earlier cost ends the walk when exactly one reference
//!   MB is SKIP. In enhancement layer `l` the correlation candidates are
//!   kept when their best cost is below `Γ(l)·J` of the co-located MB in the
//!   layer below (Γ = 0.6, 0.9, 1.2 for layers 1, 2, 3); otherwise the
//!   desired list is walked until a candidate undercuts `Γ(l)` times the
//!   running minimum.
//!
//! Outside intra pictures the full intra set is only tried when a walk ends
//! on a cost above the minimum; in the base layer with no SKIP reference the
//! MB must also cost more than its co-located predecessor. Both policies evaluate candidates through the same
//! [`ModeSearch`], so the costs they compare are identical for identical
//! inputs.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::predict::{MbContext, MbType, SubMode};
use crate::rd::{DecisionGrid, Evaluation, MBDecision, ModeSearch};
use crate::yuv::PictureType;

/// Threshold model parameter Γ of enhancement layer `layer_id`.
pub fn gamma(layer_id: usize) -> Result<f64> {
    match layer_id {
        1 => Ok(0.6),
        2 => Ok(0.9),
        3 => Ok(1.2),
        _ => Err(Error::Config(format!(
            "no threshold parameter for layer {layer_id}; enhancement layers are 1..=3"
        ))),
    }
}

/// `J_TH = Γ(layer)·J_min`.
pub fn threshold(j_min: f64, layer_id: usize) -> Result<f64> {
    Ok(gamma(layer_id)? * j_min)
}

/// Early termination test: the current cost strictly beats the minimum.
#[inline]
pub fn early_accept(j_curr: f64, j_min: f64) -> bool {
    j_curr < j_min
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdParams {
    pub gamma: f64,
    pub j_min: f64,
    pub j_th: f64,
}

impl ThresholdParams {
    pub fn new(layer_id: usize, j_min: f64) -> Result<Self> {
        let gamma = gamma(layer_id)?;
            Ok(Self {
            gamma,
            j_min,
            j_th: gamma * j_min,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NeighborPosition {
    UpperLeft,
    Left,
    Upper,
    UpperRight,
    PreviousColocated,
}

/// Causal reference macroblocks feeding the probability model.
#[derive(Clone, Debug, Default)]
pub struct NeighborSet<'d> {
    pub entries: Vec<(NeighborPosition, &'d MBDecision)>,
}

impl NeighborSet<'_> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn modes(&self) -> Vec<MbType> {
        self.entries.iter().map(|(_, d)| d.kind()).collect()
    }
}

/// Collects the neighbours of the MB whose top-left luma sample is
/// (`x`, `y`). Members outside the picture, not yet coded, or (for the first
/// coded picture) without a previous picture are omitted.
pub fn build_neighbor_set<'d>(
    current: &'d DecisionGrid,
    previous: Option<&'d DecisionGrid>,
    x: usize,
    y: usize,
) -> NeighborSet<'d> {
    debug_assert!(x.is_multiple_of(16) && y.is_multiple_of(16));
    let (mx, my) = ((x / 16) as isize, (y / 16) as isize);
    let at = |dx: isize, dy: isize| -> Option<&'d MBDecision> {
        let (cx, cy) = (mx + dx, my + dy);
        if cx < 0 || cy < 0 {
            return None;
        }
        current.get(cx as usize, cy as usize)
    };
    let mut entries = Vec::with_capacity(5);
    let spatial = [
        (NeighborPosition::UpperLeft, at(-1, -1)),
        (NeighborPosition::Left, at(-1, 0)),
        (NeighborPosition::Upper, at(0, -1)),
        (NeighborPosition::UpperRight, at(1, -1)),
    ];
    for (pos, d) in spatial {
        if let Some(d) = d {
            entries.push((pos, d));
        }
    }
    if let Some(d) = previous.and_then(|g| g.get(mx as usize, my as usize)) {
        entries.push((NeighborPosition::PreviousColocated, d));
    }
    NeighborSet { entries }
}

/// Candidate types ordered by estimated probability of being best.
#[derive(Clone, Debug, PartialEq)]
pub struct DesiredModeList {
    pub entries: Vec<(MbType, f64)>,
}

impl DesiredModeList {
    /// Builds the list from the neighbour modes: each type's probability is
    /// its share of the neighbours (the normalisation constant cancels),
    /// sorted by descending probability with canonical order on ties, then
    /// the canonical inter types not present among the neighbours at zero.
    pub fn from_modes(modes: &[MbType]) -> Self {
        let mut counts = [0usize; 8];
        for &m in modes {
            counts[m as usize] += 1;
        }
        let total = modes.len() as f64;
        let mut entries: Vec<(MbType, f64)> = MbType::ALL
            .iter()
            .filter(|&&m| counts[m as usize] > 0)
            .map(|&m| (m, counts[m as usize] as f64 / total))
            .collect();
        entries.sort_by(|a, b| {
            counts[b.0 as usize]
                .cmp(&counts[a.0 as usize])
                .then(a.0.cmp(&b.0))
        });
        for m in MbType::INTER {
            if counts[m as usize] == 0 {
                entries.push((m, 0.0));
            }
        }
        Self { entries }
    }

    pub fn first(&self) -> Option<MbType> {
        self.entries.first().map(|e| e.0)
    }

    pub fn modes(&self) -> Vec<MbType> {
        self.entries.iter().map(|e| e.0).collect()
    }

    pub fn probability(&self, mode: MbType) -> f64 {
        self.entries
            .iter()
            .find(|e| e.0 == mode)
            .map_or(0.0, |e| e.1)
    }
}

pub fn desired_mode_list(p: &NeighborSet<'_>) -> DesiredModeList {
    DesiredModeList::from_modes(&p.modes())
}

fn partition_neighbours(m: MbType) -> Vec<MbType> {
    let row: &[MbType] = if m.is_intra() { &MbType::INTRA } else { &MbType::INTER };
    let i = row.iter().position(|&r| r == m).expect("type in its row");
    row[i.saturating_sub(1)..(i + 2).min(row.len())].to_vec()
}

/// Candidate types implied by the co-located MB types of the two reference
/// pictures, in canonical order.
///
/// Both SKIP → {SKIP, 16x16}; exactly one SKIP → all inter types; otherwise
/// {SKIP, 16x16} plus each present reference type and its adjacent partition
/// sizes. An absent reference counts as non-SKIP and contributes nothing.
pub fn correlation_candidates(ref0: Option<MbType>, ref1: Option<MbType>) -> Vec<MbType> {
    let skips = [ref0, ref1]
        .iter()
        .filter(|r| **r == Some(MbType::Skip))
        .count();
    let mut set: BTreeSet<MbType> = [MbType::Skip, MbType::Inter16x16].into();
    match skips {
        2 => {}
        1 => set.extend(MbType::INTER),
        _ => {
            for r in [ref0, ref1].into_iter().flatten() {
                set.extend(partition_neighbours(r));
            }
        }
    }
    set.into_iter().collect()
}

/// P8x8 sub-modes and whether INTRA_8x8 joins the candidates, keyed on the
/// first entry of the desired mode list.
pub fn refinement_for(first: Option<MbType>) -> (&'static [SubMode], bool) {
    match first {
        Some(MbType::Skip) | Some(MbType::Intra16x16) => (&[SubMode::Sub8x8], true),
        Some(MbType::Inter16x8) => (&[SubMode::Direct8x8, SubMode::Sub8x4], true),
        Some(MbType::Inter8x16) => (&[SubMode::Direct8x8, SubMode::Sub4x8], true),
        _ => (&SubMode::ALL, false),
    }
}

/// Which branch of the fast decision produced a macroblock's mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DecisionPath {
    /// Intra picture: only intra types exist.
    IntraOnly,
    /// Base layer, co-located MB inter, both references SKIP.
    BaseBothSkip,
    /// Base layer, co-located MB inter, exactly one reference SKIP.
    BaseOneSkip,
    /// Base layer, co-located MB inter, no reference SKIP.
    BaseNoSkip,
    /// Enhancement layer, co-located MB in the layer below inter coded.
    Correlation,
    /// Desired-mode-list walk.
    DesiredList,
}

/// When a candidate walk stops early.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Stop {
    /// Evaluate every candidate.
    Never,
    /// Stop at the first fresh candidate whose cost is below the given
    /// factor times the minimum of the candidates before it.
    Running(f64),
}

#[derive(Clone, Copy, Debug, Default)]
struct WalkEnd {
    accepted: bool,
    /// Cost of the last fresh evaluation and the minimum before it.
    last: Option<(f64, f64)>,
}

impl WalkEnd {
    /// The walk ran out without acceptance and its last candidate did not
    /// improve on the minimum.
    fn needs_intra_fallback(&self) -> bool {
        !self.accepted && self.last.is_some_and(|(j_curr, j_min)| j_curr > j_min)
    }
}

fn walk(
    search: &mut ModeSearch<'_, '_>,
    kinds: impl IntoIterator<Item = (MbType, &'static [SubMode])>,
    stop: Stop,
) -> WalkEnd {
    let mut end = WalkEnd::default();
    for (kind, subs) in kinds {
        let prior = search.min_j();
        let (Evaluation::New(j), Some(m)) = (search.evaluate(kind, subs), prior) else {
            continue;
        };
        if let Stop::Running(factor) = stop {
            if early_accept(j, factor * m) {
                end.accepted = true;
                return end;
            }
        }
        end.last = Some((j, m));
    }
    end
}

fn full(kinds: &[MbType]) -> impl Iterator<Item = (MbType, &'static [SubMode])> + '_ {
    kinds.iter().map(|&k| (k, &SubMode::ALL[..]))
}

fn intra_all(search: &mut ModeSearch<'_, '_>) {
    for k in MbType::INTRA {
        search.evaluate(k, &SubMode::ALL);
    }
}

/// Reference-picture co-located types; a P picture has one reference, which
/// then stands in for both.
fn reference_kinds(ctx: &MbContext<'_>) -> (Option<MbType>, Option<MbType>) {
    let at = |r: usize| {
        ctx.refs[r]
            .and_then(|p| p.decisions.get(ctx.mb_x, ctx.mb_y))
            .map(MBDecision::kind)
    };
    let r0 = at(0);
    let r1 = if ctx.picture_type == PictureType::P { r0 } else { at(1) };
    (r0, r1)
}

/// Desired-mode-list walk with the P8x8 sub-mode refinement, then the
/// intra fallback when the walk ends on a cost above the minimum.
fn desired_list_path(search: &mut ModeSearch<'_, '_>, previous: Option<&DecisionGrid>, stop: Stop) {
    let ctx = search.context();
    let neighbours = build_neighbor_set(ctx.current, previous, ctx.mb_x * 16, ctx.mb_y * 16);
    let list = desired_mode_list(&neighbours);
    let (subs, with_intra8) = refinement_for(list.first());
    let order = list
        .modes()
        .into_iter()
        .map(|kind| (kind, if kind == MbType::P8x8 { subs } else { &SubMode::ALL[..] }));
    let end = walk(search, order, stop);
    if end.accepted {
        return;
    }
    if search.best_kind() == Some(MbType::P8x8) {
        if with_intra8 {
            search.evaluate(MbType::Intra8x8, &SubMode::ALL);
        }
    } else if end.needs_intra_fallback() {
        intra_all(search);
    }
}

/// Fast decision for a base-layer macroblock. `previous` is the decision
/// grid of the previously coded picture of the same layer.
pub fn decide_base_layer(ctx: &MbContext<'_>, previous: Option<&DecisionGrid>) -> Result<MBDecision> {
    decide_base_layer_traced(ctx, previous).map(|(d, _)| d)
}

pub fn decide_base_layer_traced(
    ctx: &MbContext<'_>,
    previous: Option<&DecisionGrid>,
) -> Result<(MBDecision, DecisionPath)> {
    let mut search = ModeSearch::new(ctx);
    if !ctx.has_inter() {
        intra_all(&mut search);
        return Ok((search.finish()?, DecisionPath::IntraOnly));
    }
    let colocated = previous.and_then(|g| g.get(ctx.mb_x, ctx.mb_y));
    let path = if colocated.is_some_and(MBDecision::is_inter) {
        let (r0, r1) = reference_kinds(ctx);
        let skip0 = r0 == Some(MbType::Skip);
        let skip1 = r1 == Some(MbType::Skip);
        walk(&mut search, full(&[MbType::Skip, MbType::Inter16x16]), Stop::Never);
        if skip0 && skip1 {
            DecisionPath::BaseBothSkip
        } else {
            let rest = walk(
                &mut search,
                full(&[MbType::Inter16x8, MbType::Inter8x16, MbType::P8x8]),
                if skip0 || skip1 { Stop::Running(1.0) } else { Stop::Never },
            );
            if skip0 || skip1 {
                DecisionPath::BaseOneSkip
            } else {
                // intra only when the walk ended above its minimum and the
                // MB now costs more than its predecessor in the previous picture
                let harder = search.min_j().zip(colocated).is_some_and(|(j, c)| j > c.cost.j);
                if rest.needs_intra_fallback() && harder {
                    intra_all(&mut search);
                }
                DecisionPath::BaseNoSkip
            }
        }
    } else {
        desired_list_path(&mut search, previous, Stop::Never);
        DecisionPath::DesiredList
    };
    Ok((search.finish()?, path))
}

/// Fast decision for an enhancement-layer macroblock.
///
/// `colocated` is the decision at the same MB in the layer below; its
/// absence is a sequencing error.
pub fn decide_enh_layer(
    ctx: &MbContext<'_>,
    layer_id: usize,
    colocated: Option<&MBDecision>,
    previous: Option<&DecisionGrid>,
) -> Result<MBDecision> {
    decide_enh_layer_traced(ctx, layer_id, colocated, previous).map(|(d, _)| d)
}

pub fn decide_enh_layer_traced(
    ctx: &MbContext<'_>,
    layer_id: usize,
    colocated: Option<&MBDecision>,
    previous: Option<&DecisionGrid>,
) -> Result<(MBDecision, DecisionPath)> {
    if layer_id == 0 {
        return Err(Error::Contract("enhancement decision requested for the base layer".into()));
    }
    let colocated = colocated.ok_or_else(|| {
        Error::Sequencing(format!(
            "layer {} has not coded MB ({},{}) yet",
            layer_id - 1,
            ctx.mb_x,
            ctx.mb_y
        ))
    })?;
    let mut search = ModeSearch::new(ctx);
    if !ctx.has_inter() {
        intra_all(&mut search);
        return Ok((search.finish()?, DecisionPath::IntraOnly));
    }
    let running = Stop::Running(gamma(layer_id)?);
    let j_th = threshold(colocated.cost.j, layer_id)?;
    let path = if colocated.is_inter() {
        let (r0, r1) = reference_kinds(ctx);
        let mut kinds: BTreeSet<MbType> = correlation_candidates(r0, r1).into_iter().collect();
        if layer_id >= 2 {
            for reference in ctx.refs.iter().flatten() {
                let g = reference.decisions;
                let (x, y) = (ctx.mb_x as isize, ctx.mb_y as isize);
                for (dx, dy) in [(0, -1), (-1, 0), (1, 0), (0, 1)] {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 {
                        continue;
                    }
                    if let Some(d) = g.get(nx as usize, ny as usize) {
                        kinds.insert(d.kind());
                    }
                }
            }
        }
        let kinds: Vec<MbType> = kinds.into_iter().collect();
        walk(&mut search, full(&kinds), Stop::Never);
        if !search.min_j().is_some_and(|j| early_accept(j, j_th)) {
            desired_list_path(&mut search, previous, running);
        }
        DecisionPath::Correlation
    } else {
        desired_list_path(&mut search, previous, running);
        DecisionPath::DesiredList
    };
    Ok((search.finish()?, path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    use MbType::*;

    #[test]
    fn gamma_per_layer() {
        assert_eq!(gamma(1).unwrap(), 0.6);
        assert_eq!(gamma(2).unwrap(), 0.9);
        assert_eq!(gamma(3).unwrap(), 1.2);
        assert!(matches!(gamma(0), Err(Error::Config(_))));
        assert!(matches!(gamma(4), Err(Error::Config(_))));
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(threshold(1000.0, 1).unwrap(), 600.0);
        assert_eq!(threshold(1000.0, 3).unwrap(), 1200.0);
        assert_eq!(threshold(0.0, 2).unwrap(), 0.0);
        let t = ThresholdParams::new(2, 50.0).unwrap();
        assert_eq!(t.j_th, t.gamma * t.j_min);
    }

    #[test]
    fn early_accept_is_strict() {
        assert!(early_accept(500.0, 600.0));
        assert!(!early_accept(600.0, 600.0));
        assert!(!early_accept(0.0, 0.0));
    }

    #[test]
    fn mostly_skip_neighbourhood() {
        let l = DesiredModeList::from_modes(&[Skip, Skip, Skip, Inter16x16, Inter16x16]);
        assert_eq!(
            l.entries,
            vec![
                (Skip, 0.6),
                (Inter16x16, 0.4),
                (Inter16x8, 0.0),
                (Inter8x16, 0.0),
                (P8x8, 0.0)
            ]
        );
    }

    #[test]
    fn unanimous_skip() {
        let l = DesiredModeList::from_modes(&[Skip; 5]);
        assert_eq!(l.entries[0], (Skip, 1.0));
        assert_eq!(l.first(), Some(Skip));
    }

    #[test]
    fn empty_neighbourhood_is_canonical() {
        let l = DesiredModeList::from_modes(&[]);
        assert_eq!(l.modes(), MbType::INTER.to_vec());
        assert!(l.entries.iter().all(|e| e.1 == 0.0));
    }

    #[test]
    fn intra_neighbours_lead_the_list() {
        let l = DesiredModeList::from_modes(&[Intra4x4, Intra4x4, Skip]);
        assert_eq!(l.modes(), vec![Intra4x4, Skip, Inter16x16, Inter16x8, Inter8x16, P8x8]);
    }

    #[test]
    fn correlation_examples() {
        assert_eq!(correlation_candidates(Some(Skip), Some(Skip)), vec![Skip, Inter16x16]);
        assert_eq!(correlation_candidates(Some(Skip), Some(Inter16x8)), MbType::INTER.to_vec());
        assert_eq!(correlation_candidates(None, None), vec![Skip, Inter16x16]);
        assert_eq!(
            correlation_candidates(Some(Inter8x16), Some(Inter16x16)),
            vec![Skip, Inter16x16, Inter16x8, Inter8x16, P8x8]
        );
        assert_eq!(
            correlation_candidates(Some(Intra4x4), None),
            vec![Skip, Inter16x16, Intra8x8, Intra4x4]
        );
    }

    #[test]
    fn refinement_table() {
        assert_eq!(refinement_for(Some(Skip)), (&[SubMode::Sub8x8][..], true));
        assert_eq!(refinement_for(Some(Intra16x16)), (&[SubMode::Sub8x8][..], true));
        assert_eq!(
            refinement_for(Some(Inter16x8)),
            (&[SubMode::Direct8x8, SubMode::Sub8x4][..], true)
        );
        assert_eq!(
            refinement_for(Some(Inter8x16)),
            (&[SubMode::Direct8x8, SubMode::Sub4x8][..], true)
        );
        assert_eq!(refinement_for(Some(P8x8)), (&SubMode::ALL[..], false));
        assert_eq!(refinement_for(None), (&SubMode::ALL[..], false));
    }

    fn any_type() -> impl Strategy<Value = MbType> {
        (0usize..8).prop_map(|i| MbType::ALL[i])
    }

    proptest! {
        #[test]
        fn correlation_always_has_skip_and_16x16(
            a in proptest::option::of(any_type()),
            b in proptest::option::of(any_type()),
        ) {
            let c = correlation_candidates(a, b);
            prop_assert!(c.contains(&Skip) && c.contains(&Inter16x16));
            prop_assert!(c.windows(2).all(|w| w[0] < w[1]));
        }

        #[test]
        fn threshold_increases_with_layer(j in 1e-6f64..1e9) {
            let t: Vec<f64> = (1..=3).map(|l| threshold(j, l).unwrap()).collect();
            prop_assert!(t[0] < t[1] && t[1] < t[2]);
        }
    }
}
