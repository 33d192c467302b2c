//! Lagrangian RD cost and the exhaustive mode decision.

use crate::error::{Error, Result};
use crate::predict::encode::MB;
use crate::predict::{
    encode_mb_with_mode, encode_p8x8_greedy, CandidateResult, MbContext, MbType, Mode, MotionField,
    PartitionMotion, SubMode,
};

/// `J = SSD + λ·R` together with its operands.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RDCost {
    pub j: f64,
    pub ssd: u64,
    pub rate_bits: u32,
    pub lambda: f64,
}

/// Mode-decision Lagrange multiplier, `0.85·2^((QP−12)/3)`.
pub fn lambda_mode(qp: i32) -> Result<f64> {
    if !(0..=51).contains(&qp) {
        return Err(Error::Config(format!("qp {qp} outside 0..=51")));
    }
    Ok(0.85 * 2f64.powf(f64::from(qp - 12) / 3.0))
}

pub fn rd_cost(ssd: u64, rate_bits: u32, lambda: f64) -> Result<RDCost> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Contract(format!("lambda {lambda} must be finite and non-negative")));
    }
    Ok(RDCost {
        j: ssd as f64 + lambda * f64::from(rate_bits),
        ssd,
        rate_bits,
        lambda,
    })
}

/// The final coding decision for one macroblock.
#[derive(Clone, Debug)]
pub struct MBDecision {
    pub mode: Mode,
    pub motion: MotionField,
    pub partitions: Vec<PartitionMotion>,
    pub cost: RDCost,
    pub recon: [u8; MB * MB],
    /// Number of candidate modes whose RD cost was computed for this MB.
    pub evaluated_count: u32,
}

impl MBDecision {
    #[inline]
    pub fn kind(&self) -> MbType {
        self.mode.kind()
    }

    #[inline]
    pub fn is_inter(&self) -> bool {
        self.kind().is_inter()
    }
}

/// Per-frame grid of macroblock decisions, filled in raster order.
#[derive(Clone, Debug)]
pub struct DecisionGrid {
    mb_cols: usize,
    mb_rows: usize,
    cells: Vec<Option<MBDecision>>,
}

impl DecisionGrid {
    pub fn new(mb_cols: usize, mb_rows: usize) -> Self {
        Self {
            mb_cols,
            mb_rows,
            cells: vec![None; mb_cols * mb_rows],
        }
    }

    #[inline]
    pub fn mb_cols(&self) -> usize {
        self.mb_cols
    }

    #[inline]
    pub fn mb_rows(&self) -> usize {
        self.mb_rows
    }

    /// Decision at (`mb_x`, `mb_y`); `None` outside the grid or not yet made.
    #[inline]
    pub fn get(&self, mb_x: usize, mb_y: usize) -> Option<&MBDecision> {
        if mb_x >= self.mb_cols || mb_y >= self.mb_rows {
            return None;
        }
        self.cells[mb_y * self.mb_cols + mb_x].as_ref()
    }

    pub fn set(&mut self, mb_x: usize, mb_y: usize, decision: MBDecision) {
        self.cells[mb_y * self.mb_cols + mb_x] = Some(decision);
    }

    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(Option::is_some)
    }

    pub fn iter(&self) -> impl Iterator<Item = &MBDecision> {
        self.cells.iter().flatten()
    }
}

/// Result of asking a [`ModeSearch`] to evaluate a mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Evaluation {
    /// Freshly evaluated with this RD cost.
    New(f64),
    /// Already evaluated for this macroblock; not counted again.
    Cached(f64),
    Unavailable,
}

/// Running set of evaluated candidates for one macroblock.
pub struct ModeSearch<'c, 'a> {
    ctx: &'c MbContext<'a>,
    evaluated: Vec<(CandidateResult, RDCost)>,
}

impl<'c, 'a> ModeSearch<'c, 'a> {
    pub fn new(ctx: &'c MbContext<'a>) -> Self {
        Self {
            ctx,
            evaluated: Vec::with_capacity(8),
        }
    }

    pub fn context(&self) -> &'c MbContext<'a> {
        self.ctx
    }

    /// Evaluates `kind`; P8x8 picks sub-modes greedily among `sub_modes`.
    /// Each macroblock type is evaluated at most once.
    pub fn evaluate(&mut self, kind: MbType, sub_modes: &[SubMode]) -> Evaluation {
        if let Some((_, c)) = self.evaluated.iter().find(|(r, _)| r.mode.kind() == kind) {
            return Evaluation::Cached(c.j);
        }
        let candidate = match Mode::from_kind(kind) {
            Some(mode) => encode_mb_with_mode(self.ctx, mode),
            None => encode_p8x8_greedy(self.ctx, sub_modes),
        };
        let Some(candidate) = candidate else {
            return Evaluation::Unavailable;
        };
        let cost = rd_cost(candidate.ssd, candidate.rate_bits, self.ctx.lambda)
            .expect("lambda validated at context construction");
        self.evaluated.push((candidate, cost));
        Evaluation::New(cost.j)
    }

    pub fn count(&self) -> u32 {
        self.evaluated.len() as u32
    }

    /// Minimum J so far, `None` before the first evaluation.
    pub fn min_j(&self) -> Option<f64> {
        self.evaluated.iter().map(|(_, c)| c.j).min_by(f64::total_cmp)
    }

    /// Type of the minimum-J candidate so far, with the same tie-break as
    /// [`ModeSearch::finish`].
    pub fn best_kind(&self) -> Option<MbType> {
        self.evaluated
            .iter()
            .min_by(|a, b| a.1.j.total_cmp(&b.1.j).then(a.0.mode.kind().cmp(&b.0.mode.kind())))
            .map(|(r, _)| r.mode.kind())
    }

    pub fn candidates(&self) -> impl Iterator<Item = (&CandidateResult, &RDCost)> {
        self.evaluated.iter().map(|(r, c)| (r, c))
    }

    /// Minimum-J candidate; equal costs resolve in canonical type order.
    pub fn finish(self) -> Result<MBDecision> {
        let count = self.count();
        let (candidate, cost) = self
            .evaluated
            .into_iter()
            .min_by(|a, b| a.1.j.total_cmp(&b.1.j).then(a.0.mode.kind().cmp(&b.0.mode.kind())))
            .ok_or_else(|| Error::Contract("no candidate mode evaluated".into()))?;
        Ok(MBDecision {
            mode: candidate.mode,
            motion: candidate.motion,
            partitions: candidate.partitions,
            cost,
            recon: candidate.recon,
            evaluated_count: count,
        })
    }
}

/// Exhaustive decision: every available type, P8x8 over all sub-modes.
pub fn full_search_decide(ctx: &MbContext<'_>) -> Result<MBDecision> {
    let mut search = ModeSearch::new(ctx);
    for kind in MbType::ALL {
        search.evaluate(kind, &SubMode::ALL);
    }
    search.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_reference_points() {
        assert!((lambda_mode(12).unwrap() - 0.85).abs() < 1e-15);
        assert!((lambda_mode(15).unwrap() - 1.70).abs() < 1e-12);
        // 0.85·2^(16/3) evaluated as 0.85·32·2^(1/3)
        let expect = 0.85 * 32.0 * 2f64.cbrt();
        assert!((lambda_mode(28).unwrap() - expect).abs() < 1e-9);
        assert!((lambda_mode(28).unwrap() - 34.2699).abs() < 1e-4);
    }

    #[test]
    fn lambda_doubles_every_three_and_increases() {
        for qp in 0..=45 {
            let a = lambda_mode(qp).unwrap();
            assert!(((lambda_mode(qp + 3).unwrap() / a) - 2.0).abs() < 1e-12);
            assert!(((lambda_mode(qp + 6).unwrap() / a) - 4.0).abs() < 1e-12);
        }
        for qp in 0..51 {
            assert!(lambda_mode(qp + 1).unwrap() > lambda_mode(qp).unwrap());
        }
    }

    #[test]
    fn lambda_rejects_out_of_range() {
        assert!(matches!(lambda_mode(-1), Err(Error::Config(_))));
        assert!(matches!(lambda_mode(52), Err(Error::Config(_))));
    }

    #[test]
    fn rd_cost_arithmetic() {
        assert_eq!(rd_cost(0, 0, 7.5).unwrap().j, 0.0);
        let c = rd_cost(100, 10, 4.0).unwrap();
        assert_eq!(c.j, 140.0);
        assert!(matches!(rd_cost(1, 1, -1.0), Err(Error::Contract(_))));
        assert!(rd_cost(1, 1, f64::NAN).is_err());
    }
}
