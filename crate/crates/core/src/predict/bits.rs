//! Bit-cost model for one macroblock.
//!
//! The estimate is a fixed header cost per macroblock type, plus
//! signed Exp-Golomb lengths for every transmitted motion vector difference,
//! plus per 4x4 block the Exp-Golomb length of each nonzero level and one
//! significance flag per zig-zag position up to the last nonzero level.

use super::encode::CandidateResult;
use super::{Mode, MotionVector};

/// Zig-zag scan of a raster 4x4 block.
pub const ZIGZAG_4X4: [usize; 16] = [0, 1, 4, 8, 5, 2, 3, 6, 9, 12, 13, 10, 7, 11, 14, 15];

/// Length in bits of the unsigned Exp-Golomb code for `code_num`.
#[inline]
pub fn ue_bits(code_num: u32) -> u32 {
    let x = u64::from(code_num) + 1;
    2 * (63 - x.leading_zeros()) + 1
}

/// Length in bits of the signed Exp-Golomb code for `v`
/// (mapping v > 0 → 2v − 1, v ≤ 0 → −2v).
#[inline]
pub fn se_bits(v: i32) -> u32 {
    let code = if v > 0 {
        2 * v.unsigned_abs() - 1
    } else {
        2 * v.unsigned_abs()
    };
    ue_bits(code)
}

pub fn header_bits(mode: &Mode) -> u32 {
    match mode {
        Mode::Skip => 1,
        Mode::Inter16x16 => 3,
        Mode::Inter16x8 | Mode::Inter8x16 => 4,
        Mode::P8x8(_) => 5 + 2 * 4,
        Mode::Intra16x16 => 4,
        Mode::Intra8x8 | Mode::Intra4x4 => 6,
    }
}

pub fn mvd_bits(mv: MotionVector, predictor: MotionVector) -> u32 {
    let d = mv - predictor;
    se_bits(d.dx) + se_bits(d.dy)
}

pub fn coefficient_bits(levels: &[i32; 16]) -> u32 {
    let mut last = None;
    let mut bits = 0;
    for (pos, &idx) in ZIGZAG_4X4.iter().enumerate() {
        let l = levels[idx];
        if l != 0 {
            bits += se_bits(l);
            last = Some(pos);
        }
    }
    match last {
        Some(pos) => bits + pos as u32 + 1,
        None => 0,
    }
}

/// Motion vector predictors per reference list entry.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MvPredictors {
    pub per_ref: [MotionVector; 2],
}

impl MvPredictors {
    #[inline]
    pub fn for_ref(&self, ref_idx: u8) -> MotionVector {
        self.per_ref[usize::from(ref_idx)]
    }
}

/// Recomputes the rate of a fully populated candidate from its mode,
/// partition motion and quantized levels.
pub fn estimate_bits(candidate: &CandidateResult, predictors: &MvPredictors) -> u32 {
    let mut bits = header_bits(&candidate.mode);
    if candidate.mode == Mode::Skip {
        return bits;
    }
    for p in candidate.partitions.iter().filter(|p| p.coded) {
        bits += mvd_bits(p.motion.mv, predictors.for_ref(p.motion.ref_idx));
    }
    bits + candidate.levels.iter().map(coefficient_bits).sum::<u32>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Codeword built bit by bit: prefix zeros, marker, suffix.
    fn exp_golomb_codeword(code_num: u32) -> String {
        let v = code_num as u64 + 1;
        let body = format!("{v:b}");
        format!("{}{}", "0".repeat(body.len() - 1), body)
    }

    #[test]
    fn exp_golomb_table() {
        let expected = ["1", "010", "011", "00100", "00101", "00110", "00111", "0001000"];
        for (n, cw) in expected.iter().enumerate() {
            assert_eq!(exp_golomb_codeword(n as u32), *cw);
            assert_eq!(ue_bits(n as u32) as usize, cw.len());
        }
    }

    #[test]
    fn signed_mapping() {
        assert_eq!(se_bits(0), 1);
        assert_eq!(se_bits(1), 3);
        assert_eq!(se_bits(-1), 3);
        assert_eq!(se_bits(2), 5);
        assert_eq!(se_bits(-2), 5);
        assert_eq!(se_bits(4), 7);
    }

    #[test]
    fn mvd_component_of_two_costs_five() {
        let bits = mvd_bits(MotionVector::new(2, 0), MotionVector::ZERO);
        assert_eq!(bits, 5 + 1);
    }

    #[test]
    fn zero_levels_cost_nothing() {
        assert_eq!(coefficient_bits(&[0; 16]), 0);
    }

    #[test]
    fn dc_only_block() {
        let mut l = [0; 16];
        l[0] = 1;
        assert_eq!(coefficient_bits(&l), 3 + 1);
        l[15] = -1;
        assert_eq!(coefficient_bits(&l), 3 + 3 + 16);
    }

    #[test]
    fn skip_header_is_one_bit() {
        assert_eq!(header_bits(&Mode::Skip), 1);
        assert_eq!(header_bits(&Mode::P8x8([super::super::SubMode::Sub8x8; 4])), 13);
    }

    proptest! {
        #[test]
        fn se_bits_matches_codeword(v in -5000i32..5000) {
            let code = if v > 0 { 2 * v - 1 } else { -2 * v } as u32;
            prop_assert_eq!(se_bits(v) as usize, exp_golomb_codeword(code).len());
        }

        #[test]
        fn adding_nonzero_never_decreases(
            levels in proptest::array::uniform16(-20i32..20),
            pos in 0usize..16,
            v in prop_oneof![-30i32..0, 1i32..30],
        ) {
            let mut levels = levels;
            levels[pos] = 0;
            let before = coefficient_bits(&levels);
            let mut more = levels;
            more[pos] = v;
            prop_assert!(coefficient_bits(&more) > before);
        }
    }
}
