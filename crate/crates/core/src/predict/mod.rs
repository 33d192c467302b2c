//! Prediction, residual coding and rate estimation for one macroblock.

pub mod bits;
pub mod encode;
pub mod intra;
pub mod motion;
pub mod transform;

use std::fmt;

pub use bits::{coefficient_bits, estimate_bits, header_bits, se_bits};
pub use encode::{encode_mb_with_mode, encode_p8x8_greedy, CandidateResult, MbContext, RefPicture};
pub use intra::{intra_predict, IntraDirection};
pub use motion::{motion_search, skip_mv_predictor};
pub use transform::{inverse_quant_transform, qstep, transform_quant};

/// Macroblock type without sub-partition detail, in canonical order.
///
/// The derived `Ord` is the tie-break order used by both decision policies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MbType {
    Skip,
    Inter16x16,
    Inter16x8,
    Inter8x16,
    P8x8,
    Intra16x16,
    Intra8x8,
    Intra4x4,
}

impl MbType {
    pub const ALL: [MbType; 8] = [
        MbType::Skip,
        MbType::Inter16x16,
        MbType::Inter16x8,
        MbType::Inter8x16,
        MbType::P8x8,
        MbType::Intra16x16,
        MbType::Intra8x8,
        MbType::Intra4x4,
    ];

    pub const INTER: [MbType; 5] = [
        MbType::Skip,
        MbType::Inter16x16,
        MbType::Inter16x8,
        MbType::Inter8x16,
        MbType::P8x8,
    ];

    pub const INTRA: [MbType; 3] = [MbType::Intra16x16, MbType::Intra8x8, MbType::Intra4x4];

    #[inline]
    pub fn is_intra(self) -> bool {
        matches!(self, MbType::Intra16x16 | MbType::Intra8x8 | MbType::Intra4x4)
    }

    #[inline]
    pub fn is_inter(self) -> bool {
        !self.is_intra()
    }

    pub fn name(self) -> &'static str {
        match self {
            MbType::Skip => "SKIP",
            MbType::Inter16x16 => "INTER_16x16",
            MbType::Inter16x8 => "INTER_16x8",
            MbType::Inter8x16 => "INTER_8x16",
            MbType::P8x8 => "P8x8",
            MbType::Intra16x16 => "INTRA_16x16",
            MbType::Intra8x8 => "INTRA_8x8",
            MbType::Intra4x4 => "INTRA_4x4",
        }
    }
}

impl fmt::Display for MbType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Partitioning of one 8x8 quadrant inside a P8x8 macroblock.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SubMode {
    Direct8x8,
    Sub8x8,
    Sub8x4,
    Sub4x8,
    Sub4x4,
}

impl SubMode {
    pub const ALL: [SubMode; 5] = [
        SubMode::Direct8x8,
        SubMode::Sub8x8,
        SubMode::Sub8x4,
        SubMode::Sub4x8,
        SubMode::Sub4x4,
    ];
}

/// A complete macroblock coding mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Skip,
    Inter16x16,
    Inter16x8,
    Inter8x16,
    /// One sub-mode per 8x8 quadrant in raster order.
    P8x8([SubMode; 4]),
    Intra16x16,
    Intra8x8,
    Intra4x4,
}

impl Mode {
    pub fn kind(&self) -> MbType {
        match self {
            Mode::Skip => MbType::Skip,
            Mode::Inter16x16 => MbType::Inter16x16,
            Mode::Inter16x8 => MbType::Inter16x8,
            Mode::Inter8x16 => MbType::Inter8x16,
            Mode::P8x8(_) => MbType::P8x8,
            Mode::Intra16x16 => MbType::Intra16x16,
            Mode::Intra8x8 => MbType::Intra8x8,
            Mode::Intra4x4 => MbType::Intra4x4,
        }
    }

    /// The mode for a type that carries no sub-modes; `None` for P8x8.
    pub fn from_kind(kind: MbType) -> Option<Mode> {
        Some(match kind {
            MbType::Skip => Mode::Skip,
            MbType::Inter16x16 => Mode::Inter16x16,
            MbType::Inter16x8 => Mode::Inter16x8,
            MbType::Inter8x16 => Mode::Inter8x16,
            MbType::P8x8 => return None,
            MbType::Intra16x16 => Mode::Intra16x16,
            MbType::Intra8x8 => Mode::Intra8x8,
            MbType::Intra4x4 => Mode::Intra4x4,
        })
    }

    pub fn sub_modes(&self) -> Option<&[SubMode; 4]> {
        match self {
            Mode::P8x8(s) => Some(s),
            _ => None,
        }
    }

    #[inline]
    pub fn is_intra(&self) -> bool {
        self.kind().is_intra()
    }
}

/// Integer-pel displacement; the prediction for a block at (x, y) is read
/// from (x + dx, y + dy) in the reference picture.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct MotionVector {
    pub dx: i32,
    pub dy: i32,
}

impl MotionVector {
    pub const ZERO: MotionVector = MotionVector { dx: 0, dy: 0 };

    #[inline]
    pub const fn new(dx: i32, dy: i32) -> Self {
        Self { dx, dy }
    }

    #[inline]
    pub fn l1(self) -> i32 {
        self.dx.abs() + self.dy.abs()
    }
}

impl std::ops::Sub for MotionVector {
    type Output = MotionVector;

    fn sub(self, rhs: MotionVector) -> MotionVector {
        MotionVector::new(self.dx - rhs.dx, self.dy - rhs.dy)
    }
}

/// Motion of one block: which reference list entry and the vector into it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MotionInfo {
    pub ref_idx: u8,
    pub mv: MotionVector,
}

/// Per-4x4-block motion field of a macroblock (raster order); `None` for intra.
pub type MotionField = [Option<MotionInfo>; 16];

/// Motion of one coded partition and whether its vector difference is sent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PartitionMotion {
    pub motion: MotionInfo,
    pub coded: bool,
}

/// Rectangle inside the macroblock, in luma samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub const fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Self { x, y, w, h }
    }
}
