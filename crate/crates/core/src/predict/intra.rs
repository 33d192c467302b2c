//! DC / horizontal / vertical intra prediction for square blocks.

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IntraDirection {
    Dc,
    Horizontal,
    Vertical,
}

impl IntraDirection {
    pub const ALL: [IntraDirection; 3] = [
        IntraDirection::Dc,
        IntraDirection::Horizontal,
        IntraDirection::Vertical,
    ];
}

/// Predicts a `size`x`size` block from its reconstructed edges.
///
/// Returns `None` when a directional mode lacks the edge it replicates.
pub fn intra_predict(
    size: usize,
    top: Option<&[u8]>,
    left: Option<&[u8]>,
    direction: IntraDirection,
) -> Option<Vec<u8>> {
    debug_assert!(matches!(size, 4 | 8 | 16));
    let mut out = vec![0u8; size * size];
    match direction {
        IntraDirection::Dc => {
            let mut sum = 0u32;
            let mut n = 0u32;
            for edge in [top, left].into_iter().flatten() {
                sum += edge[..size].iter().map(|&s| u32::from(s)).sum::<u32>();
                n += size as u32;
            }
            let dc = (sum + n / 2).checked_div(n).map_or(128, |v| v as u8);
            out.fill(dc);
        }
        IntraDirection::Vertical => {
            let top = top?;
            for row in out.chunks_exact_mut(size) {
                row.copy_from_slice(&top[..size]);
            }
        }
        IntraDirection::Horizontal => {
            let left = left?;
            for (row, &v) in out.chunks_exact_mut(size).zip(left) {
                row.fill(v);
            }
        }
    }
    Some(out)
}
