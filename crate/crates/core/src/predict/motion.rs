//! Integer-pel full-search block matching and the median MV predictor.

use super::MotionVector;
use crate::yuv::Plane;

/// Range of displacements keeping a `w`x`h` block at (`x`, `y`) inside a
/// `width`x`height` picture, as `(min_dx, max_dx, min_dy, max_dy)`.
#[inline]
pub fn valid_mv_range(
    x: usize,
    y: usize,
    w: usize,
    h: usize,
    width: usize,
    height: usize,
) -> (i32, i32, i32, i32) {
    (
        -(x as i32),
        (width - w - x) as i32,
        -(y as i32),
        (height - h - y) as i32,
    )
}

pub fn clamp_mv(mv: MotionVector, range: (i32, i32, i32, i32)) -> MotionVector {
    MotionVector::new(mv.dx.clamp(range.0, range.1), mv.dy.clamp(range.2, range.3))
}

/// Sum of absolute differences between `source` (stride `w`) and the block
/// at (`rx`, `ry`) of `reference`.
#[inline]
pub fn block_sad(source: &[u8], w: usize, h: usize, reference: &Plane, rx: usize, ry: usize) -> u32 {
    let stride = reference.width();
    let refs = reference.samples();
    let mut sad = 0u32;
    for row in 0..h {
        let r = &refs[(ry + row) * stride + rx..(ry + row) * stride + rx + w];
        let s = &source[row * w..row * w + w];
        sad += s
            .iter()
            .zip(r)
            .map(|(&a, &b)| u32::from(a.abs_diff(b)))
            .sum::<u32>();
    }
    sad
}

/// Exhaustive search of the `(2r+1)²` window around `center`, clipped to the
/// picture. Ties go to the smaller `|dx|+|dy|`, then smaller `dy`, then
/// smaller `dx`.
#[allow(clippy::too_many_arguments)]
pub fn motion_search(
    source: &[u8],
    w: usize,
    h: usize,
    x: usize,
    y: usize,
    reference: &Plane,
    center: MotionVector,
    search_range: i32,
) -> (MotionVector, u32) {
    let bounds = valid_mv_range(x, y, w, h, reference.width(), reference.height());
    let c = clamp_mv(center, bounds);
    let mut best = (MotionVector::ZERO, u32::MAX);
    let mut best_key = (u32::MAX, i32::MAX, i32::MAX, i32::MAX);
    for dy in (c.dy - search_range).max(bounds.2)..=(c.dy + search_range).min(bounds.3) {
        for dx in (c.dx - search_range).max(bounds.0)..=(c.dx + search_range).min(bounds.1) {
            let sad = block_sad(
                source,
                w,
                h,
                reference,
                (x as i32 + dx) as usize,
                (y as i32 + dy) as usize,
            );
            let key = (sad, dx.abs() + dy.abs(), dy, dx);
            if key < best_key {
                best_key = key;
                best = (MotionVector::new(dx, dy), sad);
            }
        }
    }
    best
}

/// Component-wise median of the available neighbour vectors. A missing
/// third vector counts as zero when exactly two are present.
pub fn skip_mv_predictor(
    left: Option<MotionVector>,
    top: Option<MotionVector>,
    topright: Option<MotionVector>,
) -> MotionVector {
    let avail: Vec<MotionVector> = [left, top, topright].into_iter().flatten().collect();
    match avail.len() {
        0 => MotionVector::ZERO,
        1 => avail[0],
        _ => {
            let a = avail[0];
            let b = avail[1];
            let c = avail.get(2).copied().unwrap_or(MotionVector::ZERO);
            MotionVector::new(median3(a.dx, b.dx, c.dx), median3(a.dy, b.dy, c.dy))
        }
    }
}

#[inline]
fn median3(a: i32, b: i32, c: i32) -> i32 {
    a.max(b).min(a.min(b).max(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_plane(seed: u64, w: usize, h: usize) -> Plane {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Plane::new(w, h, (0..w * h).map(|_| rng.gen()).collect()).unwrap()
    }

    fn block(p: &Plane, x: usize, y: usize, w: usize, h: usize) -> Vec<u8> {
        let mut b = vec![0; w * h];
        p.read_block(x, y, w, h, &mut b);
        b
    }

    // Scans every candidate, collects them, sorts by the documented key.
    fn brute_force(src: &[u8], w: usize, h: usize, x: usize, y: usize, r: &Plane, range: i32) -> (MotionVector, u32) {
        let mut all = Vec::new();
        for dy in -range..=range {
            for dx in -range..=range {
                let (rx, ry) = (x as i32 + dx, y as i32 + dy);
                if rx < 0 || ry < 0 || rx as usize + w > r.width() || ry as usize + h > r.height() {
                    continue;
                }
                let mut sad = 0u32;
                for j in 0..h {
                    for i in 0..w {
                        let a = src[j * w + i] as i32;
                        let b = r.get(rx as usize + i, ry as usize + j) as i32;
                        sad += (a - b).unsigned_abs();
                    }
                }
                all.push((sad, dx.abs() + dy.abs(), dy, dx));
            }
        }
        all.sort();
        let b = all[0];
        (MotionVector::new(b.3, b.2), b.0)
    }

    #[test]
    fn identical_reference_gives_zero() {
        let p = random_plane(1, 48, 48);
        let src = block(&p, 16, 16, 16, 16);
        assert_eq!(motion_search(&src, 16, 16, 16, 16, &p, MotionVector::ZERO, 8), (MotionVector::ZERO, 0));
    }

    #[test]
    fn finds_constructed_shift() {
        let src_plane = random_plane(2, 48, 48);
        // reference(x + 2, y + 1) = source(x, y)
        let mut reference = Plane::filled(48, 48, 0);
        for y in 0..47 {
            for x in 0..46 {
                reference.set(x + 2, y + 1, src_plane.get(x, y));
            }
        }
        let src = block(&src_plane, 16, 16, 16, 16);
        let (mv, sad) = motion_search(&src, 16, 16, 16, 16, &reference, MotionVector::ZERO, 4);
        assert_eq!(mv, MotionVector::new(2, 1));
        assert_eq!(sad, 0);
    }

    #[test]
    fn random_block_matches_brute_force() {
        for seed in 0..20 {
            let cur = random_plane(100 + seed, 48, 48);
            let reference = random_plane(200 + seed, 48, 48);
            let src = block(&cur, 16, 16, 16, 16);
            assert_eq!(
                motion_search(&src, 16, 16, 16, 16, &reference, MotionVector::ZERO, 4),
                brute_force(&src, 16, 16, 16, 16, &reference, 4)
            );
        }
    }

    #[test]
    fn window_clipped_at_border() {
        let cur = random_plane(5, 32, 32);
        let reference = random_plane(6, 32, 32);
        let src = block(&cur, 0, 0, 16, 16);
        let got = motion_search(&src, 16, 16, 0, 0, &reference, MotionVector::ZERO, 8);
        assert_eq!(got, brute_force(&src, 16, 16, 0, 0, &reference, 8));
        assert!(got.0.dx >= 0 && got.0.dy >= 0);
    }

    #[test]
    fn median_predictor() {
        assert_eq!(skip_mv_predictor(None, None, None), MotionVector::ZERO);
        assert_eq!(
            skip_mv_predictor(
                Some(MotionVector::new(2, 0)),
                Some(MotionVector::new(4, 6)),
                Some(MotionVector::new(0, 2))
            ),
            MotionVector::new(2, 2)
        );
        assert_eq!(
            skip_mv_predictor(Some(MotionVector::new(5, -3)), None, None),
            MotionVector::new(5, -3)
        );
    }

    proptest! {
        #[test]
        fn never_worse_than_any_window_position(seed in 0u64..500, bx in 0usize..3, by in 0usize..3, r in 1i32..4) {
            let cur = random_plane(seed, 32, 32);
            let reference = random_plane(seed + 7, 32, 32);
            let (x, y) = (bx * 8, by * 8);
            let src = block(&cur, x, y, 8, 8);
            let (mv, sad) = motion_search(&src, 8, 8, x, y, &reference, MotionVector::ZERO, r);
            prop_assert!(mv.dx.abs() <= r && mv.dy.abs() <= r);
            prop_assert!(sad <= block_sad(&src, 8, 8, &reference, x, y));
            prop_assert_eq!((mv, sad), brute_force(&src, 8, 8, x, y, &reference, r));
        }
    }
}
