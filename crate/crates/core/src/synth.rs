//! Deterministic synthetic test clips.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::yuv::{check_dimensions, Frame, Plane};

/// Per-frame displacement of the `translate` texture.
pub const TRANSLATE_STEP: (i64, i64) = (2, 1);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SyntheticKind {
    /// Constant luma 128.
    Flat,
    /// Static texture moving by [`TRANSLATE_STEP`] pixels per frame.
    Translate,
    /// Independent pseudo-random texture per frame.
    Noise,
    /// `Translate` with its top-left quadrant replaced by `Noise`.
    Mixed,
}

impl SyntheticKind {
    pub const ALL: [SyntheticKind; 4] = [
        SyntheticKind::Flat,
        SyntheticKind::Translate,
        SyntheticKind::Noise,
        SyntheticKind::Mixed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SyntheticKind::Flat => "flat",
            SyntheticKind::Translate => "translate",
            SyntheticKind::Noise => "noise",
            SyntheticKind::Mixed => "mixed",
        }
    }
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown synthetic clip '{s}'")))
    }
}

/// Texture sampled at content coordinates (u, v): two slow sinusoids plus a
/// hashed fine grain, so every block has a unique best match.
fn texture(u: i64, v: i64) -> u8 {
    let (uf, vf) = (u as f64, v as f64);
    let smooth = 128.0 + 48.0 * (0.21 * uf + 0.07 * vf).sin() + 32.0 * (0.17 * vf - 0.05 * uf).cos();
    let mut h = (u as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (v as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    h ^= h >> 29;
    h = h.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    h ^= h >> 32;
    let grain = (h % 25) as f64 - 12.0;
    (smooth + grain).round().clamp(0.0, 255.0) as u8
}

fn noise_plane(rng: &mut ChaCha8Rng, width: usize, height: usize) -> Vec<u8> {
    (0..width * height).map(|_| rng.gen_range(88..=168)).collect()
}

/// Generates `frames` pictures of `kind`; `seed` drives the noise texture.
pub fn generate_synthetic(
    kind: SyntheticKind,
    width: usize,
    height: usize,
    frames: usize,
    seed: u64,
) -> Result<Vec<Frame>> {
    check_dimensions(width, height)?;
    let chroma = || Plane::filled(width / 2, height / 2, 128);
    (0..frames)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x2545_F491_4F6C_DD1D));
            let luma = match kind {
                SyntheticKind::Flat => vec![128; width * height],
                SyntheticKind::Noise => noise_plane(&mut rng, width, height),
                SyntheticKind::Translate | SyntheticKind::Mixed => {
                    let (sx, sy) = (TRANSLATE_STEP.0 * k as i64, TRANSLATE_STEP.1 * k as i64);
                    let mut y = Vec::with_capacity(width * height);
                    for row in 0..height as i64 {
                        for col in 0..width as i64 {
                            y.push(texture(col - sx, row - sy));
                        }
                    }
                    if kind == SyntheticKind::Mixed {
                        let noise = noise_plane(&mut rng, width / 2, height / 2);
                        for row in 0..height / 2 {
                            y[row * width..row * width + width / 2]
                                .copy_from_slice(&noise[row * width / 2..(row + 1) * width / 2]);
                        }
                    }
                    y
                }
            };
            Frame::new(Plane::new(width, height, luma)?, chroma(), chroma(), k)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_is_mid_gray() {
        let f = generate_synthetic(SyntheticKind::Flat, 48, 32, 3, 0).unwrap();
        assert_eq!(f.len(), 3);
        assert!(f.iter().all(|fr| fr.y.samples().iter().all(|&s| s == 128)));
    }

    #[test]
    fn translate_moves_two_right_one_down() {
        let f = generate_synthetic(SyntheticKind::Translate, 64, 48, 4, 0).unwrap();
        for k in 0..3 {
            for y in 0..47 {
                for x in 0..62 {
                    assert_eq!(f[k].y.get(x, y), f[k + 1].y.get(x + 2, y + 1));
                }
            }
        }
        assert_ne!(f[0].y, f[1].y);
    }

    #[test]
    fn noise_is_reproducible_and_varies_per_frame() {
        let a = generate_synthetic(SyntheticKind::Noise, 32, 32, 3, 7).unwrap();
        let b = generate_synthetic(SyntheticKind::Noise, 32, 32, 3, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].y, a[1].y);
        let c = generate_synthetic(SyntheticKind::Noise, 32, 32, 3, 8).unwrap();
        assert_ne!(a[0].y, c[0].y);
    }

    #[test]
    fn mixed_keeps_translation_outside_noise_quadrant() {
        let m = generate_synthetic(SyntheticKind::Mixed, 64, 64, 2, 1).unwrap();
        let t = generate_synthetic(SyntheticKind::Translate, 64, 64, 2, 1).unwrap();
        for y in 0..64 {
            for x in 0..64 {
                if x >= 32 || y >= 32 {
                    assert_eq!(m[1].y.get(x, y), t[1].y.get(x, y));
                }
            }
        }
        assert_ne!(m[1].y, t[1].y);
    }

    #[test]
    fn parses_names() {
        assert_eq!("mixed".parse::<SyntheticKind>().unwrap(), SyntheticKind::Mixed);
        assert!("bogus".parse::<SyntheticKind>().is_err());
    }
}
