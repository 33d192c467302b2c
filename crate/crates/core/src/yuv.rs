//! Raw planar YUV 4:2:0 frames and PSNR.
//!
//! Files are headerless I420: for every frame a full-resolution Y plane
//! followed by the quarter-size Cb and Cr planes.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// PSNR reported for bit-identical planes.
pub const PSNR_CAP_DB: f64 = 99.0;

/// One 8-bit sample plane in raster order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plane {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl Plane {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        if samples.len() != width * height {
            return Err(Error::Contract(format!(
                "plane {width}x{height} needs {} samples, got {}",
                width * height,
                samples.len()
            )));
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            samples: vec![value; width * height],
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.samples[y * self.width + x] = value;
    }

    /// Copies a `w`x`h` block with top-left corner at (`x`, `y`) into `out`
    /// (raster order, stride `w`).
    pub fn read_block(&self, x: usize, y: usize, w: usize, h: usize, out: &mut [u8]) {
        for row in 0..h {
            let src = (y + row) * self.width + x;
            out[row * w..row * w + w].copy_from_slice(&self.samples[src..src + w]);
        }
    }

    pub fn write_block(&mut self, x: usize, y: usize, w: usize, h: usize, block: &[u8]) {
        for row in 0..h {
            let dst = (y + row) * self.width + x;
            self.samples[dst..dst + w].copy_from_slice(&block[row * w..row * w + w]);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PictureType {
    I,
    P,
    B,
}

/// A 4:2:0 picture plus the coding metadata assigned by the GOP plan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub y: Plane,
    pub cb: Plane,
    pub cr: Plane,
    pub display_index: usize,
    pub temporal_level: u8,
    pub picture_type: PictureType,
}

impl Frame {
    /// Builds an intra key picture from three planes, checking the 4:2:0
    /// geometry and the 16-pixel macroblock alignment.
    pub fn new(y: Plane, cb: Plane, cr: Plane, display_index: usize) -> Result<Self> {
        check_dimensions(y.width(), y.height())?;
        for c in [&cb, &cr] {
            if c.width() != y.width() / 2 || c.height() != y.height() / 2 {
                return Err(Error::Contract(format!(
                    "chroma plane {}x{} does not match luma {}x{}",
                    c.width(),
                    c.height(),
                    y.width(),
                    y.height()
                )));
            }
        }
        Ok(Self {
            y,
            cb,
            cr,
            display_index,
            temporal_level: 0,
            picture_type: PictureType::I,
        })
    }

    pub fn width(&self) -> usize {
        self.y.width()
    }

    pub fn height(&self) -> usize {
        self.y.height()
    }

    pub fn set_coding_info(&mut self, picture_type: PictureType, temporal_level: u8) -> Result<()> {
        if picture_type == PictureType::B && temporal_level == 0 {
            return Err(Error::Contract(format!(
                "B picture {} at temporal level 0",
                self.display_index
            )));
        }
        self.picture_type = picture_type;
        self.temporal_level = temporal_level;
        Ok(())
    }
}

pub fn check_dimensions(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 || !width.is_multiple_of(16) || !height.is_multiple_of(16) {
        return Err(Error::Config(format!(
            "frame size {width}x{height} must be a non-zero multiple of 16"
        )));
    }
    Ok(())
}

#[inline]
pub fn frame_bytes(width: usize, height: usize) -> usize {
    width * height * 3 / 2
}

/// Reads up to `max_frames` I420 frames. A trailing partial frame is dropped.
pub fn read_sequence(path: &Path, width: usize, height: usize, max_frames: usize) -> Result<Vec<Frame>> {
    check_dimensions(width, height)?;
    let data = fs::read(path).map_err(|source| Error::Input {
        path: path.to_path_buf(),
        source,
    })?;
    let size = frame_bytes(width, height);
    let available = data.len() / size;
    if available == 0 {
        return Err(Error::Truncated(format!(
            "{} holds {} bytes, less than one {width}x{height} frame ({size} bytes)",
            path.display(),
            data.len()
        )));
    }
    let luma = width * height;
    let chroma = luma / 4;
    data.chunks_exact(size)
        .take(max_frames.min(available))
        .enumerate()
        .map(|(index, chunk)| {
            let y = Plane::new(width, height, chunk[..luma].to_vec())?;
            let cb = Plane::new(width / 2, height / 2, chunk[luma..luma + chroma].to_vec())?;
            let cr = Plane::new(width / 2, height / 2, chunk[luma + chroma..].to_vec())?;
            Frame::new(y, cb, cr, index)
        })
        .collect()
}

/// Serializes frames back to I420 bytes.
pub fn write_sequence<W: Write>(out: &mut W, frames: &[Frame]) -> Result<()> {
    for f in frames {
        out.write_all(f.y.samples())?;
        out.write_all(f.cb.samples())?;
        out.write_all(f.cr.samples())?;
    }
    Ok(())
}

pub fn sse(reference: &Plane, test: &Plane) -> Result<u64> {
    if reference.width() != test.width() || reference.height() != test.height() {
        return Err(Error::Contract(format!(
            "psnr of {}x{} against {}x{}",
            reference.width(),
            reference.height(),
            test.width(),
            test.height()
        )));
    }
    Ok(reference
        .samples()
        .iter()
        .zip(test.samples())
        .map(|(&a, &b)| {
            let d = i64::from(a) - i64::from(b);
            (d * d) as u64
        })
        .sum())
}

/// 10·log10(255²/MSE), capped at [`PSNR_CAP_DB`] for identical planes.
pub fn psnr(reference: &Plane, test: &Plane) -> Result<f64> {
    let sse = sse(reference, test)?;
    if sse == 0 {
        return Ok(PSNR_CAP_DB);
    }
    let mse = sse as f64 / reference.samples().len() as f64;
    Ok(10.0 * (255.0 * 255.0 / mse).log10())
}

/// Arithmetic mean of per-frame luma PSNR.
pub fn mean_y_psnr(originals: &[Frame], recons: &[Frame]) -> Result<f64> {
    if originals.len() != recons.len() || originals.is_empty() {
        return Err(Error::Contract(format!(
            "mean psnr over {} originals and {} reconstructions",
            originals.len(),
            recons.len()
        )));
    }
    let mut total = 0.0;
    for (o, r) in originals.iter().zip(recons) {
        total += psnr(&o.y, &r.y)?;
    }
    Ok(total / originals.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_tmp(bytes: &[u8]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(bytes).unwrap();
        f
    }

    #[test]
    fn one_frame_from_exact_file() {
        let f = write_tmp(&[7u8; 384]);
        let frames = read_sequence(f.path(), 16, 16, 5).unwrap();
        assert_eq!(frames.len(), 1);
        assert_eq!(frames[0].cb.width(), 8);
        assert!(frames[0].y.samples().iter().all(|&s| s == 7));
    }

    #[test]
    fn empty_file_is_truncated() {
        let f = write_tmp(&[]);
        assert!(matches!(read_sequence(f.path(), 16, 16, 5), Err(Error::Truncated(_))));
    }

    #[test]
    fn missing_file_is_input_error() {
        let r = read_sequence(Path::new("/nonexistent/clip.yuv"), 16, 16, 1);
        assert!(matches!(r, Err(Error::Input { .. })));
    }

    #[test]
    fn trailing_partial_frame_dropped() {
        let f = write_tmp(&[1u8; 384 * 2 + 100]);
        assert_eq!(read_sequence(f.path(), 16, 16, 10).unwrap().len(), 2);
    }

    #[test]
    fn rejects_unaligned_size() {
        let f = write_tmp(&[0u8; 384]);
        assert!(matches!(read_sequence(f.path(), 12, 16, 1), Err(Error::Config(_))));
    }

    #[test]
    fn ten_frames_round_trip() {
        let mut bytes = Vec::new();
        for i in 0..(frame_bytes(32, 32) * 10) {
            bytes.push((i * 31 % 251) as u8);
        }
        let f = write_tmp(&bytes);
        let frames = read_sequence(f.path(), 32, 32, 100).unwrap();
        assert_eq!(frames.len(), 10);
        assert_eq!(frames[9].display_index, 9);
        let mut out = Vec::new();
        write_sequence(&mut out, &frames).unwrap();
        assert_eq!(out, bytes);
    }

    #[test]
    fn psnr_identical_is_capped() {
        let p = Plane::filled(16, 16, 40);
        assert_eq!(psnr(&p, &p).unwrap(), PSNR_CAP_DB);
    }

    #[test]
    fn psnr_black_vs_white_is_zero() {
        let a = Plane::filled(16, 16, 0);
        let b = Plane::filled(16, 16, 255);
        assert!(psnr(&a, &b).unwrap().abs() < 1e-12);
    }

    #[test]
    fn psnr_dimension_mismatch() {
        let a = Plane::filled(16, 16, 0);
        let b = Plane::filled(32, 16, 0);
        assert!(matches!(psnr(&a, &b), Err(Error::Contract(_))));
    }

    #[test]
    fn b_picture_needs_level() {
        let mut f = Frame::new(
            Plane::filled(16, 16, 0),
            Plane::filled(8, 8, 0),
            Plane::filled(8, 8, 0),
            1,
        )
        .unwrap();
        assert!(f.set_coding_info(PictureType::B, 0).is_err());
        assert!(f.set_coding_info(PictureType::B, 1).is_ok());
    }

    // Independent arithmetic: squared error accumulated in f64 per sample,
    // then the dB formula written out with ln.
    fn psnr_oracle(a: &[u8], b: &[u8]) -> f64 {
        let mut acc = 0.0f64;
        for (x, y) in a.iter().zip(b) {
            let d = *x as f64 - *y as f64;
            acc += d * d;
        }
        let mse = acc / a.len() as f64;
        (255.0f64.powi(2) / mse).ln() * 10.0 / std::f64::consts::LN_10
    }

    proptest! {
        #[test]
        fn psnr_matches_oracle_and_is_symmetric(
            a in proptest::collection::vec(any::<u8>(), 256),
            b in proptest::collection::vec(any::<u8>(), 256),
        ) {
            prop_assume!(a != b);
            let pa = Plane::new(16, 16, a.clone()).unwrap();
            let pb = Plane::new(16, 16, b.clone()).unwrap();
            let v = psnr(&pa, &pb).unwrap();
            prop_assert!((v - psnr_oracle(&a, &b)).abs() < 1e-9);
            prop_assert_eq!(v, psnr(&pb, &pa).unwrap());
        }

        #[test]
        fn psnr_self_is_cap(a in proptest::collection::vec(any::<u8>(), 256)) {
            let p = Plane::new(16, 16, a).unwrap();
            prop_assert_eq!(psnr(&p, &p).unwrap(), PSNR_CAP_DB);
        }
    }
}
