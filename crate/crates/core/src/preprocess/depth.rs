//! Depth normalization and ROI resampling.

use crate::dataset::{DepthFrame, Roi};
use crate::error::{Error, Result};
use crate::scalar::{c, Scalar};
use crate::tensor::Tensor;

/// Map a 16-bit frame onto [0, 1] by dividing by 65535. Output shape `[H, W]`.
pub fn normalize_depth_frame<T: Scalar>(frame: &DepthFrame) -> Tensor<T> {
    let k = c::<T>(65535.0);
    let data = frame.pixels.iter().map(|&p| T::from_f64_lossy(p as f64) / k).collect();
    Tensor::from_vec(&[frame.height as usize, frame.width as usize], data).expect("frame dimensions")
}

/// Bilinear resample of `roi` within `image` (`[H, W]`) to `size x size`.
///
/// Sample positions use pixel-center alignment, so a same-size ROI maps
/// each output pixel exactly onto one input pixel. Borders are clamped.
pub fn crop_and_resize<T: Scalar>(image: &Tensor<T>, roi: Roi, size: usize) -> Result<Tensor<T>> {
    let (h, w) = match image.shape() {
        [h, w] => (*h, *w),
        s => return Err(Error::Invalid(format!("crop_and_resize expects [H, W], got {s:?}"))),
    };
    if roi.width == 0 || roi.height == 0 {
        return Err(Error::Invalid(format!("degenerate roi {roi:?}")));
    }
    if !roi.fits_in(w as u32, h as u32) {
        return Err(Error::Invalid(format!("roi {roi:?} outside {w}x{h} frame")));
    }
    if size == 0 {
        return Err(Error::Invalid("output size must be positive".into()));
    }
    let src = image.data();
    let (rw, rh) = (roi.width as usize, roi.height as usize);
    let (x0, y0) = (roi.x as usize, roi.y as usize);
    let sx = rw as f64 / size as f64;
    let sy = rh as f64 / size as f64;

    // per-axis (lower index, upper index, upper weight)
    let axis = |n_src: usize, scale: f64| -> Vec<(usize, usize, T)> {
        (0..size)
            .map(|o| {
                let pos = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, (n_src - 1) as f64);
                let lo = pos.floor() as usize;
                let hi = (lo + 1).min(n_src - 1);
                (lo, hi, c::<T>(pos - lo as f64))
            })
            .collect()
    };
    let xs = axis(rw, sx);
    let ys = axis(rh, sy);

    let mut out = Vec::with_capacity(size * size);
    for &(ylo, yhi, fy) in &ys {
        let r0 = (y0 + ylo) * w + x0;
        let r1 = (y0 + yhi) * w + x0;
        for &(xlo, xhi, fx) in &xs {
            let top = src[r0 + xlo] + (src[r0 + xhi] - src[r0 + xlo]) * fx;
            let bot = src[r1 + xlo] + (src[r1 + xhi] - src[r1 + xlo]) * fx;
            out.push(top + (bot - top) * fy);
        }
    }
    Tensor::from_vec(&[size, size], out)
}
