use super::{HoleMask, Image, ImagingError};

/// Crops the largest centered square. An odd leftover pixel is discarded
/// from the right/bottom edge.
pub fn center_crop_square(img: &Image) -> Image {
    let side = img.width().min(img.height());
    if img.width() == img.height() {
        return img.clone();
    }
    let x0 = (img.width() - side) / 2;
    let y0 = (img.height() - side) / 2;
    let mut data = Vec::with_capacity(side * side * 3);
    for y in y0..y0 + side {
        let row = (y * img.width() + x0) * 3;
        data.extend_from_slice(&img.data()[row..row + side * 3]);
    }
    Image::from_raw(side, side, data).expect("crop of a valid image is valid")
}

/// Bilinear resampling with half-pixel-centered sample positions.
///
/// Output pixel `x` samples the source at `(x + 0.5) * src_w / dst_w - 0.5`,
/// clamped to the source extent; results are rounded to nearest.
pub fn resize(img: &Image, target_w: usize, target_h: usize) -> Result<Image, ImagingError> {
    if target_w == 0 || target_h == 0 {
        return Err(ImagingError::InvalidDimensions {
            width: target_w,
            height: target_h,
        });
    }
    let xs = sample_taps(img.width(), target_w);
    let ys = sample_taps(img.height(), target_h);
    let src = img.data();
    let stride = img.width() * 3;
    let mut out = Vec::with_capacity(target_w * target_h * 3);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            for c in 0..3 {
                let p = |x: usize, y: usize| src[y * stride + x * 3 + c] as f64;
                let top = p(x0, y0) + (p(x1, y0) - p(x0, y0)) * fx;
                let bottom = p(x0, y1) + (p(x1, y1) - p(x0, y1)) * fx;
                let v = top + (bottom - top) * fy;
                out.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Image::from_raw(target_w, target_h, out)
}

fn sample_taps(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    let max = (src - 1) as f64;
    (0..dst)
        .map(|i| {
            let pos = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, max);
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(src - 1);
            (lo, hi, pos - lo as f64)
        })
        .collect()
}

/// Top-left corner of a centered square hole (floor rule on both axes).
pub fn hole_origin(width: usize, height: usize, hole_side: usize) -> Result<(usize, usize), ImagingError> {
    if hole_side == 0 || hole_side > width.min(height) {
        return Err(ImagingError::HoleTooLarge {
            hole_side,
            width,
            height,
        });
    }
    Ok(((width - hole_side) / 2, (height - hole_side) / 2))
}

/// Blacks out a centered `hole_side`-sized square and returns the masked
/// image with its hole mask.
pub fn apply_center_mask(img: &Image, hole_side: usize) -> Result<(Image, HoleMask), ImagingError> {
    let (w, h) = (img.width(), img.height());
    let (x0, y0) = hole_origin(w, h, hole_side)?;
    let mut masked = img.clone();
    let mut mask = vec![HoleMask::KNOWN; w * h];
    for y in y0..y0 + hole_side {
        for x in x0..x0 + hole_side {
            masked.set_pixel(x, y, [0, 0, 0]);
            mask[y * w + x] = HoleMask::HOLE;
        }
    }
    Ok((masked, HoleMask::from_raw(w, h, mask)?))
}
