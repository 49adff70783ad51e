//! Structural similarity on BT.601 luma with a Gaussian window, averaged
//! over every window position that lies fully inside the image.

use serde::{Deserialize, Serialize};

use super::FullRefError;
use crate::imaging::Image;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    pub k1: f64,
    pub k2: f64,
    /// Dynamic range of the samples.
    pub dynamic_range: f64,
    pub window_side: usize,
    pub window_sigma: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 255.0,
            window_side: 11,
            window_sigma: 1.5,
        }
    }
}

impl SsimParams {
    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }

    pub fn validate(&self) -> Result<(), FullRefError> {
        let bad = |why: &str| Err(FullRefError::InvalidParams(why.to_owned()));
        if !(self.c1() > 0.0 && self.c2() > 0.0) {
            return bad("C1 and C2 must be positive");
        }
        if self.window_side < 3 || self.window_side % 2 == 0 {
            return bad("window side must be odd and at least 3");
        }
        if !(self.window_sigma > 0.0 && self.window_sigma.is_finite()) {
            return bad("window sigma must be positive");
        }
        Ok(())
    }

    /// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
    pub fn gaussian_taps(&self) -> Vec<f64> {
        let half = (self.window_side / 2) as f64;
        let raw: Vec<f64> = (0..self.window_side)
            .map(|i| {
                let d = i as f64 - half;
                (-d * d / (2.0 * self.window_sigma * self.window_sigma)).exp()
            })
            .collect();
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / sum).collect()
    }
}

/// BT.601 luma, row-major.
pub fn luma(img: &Image) -> Vec<f64> {
    img.data()
        .chunks_exact(3)
        .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
        .collect()
}

/// Separable valid-mode filtering of a `w`×`h` plane; output is
/// `(w - n + 1)`×`(h - n + 1)`.
fn filter_valid(plane: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let n = taps.len();
    let (ow, oh) = (w - n + 1, h - n + 1);
    let mut horiz = vec![0.0; ow * h];
    for y in 0..h {
        let row = &plane[y * w..(y + 1) * w];
        for x in 0..ow {
            horiz[y * ow + x] = taps.iter().zip(&row[x..x + n]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                acc += t * horiz[(y + k) * ow + x];
            }
            out[y * ow + x] = acc;
        }
    }
    out
}

pub fn ssim(reference: &Image, test: &Image, params: &SsimParams) -> Result<f64, FullRefError> {
    params.validate()?;
    let (w, h) = (reference.width(), reference.height());
    if (w, h) != (test.width(), test.height()) {
        return Err(FullRefError::DimensionMismatch {
            reference: (w, h),
            test: (test.width(), test.height()),
        });
    }
    let n = params.window_side;
    if w < n || h < n {
        return Err(FullRefError::TooSmall {
            width: w,
            height: h,
            window: n,
        });
    }

    let x = luma(reference);
    let y = luma(test);
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a * b).collect();

    let taps = params.gaussian_taps();
    let mu_x = filter_valid(&x, w, h, &taps);
    let mu_y = filter_valid(&y, w, h, &taps);
    let e_xx = filter_valid(&xx, w, h, &taps);
    let e_yy = filter_valid(&yy, w, h, &taps);
    let e_xy = filter_valid(&xy, w, h, &taps);

    let (c1, c2) = (params.c1(), params.c2());
    let total: f64 = (0..mu_x.len())
        .map(|i| {
            let (mx, my) = (mu_x[i], mu_y[i]);
            let var_x = e_xx[i] - mx * mx;
            let var_y = e_yy[i] - my * my;
            let cov = e_xy[i] - mx * my;
            ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (var_x + var_y + c2))
        })
        .sum();
    Ok(total / mu_x.len() as f64)
}
