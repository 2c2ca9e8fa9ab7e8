//! PNG input/output for item images, held as grayscale matrices.

use std::path::Path;

use image::{DynamicImage, GrayImage, Luma};

use crate::error::{QuarkError, Result};
use crate::numerics::Matrix;

/// Luma weights for RGB → gray.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

pub fn luma(r: f64, g: f64, b: f64) -> f64 {
    LUMA_WEIGHTS[0] * r + LUMA_WEIGHTS[1] * g + LUMA_WEIGHTS[2] * b
}

/// Convert an `h × w × 3` RGB buffer (row-major, interleaved) to gray.
pub fn rgb_to_gray(rgb: &[f64], height: usize, width: usize) -> Result<Matrix> {
    if rgb.len() != height * width * 3 {
        return Err(QuarkError::Shape {
            op: "rgb_to_gray",
            left: vec![rgb.len()],
            right: vec![height, width, 3],
        });
    }
    Ok(Matrix::from_shape_fn((height, width), |(r, c)| {
        let p = 3 * (r * width + c);
        luma(rgb[p], rgb[p + 1], rgb[p + 2])
    }))
}

pub fn read_grayscale(path: &Path) -> Result<Matrix> {
    let img = image::open(path).map_err(|e| QuarkError::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(match img {
        DynamicImage::ImageLuma8(g) => {
            Matrix::from_shape_fn((g.height() as usize, g.width() as usize), |(r, c)| {
                f64::from(g.get_pixel(c as u32, r as u32).0[0])
            })
        }
        other => {
            let rgb = other.to_rgb8();
            Matrix::from_shape_fn((rgb.height() as usize, rgb.width() as usize), |(r, c)| {
                let [red, green, blue] = rgb.get_pixel(c as u32, r as u32).0;
                luma(f64::from(red), f64::from(green), f64::from(blue))
            })
        }
    })
}

/// Write a grayscale matrix as an 8-bit PNG (values rounded and clamped
/// to `0..=255`).
pub fn write_grayscale_png(path: &Path, image: &Matrix) -> Result<()> {
    let (h, w) = image.dim();
    let mut out = GrayImage::new(w as u32, h as u32);
    for ((r, c), v) in image.indexed_iter() {
        out.put_pixel(c as u32, r as u32, Luma([v.round().clamp(0.0, 255.0) as u8]));
    }
    out.save(path).map_err(|e| QuarkError::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
