//! In-memory float images and PNG round-trips.

use std::path::Path;

use crate::error::{Error, Result};

/// RGB image stored channels-first (`3 * h * w`) with values in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatImage {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl FloatImage {
    pub fn filled(height: usize, width: usize, rgb: [f32; 3]) -> Self {
        let mut data = vec![0.0; 3 * height * width];
        for c in 0..3 {
            data[c * height * width..(c + 1) * height * width].fill(rgb[c]);
        }
        Self { height, width, data }
    }

    #[inline]
    pub fn get(&self, c: usize, row: usize, col: usize) -> f32 {
        self.data[(c * self.height + row) * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, c: usize, row: usize, col: usize, v: f32) {
        self.data[(c * self.height + row) * self.width + col] = v;
    }

    pub fn set_rgb(&mut self, row: usize, col: usize, rgb: [f32; 3]) {
        for (c, v) in rgb.iter().enumerate() {
            self.set(c, row, col, *v);
        }
    }

    pub fn rgb(&self, row: usize, col: usize) -> [f32; 3] {
        [self.get(0, row, col), self.get(1, row, col), self.get(2, row, col)]
    }
}

/// Map `[-1, 1]` to `0..=255` with rounding.
pub fn to_u8(v: f32) -> u8 {
    (((v.clamp(-1.0, 1.0) + 1.0) * 0.5) * 255.0).round() as u8
}

/// Map `0..=255` to `[-1, 1]`.
pub fn from_u8(v: u8) -> f32 {
    v as f32 / 255.0 * 2.0 - 1.0
}

pub fn write_rgb_png(path: &Path, img: &FloatImage) -> Result<()> {
    let mut buf = image::RgbImage::new(img.width as u32, img.height as u32);
    for row in 0..img.height {
        for col in 0..img.width {
            let [r, g, b] = img.rgb(row, col);
            buf.put_pixel(col as u32, row as u32, image::Rgb([to_u8(r), to_u8(g), to_u8(b)]));
        }
    }
    buf.save(path)?;
    Ok(())
}

pub fn read_rgb_png(path: &Path) -> Result<FloatImage> {
    let img = image::open(path)?.to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut out = FloatImage::filled(h, w, [0.0; 3]);
    for row in 0..h {
        for col in 0..w {
            let p = img.get_pixel(col as u32, row as u32);
            out.set_rgb(row, col, [from_u8(p[0]), from_u8(p[1]), from_u8(p[2])]);
        }
    }
    Ok(out)
}

/// Write a single-channel mask; `true` pixels become 255.
pub fn write_mask_png(path: &Path, mask: &[bool], height: usize, width: usize) -> Result<()> {
    if mask.len() != height * width {
        return Err(Error::Shape {
            context: "write_mask_png",
            expected: format!("{}", height * width),
            got: format!("{}", mask.len()),
        });
    }
    let mut buf = image::GrayImage::new(width as u32, height as u32);
    for row in 0..height {
        for col in 0..width {
            let v = if mask[row * width + col] { 255 } else { 0 };
            buf.put_pixel(col as u32, row as u32, image::Luma([v]));
        }
    }
    buf.save(path)?;
    Ok(())
}

/// Write real-valued map data scaled into grayscale; values are clamped to
/// `[0, scale_max]` and mapped to `0..=255`.
pub fn write_gray_png(path: &Path, values: &[f32], height: usize, width: usize, scale_max: f32) -> Result<()> {
    if values.len() != height * width {
        return Err(Error::Shape {
            context: "write_gray_png",
            expected: format!("{}", height * width),
            got: format!("{}", values.len()),
        });
    }
    let mut buf = image::GrayImage::new(width as u32, height as u32);
    let denom = if scale_max > 0.0 { scale_max } else { 1.0 };
    for row in 0..height {
        for col in 0..width {
            let v = (values[row * width + col].clamp(0.0, denom) / denom * 255.0).round() as u8;
            buf.put_pixel(col as u32, row as u32, image::Luma([v]));
        }
    }
    buf.save(path)?;
    Ok(())
}

/// Distinct colors for indexed maps (slot or category ids); id 0 is black.
pub fn index_color(id: usize) -> [u8; 3] {
    const COLORS: [[u8; 3]; 16] = [
        [0, 0, 0],
        [230, 25, 75],
        [60, 180, 75],
        [0, 130, 200],
        [255, 225, 25],
        [145, 30, 180],
        [70, 240, 240],
        [240, 50, 230],
        [210, 245, 60],
        [250, 190, 190],
        [0, 128, 128],
        [170, 110, 40],
        [128, 0, 0],
        [128, 128, 128],
        [255, 255, 255],
        [170, 255, 195],
    ];
    COLORS[id % COLORS.len()]
}

/// Write an indexed-color map; `ids` uses `usize::MAX` (or any id) mapped
/// through [`index_color`] with sentinel handled by the caller.
pub fn write_indexed_png(path: &Path, ids: &[usize], height: usize, width: usize) -> Result<()> {
    if ids.len() != height * width {
        return Err(Error::Shape {
            context: "write_indexed_png",
            expected: format!("{}", height * width),
            got: format!("{}", ids.len()),
        });
    }
    let mut buf = image::RgbImage::new(width as u32, height as u32);
    for row in 0..height {
        for col in 0..width {
            let [r, g, b] = index_color(ids[row * width + col]);
            buf.put_pixel(col as u32, row as u32, image::Rgb([r, g, b]));
        }
    }
    buf.save(path)?;
    Ok(())
}
