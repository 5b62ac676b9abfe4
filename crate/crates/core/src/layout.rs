//! Layouts: labeled bounding boxes with a padding convention, and the
//! layout file format used by datasets and the CLI.
//!
//! Boxes are `(x0, y0, h, w)` fractions of the image in `[0,1]`, origin at
//! the top-left; `x0`/`y0` locate the top-left corner, `h` extends down and
//! `w` extends right. Category `0` is reserved for padding slots, which
//! always carry the all-zero box.

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reserved category id for padding slots.
pub const PADDING_CATEGORY: usize = 0;

/// Axis-aligned box in normalized image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
    pub w: f64,
}

/// Integer pixel footprint of a box at a given canvas resolution.
///
/// Rounding rule used everywhere masks are placed: start index is
/// `floor(coord * dim)`, extent is `max(1, round(len * dim))`, clipped to
/// the canvas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelRect {
    pub row0: usize,
    pub col0: usize,
    pub rows: usize,
    pub cols: usize,
}

impl PixelRect {
    pub fn num_pixels(&self) -> usize {
        self.rows * self.cols
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        row >= self.row0 && row < self.row0 + self.rows && col >= self.col0 && col < self.col0 + self.cols
    }
}

impl BoundingBox {
    pub const ZERO: BoundingBox = BoundingBox { x0: 0.0, y0: 0.0, h: 0.0, w: 0.0 };

    pub fn new(x0: f64, y0: f64, h: f64, w: f64) -> Self {
        Self { x0, y0, h, w }
    }

    pub fn is_zero(&self) -> bool {
        self.x0 == 0.0 && self.y0 == 0.0 && self.h == 0.0 && self.w == 0.0
    }

    /// Normalized area `h * w`.
    pub fn area(&self) -> f64 {
        self.h * self.w
    }

    /// Intersection-over-union with another box.
    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let x1 = self.x0.max(other.x0);
        let y1 = self.y0.max(other.y0);
        let x2 = (self.x0 + self.w).min(other.x0 + other.w);
        let y2 = (self.y0 + self.h).min(other.y0 + other.h);
        let inter = (x2 - x1).max(0.0) * (y2 - y1).max(0.0);
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    /// Integer pixel footprint at a `height x width` canvas, or `None` for
    /// zero-area boxes (padding).
    pub fn footprint(&self, height: usize, width: usize) -> Option<PixelRect> {
        if self.h <= 0.0 || self.w <= 0.0 {
            return None;
        }
        let row0 = ((self.y0 * height as f64).floor() as usize).min(height - 1);
        let col0 = ((self.x0 * width as f64).floor() as usize).min(width - 1);
        let rows = (((self.h * height as f64).round() as usize).max(1)).min(height - row0);
        let cols = (((self.w * width as f64).round() as usize).max(1)).min(width - col0);
        Some(PixelRect { row0, col0, rows, cols })
    }
}

/// A labeled box; padding entries use [`PADDING_CATEGORY`] and the zero box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub bbox: BoundingBox,
    pub category: usize,
}

impl ObjectSpec {
    pub fn padding() -> Self {
        Self { bbox: BoundingBox::ZERO, category: PADDING_CATEGORY }
    }

    pub fn is_padding(&self) -> bool {
        self.category == PADDING_CATEGORY
    }
}

/// Fixed-length slot list: real objects first, then padding entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    objects: Vec<ObjectSpec>,
    real_count: usize,
}

impl Layout {
    pub fn objects(&self) -> &[ObjectSpec] {
        &self.objects
    }

    pub fn real_count(&self) -> usize {
        self.real_count
    }

    pub fn n_max(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.real_count == 0
    }

    /// Real (non-padding) objects.
    pub fn real_objects(&self) -> &[ObjectSpec] {
        &self.objects[..self.real_count]
    }
}

/// Divide a pixel rectangle `(x, y, w, h)` by the image dims and clamp into
/// the unit square so that `x0 + w <= 1` and `y0 + h <= 1`.
///
/// Boundary rounding noise in annotation files is clamped rather than
/// rejected; a zero-area rectangle is an error.
pub fn normalize_box(x: f64, y: f64, w: f64, h: f64, image_h: usize, image_w: usize) -> Result<BoundingBox> {
    if w <= 0.0 || h <= 0.0 {
        return Err(Error::ZeroAreaBox { w, h });
    }
    let (ih, iw) = (image_h as f64, image_w as f64);
    let x0 = (x / iw).clamp(0.0, 1.0);
    let y0 = (y / ih).clamp(0.0, 1.0);
    let bw = (w / iw).clamp(0.0, 1.0).min(1.0 - x0);
    let bh = (h / ih).clamp(0.0, 1.0).min(1.0 - y0);
    if bw <= 0.0 || bh <= 0.0 {
        return Err(Error::ZeroAreaBox { w, h });
    }
    Ok(BoundingBox { x0, y0, h: bh, w: bw })
}

/// Denormalize back to pixel coordinates `(x, y, w, h)`.
pub fn denormalize_box(bbox: &BoundingBox, image_h: usize, image_w: usize) -> (f64, f64, f64, f64) {
    (
        bbox.x0 * image_w as f64,
        bbox.y0 * image_h as f64,
        bbox.w * image_w as f64,
        bbox.h * image_h as f64,
    )
}

/// Pad a list of real objects to `n_max` slots with padding entries.
pub fn pad_layout(objects: Vec<ObjectSpec>, n_max: usize) -> Result<Layout> {
    if objects.len() > n_max {
        return Err(Error::LayoutCapacity { given: objects.len(), n_max });
    }
    for (i, o) in objects.iter().enumerate() {
        if o.category == PADDING_CATEGORY {
            return Err(Error::Annotation {
                record: format!("object {i}"),
                reason: "padding category 0 not allowed for real objects".into(),
            });
        }
        if o.bbox.h <= 0.0 || o.bbox.w <= 0.0 {
            return Err(Error::ZeroAreaBox { w: o.bbox.w, h: o.bbox.h });
        }
    }
    let real_count = objects.len();
    let mut objects = objects;
    objects.resize(n_max, ObjectSpec::padding());
    Ok(Layout { objects, real_count })
}

/// The all-padding layout used as the unconditional input for
/// classifier-free guidance.
pub fn empty_layout(n_max: usize) -> Layout {
    Layout { objects: vec![ObjectSpec::padding(); n_max], real_count: 0 }
}

// ---------------------------------------------------------------------------
// Layout file format: one JSON record per line.
// ---------------------------------------------------------------------------

/// One object entry in a layout file.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LayoutFileObject {
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
    pub w: f64,
    pub category: usize,
}

/// One record in a layout file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayoutFileRecord {
    #[serde(default)]
    pub image_path: String,
    #[serde(default)]
    pub width: u32,
    #[serde(default)]
    pub height: u32,
    pub objects: Vec<LayoutFileObject>,
}

impl LayoutFileRecord {
    pub fn to_layout(&self, n_max: usize) -> Result<Layout> {
        let objects = self
            .objects
            .iter()
            .map(|o| ObjectSpec {
                bbox: BoundingBox { x0: o.x0, y0: o.y0, h: o.h, w: o.w },
                category: o.category,
            })
            .collect();
        pad_layout(objects, n_max)
    }

    pub fn from_layout(layout: &Layout, image_path: &str, width: u32, height: u32) -> Self {
        let objects = layout
            .real_objects()
            .iter()
            .map(|o| LayoutFileObject {
                x0: o.bbox.x0,
                y0: o.bbox.y0,
                h: o.bbox.h,
                w: o.bbox.w,
                category: o.category,
            })
            .collect();
        Self { image_path: image_path.to_string(), width, height, objects }
    }
}

/// Write layout records as one JSON object per line.
pub fn write_layout_file(path: &Path, records: &[LayoutFileRecord]) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    for rec in records {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Read a layout file written by [`write_layout_file`].
pub fn read_layout_file(path: &Path) -> Result<Vec<LayoutFileRecord>> {
    let file = std::fs::File::open(path)?;
    let mut records = Vec::new();
    for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LayoutFileRecord = serde_json::from_str(&line).map_err(|e| Error::Annotation {
            record: format!("{}:{}", path.display(), lineno + 1),
            reason: e.to_string(),
        })?;
        records.push(rec);
    }
    Ok(records)
}
