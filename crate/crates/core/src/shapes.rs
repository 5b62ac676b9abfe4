//! Deterministic synthetic shapes dataset.
//!
//! Records are colored geometric shapes (circle, square, triangle crossed
//! with a four-color palette, 12 foreground classes) on a neutral canvas,
//! optionally with one full-canvas background-stuff object (category 13).
//! Each record carries the tight box of every shape and its ground-truth
//! visibility mask, so layout fidelity and overlap handling can be scored
//! without human annotation.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgio::FloatImage;
use crate::layout::{pad_layout, BoundingBox, Layout, LayoutFileRecord, ObjectSpec};

/// Foreground classes: geometry index * 4 + color index + 1.
pub const NUM_FOREGROUND_CLASSES: usize = 12;
/// Full-canvas background-stuff category.
pub const BACKGROUND_CATEGORY: usize = 13;
/// Highest category id (C); the embedding table holds C + 1 rows.
pub const NUM_CATEGORIES: usize = 13;

/// Neutral canvas color in `[-1, 1]`.
pub const CANVAS_RGB: [f32; 3] = [0.55, 0.55, 0.55];

/// Palette in u8 RGB; index = color id.
pub const PALETTE_U8: [[u8; 3]; 4] = [
    [220, 40, 40],  // red
    [40, 190, 60],  // green
    [40, 90, 230],  // blue
    [240, 210, 40], // yellow
];

/// Palette in `[-1, 1]`.
pub fn palette_f32(color: usize) -> [f32; 3] {
    let c = PALETTE_U8[color];
    [crate::imgio::from_u8(c[0]), crate::imgio::from_u8(c[1]), crate::imgio::from_u8(c[2])]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    Circle,
    Square,
    Triangle,
}

impl Geometry {
    pub fn from_index(i: usize) -> Geometry {
        match i {
            0 => Geometry::Circle,
            1 => Geometry::Square,
            _ => Geometry::Triangle,
        }
    }
}

/// Split a foreground category into (geometry, color).
pub fn decode_category(category: usize) -> Option<(Geometry, usize)> {
    if category == 0 || category > NUM_FOREGROUND_CLASSES {
        return None;
    }
    let idx = category - 1;
    Some((Geometry::from_index(idx / 4), idx % 4))
}

pub fn encode_category(geometry: usize, color: usize) -> usize {
    geometry * 4 + color + 1
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ShapesConfig {
    pub canvas_size: usize,
    pub min_objects: usize,
    pub max_objects: usize,
    pub min_size: f64,
    pub max_size: f64,
    /// Cap on pairwise box IoU between sampled shapes.
    pub max_overlap: f64,
    /// Add a full-canvas background-stuff object to every layout.
    pub include_background: bool,
    pub n_max: usize,
    pub seed: u64,
}

impl Default for ShapesConfig {
    fn default() -> Self {
        Self {
            canvas_size: 64,
            min_objects: 1,
            max_objects: 4,
            min_size: 0.2,
            max_size: 0.5,
            max_overlap: 0.15,
            include_background: true,
            n_max: 8,
            seed: 0,
        }
    }
}

impl ShapesConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_objects < 1 {
            return Err(Error::Config("min_objects must be >= 1".into()));
        }
        let slack = if self.include_background { 1 } else { 0 };
        if self.max_objects + slack > self.n_max {
            return Err(Error::Config(format!(
                "max_objects {} (+{} background) exceeds n_max {}",
                self.max_objects, slack, self.n_max
            )));
        }
        if self.min_objects > self.max_objects {
            return Err(Error::Config("min_objects > max_objects".into()));
        }
        if !(self.min_size > 0.0 && self.max_size <= 1.0 && self.min_size <= self.max_size) {
            return Err(Error::Config("box size fractions must satisfy 0 < min <= max <= 1".into()));
        }
        if self.canvas_size < 8 {
            return Err(Error::Config("canvas_size must be >= 8".into()));
        }
        Ok(())
    }
}

/// One synthetic record: image, padded layout, and per-object visibility
/// masks (row-major `canvas_size^2` booleans, one per real object).
#[derive(Debug, Clone)]
pub struct ShapesRecord {
    pub image: FloatImage,
    pub layout: Layout,
    pub masks: Vec<Vec<bool>>,
}

fn record_rng(seed: u64, index: u64) -> ChaCha8Rng {
    // splitmix64 of (seed, index) so records are order-independent.
    let mut z = seed ^ index.wrapping_mul(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^= z >> 31;
    ChaCha8Rng::seed_from_u64(z)
}

#[inline]
fn inside_shape(geometry: Geometry, bbox: &BoundingBox, cy: f64, cx: f64) -> bool {
    let (x0, y0, h, w) = (bbox.x0, bbox.y0, bbox.h, bbox.w);
    match geometry {
        Geometry::Square => cy >= y0 && cy < y0 + h && cx >= x0 && cx < x0 + w,
        Geometry::Circle => {
            let ry = h / 2.0;
            let rx = w / 2.0;
            let dy = (cy - (y0 + ry)) / ry;
            let dx = (cx - (x0 + rx)) / rx;
            dy * dy + dx * dx <= 1.0
        }
        Geometry::Triangle => {
            // Vertices: top-center, bottom-left, bottom-right.
            if cy < y0 || cy > y0 + h || cx < x0 || cx > x0 + w {
                return false;
            }
            let frac = (cy - y0) / h; // 0 at apex, 1 at base
            let half = frac * w / 2.0;
            let xc = x0 + w / 2.0;
            cx >= xc - half && cx <= xc + half
        }
    }
}

/// Sample one record. Identical `(config, index)` pairs yield identical
/// records.
pub fn synth_shapes_sample(config: &ShapesConfig, index: u64) -> Result<ShapesRecord> {
    config.validate()?;
    let mut rng = record_rng(config.seed, index);
    let n_shapes = rng.random_range(config.min_objects..=config.max_objects);

    let mut objects: Vec<ObjectSpec> = Vec::new();
    if config.include_background {
        objects.push(ObjectSpec {
            bbox: BoundingBox::new(0.0, 0.0, 1.0, 1.0),
            category: BACKGROUND_CATEGORY,
        });
    }

    let mut shape_boxes: Vec<BoundingBox> = Vec::new();
    for _ in 0..n_shapes {
        let mut placed = false;
        for _try in 0..100 {
            let geometry = rng.random_range(0..3usize);
            let color = rng.random_range(0..4usize);
            let h = rng.random_range(config.min_size..=config.max_size);
            let w = rng.random_range(config.min_size..=config.max_size);
            let y0 = rng.random_range(0.0..=(1.0 - h));
            let x0 = rng.random_range(0.0..=(1.0 - w));
            let bbox = BoundingBox::new(x0, y0, h, w);
            let fp = match bbox.footprint(config.canvas_size, config.canvas_size) {
                Some(fp) if fp.rows >= 2 && fp.cols >= 2 => fp,
                _ => continue,
            };
            let _ = fp;
            if shape_boxes.iter().any(|b| b.iou(&bbox) > config.max_overlap) {
                continue;
            }
            shape_boxes.push(bbox);
            objects.push(ObjectSpec { bbox, category: encode_category(geometry, color) });
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::BoxSampling { retries: 100 });
        }
    }

    let layout = pad_layout(objects, config.n_max)?;
    let size = config.canvas_size;
    let mut image = FloatImage::filled(size, size, CANVAS_RGB);

    // Topmost-owner render: later slots draw over earlier ones.
    let real = layout.real_objects();
    let mut owner: Vec<Option<usize>> = vec![None; size * size];
    for (slot, obj) in real.iter().enumerate() {
        if obj.category == BACKGROUND_CATEGORY {
            continue;
        }
        let (geometry, color) = decode_category(obj.category).expect("foreground category");
        let rgb = palette_f32(color);
        let fp = obj.bbox.footprint(size, size).expect("real object footprint");
        for row in fp.row0..fp.row0 + fp.rows {
            let cy = (row as f64 + 0.5) / size as f64;
            for col in fp.col0..fp.col0 + fp.cols {
                let cx = (col as f64 + 0.5) / size as f64;
                if inside_shape(geometry, &obj.bbox, cy, cx) {
                    image.set_rgb(row, col, rgb);
                    owner[row * size + col] = Some(slot);
                }
            }
        }
    }

    let masks: Vec<Vec<bool>> = real
        .iter()
        .enumerate()
        .map(|(slot, obj)| {
            if obj.category == BACKGROUND_CATEGORY {
                owner.iter().map(|o| o.is_none()).collect()
            } else {
                owner.iter().map(|o| *o == Some(slot)).collect()
            }
        })
        .collect();

    Ok(ShapesRecord { image, layout, masks })
}

/// Generate `count` records.
pub fn synth_shapes_dataset(config: &ShapesConfig, count: usize) -> Result<Vec<ShapesRecord>> {
    (0..count as u64).map(|i| synth_shapes_sample(config, i)).collect()
}

/// Emit a dataset directory: `images/*.png`, `masks/*.png`, `layouts.jsonl`.
pub fn write_shapes_dataset(dir: &Path, config: &ShapesConfig, count: usize) -> Result<()> {
    let images_dir = dir.join("images");
    let masks_dir = dir.join("masks");
    std::fs::create_dir_all(&images_dir)?;
    std::fs::create_dir_all(&masks_dir)?;

    let mut records = Vec::with_capacity(count);
    for i in 0..count {
        let rec = synth_shapes_sample(config, i as u64)?;
        let name = format!("{i:05}.png");
        crate::imgio::write_rgb_png(&images_dir.join(&name), &rec.image)?;
        for (slot, mask) in rec.masks.iter().enumerate() {
            crate::imgio::write_mask_png(
                &masks_dir.join(format!("{i:05}_{slot}.png")),
                mask,
                config.canvas_size,
                config.canvas_size,
            )?;
        }
        records.push(LayoutFileRecord::from_layout(
            &rec.layout,
            &format!("images/{name}"),
            config.canvas_size as u32,
            config.canvas_size as u32,
        ));
    }
    crate::layout::write_layout_file(&dir.join("layouts.jsonl"), &records)?;
    let config_text = toml::to_string_pretty(config).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(dir.join("shapes_config.toml"), config_text)?;
    Ok(())
}

/// Load a dataset directory written by [`write_shapes_dataset`] back into
/// memory (images and layouts; masks are not needed for training).
pub fn load_shapes_dataset(dir: &Path, n_max: usize) -> Result<Vec<(FloatImage, Layout)>> {
    let records = crate::layout::read_layout_file(&dir.join("layouts.jsonl"))?;
    let mut out = Vec::with_capacity(records.len());
    for rec in &records {
        let img = crate::imgio::read_rgb_png(&dir.join(&rec.image_path))?;
        out.push((img, rec.to_layout(n_max)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_seeds_yield_identical_records() {
        let config = ShapesConfig::default();
        let a = synth_shapes_sample(&config, 7).unwrap();
        let b = synth_shapes_sample(&config, 7).unwrap();
        assert_eq!(a.image.data, b.image.data);
        assert_eq!(a.layout, b.layout);
        assert_eq!(a.masks, b.masks);
    }

    #[test]
    fn min_max_one_gives_single_object() {
        let config = ShapesConfig {
            min_objects: 1,
            max_objects: 1,
            include_background: false,
            ..Default::default()
        };
        for i in 0..10 {
            let rec = synth_shapes_sample(&config, i).unwrap();
            assert_eq!(rec.layout.real_count(), 1);
        }
    }

    #[test]
    fn masks_contained_in_box_footprint() {
        let config = ShapesConfig::default();
        for i in 0..20 {
            let rec = synth_shapes_sample(&config, i).unwrap();
            let size = config.canvas_size;
            for (slot, obj) in rec.layout.real_objects().iter().enumerate() {
                if obj.category == BACKGROUND_CATEGORY {
                    continue;
                }
                // Integer-pixel expansion of the box.
                let r0 = (obj.bbox.y0 * size as f64).floor() as usize;
                let c0 = (obj.bbox.x0 * size as f64).floor() as usize;
                let r1 = ((obj.bbox.y0 + obj.bbox.h) * size as f64).ceil() as usize;
                let c1 = ((obj.bbox.x0 + obj.bbox.w) * size as f64).ceil() as usize;
                for row in 0..size {
                    for col in 0..size {
                        if rec.masks[slot][row * size + col] {
                            assert!(row >= r0 && row < r1 && col >= c0 && col < c1);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn rendered_shapes_are_visible_and_colored() {
        let config = ShapesConfig::default();
        let rec = synth_shapes_sample(&config, 3).unwrap();
        for (slot, obj) in rec.layout.real_objects().iter().enumerate() {
            if obj.category == BACKGROUND_CATEGORY {
                continue;
            }
            let visible = rec.masks[slot].iter().filter(|m| **m).count();
            assert!(visible >= 4, "object {slot} nearly invisible");
            let (_, color) = decode_category(obj.category).unwrap();
            let rgb = palette_f32(color);
            let size = config.canvas_size;
            let (row, col) = rec.masks[slot]
                .iter()
                .enumerate()
                .find(|(_, m)| **m)
                .map(|(i, _)| (i / size, i % size))
                .unwrap();
            assert_eq!(rec.image.rgb(row, col), rgb);
        }
    }

    #[test]
    fn background_object_present_by_default() {
        let config = ShapesConfig::default();
        let rec = synth_shapes_sample(&config, 0).unwrap();
        assert_eq!(rec.layout.real_objects()[0].category, BACKGROUND_CATEGORY);
        assert!(rec.layout.real_count() >= 2);
    }

    #[test]
    fn dataset_directory_round_trips() {
        let dir = std::env::temp_dir().join("l2i_shapes_ds_test");
        let _ = std::fs::remove_dir_all(&dir);
        let config = ShapesConfig::default();
        write_shapes_dataset(&dir, &config, 3).unwrap();
        let loaded = load_shapes_dataset(&dir, config.n_max).unwrap();
        assert_eq!(loaded.len(), 3);
        let rec0 = synth_shapes_sample(&config, 0).unwrap();
        assert_eq!(loaded[0].1, rec0.layout);
        // PNG quantization: loaded pixels within half a step of the originals.
        for (a, b) in loaded[0].0.data.iter().zip(rec0.image.data.iter()) {
            assert!((a - b).abs() <= 1.0 / 127.0);
        }
    }
}
