//! COCO-style annotation ingestion.
//!
//! Records are filtered the way the training sets were prepared: objects
//! covering less than 2% of the image are dropped, and a record survives
//! only if 3 to 8 objects remain. The object-count window is checked after
//! the coverage removal.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::layout::{normalize_box, ObjectSpec};

/// Minimum box coverage (fraction of image area) for an object to survive.
pub const MIN_COVERAGE: f64 = 0.02;
/// Surviving-object count window for a record to be kept.
pub const OBJECT_COUNT_RANGE: (usize, usize) = (3, 8);

#[derive(Debug, Deserialize)]
struct CocoImage {
    id: u64,
    #[serde(default)]
    file_name: String,
    width: usize,
    height: usize,
}

#[derive(Debug, Deserialize)]
struct CocoAnnotation {
    image_id: u64,
    bbox: Vec<f64>,
    category_id: u64,
}

#[derive(Debug, Deserialize)]
struct CocoCategory {
    id: u64,
}

#[derive(Debug, Deserialize)]
struct CocoFile {
    images: Vec<CocoImage>,
    annotations: Vec<CocoAnnotation>,
    #[serde(default)]
    categories: Vec<CocoCategory>,
}

/// One surviving record after filtering.
#[derive(Debug, Clone)]
pub struct IngestedRecord {
    pub image_id: u64,
    pub file_name: String,
    pub width: usize,
    pub height: usize,
    pub objects: Vec<ObjectSpec>,
}

/// Apply the coverage and object-count filters to one image's annotations.
///
/// `annotations` are `(pixel box (x, y, w, h), category)` pairs. Returns the
/// surviving objects, or `None` if the record is excluded by the 3-8 window.
pub fn filter_record(
    annotations: &[([f64; 4], usize)],
    image_h: usize,
    image_w: usize,
) -> Result<Option<Vec<ObjectSpec>>> {
    let mut kept = Vec::new();
    for (i, ([x, y, w, h], category)) in annotations.iter().enumerate() {
        if *category == crate::layout::PADDING_CATEGORY {
            return Err(Error::Annotation {
                record: format!("annotation {i}"),
                reason: "category 0 is reserved for padding".into(),
            });
        }
        let bbox = normalize_box(*x, *y, *w, *h, image_h, image_w).map_err(|e| Error::Annotation {
            record: format!("annotation {i}"),
            reason: e.to_string(),
        })?;
        // Coverage from box area; small objects are dropped, not an error.
        if bbox.area() < MIN_COVERAGE {
            continue;
        }
        kept.push(ObjectSpec { bbox, category: *category });
    }
    let (lo, hi) = OBJECT_COUNT_RANGE;
    if kept.len() < lo || kept.len() > hi {
        return Ok(None);
    }
    Ok(Some(kept))
}

/// Parse a COCO-style JSON file and return the filtered records.
///
/// Raw category ids are remapped to contiguous ids `1..=C` in ascending
/// order of the file's `categories` section (or of the ids seen in
/// annotations when that section is absent).
pub fn ingest_coco_file(path: &Path) -> Result<Vec<IngestedRecord>> {
    let text = std::fs::read_to_string(path)?;
    let file: CocoFile = serde_json::from_str(&text).map_err(|e| Error::Annotation {
        record: path.display().to_string(),
        reason: e.to_string(),
    })?;

    let mut raw_ids: Vec<u64> = if file.categories.is_empty() {
        file.annotations.iter().map(|a| a.category_id).collect()
    } else {
        file.categories.iter().map(|c| c.id).collect()
    };
    raw_ids.sort_unstable();
    raw_ids.dedup();
    let id_map: BTreeMap<u64, usize> = raw_ids.iter().enumerate().map(|(i, id)| (*id, i + 1)).collect();

    let mut per_image: BTreeMap<u64, Vec<([f64; 4], usize)>> = BTreeMap::new();
    for (i, ann) in file.annotations.iter().enumerate() {
        if ann.bbox.len() != 4 {
            return Err(Error::Annotation {
                record: format!("{}#annotation {i}", path.display()),
                reason: format!("bbox must have 4 entries, got {}", ann.bbox.len()),
            });
        }
        let category = *id_map.get(&ann.category_id).ok_or_else(|| Error::Annotation {
            record: format!("{}#annotation {i}", path.display()),
            reason: format!("unknown category id {}", ann.category_id),
        })?;
        per_image
            .entry(ann.image_id)
            .or_default()
            .push(([ann.bbox[0], ann.bbox[1], ann.bbox[2], ann.bbox[3]], category));
    }

    let mut kept = Vec::new();
    for img in &file.images {
        let anns = per_image.get(&img.id).map(Vec::as_slice).unwrap_or(&[]);
        if let Some(objects) = filter_record(anns, img.height, img.width)? {
            kept.push(IngestedRecord {
                image_id: img.id,
                file_name: img.file_name.clone(),
                width: img.width,
                height: img.height,
                objects,
            });
        }
    }
    Ok(kept)
}
