//! Global conditions derived from a layout: object representations
//! (category embedding + style code), the mask prediction subnetwork, mask
//! placement into feature canvases, and the per-block refinement blend.

use candle_core::{DType, Tensor};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{Layout, PixelRect};
use crate::nn::{bilinear_resize_2d, Conv2dLayer, Init, LinearLayer, ParamStore};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConditioningConfig {
    /// Highest real category id C; the embedding table has C+1 rows, row 0
    /// being the padding class.
    pub num_categories: usize,
    pub d_e: usize,
    pub d_z: usize,
    pub n_max: usize,
    /// Channel width of the mask prediction subnetwork.
    pub mask_channels: usize,
    /// Base resolution s of predicted mask grids (power of two, >= 8).
    pub mask_resolution: usize,
}

impl Default for ConditioningConfig {
    fn default() -> Self {
        Self {
            num_categories: 13,
            d_e: 180,
            d_z: 128,
            n_max: 8,
            mask_channels: 32,
            mask_resolution: 32,
        }
    }
}

impl ConditioningConfig {
    pub fn rep_dim(&self) -> usize {
        self.d_e + self.d_z
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.mask_resolution;
        if s < 8 || !s.is_power_of_two() {
            return Err(Error::Config(format!("mask_resolution {s} must be a power of two >= 8")));
        }
        if self.n_max == 0 || self.num_categories == 0 {
            return Err(Error::Config("n_max and num_categories must be positive".into()));
        }
        Ok(())
    }
}

/// Mask prediction subnetwork: a linear seed to 4x4, then nearest-upsample +
/// convolution stages up to the base mask resolution, then a sigmoid head.
#[derive(Debug, Clone)]
pub struct MaskPredictor {
    fc: LinearLayer,
    convs: Vec<Conv2dLayer>,
    out: Conv2dLayer,
    channels: usize,
    resolution: usize,
}

impl MaskPredictor {
    pub fn new(store: &ParamStore, name: &str, rep_dim: usize, channels: usize, resolution: usize) -> Result<Self> {
        let fc = LinearLayer::new(store, &format!("{name}.fc"), rep_dim, channels * 16)?;
        let n_up = (resolution / 4).trailing_zeros() as usize;
        let mut convs = Vec::with_capacity(n_up);
        for i in 0..n_up {
            convs.push(Conv2dLayer::same3x3(store, &format!("{name}.up{i}"), channels, channels)?);
        }
        let out = Conv2dLayer::onebyone(store, &format!("{name}.out"), channels, 1)?;
        Ok(Self { fc, convs, out, channels, resolution })
    }

    /// Predict one grid per slot; slots are independent batch items.
    pub fn forward(&self, reps: &Tensor) -> Result<Tensor> {
        let (n, _d) = reps.dims2()?;
        let mut h = self.fc.forward(reps)?.reshape((n, self.channels, 4, 4))?;
        for conv in &self.convs {
            let (_, _, hh, ww) = h.dims4()?;
            h = h.upsample_nearest2d(hh * 2, ww * 2)?;
            h = crate::nn::silu(&conv.forward(&h)?)?;
        }
        let logits = self.out.forward(&h)?;
        let probs = candle_nn::ops::sigmoid(&logits)?;
        probs.reshape((n, self.resolution, self.resolution)).map_err(Into::into)
    }
}

/// Learnable pieces behind the global conditions.
pub struct ConditioningParams {
    pub table: Tensor,
    pub mask_net: MaskPredictor,
    pub edge_head: LinearLayer,
    pub config: ConditioningConfig,
}

impl ConditioningParams {
    pub fn new(store: &ParamStore, config: &ConditioningConfig) -> Result<Self> {
        config.validate()?;
        let table = store.get(
            &[config.num_categories + 1, config.d_e],
            "cond.embedding",
            Init::Normal(0.02),
        )?;
        let mask_net = MaskPredictor::new(
            store,
            "cond.mask_net",
            config.rep_dim(),
            config.mask_channels,
            config.mask_resolution,
        )?;
        let edge_head = LinearLayer::new(store, "cond.edge_head", config.rep_dim(), 1)?;
        Ok(Self { table, mask_net, edge_head, config: config.clone() })
    }
}

/// Concatenate one category embedding row with a style code.
pub fn build_object_representation(category: usize, style: &Tensor, table: &Tensor) -> Result<Tensor> {
    let (rows, _d_e) = table.dims2()?;
    if category >= rows {
        return Err(Error::CategoryRange { category, max: rows - 1 });
    }
    let emb = table.narrow(0, category, 1)?.squeeze(0)?;
    Tensor::cat(&[&emb, style], 0).map_err(Into::into)
}

/// Sample style codes for every slot; padding slots get zero codes.
pub fn sample_styles(
    rng: &mut impl rand::Rng,
    layout: &Layout,
    d_z: usize,
    dtype: DType,
    device: &candle_core::Device,
) -> Result<Tensor> {
    let n = layout.n_max();
    let mut vals = crate::nn::randn_vec(rng, n * d_z);
    for (i, obj) in layout.objects().iter().enumerate() {
        if obj.is_padding() {
            vals[i * d_z..(i + 1) * d_z].fill(0.0);
        }
    }
    crate::nn::tensor_from_f64(&vals, &[n, d_z], dtype, device)
}

/// Stack per-slot representations: `(embedding row, style code)`.
pub fn build_representations(layout: &Layout, styles: &Tensor, table: &Tensor) -> Result<Tensor> {
    let (n, _d_z) = styles.dims2()?;
    if n != layout.n_max() {
        return Err(Error::Shape {
            context: "build_representations",
            expected: format!("{} style rows", layout.n_max()),
            got: format!("{n}"),
        });
    }
    let (rows, _) = table.dims2()?;
    let mut ids = Vec::with_capacity(n);
    for obj in layout.objects() {
        if obj.category >= rows {
            return Err(Error::CategoryRange { category: obj.category, max: rows - 1 });
        }
        ids.push(obj.category as u32);
    }
    let ids = Tensor::from_vec(ids, (n,), styles.device())?;
    let emb = table.index_select(&ids, 0)?;
    Tensor::cat(&[&emb, styles], 1).map_err(Into::into)
}

/// Per-object scalar edge weights in `(0,1)`; padding slots forced to 0.
pub fn edge_weights(reps: &Tensor, layout: &Layout, head: &LinearLayer) -> Result<Tensor> {
    let (n, _d) = reps.dims2()?;
    let logits = head.forward(reps)?.squeeze(1)?;
    let w = candle_nn::ops::sigmoid(&logits)?;
    let real: Vec<f64> = layout.objects().iter().map(|o| if o.is_padding() { 0.0 } else { 1.0 }).collect();
    let mask = crate::nn::tensor_from_f64(&real, &[n], reps.dtype(), reps.device())?;
    Ok(w.mul(&mask)?)
}

/// Per-object masks rendered into a feature-resolution canvas: zero outside
/// each object's box footprint, padding slots identically zero.
#[derive(Debug, Clone)]
pub struct PlacedMaskSet {
    pub masks: Tensor,
    pub areas: Vec<usize>,
    pub rects: Vec<Option<PixelRect>>,
    pub height: usize,
    pub width: usize,
}

impl PlacedMaskSet {
    pub fn num_slots(&self) -> usize {
        self.areas.len()
    }

    pub fn same_shape(&self, other: &PlacedMaskSet) -> bool {
        self.height == other.height && self.width == other.width && self.num_slots() == other.num_slots()
    }
}

fn place_one(grid: &Tensor, rect: &PixelRect, height: usize, width: usize) -> Result<Tensor> {
    let block = bilinear_resize_2d(grid, rect.rows, rect.cols)?;
    let block = block.pad_with_zeros(0, rect.row0, height - rect.row0 - rect.rows)?;
    let block = block.pad_with_zeros(1, rect.col0, width - rect.col0 - rect.cols)?;
    Ok(block)
}

/// Resample each slot's grid into its box footprint at the target
/// resolution (bilinear); zero elsewhere.
pub fn place_masks(grids: &Tensor, layout: &Layout, height: usize, width: usize) -> Result<PlacedMaskSet> {
    if height < 4 || width < 4 {
        return Err(Error::Config(format!("placement resolution {height}x{width} below 4x4")));
    }
    let (n, _s, _s2) = grids.dims3()?;
    if n != layout.n_max() {
        return Err(Error::Shape {
            context: "place_masks",
            expected: format!("{} grids", layout.n_max()),
            got: format!("{n}"),
        });
    }
    let mut slots = Vec::with_capacity(n);
    let mut areas = Vec::with_capacity(n);
    let mut rects = Vec::with_capacity(n);
    for (i, obj) in layout.objects().iter().enumerate() {
        let rect = if obj.is_padding() { None } else { obj.bbox.footprint(height, width) };
        match rect {
            Some(r) => {
                let grid = grids.narrow(0, i, 1)?.squeeze(0)?;
                slots.push(place_one(&grid, &r, height, width)?);
                areas.push(r.num_pixels());
            }
            None => {
                slots.push(Tensor::zeros((height, width), grids.dtype(), grids.device())?);
                areas.push(0);
            }
        }
        rects.push(rect);
    }
    let refs: Vec<&Tensor> = slots.iter().collect();
    Ok(PlacedMaskSet { masks: Tensor::stack(&refs, 0)?, areas, rects, height, width })
}

/// Carry a placed set to a new resolution: crop each slot's footprint
/// window, resample it into the footprint at the new resolution, and paste.
pub fn resize_placed(set: &PlacedMaskSet, layout: &Layout, height: usize, width: usize) -> Result<PlacedMaskSet> {
    let n = set.num_slots();
    let mut slots = Vec::with_capacity(n);
    let mut areas = Vec::with_capacity(n);
    let mut rects = Vec::with_capacity(n);
    for (i, obj) in layout.objects().iter().enumerate() {
        let old = set.rects[i];
        let new = if obj.is_padding() { None } else { obj.bbox.footprint(height, width) };
        match (old, new) {
            (Some(o), Some(r)) => {
                let window = set.masks.narrow(0, i, 1)?.squeeze(0)?.narrow(0, o.row0, o.rows)?.narrow(1, o.col0, o.cols)?;
                slots.push(place_one(&window.contiguous()?, &r, height, width)?);
                areas.push(r.num_pixels());
            }
            _ => {
                slots.push(Tensor::zeros((height, width), set.masks.dtype(), set.masks.device())?);
                areas.push(0);
            }
        }
        rects.push(new);
    }
    let refs: Vec<&Tensor> = slots.iter().collect();
    Ok(PlacedMaskSet { masks: Tensor::stack(&refs, 0)?, areas, rects, height, width })
}

/// Learnable blend gate; effective weight is `sigmoid(raw)`, starting at
/// 0.5 from a zero-initialized raw value.
#[derive(Debug, Clone)]
pub struct RefineGate {
    pub raw: Tensor,
}

impl RefineGate {
    pub fn new(store: &ParamStore, name: &str) -> Result<Self> {
        Ok(Self { raw: store.get(&[1], &format!("{name}.eta"), Init::Zeros)? })
    }

    pub fn effective(&self) -> Result<Tensor> {
        Ok(candle_nn::ops::sigmoid(&self.raw)?.squeeze(0)?)
    }
}

/// Convex blend `(1 - eta) * m0 + eta * mj` per object.
pub fn refine_masks(m0: &PlacedMaskSet, mj: &PlacedMaskSet, eta: &Tensor) -> Result<PlacedMaskSet> {
    if !m0.same_shape(mj) {
        return Err(Error::Shape {
            context: "refine_masks",
            expected: format!("{}x{} x{}", m0.height, m0.width, m0.num_slots()),
            got: format!("{}x{} x{}", mj.height, mj.width, mj.num_slots()),
        });
    }
    let one = Tensor::ones((), eta.dtype(), eta.device())?;
    let keep = one.sub(eta)?;
    let blended = m0.masks.broadcast_mul(&keep)?.add(&mj.masks.broadcast_mul(eta)?)?;
    Ok(PlacedMaskSet {
        masks: blended,
        areas: m0.areas.clone(),
        rects: m0.rects.clone(),
        height: m0.height,
        width: m0.width,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{pad_layout, BoundingBox, ObjectSpec};
    use candle_core::Device;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn toy_layout() -> Layout {
        pad_layout(
            vec![
                ObjectSpec { bbox: BoundingBox::new(0.25, 0.5, 0.5, 0.75), category: 1 },
                ObjectSpec { bbox: BoundingBox::new(0.0, 0.0, 0.5, 0.5), category: 2 },
            ],
            4,
        )
        .unwrap()
    }

    #[test]
    fn representation_is_embedding_then_style() {
        let dev = Device::Cpu;
        let store = ParamStore::new(5, DType::F64, &dev);
        let config = ConditioningConfig::default();
        let params = ConditioningParams::new(&store, &config).unwrap();

        let style = Tensor::zeros((config.d_z,), DType::F64, &dev).unwrap();
        let rep = build_object_representation(0, &style, &params.table).unwrap();
        assert_eq!(rep.dims1().unwrap(), 308); // 180 + 128
        let row0 = params.table.narrow(0, 0, 1).unwrap().squeeze(0).unwrap();
        let head = rep.narrow(0, 0, config.d_e).unwrap();
        assert_eq!(
            head.to_vec1::<f64>().unwrap(),
            row0.to_vec1::<f64>().unwrap()
        );
        let tail = rep.narrow(0, config.d_e, config.d_z).unwrap().to_vec1::<f64>().unwrap();
        assert!(tail.iter().all(|v| *v == 0.0));

        // Purity: equal inputs give equal outputs.
        let rep2 = build_object_representation(0, &style, &params.table).unwrap();
        assert_eq!(rep.to_vec1::<f64>().unwrap(), rep2.to_vec1::<f64>().unwrap());

        // Out-of-range category.
        assert!(matches!(
            build_object_representation(config.num_categories + 1, &style, &params.table),
            Err(Error::CategoryRange { .. })
        ));
    }

    #[test]
    fn representation_is_linear_in_style() {
        let dev = Device::Cpu;
        let store = ParamStore::new(5, DType::F64, &dev);
        let config = ConditioningConfig { d_e: 6, d_z: 4, ..Default::default() };
        let params = ConditioningParams::new(&store, &config).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let a = crate::nn::randn_tensor(&mut rng, &[4], DType::F64, &dev).unwrap();
        let b = crate::nn::randn_tensor(&mut rng, &[4], DType::F64, &dev).unwrap();
        let sum = a.add(&b).unwrap();
        let ra = build_object_representation(2, &a, &params.table).unwrap();
        let rb = build_object_representation(2, &b, &params.table).unwrap();
        let rsum = build_object_representation(2, &sum, &params.table).unwrap();
        // The style block passes through unchanged: rep(a+b) - rep(a) has
        // zero embedding part and style part b.
        let diff = rsum.sub(&ra).unwrap();
        let emb_part = diff.narrow(0, 0, 6).unwrap().to_vec1::<f64>().unwrap();
        assert!(emb_part.iter().all(|v| v.abs() < 1e-12));
        let style_part = diff.narrow(0, 6, 4).unwrap();
        let expect = rb.narrow(0, 6, 4).unwrap();
        for (x, y) in style_part
            .to_vec1::<f64>()
            .unwrap()
            .iter()
            .zip(expect.to_vec1::<f64>().unwrap().iter())
        {
            assert!((x - y).abs() < 1e-12);
        }
    }

    fn small_config() -> ConditioningConfig {
        ConditioningConfig { d_e: 8, d_z: 6, mask_channels: 8, mask_resolution: 16, n_max: 4, num_categories: 13 }
    }

    #[test]
    fn mask_grids_strictly_inside_unit_interval() {
        let dev = Device::Cpu;
        let store = ParamStore::new(7, DType::F64, &dev);
        let config = small_config();
        let params = ConditioningParams::new(&store, &config).unwrap();
        let layout = toy_layout();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let styles = sample_styles(&mut rng, &layout, config.d_z, DType::F64, &dev).unwrap();
        let reps = build_representations(&layout, &styles, &params.table).unwrap();
        let grids = params.mask_net.forward(&reps).unwrap();
        for v in grids.flatten_all().unwrap().to_vec1::<f64>().unwrap() {
            assert!(v > 0.0 && v < 1.0);
        }
    }

    #[test]
    fn mask_net_is_slotwise_independent_and_equivariant() {
        let dev = Device::Cpu;
        let store = ParamStore::new(7, DType::F64, &dev);
        let config = small_config();
        let params = ConditioningParams::new(&store, &config).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let reps = crate::nn::randn_tensor(&mut rng, &[4, config.rep_dim()], DType::F64, &dev).unwrap();
        let grids = params.mask_net.forward(&reps).unwrap();

        // Permute slots: outputs permute identically.
        let perm = [2u32, 0, 3, 1];
        let ids = Tensor::from_vec(perm.to_vec(), (4,), &dev).unwrap();
        let permuted = reps.index_select(&ids, 0).unwrap();
        let grids_p = params.mask_net.forward(&permuted).unwrap();
        for (dst, src) in perm.iter().enumerate() {
            let a = grids_p.narrow(0, dst, 1).unwrap().flatten_all().unwrap().to_vec1::<f64>().unwrap();
            let b = grids.narrow(0, *src as usize, 1).unwrap().flatten_all().unwrap().to_vec1::<f64>().unwrap();
            assert_eq!(a, b);
        }

        // Zeroing one slot's representation changes only that slot's grid.
        let mut vals = reps.flatten_all().unwrap().to_vec1::<f64>().unwrap();
        let d = config.rep_dim();
        vals[d..2 * d].fill(0.0);
        let zeroed = Tensor::from_vec(vals, (4, d), &dev).unwrap();
        let grids_z = params.mask_net.forward(&zeroed).unwrap();
        for slot in [0usize, 2, 3] {
            let a = grids_z.narrow(0, slot, 1).unwrap().flatten_all().unwrap().to_vec1::<f64>().unwrap();
            let b = grids.narrow(0, slot, 1).unwrap().flatten_all().unwrap().to_vec1::<f64>().unwrap();
            assert_eq!(a, b, "slot {slot} changed");
        }
    }

    #[test]
    fn mask_net_gradient_matches_finite_differences() {
        let dev = Device::Cpu;
        let store = ParamStore::new(7, DType::F64, &dev);
        let config = small_config();
        let params = ConditioningParams::new(&store, &config).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let rep_vals = crate::nn::randn_tensor(&mut rng, &[2, config.rep_dim()], DType::F64, &dev).unwrap();

        let var = candle_core::Var::from_tensor(&rep_vals).unwrap();
        let loss = params.mask_net.forward(var.as_tensor()).unwrap().mean_all().unwrap();
        let grads = loss.backward().unwrap();
        let grad = grads.get(var.as_tensor()).unwrap();

        let indices = crate::gradcheck::sample_indices(&mut rng, 2 * config.rep_dim(), 10);
        crate::gradcheck::check_grads(
            |x| {
                params
                    .mask_net
                    .forward(x)?
                    .mean_all()?
                    .to_scalar::<f64>()
                    .map_err(Into::into)
            },
            &rep_vals,
            grad,
            &indices,
            1e-5,
            1e-3,
            "mask_net",
        )
        .unwrap();
    }

    #[test]
    fn placement_identity_and_padding() {
        let dev = Device::Cpu;
        let layout = pad_layout(
            vec![ObjectSpec { bbox: BoundingBox::new(0.0, 0.0, 1.0, 1.0), category: 1 }],
            2,
        )
        .unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let grid_vals: Vec<f64> = (0..2 * 16 * 16).map(|_| rand::Rng::random_range(&mut rng, 0.01..0.99)).collect();
        let grids = Tensor::from_vec(grid_vals, (2, 16, 16), &dev).unwrap();
        let placed = place_masks(&grids, &layout, 16, 16).unwrap();

        // Full-canvas box at the grid's own resolution: identity placement.
        let a = placed.masks.narrow(0, 0, 1).unwrap().flatten_all().unwrap().to_vec1::<f64>().unwrap();
        let b = grids.narrow(0, 0, 1).unwrap().flatten_all().unwrap().to_vec1::<f64>().unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-12);
        }

        // Padding slot: all zero.
        let p = placed.masks.narrow(0, 1, 1).unwrap().flatten_all().unwrap().to_vec1::<f64>().unwrap();
        assert!(p.iter().all(|v| *v == 0.0));
        assert_eq!(placed.areas[1], 0);
    }

    #[test]
    fn placement_support_matches_footprint() {
        let dev = Device::Cpu;
        let layout = toy_layout();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let grid_vals: Vec<f64> = (0..4 * 8 * 8).map(|_| rand::Rng::random_range(&mut rng, 0.01..0.99)).collect();
        let grids = Tensor::from_vec(grid_vals, (4, 8, 8), &dev).unwrap();
        let placed = place_masks(&grids, &layout, 64, 64).unwrap();

        // Box (0.25, 0.5, 0.5, 0.75): rows 32..63, cols 16..63.
        let m = placed.masks.narrow(0, 0, 1).unwrap().squeeze(0).unwrap().to_vec2::<f64>().unwrap();
        for (r, row) in m.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                let inside = (32..64).contains(&r) && (16..64).contains(&c);
                if inside {
                    assert!(*v > 0.0, "expected positive at ({r},{c})");
                } else {
                    assert_eq!(*v, 0.0, "expected zero at ({r},{c})");
                }
            }
        }
        assert_eq!(placed.areas[0], 32 * 48);
    }

    #[test]
    fn refine_blend_endpoints_and_midpoint() {
        let dev = Device::Cpu;
        let layout = toy_layout();
        let g0 = Tensor::full(0.2f64, (4, 8, 8), &dev).unwrap();
        let gj = Tensor::full(0.8f64, (4, 8, 8), &dev).unwrap();
        let m0 = place_masks(&g0, &layout, 16, 16).unwrap();
        let mj = place_masks(&gj, &layout, 16, 16).unwrap();

        let zero = Tensor::zeros((), DType::F64, &dev).unwrap();
        let one = Tensor::ones((), DType::F64, &dev).unwrap();
        let half = Tensor::full(0.5f64, (), &dev).unwrap();

        let r0 = refine_masks(&m0, &mj, &zero).unwrap();
        assert_eq!(
            r0.masks.flatten_all().unwrap().to_vec1::<f64>().unwrap(),
            m0.masks.flatten_all().unwrap().to_vec1::<f64>().unwrap()
        );
        let r1 = refine_masks(&m0, &mj, &one).unwrap();
        assert_eq!(
            r1.masks.flatten_all().unwrap().to_vec1::<f64>().unwrap(),
            mj.masks.flatten_all().unwrap().to_vec1::<f64>().unwrap()
        );
        let rh = refine_masks(&m0, &mj, &half).unwrap();
        let rect = m0.rects[0].unwrap();
        let v = rh
            .masks
            .narrow(0, 0, 1)
            .unwrap()
            .squeeze(0)
            .unwrap()
            .to_vec2::<f64>()
            .unwrap()[rect.row0 + 1][rect.col0 + 1];
        assert!((v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn refine_rejects_resolution_mismatch() {
        let dev = Device::Cpu;
        let layout = toy_layout();
        let g = Tensor::full(0.5f64, (4, 8, 8), &dev).unwrap();
        let a = place_masks(&g, &layout, 16, 16).unwrap();
        let b = place_masks(&g, &layout, 32, 32).unwrap();
        let half = Tensor::full(0.5f64, (), &dev).unwrap();
        assert!(matches!(refine_masks(&a, &b, &half), Err(Error::Shape { .. })));
    }

    #[test]
    fn refine_stays_convex_for_random_gates() {
        let dev = Device::Cpu;
        let layout = toy_layout();
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        for _ in 0..20 {
            let g0 = crate::nn::randn_tensor(&mut rng, &[4, 8, 8], DType::F64, &dev)
                .unwrap()
                .clamp(0.0, 1.0)
                .unwrap();
            let gj = crate::nn::randn_tensor(&mut rng, &[4, 8, 8], DType::F64, &dev)
                .unwrap()
                .clamp(0.0, 1.0)
                .unwrap();
            let m0 = place_masks(&g0, &layout, 12, 12).unwrap();
            let mj = place_masks(&gj, &layout, 12, 12).unwrap();
            let eta = Tensor::full(rand::Rng::random_range(&mut rng, 0.0..1.0), (), &dev).unwrap();
            let r = refine_masks(&m0, &mj, &eta).unwrap();
            for v in r.masks.flatten_all().unwrap().to_vec1::<f64>().unwrap() {
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn resize_placed_keeps_support_in_new_footprint() {
        let dev = Device::Cpu;
        let layout = toy_layout();
        let g = Tensor::full(0.6f64, (4, 8, 8), &dev).unwrap();
        let placed = place_masks(&g, &layout, 16, 16).unwrap();
        let resized = resize_placed(&placed, &layout, 40, 40).unwrap();
        for (i, rect) in resized.rects.iter().enumerate() {
            let m = resized.masks.narrow(0, i, 1).unwrap().squeeze(0).unwrap().to_vec2::<f64>().unwrap();
            for (r, row) in m.iter().enumerate() {
                for (c, v) in row.iter().enumerate() {
                    match rect {
                        Some(rc) if rc.contains(r, c) => assert!(*v > 0.0),
                        _ => assert_eq!(*v, 0.0),
                    }
                }
            }
        }
    }
}
