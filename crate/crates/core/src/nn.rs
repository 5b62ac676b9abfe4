//! Parameter storage and small layer wrappers on top of candle.
//!
//! Parameters are created through a [`ParamStore`] keyed by full dotted
//! names. Initialization draws from a per-name seeded stream, so values do
//! not depend on construction order and identical seeds rebuild identical
//! models. Loading a checkpoint pre-populates the store before the model is
//! built; `get` then returns the stored tensors.

use std::collections::HashMap;
use std::sync::Mutex;

use candle_core::{DType, Device, Tensor, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Initialization for a parameter tensor.
#[derive(Debug, Clone, Copy)]
pub enum Init {
    Zeros,
    Ones,
    Const(f64),
    /// Gaussian with the given standard deviation.
    Normal(f64),
    /// Gaussian with std `1/sqrt(fan_in)`.
    FanIn(usize),
}

/// Draw a standard-normal `Vec<f64>` from a seeded stream.
pub fn randn_vec(rng: &mut impl rand::Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Build a tensor of the requested dtype from f64 values.
pub fn tensor_from_f64(vals: &[f64], shape: &[usize], dtype: DType, device: &Device) -> Result<Tensor> {
    let t = Tensor::from_vec(vals.to_vec(), shape, device)?;
    Ok(t.to_dtype(dtype)?)
}

/// Standard-normal tensor from an explicit rng (never candle's device rng,
/// so sampling stays reproducible across runs and thread counts).
pub fn randn_tensor(rng: &mut impl rand::Rng, shape: &[usize], dtype: DType, device: &Device) -> Result<Tensor> {
    let n: usize = shape.iter().product();
    tensor_from_f64(&randn_vec(rng, n), shape, dtype, device)
}

/// Named variable store with order-independent deterministic init.
pub struct ParamStore {
    vars: Mutex<HashMap<String, Var>>,
    seed: u64,
    dtype: DType,
    device: Device,
}

impl ParamStore {
    pub fn new(seed: u64, dtype: DType, device: &Device) -> Self {
        Self { vars: Mutex::new(HashMap::new()), seed, dtype, device: device.clone() }
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    /// Fetch or create a parameter. Shape must match an existing entry.
    pub fn get(&self, shape: &[usize], name: &str, init: Init) -> Result<Tensor> {
        let mut vars = self.vars.lock().unwrap();
        if let Some(var) = vars.get(name) {
            if var.dims() != shape {
                return Err(Error::Shape {
                    context: "ParamStore::get",
                    expected: format!("{shape:?} for {name}"),
                    got: format!("{:?}", var.dims()),
                });
            }
            return Ok(var.as_tensor().clone());
        }
        let n: usize = shape.iter().product();
        let vals: Vec<f64> = match init {
            Init::Zeros => vec![0.0; n],
            Init::Ones => vec![1.0; n],
            Init::Const(c) => vec![c; n],
            Init::Normal(std) => {
                let mut rng = ChaCha12Rng::seed_from_u64(splitmix64(self.seed ^ fnv1a(name)));
                randn_vec(&mut rng, n).into_iter().map(|v| v * std).collect()
            }
            Init::FanIn(fan_in) => {
                let std = 1.0 / (fan_in.max(1) as f64).sqrt();
                let mut rng = ChaCha12Rng::seed_from_u64(splitmix64(self.seed ^ fnv1a(name)));
                randn_vec(&mut rng, n).into_iter().map(|v| v * std).collect()
            }
        };
        let t = tensor_from_f64(&vals, shape, self.dtype, &self.device)?;
        let var = Var::from_tensor(&t)?;
        let tensor = var.as_tensor().clone();
        vars.insert(name.to_string(), var);
        Ok(tensor)
    }

    /// Insert a tensor under a name (checkpoint loading).
    pub fn set(&self, name: &str, value: &Tensor) -> Result<()> {
        let mut vars = self.vars.lock().unwrap();
        if let Some(var) = vars.get(name) {
            var.set(value)?;
        } else {
            vars.insert(name.to_string(), Var::from_tensor(&value.to_dtype(self.dtype)?)?);
        }
        Ok(())
    }

    /// All variables, sorted by name.
    pub fn named_vars(&self) -> Vec<(String, Var)> {
        let vars = self.vars.lock().unwrap();
        let mut out: Vec<(String, Var)> = vars.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    pub fn all_vars(&self) -> Vec<Var> {
        self.named_vars().into_iter().map(|(_, v)| v).collect()
    }

    pub fn len(&self) -> usize {
        self.vars.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Total scalar parameter count.
    pub fn num_params(&self) -> usize {
        self.vars.lock().unwrap().values().map(|v| v.elem_count()).sum()
    }
}

/// 2D convolution with explicit stride/padding.
#[derive(Debug, Clone)]
pub struct Conv2dLayer {
    pub weight: Tensor,
    pub bias: Tensor,
    pub stride: usize,
    pub padding: usize,
}

impl Conv2dLayer {
    pub fn new(
        store: &ParamStore,
        name: &str,
        cin: usize,
        cout: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        weight_init: Init,
    ) -> Result<Self> {
        let weight = store.get(&[cout, cin, kernel, kernel], &format!("{name}.weight"), weight_init)?;
        let bias = store.get(&[cout], &format!("{name}.bias"), Init::Zeros)?;
        Ok(Self { weight, bias, stride, padding })
    }

    /// Fan-in initialized 3x3 same-padding convolution.
    pub fn same3x3(store: &ParamStore, name: &str, cin: usize, cout: usize) -> Result<Self> {
        Self::new(store, name, cin, cout, 3, 1, 1, Init::FanIn(cin * 9))
    }

    /// Fan-in initialized 1x1 convolution.
    pub fn onebyone(store: &ParamStore, name: &str, cin: usize, cout: usize) -> Result<Self> {
        Self::new(store, name, cin, cout, 1, 1, 0, Init::FanIn(cin))
    }

    /// Zero-initialized convolution (blocks start as identity/no-op).
    pub fn zeroed(store: &ParamStore, name: &str, cin: usize, cout: usize, kernel: usize) -> Result<Self> {
        Self::new(store, name, cin, cout, kernel, 1, kernel / 2, Init::Zeros)
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let y = x.conv2d(&self.weight, self.padding, self.stride, 1, 1)?;
        Ok(y.broadcast_add(&self.bias.reshape((1, (), 1, 1))?)?)
    }
}

/// Dense layer `y = x W^T + b`.
#[derive(Debug, Clone)]
pub struct LinearLayer {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl LinearLayer {
    pub fn new(store: &ParamStore, name: &str, din: usize, dout: usize) -> Result<Self> {
        let weight = store.get(&[dout, din], &format!("{name}.weight"), Init::FanIn(din))?;
        let bias = store.get(&[dout], &format!("{name}.bias"), Init::Zeros)?;
        Ok(Self { weight, bias })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let y = x.matmul(&self.weight.t()?)?;
        Ok(y.broadcast_add(&self.bias)?)
    }
}

/// Group normalization computed from ops (dtype-generic, differentiable).
#[derive(Debug, Clone)]
pub struct GroupNormLayer {
    pub weight: Tensor,
    pub bias: Tensor,
    pub groups: usize,
    pub eps: f64,
}

impl GroupNormLayer {
    pub fn new(store: &ParamStore, name: &str, channels: usize, groups: usize) -> Result<Self> {
        let weight = store.get(&[channels], &format!("{name}.weight"), Init::Ones)?;
        let bias = store.get(&[channels], &format!("{name}.bias"), Init::Zeros)?;
        let groups = groups.min(channels).max(1);
        let groups = (1..=groups).rev().find(|g| channels % g == 0).unwrap_or(1);
        Ok(Self { weight, bias, groups, eps: 1e-5 })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (b, c, h, w) = x.dims4()?;
        let g = self.groups;
        let xg = x.reshape((b, g, c / g * h * w))?;
        let mean = xg.mean_keepdim(2)?;
        let centered = xg.broadcast_sub(&mean)?;
        let var = centered.sqr()?.mean_keepdim(2)?;
        let normed = centered.broadcast_div(&(var + self.eps)?.sqrt()?)?;
        let normed = normed.reshape((b, c, h, w))?;
        let weight = self.weight.reshape((1, c, 1, 1))?;
        let bias = self.bias.reshape((1, c, 1, 1))?;
        Ok(normed.broadcast_mul(&weight)?.broadcast_add(&bias)?)
    }
}

/// SiLU activation.
pub fn silu(x: &Tensor) -> Result<Tensor> {
    Ok(candle_nn::ops::silu(x)?)
}

/// Bilinear interpolation matrix (dst x src) with half-pixel centers; each
/// row holds the weights over source cells. Resizing a map is
/// `A @ M @ B^T`, which keeps resampling inside the autodiff graph.
pub fn interp_matrix(src: usize, dst: usize) -> Vec<f64> {
    let mut m = vec![0.0; dst * src];
    for j in 0..dst {
        let u = ((j as f64 + 0.5) * src as f64 / dst as f64 - 0.5).clamp(0.0, (src - 1) as f64);
        let i0 = u.floor() as usize;
        let frac = u - i0 as f64;
        let i1 = (i0 + 1).min(src - 1);
        m[j * src + i0] += 1.0 - frac;
        m[j * src + i1] += frac;
    }
    m
}

/// Resize a `(rows_in, cols_in)` tensor to `(rows_out, cols_out)` with
/// bilinear weights, staying differentiable.
pub fn bilinear_resize_2d(x: &Tensor, rows_out: usize, cols_out: usize) -> Result<Tensor> {
    let (rows_in, cols_in) = x.dims2()?;
    if rows_in == rows_out && cols_in == cols_out {
        return Ok(x.clone());
    }
    let dtype = x.dtype();
    let dev = x.device();
    let a = tensor_from_f64(&interp_matrix(rows_in, rows_out), &[rows_out, rows_in], dtype, dev)?;
    let b = tensor_from_f64(&interp_matrix(cols_in, cols_out), &[cols_out, cols_in], dtype, dev)?;
    Ok(a.matmul(x)?.matmul(&b.t()?)?)
}
